import json

import pytest
import yaml

from gibbs_cli import build_parser, get_enabled_commands, main
from src.commands.gen import family_params
from src.commands.sample import draw_sample
from src.core.hamiltonian_io import dumps, read_hamiltonian, write_hamiltonian
from src.models.families import ChainTFIM
from src.sampling.stabilizer_output import ProductState
from src.sampling.tree_walk import WalkParams

FAST_WALK = {"move_probability": 0.25, "steps_per_epoch": 40, "max_epochs": 30}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump({"walk": FAST_WALK, "logging": {"level": "WARNING"}}))
    return str(path)


@pytest.fixture
def chain_file(tmp_path):
    path = tmp_path / "chain.jsonl"
    write_hamiltonian(ChainTFIM(2).build(), path)
    return str(path)


def _read_lines(path) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


class TestGen:
    def test_writes_file(self, tmp_path, config_path, capsys):
        path = tmp_path / "tfim.jsonl"
        assert main(["gen", "chain-tfim", "--n", "4", "--out", str(path), "--config", config_path]) == 0
        h = read_hamiltonian(path)
        assert (h.m, h.degree) == (7, 4)
        assert "degree: 4" in capsys.readouterr().out

    def test_stdout(self, config_path, capsys):
        assert main(["gen", "grid-zz", "--rows", "2", "--cols", "2", "--config", config_path]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert json.loads(lines[0])["degree"] == 2
        assert len(lines) == 5

    def test_file_reserializes_byte_for_byte(self, tmp_path, config_path):
        path = tmp_path / "heis.jsonl"
        assert main(["gen", "heisenberg-chain", "--n", "4", "--out", str(path), "--config", config_path]) == 0
        text = path.read_text(encoding="utf-8")
        assert dumps(read_hamiltonian(path)) == text

    def test_family_params_skips_unset(self):
        args = build_parser().parse_args(["gen", "random-klocal", "--n", "5", "--m", "3", "--K", "2"])
        assert family_params("random-klocal", args) == {"n": 5, "m": 3, "K": 2}

    def test_bad_family_size(self, config_path, capsys):
        assert main(["gen", "chain-tfim", "--n", "1", "--config", config_path]) == 2
        assert "Error" in capsys.readouterr().err


class TestLogz:
    def test_reports_estimate_and_exact(self, chain_file, config_path, capsys):
        assert main(["logz", chain_file, "--beta", "0.001", "--config", config_path]) == 0
        record = json.loads(capsys.readouterr().out)
        assert abs(record["error"]) <= 0.01
        assert record["k_used"] >= 0

    def test_threshold_exit_code(self, chain_file, config_path, capsys):
        assert main(["logz", chain_file, "--beta", "0.1", "--config", config_path]) == 2
        assert "threshold" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, config_path):
        assert main(["logz", str(tmp_path / "nope.jsonl"), "--beta", "0.001", "--config", config_path]) == 2

    @pytest.mark.parametrize(
        "term",
        [
            '{"coeff": 1.0, "paulis": [{"axis": "Z"}]}',
            '{"coeff": 1.0, "paulis": null}',
            '{"coeff": 1.0, "paulis": ["Z0"]}',
            '{"coeff": 1.0, "paulis": [{"site": "a", "axis": "Z"}]}',
        ],
        ids=["missing-site", "null-paulis", "string-entry", "non-integer-site"],
    )
    def test_malformed_term_exits_cleanly(self, tmp_path, config_path, capsys, term):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"n": 2, "locality": 2}\n' + term + "\n", encoding="utf-8")
        assert main(["logz", str(path), "--beta", "0.001", "--config", config_path]) == 2
        err = capsys.readouterr().err
        assert "Error: line 2" in err, err


class TestWalk:
    def test_telemetry_matches_steps(self, tmp_path, chain_file, config_path, capsys):
        telemetry = tmp_path / "walk.jsonl"
        code = main(
            ["walk", chain_file, "--beta", "0.0005", "--seed", "3", "--telemetry", str(telemetry), "--config", config_path]
        )
        summary = json.loads(capsys.readouterr().out)
        assert code in (0, 1)
        assert len(_read_lines(telemetry)) == summary["steps"]


class TestSample:
    def test_header_and_records(self, tmp_path, chain_file, config_path):
        out = tmp_path / "samples.jsonl"
        argv = ["sample", chain_file, "--beta", "0.0005", "--n-samples", "3", "--seed", "7", "--out", str(out)]
        assert main([*argv, "--config", config_path]) == 0
        header, *records = _read_lines(out)
        assert header["n_samples"] == 3 and header["n"] == 2
        assert [r["index"] for r in records] == [0, 1, 2]
        assert all(r["seed"] == [7, i] for i, r in enumerate(records))
        for r in records:
            assert ProductState.from_record(r).n == 2

    def test_reproducible(self, tmp_path, chain_file, config_path):
        outputs = []
        for name in ("a.jsonl", "b.jsonl"):
            out = tmp_path / name
            argv = ["sample", chain_file, "--beta", "0.0005", "--n-samples", "2", "--seed", "1", "--out", str(out)]
            assert main([*argv, "--config", config_path]) == 0
            outputs.append(out.read_text())
        assert outputs[0] == outputs[1]

    @pytest.mark.slow
    def test_workers_keep_order_and_values(self, tmp_path, chain_file, config_path):
        outputs = []
        for workers in ("1", "2"):
            out = tmp_path / f"w{workers}.jsonl"
            argv = ["sample", chain_file, "--beta", "0.0005", "--n-samples", "4", "--seed", "2", "--out", str(out)]
            assert main([*argv, "--workers", workers, "--config", config_path]) == 0
            outputs.append(out.read_text())
        assert outputs[0] == outputs[1]

    def test_needs_seed(self, chain_file, config_path, capsys):
        assert main(["sample", chain_file, "--beta", "0.0005", "--n-samples", "1", "--config", config_path]) == 2
        assert "--seed" in capsys.readouterr().err

    def test_draw_sample_record(self, chain_file):
        h = read_hamiltonian(chain_file)
        params = WalkParams(0.1, 0.01, 40, 30, 10, move_probability=0.25)
        record, redraws = draw_sample(h, 0.0005, params, seed=4, index=9, max_redraws=5)
        assert record["index"] == 9 and record["seed"] == [4, 9]
        assert redraws >= 0
        again, _ = draw_sample(h, 0.0005, params, seed=4, index=9, max_redraws=5)
        assert again == record


class TestVerify:
    def test_algebra_suite(self, config_path, capsys):
        assert main(["verify", "algebra", "--config", config_path]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["suite"] == "algebra" and report["passed"]


class TestCommands:
    def test_all_enabled_by_default(self):
        assert set(get_enabled_commands({})) == {"gen", "sample", "verify", "logz", "walk"}

    def test_disabled_command(self, tmp_path, chain_file, capsys):
        path = tmp_path / "off.yaml"
        path.write_text(yaml.safe_dump({"commands": {"logz": False}}))
        assert main(["logz", chain_file, "--beta", "0.001", "--config", str(path)]) == 2
        assert "disabled" in capsys.readouterr().err

