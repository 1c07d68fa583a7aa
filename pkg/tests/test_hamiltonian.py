import json
import math
from itertools import combinations

import pytest

from src.core.hamiltonian import (
    BetaMode,
    Hamiltonian,
    Term,
    critical_beta,
    make_term,
    polymer_beta,
    potential_beta,
)
from src.core.hamiltonian_io import dumps, loads, read_hamiltonian, write_hamiltonian
from src.core.pauli import PauliString, SignedPauli
from src.models.families import ChainTFIM, GridZZ, HeisenbergChain, RandomKLocal, create_family
from src.utils.errors import InvalidInputError


class TestBuild:
    def test_two_bond_chain_adjacency(self, two_bond_chain):
        assert two_bond_chain.dual_adjacency == ((1,), (0,))
        assert two_bond_chain.degree == 1

    def test_single_term_has_no_neighbors(self, single_term):
        assert single_term.dual_adjacency == ((),)
        assert single_term.degree == 0

    def test_grid_degree_matches_pairwise_check(self):
        h = GridZZ(3, 3).build()
        for a in range(h.m):
            brute = {b for b in range(h.m) if b != a and h.supports[a] & h.supports[b]}
            assert set(h.neighbors(a)) == brute, f"term {a}: {h.neighbors(a)} vs {sorted(brute)}"
        # open boundary: the centre site has four bonds, its neighbours three
        assert h.degree == 5, f"3x3 grid degree {h.degree}"
        assert GridZZ(4, 4).build().degree == 6

    def test_site_index(self, two_bond_chain):
        assert two_bond_chain.site_index == ((0,), (0, 1), (1,))

    def test_rejects_identity_term(self):
        with pytest.raises(InvalidInputError):
            Hamiltonian.build([make_term(0.5, "I", 2)], 2, 1)

    def test_rejects_large_coefficient(self):
        with pytest.raises(InvalidInputError):
            Hamiltonian.build([make_term(1.5, "Z0", 1)], 1, 1)

    def test_rejects_wide_support(self):
        with pytest.raises(InvalidInputError):
            Hamiltonian.build([make_term(1.0, "Z0 Z1 Z2", 3)], 3, 2)

    def test_rejects_negative_sign(self):
        term = Term(1.0, SignedPauli(PauliString.from_label("-Z0", 1)))
        with pytest.raises(InvalidInputError):
            Hamiltonian.build([term], 1, 1)


class TestRestriction:
    def test_restricted_terms(self, two_bond_chain):
        assert two_bond_chain.restricted_terms(range(3)) == (0, 1)
        assert two_bond_chain.restricted_terms([]) == ()
        assert two_bond_chain.restricted_terms([0, 1]) == (0,)

    def test_localized_terms(self, two_bond_chain):
        assert two_bond_chain.localized_terms([]) == ()
        assert two_bond_chain.localized_terms([1]) == (0, 1)

    def test_localized_around_a_term_is_small(self, tfim4):
        for a in range(tfim4.m):
            Q = tfim4.localized_terms(tfim4.supports[a])
            assert len(Q) <= tfim4.degree + 1, f"term {a}: |Q|={len(Q)}"

    def test_restrict_keeps_sites(self, tfim4):
        sub = tfim4.restrict([0, 1])
        assert sub.n == tfim4.n and sub.m == 2

    def test_restricted_and_localized_are_complementary(self, tfim4):
        sites = range(tfim4.n)
        every = set(range(tfim4.m))
        for size in range(tfim4.n + 1):
            for S in combinations(sites, size):
                rest = [s for s in sites if s not in S]
                inside = set(tfim4.restricted_terms(S))
                touching = set(tfim4.localized_terms(S))
                assert inside <= touching, f"S={S}: {inside - touching} inside but not touching"
                assert set(tfim4.restricted_terms(rest)) == every - touching, f"S={S}"

    def test_components_touch(self, two_bond_chain):
        assert two_bond_chain.components_touch([0, 1], [1])
        assert not Hamiltonian.build(
            [make_term(1.0, "Z0", 3), make_term(1.0, "Z2", 3)], 3, 1
        ).components_touch([0, 1], [0])


class TestThresholds:
    def test_critical_betas(self):
        h = GridZZ(2, 2).build()
        assert h.degree == 2
        assert math.isclose(critical_beta(h, BetaMode.SEPARABILITY), 1 / 400)
        assert math.isclose(critical_beta(h, "sampling"), 1 / 800)

    def test_cluster_threshold(self, tfim4):
        assert tfim4.degree == 4
        assert math.isclose(critical_beta(tfim4, BetaMode.CLUSTER), 1 / 400)

    def test_zero_degree_counts_as_one(self, single_term):
        assert math.isclose(critical_beta(single_term, BetaMode.CLUSTER), 1 / 100)

    def test_potential_below_polymer_radius(self, tfim4):
        assert potential_beta(tfim4) < polymer_beta(tfim4)


class TestFamilies:
    def test_chain_tfim_counts(self, tfim4):
        assert tfim4.m == 7, f"chain-tfim n=4 has {tfim4.m} terms"
        assert tfim4.degree == 4

    def test_grid_counts(self):
        h = GridZZ(2, 2).build()
        assert (h.m, h.degree) == (4, 2)

    def test_heisenberg_terms_per_bond(self):
        h = HeisenbergChain(3).build()
        assert h.m == 6
        assert {h.terms[a].string.axis(0) for a in range(3)} == {"X", "Y", "Z"}

    def test_random_klocal_is_seeded(self):
        a = RandomKLocal(6, 5, 2, seed=3).build()
        b = RandomKLocal(6, 5, 2, seed=3).build()
        assert [t.string for t in a.terms] == [t.string for t in b.terms]
        assert all(len(s) == 2 for s in a.supports)

    def test_create_family(self):
        h = create_family("chain-tfim", n=3, g=0.5).build()
        assert h.terms[-1].coeff == -0.5

    def test_unknown_family(self):
        with pytest.raises(InvalidInputError, match="Available"):
            create_family("ladder", n=3)

    def test_bad_parameter(self):
        with pytest.raises(InvalidInputError):
            create_family("grid-zz", n=3)

    def test_coefficient_range(self):
        with pytest.raises(InvalidInputError):
            ChainTFIM(3, J=2.0)


class TestFileFormat:
    def test_file_keeps_terms(self, tmp_path, tfim4):
        path = tmp_path / "tfim.jsonl"
        write_hamiltonian(tfim4, path)
        h = read_hamiltonian(path)
        assert (h.n, h.locality, h.degree) == (4, 2, 4)
        assert [(t.coeff, t.string) for t in h.terms] == [(t.coeff, t.string) for t in tfim4.terms]

    def test_header_line(self, two_bond_chain):
        header = json.loads(dumps(two_bond_chain).splitlines()[0])
        assert header == {"n": 3, "locality": 2, "degree": 1}

    def test_degree_mismatch(self, two_bond_chain):
        text = dumps(two_bond_chain).replace('"degree": 1', '"degree": 2')
        with pytest.raises(InvalidInputError, match="declared degree"):
            loads(text)

    def test_unsorted_sites(self):
        text = '{"n": 2, "locality": 2}\n{"coeff": 1.0, "paulis": [{"site": 1, "axis": "Z"}, {"site": 0, "axis": "Z"}]}\n'
        with pytest.raises(InvalidInputError, match="sorted"):
            loads(text)

    def test_unknown_axis(self):
        text = '{"n": 1, "locality": 1}\n{"coeff": 1.0, "paulis": [{"site": 0, "axis": "W"}]}\n'
        with pytest.raises(InvalidInputError, match="axis"):
            loads(text)

    def test_bad_json_reports_line(self):
        text = '{"n": 1, "locality": 1}\n{not json}\n'
        with pytest.raises(InvalidInputError, match="line 2"):
            loads(text)

    def test_empty_file(self):
        with pytest.raises(InvalidInputError):
            loads("\n\n")

    @pytest.mark.parametrize(
        "family",
        [ChainTFIM(5), GridZZ(2, 3), HeisenbergChain(4), RandomKLocal(6, 5, 3, seed=8)],
        ids=["chain-tfim", "grid-zz", "heisenberg-chain", "random-klocal"],
    )
    def test_serialize_parse_serialize_is_identical(self, family):
        text = dumps(family.build())
        assert dumps(loads(text)) == text

    def test_repeated_site_in_term(self):
        text = '{"n": 2, "locality": 2}\n{"coeff": 1.0, "paulis": [{"site": 0, "axis": "Z"}, {"site": 0, "axis": "X"}]}\n'
        with pytest.raises(InvalidInputError, match="duplicate site 0"):
            loads(text)

    def test_repeated_site_in_label(self):
        with pytest.raises(InvalidInputError, match="repeated"):
            make_term(1.0, "Z0 X0", 2)

    @pytest.mark.parametrize(
        "paulis",
        [
            '[{"axis": "Z"}]',
            "null",
            '["Z0"]',
            '[{"site": "a", "axis": "Z"}]',
            '{"site": 0, "axis": "Z"}',
            '[{"site": null, "axis": "Z"}]',
        ],
        ids=["missing-site", "null", "string-entry", "non-integer-site", "object", "null-site"],
    )
    def test_malformed_pauli_list(self, paulis):
        text = '{"n": 2, "locality": 2}\n{"coeff": 1.0, "paulis": ' + paulis + "}\n"
        with pytest.raises(InvalidInputError, match="line 2"):
            loads(text)
