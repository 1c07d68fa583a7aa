"""Line-oriented JSON Hamiltonian files.

First line is the header ``{"n": ..., "locality": ..., "degree": ...}``;
every further line is one term
``{"coeff": 0.5, "paulis": [{"site": 0, "axis": "Z"}, {"site": 1, "axis": "Z"}]}``.
"""

import json
from pathlib import Path

from src.core.hamiltonian import Hamiltonian, Term
from src.core.pauli import AXES, PauliString, SignedPauli
from src.utils.errors import InvalidInputError


def term_to_record(term: Term) -> dict:
    p = term.string
    sites = sorted(term.support)
    return {
        "coeff": term.coeff,
        "paulis": [{"site": s, "axis": p.axis(s)} for s in sites],
    }


def term_from_record(record: dict, n: int, line_no: int = 0) -> Term:
    try:
        coeff = float(record["coeff"])
        paulis = record["paulis"]
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidInputError(f"line {line_no}: malformed term record: {e}") from e

    if not isinstance(paulis, list):
        raise InvalidInputError(f"line {line_no}: 'paulis' must be a list, got {type(paulis).__name__}")

    sites: dict[int, str] = {}
    last = -1
    for entry in paulis:
        if not isinstance(entry, dict):
            raise InvalidInputError(f"line {line_no}: each pauli must be an object, got {entry!r}")
        try:
            site, axis = int(entry["site"]), entry["axis"]
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInputError(f"line {line_no}: malformed pauli {entry!r}: {e!r}") from e
        if axis not in AXES:
            raise InvalidInputError(f"line {line_no}: unknown axis {axis!r}")
        if site in sites:
            raise InvalidInputError(f"line {line_no}: duplicate site {site} in one term")
        if site < last:
            raise InvalidInputError(f"line {line_no}: axis list must be sorted by site")
        if not 0 <= site < n:
            raise InvalidInputError(f"line {line_no}: site {site} out of range for n={n}")
        sites[site] = axis
        last = site
    return Term(coeff, SignedPauli(PauliString.from_sites(n, sites)))


def dumps(h: Hamiltonian) -> str:
    header = {"n": h.n, "locality": h.locality, "degree": h.degree}
    lines = [json.dumps(header)]
    lines.extend(json.dumps(term_to_record(t)) for t in h.terms)
    return "\n".join(lines) + "\n"


def loads(text: str) -> Hamiltonian:
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise InvalidInputError("empty Hamiltonian file")
    try:
        header = json.loads(rows[0])
        n, locality = int(header["n"]), int(header["locality"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise InvalidInputError(f"bad header: {e}") from e

    terms = []
    for line_no, row in enumerate(rows[1:], start=2):
        try:
            record = json.loads(row)
        except json.JSONDecodeError as e:
            raise InvalidInputError(f"line {line_no}: {e}") from e
        terms.append(term_from_record(record, n, line_no))
    return Hamiltonian.build(terms, n, locality, declared_degree=header.get("degree"))


def read_hamiltonian(path: str | Path) -> Hamiltonian:
    with open(path, "r", encoding="utf-8") as f:
        return loads(f.read())


def write_hamiltonian(h: Hamiltonian, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(h))
