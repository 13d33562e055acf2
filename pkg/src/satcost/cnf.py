"""CNF formulas: DIMACS reading/writing, random k-SAT generation, static statistics.

Clauses are tuples of signed DIMACS integers (``3`` is x3, ``-3`` is not x3).
Random instances are drawn from numpy's PCG64 generator seeded with the
config seed, so an ensemble is reproducible from its manifest alone.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

Clause = tuple[int, ...]


class DimacsError(ValueError):
    """Malformed DIMACS input."""


class Literal(NamedTuple):
    var: int
    positive: bool

    @classmethod
    def from_dimacs(cls, lit: int) -> Literal:
        if lit == 0:
            raise ValueError("0 is not a literal")
        return cls(abs(lit), lit > 0)

    def to_dimacs(self) -> int:
        return self.var if self.positive else -self.var

    def negate(self) -> Literal:
        return Literal(self.var, not self.positive)


@dataclass
class Formula:
    num_vars: int
    clauses: list[Clause]
    origin: str = ""
    # True when the input contained an empty clause; the clause itself is not stored.
    empty_clause: bool = False
    header_clauses: int | None = None
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        for clause in self.clauses:
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise DimacsError(f"literal {lit} out of range 1..{self.num_vars}")

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @property
    def trivially_unsat(self) -> bool:
        return self.empty_clause

    def __eq__(self, other):
        if not isinstance(other, Formula):
            return NotImplemented
        return (
            self.num_vars == other.num_vars
            and self.clauses == other.clauses
            and self.empty_clause == other.empty_clause
        )

    def satisfied_by(self, model) -> bool:
        """Check a model given as an iterable of signed literals."""
        true_lits = set(model)
        if self.empty_clause:
            return False
        return all(any(lit in true_lits for lit in clause) for clause in self.clauses)


@dataclass(frozen=True)
class GeneratorConfig:
    num_vars: int
    ratio: float
    k: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("clause width k must be >= 2")
        if self.ratio <= 0:
            raise ValueError("ratio must be positive")
        if self.num_vars < 1:
            raise ValueError("num_vars must be >= 1")
        if self.k > self.num_vars:
            raise ValueError(f"k={self.k} exceeds num_vars={self.num_vars}")

    @property
    def num_clauses(self) -> int:
        # round-half-up so 4.26 * 50 = 213 regardless of float representation
        return int(np.floor(self.ratio * self.num_vars + 0.5))


class InitFeatures(NamedTuple):
    var: float
    cls: float
    cls_var: float
    var_cls: float
    fbc: float
    ftc: float
    acs: float


def _tokens(text: str):
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped[0] in "c%":
            continue
        yield lineno, stripped


def parse_dimacs(data: bytes | str) -> Formula:
    """Read a DIMACS CNF document.

    Duplicate literals and tautologies are kept verbatim.  A clause count that
    disagrees with the header is recorded in ``Formula.warnings`` rather than
    raised.
    """
    text = data.decode("utf-8", errors="replace") if isinstance(data, (bytes, bytearray)) else data
    num_vars = None
    declared = None
    clauses: list[Clause] = []
    empty = False
    current: list[int] = []
    for lineno, line in _tokens(text):
        if line.startswith("p"):
            if num_vars is not None:
                raise DimacsError(f"line {lineno}: duplicate header")
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: malformed header {line!r}")
            try:
                num_vars, declared = int(parts[2]), int(parts[3])
            except ValueError as exc:
                raise DimacsError(f"line {lineno}: malformed header {line!r}") from exc
            if num_vars < 0 or declared < 0:
                raise DimacsError(f"line {lineno}: negative counts in header")
            continue
        if num_vars is None:
            raise DimacsError(f"line {lineno}: clause before header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError as exc:
                raise DimacsError(f"line {lineno}: bad token {tok!r}") from exc
            if lit == 0:
                if current:
                    clauses.append(tuple(current))
                else:
                    empty = True
                current = []
            elif abs(lit) > num_vars:
                raise DimacsError(f"line {lineno}: literal {lit} out of range 1..{num_vars}")
            else:
                current.append(lit)
    if num_vars is None:
        raise DimacsError("missing 'p cnf' header")
    if current:
        clauses.append(tuple(current))
    formula = Formula(num_vars, clauses, empty_clause=empty, header_clauses=declared)
    found = len(clauses) + (1 if empty else 0)
    if declared != found:
        msg = f"header declares {declared} clauses, found {found}"
        formula.warnings.append(msg)
        warnings.warn(msg, stacklevel=2)
    return formula


def write_dimacs(formula: Formula, comments: list[str] | tuple[str, ...] = ()) -> bytes:
    out = io.StringIO()
    for comment in comments:
        out.write(f"c {comment}\n" if comment else "c\n")
    count = len(formula.clauses) + (1 if formula.empty_clause else 0)
    out.write(f"p cnf {formula.num_vars} {count}\n")
    for clause in formula.clauses:
        out.write(" ".join(map(str, clause)))
        out.write(" 0\n")
    if formula.empty_clause:
        out.write("0\n")
    return out.getvalue().encode("ascii")


def read_dimacs_file(path) -> Formula:
    with open(path, "rb") as fh:
        formula = parse_dimacs(fh.read())
    formula.origin = str(path)
    return formula


def generate_random_ksat(cfg: GeneratorConfig) -> Formula:
    """Uniform random k-SAT: k distinct variables per clause, fair-coin signs.

    Variables are drawn for all clauses at once; rows with a repeated variable
    are redrawn (in clause order) until every clause is duplicate-free, then
    one sign matrix is drawn.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    m, k = cfg.num_clauses, cfg.k
    variables = rng.integers(0, cfg.num_vars, size=(m, k))
    while True:
        ordered = np.sort(variables, axis=1)
        bad = np.nonzero((ordered[:, 1:] == ordered[:, :-1]).any(axis=1))[0]
        if bad.size == 0:
            break
        variables[bad] = rng.integers(0, cfg.num_vars, size=(bad.size, k))
    signs = rng.integers(0, 2, size=(m, k))
    lits = np.where(signs == 1, variables + 1, -(variables + 1))
    clauses = [tuple(row) for row in lits.tolist()]
    origin = f"rand:n={cfg.num_vars}:r={cfg.ratio}:k={cfg.k}:seed={cfg.seed}"
    return Formula(cfg.num_vars, clauses, origin=origin)


def static_stats(f: Formula) -> InitFeatures:
    n, m = f.num_vars, len(f.clauses)
    if m == 0:
        return InitFeatures(float(n), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    widths = [len(c) for c in f.clauses]
    return InitFeatures(
        var=float(n),
        cls=float(m),
        cls_var=m / n if n else 0.0,
        var_cls=n / m,
        fbc=widths.count(2) / m,
        ftc=widths.count(3) / m,
        acs=sum(widths) / m,
    )
