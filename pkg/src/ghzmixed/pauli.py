"""Pauli-string algebra, graph-state stabilizers and GHZ-paradox search.

Qubits are labelled 1..n throughout, matching the usual physics notation.
Phases are kept as an exponent k of i (phase = i**k, k in 0..3), so the
symbolic layer never touches floating point.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PAULI_LABELS = "IXYZ"

# (a, b) -> (phase exponent, product) for single-qubit a*b
_SINGLE_PRODUCT: dict[tuple[str, str], tuple[int, str]] = {}
for _p in PAULI_LABELS:
    _SINGLE_PRODUCT[("I", _p)] = (0, _p)
    _SINGLE_PRODUCT[(_p, "I")] = (0, _p)
    _SINGLE_PRODUCT[(_p, _p)] = (0, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _SINGLE_PRODUCT[(_a, _b)] = (1, _c)  # XY = iZ
    _SINGLE_PRODUCT[(_b, _a)] = (3, _c)  # YX = -iZ

_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}


@dataclass(frozen=True)
class PauliString:
    """A signed tensor product of single-qubit Paulis.

    ``phase`` is the exponent k of the overall factor i**k and ``ops`` is a
    string over ``IXYZ`` with qubit 1 first.
    """

    phase: int
    ops: str

    def __post_init__(self):
        if self.phase not in (0, 1, 2, 3):
            raise ValueError(f"phase exponent must be in 0..3, got {self.phase!r}")
        bad = set(self.ops) - set(PAULI_LABELS)
        if bad or not self.ops:
            raise ValueError(f"invalid Pauli ops {self.ops!r}")

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        """Parse ``"-YXYZ"``, ``"+iXZ"``, ``"ZZ"`` and the like."""
        text = text.strip()
        for prefix, k in (("+i", 1), ("-i", 3), ("i", 1), ("+", 0), ("-", 2)):
            if text.startswith(prefix):
                return cls(k, text[len(prefix):])
        return cls(0, text)

    @classmethod
    def from_sign(cls, sign: int, ops: str) -> "PauliString":
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        return cls(0 if sign == 1 else 2, ops)

    @property
    def n(self) -> int:
        return len(self.ops)

    @property
    def coefficient(self) -> complex:
        return (1, 1j, -1, -1j)[self.phase]

    @property
    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    @property
    def sign(self) -> int:
        if not self.is_hermitian:
            raise ValueError(f"{self} has an imaginary phase")
        return 1 if self.phase == 0 else -1

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, op in enumerate(self.ops, start=1) if op != "I")

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __str__(self) -> str:
        return _PHASE_TEXT[self.phase] + self.ops

    def restrict(self, qubits: Sequence[int]) -> "PauliString":
        """Keep only the listed qubits; every dropped qubit must carry I."""
        keep = set(qubits)
        dropped = [q for q in self.support if q not in keep]
        if dropped:
            raise ValueError(f"{self} acts on qubits {dropped} outside {sorted(keep)}")
        return PauliString(self.phase, "".join(self.ops[q - 1] for q in qubits))

    def embed(self, qubits: Sequence[int], n: int) -> "PauliString":
        """Inverse of :meth:`restrict`: place ops on ``qubits`` of an n-qubit register."""
        if len(qubits) != self.n:
            raise ValueError("qubit list does not match string length")
        ops = ["I"] * n
        for q, op in zip(qubits, self.ops):
            ops[q - 1] = op
        return PauliString(self.phase, "".join(ops))

    def commutes_with(self, other: "PauliString") -> bool:
        if self.n != other.n:
            raise ValueError("length mismatch")
        clashes = sum(
            1 for a, b in zip(self.ops, other.ops) if a != "I" and b != "I" and a != b
        )
        return clashes % 2 == 0

    def to_matrix(self) -> np.ndarray:
        mats = {
            "I": np.eye(2, dtype=complex),
            "X": np.array([[0, 1], [1, 0]], dtype=complex),
            "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
            "Z": np.array([[1, 0], [0, -1]], dtype=complex),
        }
        out = np.array([[self.coefficient]], dtype=complex)
        for op in self.ops:
            out = np.kron(out, mats[op])
        return out


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Exact operator product ``a * b``."""
    if a.n != b.n:
        raise ValueError(f"length mismatch: {a.n} vs {b.n}")
    phase = a.phase + b.phase
    ops = []
    for x, y in zip(a.ops, b.ops):
        k, op = _SINGLE_PRODUCT[(x, y)]
        phase += k
        ops.append(op)
    return PauliString(phase % 4, "".join(ops))


def product(strings: Iterable[PauliString]) -> PauliString:
    strings = list(strings)
    if not strings:
        raise ValueError("empty product")
    out = strings[0]
    for s in strings[1:]:
        out = multiply(out, s)
    return out


@dataclass(frozen=True)
class GraphSpec:
    """Simple undirected graph on vertices 1..n."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        canon = set()
        for edge in self.edges:
            u, v = tuple(edge) if len(edge) == 2 else (None, None)
            if u is None:
                raise ValueError(f"bad edge {edge!r}")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            for w in (u, v):
                if not (1 <= w <= self.n):
                    raise ValueError(f"vertex {w} outside 1..{self.n}")
            canon.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(canon))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "GraphSpec":
        pairs = [tuple(int(x) for x in e) for e in edges]
        canon = [(min(e), max(e)) for e in pairs]
        if len(set(canon)) != len(canon):
            raise ValueError("duplicate edge")
        return cls(n, frozenset(canon))

    def neighbors(self, v: int) -> list[int]:
        out = [b for a, b in self.edges if a == v] + [a for a, b in self.edges if b == v]
        return sorted(out)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def to_text(self) -> str:
        lines = [f"n={self.n}"] + [f"{u} {v}" for u, v in self.sorted_edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GraphSpec":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        if not lines or not lines[0].startswith("n="):
            raise ValueError("graph file must start with a line 'n=<int>'")
        try:
            n = int(lines[0][2:])
        except ValueError:
            raise ValueError(f"bad vertex count line {lines[0]!r}") from None
        edges = []
        for lineno, ln in enumerate(lines[1:], start=2):
            parts = ln.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected '<u> <v>', got {ln!r}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ValueError(f"line {lineno}: non-integer vertex in {ln!r}") from None
        return cls.from_edges(n, edges)


def t_shaped(n: int) -> GraphSpec:
    """T-shaped cluster: vertex 2 joins leaves 1, 3 and a chain 4-5-...-n."""
    if n < 4:
        raise ValueError("T-shaped cluster needs n >= 4")
    edges = [(1, 2), (2, 3), (2, 4)] + [(k, k + 1) for k in range(4, n)]
    return GraphSpec.from_edges(n, edges)


def linear(n: int) -> GraphSpec:
    return GraphSpec.from_edges(n, [(k, k + 1) for k in range(1, n)])


def stabilizer_generators(g: GraphSpec) -> list[PauliString]:
    """X on vertex k, Z on each neighbour of k, one generator per vertex."""
    gens = []
    for k in range(1, g.n + 1):
        ops = ["I"] * g.n
        ops[k - 1] = "X"
        for v in g.neighbors(k):
            ops[v - 1] = "Z"
        gens.append(PauliString(0, "".join(ops)))
    return gens


@dataclass(frozen=True)
class ParadoxCertificate:
    """Signed stabilizer equations on ``support`` that no local +-1 assignment satisfies.

    ``strings`` are restricted to the support qubits (in support order) and
    carry their eigenvalue as the phase. ``recipe[i]`` lists the generator
    indices whose product gives ``strings[i]``.
    """

    support: tuple[int, ...]
    strings: tuple[PauliString, ...]
    recipe: tuple[tuple[int, ...], ...]

    @property
    def signs(self) -> tuple[int, ...]:
        return tuple(s.sign for s in self.strings)

    def observable_counts(self) -> dict[tuple[int, str], int]:
        counts: dict[tuple[int, str], int] = {}
        for s in self.strings:
            for q, op in zip(self.support, s.ops):
                if op != "I":
                    counts[(q, op)] = counts.get((q, op), 0) + 1
        return counts

    def parity_ok(self) -> bool:
        return all(c % 2 == 0 for c in self.observable_counts().values())

    def sign_product(self) -> int:
        return int(np.prod(self.signs))

    def to_dict(self) -> dict:
        return {
            "support": list(self.support),
            "strings": [str(s) for s in self.strings],
            "signs": list(self.signs),
            "generator_recipe": [list(r) for r in self.recipe],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ParadoxCertificate":
        strings = tuple(PauliString.parse(s) for s in d["strings"])
        support = tuple(int(q) for q in d["support"])
        if any(s.n != len(support) for s in strings):
            raise ValueError("certificate string length differs from support size")
        recipe = tuple(tuple(int(i) for i in r) for r in d.get("generator_recipe", [[]] * len(strings)))
        return cls(support, strings, recipe)

    def transcript(self) -> str:
        """Human-readable derivation: recipe, eigenvalue and parity bookkeeping."""
        lines = [f"support qubits: {list(self.support)}"]
        for s, r in zip(self.strings, self.recipe):
            names = " ".join(f"E{i}" for i in r)
            lines.append(f"  {names:<16} -> {s.ops}  eigenvalue {s.sign:+d}")
        for (q, op), c in sorted(self.observable_counts().items()):
            lines.append(f"  {op}{q} appears {c} times")
        lines.append(
            "local realism: every element of reality appears an even number of times,"
            " so the product of the left-hand sides is +1"
        )
        lines.append(f"quantum: product of eigenvalues is {self.sign_product():+d}")
        return "\n".join(lines)


def derive_ghz_paradox(
    g: GraphSpec, support: Iterable[int], max_product_size: int = 3
) -> ParadoxCertificate | None:
    """Search for a GHZ-type paradox using only qubits in ``support``.

    Generator products are enumerated by increasing size, lexicographic in
    generator index; products acting outside ``support`` are discarded. Subsets
    of the survivors are then tried by increasing cardinality in the same
    order, and the first one with even observable counts on every qubit and
    eigenvalue product -1 is returned. None when no such subset exists.
    """
    support = tuple(sorted(set(int(q) for q in support)))
    if not support or any(not (1 <= q <= g.n) for q in support):
        raise ValueError(f"support {support} not inside 1..{g.n}")
    if max_product_size < 1:
        raise ValueError("max_product_size must be >= 1")
    gens = stabilizer_generators(g)
    allowed = set(support)

    candidates: list[tuple[tuple[int, ...], PauliString]] = []
    for size in range(1, min(max_product_size, g.n) + 1):
        for combo in itertools.combinations(range(1, g.n + 1), size):
            p = product(gens[i - 1] for i in combo)
            if set(p.support) <= allowed:
                candidates.append((combo, p.restrict(support)))
    if len(candidates) < 3:
        return None

    # GF(2) encoding: one bit per (qubit, observable), plus the sign bit
    width = 3 * len(support)
    vecs = np.zeros((len(candidates), width), dtype=np.uint8)
    sign_bits = np.zeros(len(candidates), dtype=np.uint8)
    for row, (_, p) in enumerate(candidates):
        for j, op in enumerate(p.ops):
            if op != "I":
                vecs[row, 3 * j + "XYZ".index(op)] = 1
        sign_bits[row] = p.phase == 2

    for size in range(3, len(candidates) + 1):
        for subset in itertools.combinations(range(len(candidates)), size):
            idx = list(subset)
            if sign_bits[idx].sum() % 2 != 1:
                continue
            if np.any(vecs[idx].sum(axis=0) % 2):
                continue
            return ParadoxCertificate(
                support,
                tuple(candidates[i][1] for i in idx),
                tuple(candidates[i][0] for i in idx),
            )
    return None


def verify_certificate(cert: ParadoxCertificate, g: GraphSpec, atol: float = 1e-10) -> bool:
    """Numerical cross-check of a certificate against the dense graph state."""
    from .factory import cluster_state
    from .states import densify, expectation

    if max(cert.support) > g.n or min(cert.support) < 1:
        raise ValueError("certificate refers to qubits outside the graph")
    if any(s.n != len(cert.support) for s in cert.strings):
        raise ValueError("certificate strings do not match its support")
    if len(cert.strings) < 3 or not cert.parity_ok() or cert.sign_product() != -1:
        return False
    rho = densify(cluster_state(g))
    for s in cert.strings:
        full = PauliString(0, s.embed(cert.support, g.n).ops)
        if abs(expectation(rho, full) - s.sign) > atol:
            return False
    return True
