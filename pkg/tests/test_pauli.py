import itertools
import json
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ghzmixed.pauli import (
    GraphSpec,
    ParadoxCertificate,
    PauliString,
    derive_ghz_paradox,
    linear,
    multiply,
    product,
    stabilizer_generators,
    t_shaped,
    verify_certificate,
)

PARADOX_SET = ["+ZXZZ", "+YYZZ", "+ZYYZ", "-YXYZ"]

paulis = st.builds(
    PauliString,
    phase=st.integers(0, 3),
    ops=st.text(alphabet="IXYZ", min_size=4, max_size=4),
)


def test_single_qubit_products():
    assert multiply(PauliString(0, "X"), PauliString(0, "Z")) == PauliString(3, "Y")
    assert multiply(PauliString(0, "Z"), PauliString(0, "X")) == PauliString(1, "Y")
    assert multiply(PauliString(0, "Y"), PauliString(0, "Y")) == PauliString(0, "I")


def test_paradox_products():
    e1, e2, e3 = (PauliString.parse(s) for s in ("XZII", "ZXZZ", "IZXI"))
    assert e1 * e2 == PauliString.parse("+YYZZ")
    assert e2 * e3 == PauliString.parse("+ZYYZ")
    assert product([e1, e2, e3]) == PauliString.parse("-YXYZ")


def test_length_mismatch():
    with pytest.raises(ValueError):
        multiply(PauliString(0, "X"), PauliString(0, "XX"))


def test_invalid_phase_and_ops():
    with pytest.raises(ValueError):
        PauliString(4, "X")
    with pytest.raises(ValueError):
        PauliString(0, "XQ")


@pytest.mark.parametrize("text", ["-YXYZ", "+ZXZZ", "+iXY", "-iZZ", "XX"])
def test_parse_roundtrip(text):
    p = PauliString.parse(text)
    assert PauliString.parse(str(p)) == p


@settings(max_examples=1000, deadline=None)
@given(paulis, paulis)
def test_multiply_matches_dense_matrices(a, b):
    assert np.allclose((a * b).to_matrix(), a.to_matrix() @ b.to_matrix())


@settings(max_examples=1000, deadline=None)
@given(paulis, paulis, paulis)
def test_multiply_associative(a, b, c):
    assert (a * b) * c == a * (b * c)


@settings(max_examples=1000, deadline=None)
@given(paulis, paulis)
def test_commutation_matches_dense(a, b):
    ma, mb = a.to_matrix(), b.to_matrix()
    assert a.commutes_with(b) == np.allclose(ma @ mb, mb @ ma)


def test_generators_small_graphs():
    assert stabilizer_generators(GraphSpec(1)) == [PauliString(0, "X")]
    g = GraphSpec.from_edges(2, [(1, 2)])
    assert [str(p) for p in stabilizer_generators(g)] == ["+XZ", "+ZX"]


def test_generators_t_shape():
    gens = [p.ops for p in stabilizer_generators(t_shaped(5))]
    assert gens == ["XZIII", "ZXZZI", "IZXII", "IZIXZ", "IIIZX"]


@pytest.mark.parametrize("g", [t_shaped(6), linear(7), GraphSpec.from_edges(4, [(1, 2), (1, 3), (1, 4), (3, 4)])])
def test_generators_pairwise_commute(g):
    gens = stabilizer_generators(g)
    assert all(a.commutes_with(b) for a, b in itertools.combinations(gens, 2))


def test_graph_validation():
    with pytest.raises(ValueError):
        GraphSpec.from_edges(3, [(1, 1)])
    with pytest.raises(ValueError):
        GraphSpec.from_edges(3, [(1, 4)])
    with pytest.raises(ValueError):
        GraphSpec.from_edges(3, [(1, 2), (2, 1)])
    assert GraphSpec.from_edges(3, [(2, 1)]).edges == frozenset({(1, 2)})


def test_graph_text_roundtrip():
    g = t_shaped(6)
    assert GraphSpec.from_text(g.to_text()) == g
    with pytest.raises(ValueError):
        GraphSpec.from_text("3\n1 2\n")
    with pytest.raises(ValueError):
        GraphSpec.from_text("n=3\n1 x\n")


@pytest.mark.parametrize("n", range(4, 11))
def test_t_shape_certificate_is_standard_set(n):
    cert = derive_ghz_paradox(t_shaped(n), [1, 2, 3, 4])
    assert [str(s) for s in cert.strings] == PARADOX_SET
    assert cert.recipe == ((2,), (1, 2), (2, 3), (1, 2, 3))


def test_single_qubit_support_has_no_paradox():
    assert derive_ghz_paradox(t_shaped(5), [3]) is None
    assert derive_ghz_paradox(linear(4), [1]) is None


def test_linear_interior_segments():
    # an interior run of four qubits is not enough, five is
    assert derive_ghz_paradox(linear(6), [2, 3, 4, 5]) is None
    assert derive_ghz_paradox(linear(7), [2, 3, 4, 5]) is None
    cert = derive_ghz_paradox(linear(7), [2, 3, 4, 5, 6])
    assert cert is not None and verify_certificate(cert, linear(7))
    cert = derive_ghz_paradox(linear(6), [1, 2, 3, 4, 5])
    assert cert is not None and verify_certificate(cert, linear(6))


def test_linear_chain_end_four_qubits():
    # the end of a chain behaves like the T-shape: qubit 1 has a single neighbour
    cert = derive_ghz_paradox(linear(6), [1, 2, 3, 4])
    assert [str(s) for s in cert.strings] == ["+ZXZI", "+YYZI", "+ZYYZ", "-YXYZ"]
    assert verify_certificate(cert, linear(6))


def test_verify_standard_set_and_broken_variants():
    g = t_shaped(5)
    cert = derive_ghz_paradox(g, [1, 2, 3, 4])
    assert verify_certificate(cert, g)
    flipped = ParadoxCertificate(
        cert.support,
        (PauliString.from_sign(-1, cert.strings[0].ops),) + cert.strings[1:],
        cert.recipe,
    )
    assert not verify_certificate(flipped, g)
    odd = ParadoxCertificate(
        cert.support,
        (PauliString(0, "ZXZI"),) + cert.strings[1:],
        cert.recipe,
    )
    assert not odd.parity_ok()
    assert not verify_certificate(odd, g)


def test_verify_dimension_mismatch():
    cert = derive_ghz_paradox(t_shaped(6), [1, 2, 3, 4])
    bad = ParadoxCertificate((1, 2, 3, 9), cert.strings, cert.recipe)
    with pytest.raises(ValueError):
        verify_certificate(bad, t_shaped(6))


def test_certificate_json():
    cert = derive_ghz_paradox(t_shaped(7), [1, 2, 3, 4])
    d = json.loads(cert.to_json())
    assert d["strings"] == PARADOX_SET
    assert d["signs"] == [1, 1, 1, -1]
    assert ParadoxCertificate.from_dict(d) == cert


def test_lr_value_forced_by_enumeration():
    cert = derive_ghz_paradox(t_shaped(5), [1, 2, 3, 4])
    variables = sorted(cert.observable_counts())
    for values in itertools.product((1, -1), repeat=len(variables)):
        a = dict(zip(variables, values))
        total = 1
        for s in cert.strings:
            for q, op in zip(cert.support, s.ops):
                if op != "I":
                    total *= a[(q, op)]
        assert total == 1
    assert np.prod(cert.signs) == -1


def test_random_graph_certificates_verify():
    rng = np.random.default_rng(3)
    found = 0
    for _ in range(30):
        n = int(rng.integers(3, 7))
        edges = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1) if rng.random() < 0.5]
        g = GraphSpec.from_edges(n, edges)
        k = int(rng.integers(2, n + 1))
        support = sorted(rng.choice(np.arange(1, n + 1), size=k, replace=False).tolist())
        cert = derive_ghz_paradox(g, support)
        if cert is not None:
            found += 1
            assert verify_certificate(cert, g)
    assert found > 0


def test_derive_runtime():
    start = time.perf_counter()
    for n in range(4, 11):
        derive_ghz_paradox(t_shaped(n), [1, 2, 3, 4])
    assert time.perf_counter() - start < 1.0
