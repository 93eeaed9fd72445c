"""Container validation, Pauli bookkeeping and measurement-setting covers."""

import itertools
import json

import numpy as np
import pytest

from gme import qstate
from gme.qstate import (
    ALL_PAULI_STRINGS,
    ALL_SETTINGS,
    DensityMatrix,
    HermitianOperator,
    PureState,
    bisep,
    expectation,
    fidelity,
    ghz,
    is_covered,
    partial_trace,
    pauli_decompose,
    pauli_matrix,
    pauli_recompose,
    pauli_support,
    purity,
    required_settings,
    w_state,
)

RNG = np.random.default_rng(20260814)


def _random_hermitian():
    z = RNG.standard_normal((8, 8)) + 1j * RNG.standard_normal((8, 8))
    return HermitianOperator(z + z.conj().T)


def test_basis_indexing_most_significant_first():
    # |110> has q1=1, q2=1, q3=0 -> index 6
    assert PureState.ket("110").amplitudes[6] == 1.0
    assert PureState.ket("001").amplitudes[1] == 1.0
    assert bisep().amplitudes[6] == pytest.approx(2 ** -0.5)
    assert w_state().amplitudes[4] == pytest.approx(3 ** -0.5)


def test_pure_state_rejects_bad_input():
    with pytest.raises(ValueError):
        PureState(np.ones(8))  # norm sqrt(8)
    with pytest.raises(ValueError):
        PureState(np.zeros(8))
    with pytest.raises(ValueError):
        PureState(np.ones(4) / 2.0)  # wrong length
    with pytest.raises(ValueError):
        PureState.normalized(np.zeros(8))


def test_pure_state_immutable():
    s = ghz()
    with pytest.raises(AttributeError):
        s.amplitudes = np.zeros(8)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 9.0


def test_density_matrix_validation():
    with pytest.raises(ValueError, match="Hermitian"):
        m = np.eye(8, dtype=complex) / 8
        m[0, 1] = 1e-6
        DensityMatrix(m)
    with pytest.raises(ValueError, match="trace"):
        DensityMatrix(np.eye(8) / 4)
    with pytest.raises(ValueError, match="positive"):
        m = np.zeros((8, 8))
        m[0, 0] = 1.5
        m[1, 1] = -0.5
        DensityMatrix(m)
    # roundoff-scale negative eigenvalues are accepted
    ev = np.full(8, (1 + 5e-11) / 7)
    ev[0] = -5e-11
    DensityMatrix(np.diag(ev))
    # but anything clearly negative is not
    ev[0] = -5e-10
    ev[1:] = (1 + 5e-10) / 7
    with pytest.raises(ValueError, match="positive"):
        DensityMatrix(np.diag(ev))


def test_density_matrix_never_symmetrizes():
    m = np.eye(8, dtype=complex) / 8
    m[0, 1] = 2e-8  # above tolerance; (M + M^H)/2 would hide it
    with pytest.raises(ValueError):
        DensityMatrix(m)


def test_mix_weights_validated():
    with pytest.raises(ValueError):
        DensityMatrix.mix([0.7, 0.7], [ghz(), w_state()])
    with pytest.raises(ValueError):
        DensityMatrix.mix([1.5, -0.5], [ghz(), w_state()])
    rho = DensityMatrix.mix([0.25, 0.75], [ghz(), w_state()])
    assert np.trace(rho.entries).real == pytest.approx(1.0)


def test_w_reduced_state_frozen():
    # tracing out two qubits of W leaves diag(2/3, 1/3) on each qubit
    for keep in (1, 2, 3):
        r = partial_trace(w_state(), keep)
        assert np.allclose(r, np.diag([2 / 3, 1 / 3]), atol=1e-12)


def test_partial_trace_pure_vs_density_agree():
    for _ in range(20):
        psi = qstate.haar_state(RNG)
        for keep in (1, 2, 3):
            a = partial_trace(psi, keep)
            b = partial_trace(psi.density(), keep)
            assert np.allclose(a, b, atol=1e-12)
            assert abs(np.trace(a).real - 1.0) < 1e-12
    with pytest.raises(ValueError):
        partial_trace(ghz(), 0)


def test_purity_and_fidelity():
    assert purity(ghz().density()) == pytest.approx(1.0)
    assert purity(DensityMatrix(np.eye(8) / 8)) == pytest.approx(1 / 8)
    assert fidelity(ghz(), ghz().density()) == pytest.approx(1.0)
    assert fidelity(ghz(), w_state().density()) == pytest.approx(0.0, abs=1e-14)


def test_expectation_matches_trace():
    for _ in range(10):
        psi = qstate.haar_state(RNG)
        A = _random_hermitian()
        direct = float(np.real(psi.amplitudes.conj() @ A.entries @ psi.amplitudes))
        assert expectation(A, psi) == pytest.approx(direct, abs=1e-12)
        assert expectation(A, psi.density()) == pytest.approx(direct, abs=1e-12)


def test_pauli_decompose_recompose_roundtrip():
    for _ in range(10):
        A = _random_hermitian()
        back = pauli_recompose(pauli_decompose(A))
        assert np.abs(back - A.entries).max() < 1e-10


def test_pauli_matrix_products():
    assert np.allclose(pauli_matrix("000"), np.eye(8))
    zzz = pauli_matrix("zzz")
    signs = [(-1) ** bin(k).count("1") for k in range(8)]
    assert np.allclose(zzz, np.diag(signs))
    with pytest.raises(ValueError):
        pauli_matrix("abc")


def test_is_covered():
    assert is_covered("zz0", "zzx")
    assert is_covered("000", "xyz")
    assert not is_covered("zz0", "zxz")
    assert not is_covered("xxx", "xxy")
    with pytest.raises(ValueError):
        is_covered("xxx", "xx0")


def test_ghz_support_frozen():
    supp = set(pauli_support(ghz().density().entries))
    assert supp == {"000", "xxx", "xyy", "yxy", "yyx", "zz0", "z0z", "0zz"}


def test_ghz_minimal_cover_is_five():
    cover = required_settings(HermitianOperator(ghz().density().entries))
    assert cover == frozenset({"xxx", "xyy", "yxy", "yyx", "zzz"})


def test_identity_needs_no_settings():
    assert required_settings(HermitianOperator.identity()) == frozenset()


def _brute_force_min_cover_size(op):
    """Independent oracle: exhaustive bitmask search over setting subsets."""
    support = [s for s in pauli_support(op) if s != "000"]
    if not support:
        return 0
    bit = {s: 1 << i for i, s in enumerate(support)}
    full = (1 << len(support)) - 1
    masks = []
    for b in ALL_SETTINGS:
        m = sum(bit[s] for s in support if is_covered(s, b))
        if m:
            masks.append(m)
    for size in range(1, len(masks) + 1):
        for combo in itertools.combinations(masks, size):
            acc = 0
            for m in combo:
                acc |= m
            if acc == full:
                return size
    raise AssertionError("no cover found")


def test_two_projector_mix_cover_is_seven():
    mix = bisep().density().entries / 2 + w_state().density().entries / 2
    A = HermitianOperator(mix)
    cover = required_settings(A)
    assert len(cover) == 7
    assert _brute_force_min_cover_size(A) == 7
    # every supported string really is covered
    for s in pauli_support(A):
        if s != "000":
            assert any(is_covered(s, b) for b in cover)


def test_minimal_cover_matches_brute_force_on_random_sparse_ops():
    strings = [s for s in ALL_PAULI_STRINGS if s != "000"]
    for _ in range(8):
        chosen = RNG.choice(len(strings), size=int(RNG.integers(2, 7)), replace=False)
        coeffs = np.zeros(64)
        for idx in chosen:
            coeffs[ALL_PAULI_STRINGS.index(strings[idx])] = RNG.normal()
        A = HermitianOperator(pauli_recompose(coeffs))
        assert len(required_settings(A)) == _brute_force_min_cover_size(A)


def test_pure_state_json_roundtrip():
    s = qstate.haar_state(RNG)
    back = PureState.from_json(s.to_json())
    assert np.allclose(back.amplitudes, s.amplitudes, atol=1e-15)
    d = json.loads(s.to_json())
    assert set(d) == {"amplitudes_re", "amplitudes_im"}


def test_density_matrix_json_roundtrip():
    rho = DensityMatrix.mix([0.5, 0.5], [ghz(), w_state()])
    back = DensityMatrix.from_json(rho.to_json())
    assert np.abs(back.entries - rho.entries).max() < 1e-15
    d = json.loads(rho.to_json())
    assert set(d) == {"entries_re", "entries_im"}
    assert len(d["entries_re"]) == 8 and len(d["entries_re"][0]) == 8


def test_operator_json_roundtrip():
    A = _random_hermitian()
    back = HermitianOperator.from_json(A.to_json())
    assert np.abs(back.entries - A.entries).max() < 1e-15


def test_named_states_normalized_and_distinct():
    names = ["ghz", "w", "bisep", "psi1", "psi2", "psi3"]
    kets = [qstate.named_state(n) for n in names]
    for k in kets:
        assert np.linalg.norm(k.amplitudes) == pytest.approx(1.0)
    for a, b in itertools.combinations(kets, 2):
        assert abs(abs(a.overlap(b)) - 1.0) > 1e-6
    with pytest.raises(ValueError):
        qstate.named_state("nope")


def test_haar_states_unit_norm():
    batch = qstate.haar_states(RNG, 100)
    assert np.allclose(np.linalg.norm(batch, axis=1), 1.0, atol=1e-12)


def test_random_local_unitary_preserves_reduced_purities():
    for _ in range(5):
        U = qstate.random_local_unitary(RNG)
        assert np.abs(U @ U.conj().T - np.eye(8)).max() < 1e-12
        psi = qstate.haar_state(RNG)
        rotated = PureState.normalized(U @ psi.amplitudes)
        for keep in (1, 2, 3):
            p_a = partial_trace(psi, keep)
            p_b = partial_trace(rotated, keep)
            tr2 = lambda r: float(np.einsum("ij,ji->", r, r).real)
            assert tr2(p_a) == pytest.approx(tr2(p_b), abs=1e-10)
