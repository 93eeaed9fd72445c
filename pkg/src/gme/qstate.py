"""Dense three-qubit states, operators and Pauli bookkeeping.

Basis convention
----------------
Kets live in an 8-dimensional complex space indexed by the bitstring
``q1 q2 q3`` of the three qubits, with **qubit 1 as the most significant
bit**: amplitude ``k`` belongs to ``|q1 q2 q3>`` where ``k = 4*q1 + 2*q2
+ q3``.  Every array in this package, and every serialized state, uses
this ordering.

Pauli products are written as three-character strings over the alphabet
``0xyz`` ('0' is the single-qubit identity), e.g. ``"zz0"`` for
``sigma_z x sigma_z x id``.  Measurement settings are three-character
strings over ``xyz``: one local basis per qubit, no identity allowed.
"""

from __future__ import annotations

import itertools
import json
import math

import numpy as np

DIM = 8
N_QUBITS = 3

PAULI_1Q = {
    "0": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

ALL_PAULI_STRINGS = tuple("".join(t) for t in itertools.product("0xyz", repeat=3))
IDENTITY_STRING = "000"
ALL_SETTINGS = tuple("".join(t) for t in itertools.product("xyz", repeat=3))

PAULI_INDEX = {s: k for k, s in enumerate(ALL_PAULI_STRINGS)}


def _build_pauli_matrices():
    mats = []
    for s in ALL_PAULI_STRINGS:
        m = np.kron(np.kron(PAULI_1Q[s[0]], PAULI_1Q[s[1]]), PAULI_1Q[s[2]])
        m.setflags(write=False)
        mats.append(m)
    return tuple(mats)


PAULI_MATRICES = _build_pauli_matrices()


def pauli_matrix(labels: str) -> np.ndarray:
    """8x8 matrix of the Pauli product named by a string over '0xyz'."""
    if labels not in PAULI_INDEX:
        raise ValueError(f"not a Pauli string: {labels!r}")
    return PAULI_MATRICES[PAULI_INDEX[labels]]


def validate_setting(setting: str) -> str:
    if not (isinstance(setting, str) and len(setting) == 3 and all(c in "xyz" for c in setting)):
        raise ValueError(f"not a measurement setting: {setting!r}")
    return setting


def is_covered(pauli: str, setting: str) -> bool:
    """Whether one setting yields the expectation of one Pauli string.

    A string is covered when every non-identity label agrees with the
    local basis measured at that position; identity positions are
    marginalized out of the recorded outcomes.
    """
    validate_setting(setting)
    if pauli not in PAULI_INDEX:
        raise ValueError(f"not a Pauli string: {pauli!r}")
    return all(p == "0" or p == b for p, b in zip(pauli, setting))


# ---------------------------------------------------------------------------
# state and operator containers


def _as_amplitudes(state) -> np.ndarray:
    a = state.amplitudes if isinstance(state, PureState) else np.asarray(state, dtype=complex)
    if a.shape != (DIM,):
        raise ValueError(f"expected 8 amplitudes, got shape {a.shape}")
    return a


def _as_matrix(obj) -> np.ndarray:
    if isinstance(obj, (DensityMatrix, HermitianOperator)):
        return obj.entries
    if isinstance(obj, PureState):
        return np.outer(obj.amplitudes, obj.amplitudes.conj())
    m = np.asarray(obj, dtype=complex)
    if m.shape != (DIM, DIM):
        raise ValueError(f"expected an 8x8 matrix, got shape {m.shape}")
    return m


class PureState:
    """Unit-norm ket of three qubits (see module docstring for indexing)."""

    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes):
        a = np.array(amplitudes, dtype=complex).reshape(-1)
        if a.shape != (DIM,):
            raise ValueError(f"expected 8 amplitudes, got shape {a.shape}")
        n = np.linalg.norm(a)
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"amplitudes are not normalized: |norm - 1| = {abs(n - 1.0):.3e}")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    def __setattr__(self, name, value):
        raise AttributeError("PureState is immutable")

    @staticmethod
    def normalized(vec) -> "PureState":
        v = np.asarray(vec, dtype=complex).reshape(-1)
        n = np.linalg.norm(v)
        if n < 1e-14:
            raise ValueError("cannot normalize a (near-)zero vector")
        return PureState(v / n)

    @staticmethod
    def ket(bits: str) -> "PureState":
        """Computational basis state from a bitstring like '110'."""
        if len(bits) != 3 or any(b not in "01" for b in bits):
            raise ValueError(f"not a three-qubit bitstring: {bits!r}")
        a = np.zeros(DIM, dtype=complex)
        a[int(bits, 2)] = 1.0
        return PureState(a)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other) -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, _as_amplitudes(other)))

    def to_json(self) -> str:
        return json.dumps(
            {
                "amplitudes_re": [float(v) for v in self.amplitudes.real],
                "amplitudes_im": [float(v) for v in self.amplitudes.imag],
            }
        )

    @staticmethod
    def from_json(text: str) -> "PureState":
        d = json.loads(text)
        re = np.asarray(d["amplitudes_re"], dtype=float)
        im = np.asarray(d["amplitudes_im"], dtype=float)
        return PureState(re + 1j * im)

    def __repr__(self):
        return f"PureState({np.array2string(self.amplitudes, precision=6, suppress_small=True)})"


class DensityMatrix:
    """8x8 Hermitian, unit-trace, positive-semidefinite matrix.

    Construction validates Hermiticity (rejected above 1e-8 deviation,
    never symmetrized), unit trace (1e-12) and spectrum (smallest
    eigenvalue at least -1e-10).
    """

    __slots__ = ("entries", "_eigvals")

    def __init__(self, entries):
        m = np.array(entries, dtype=complex)
        if m.shape != (DIM, DIM):
            raise ValueError(f"expected an 8x8 matrix, got shape {m.shape}")
        herm = np.abs(m - m.conj().T).max()
        if herm > 1e-8:
            raise ValueError(f"matrix is not Hermitian: max deviation {herm:.3e}")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-12:
            raise ValueError(f"trace is {tr!r}, expected 1")
        ev = np.linalg.eigvalsh(m)
        if ev.min() < -1e-10:
            raise ValueError(f"matrix is not positive semidefinite: min eigenvalue {ev.min():.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        ev.setflags(write=False)
        object.__setattr__(self, "_eigvals", ev)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    @property
    def eigenvalues(self) -> np.ndarray:
        """Ascending real spectrum, computed once at construction."""
        return self._eigvals

    @staticmethod
    def mix(weights, states) -> "DensityMatrix":
        """Convex mixture of PureState/DensityMatrix terms."""
        weights = np.asarray(weights, dtype=float)
        if weights.min() < -1e-12 or abs(weights.sum() - 1.0) > 1e-10:
            raise ValueError("weights must be a probability vector")
        acc = np.zeros((DIM, DIM), dtype=complex)
        for w, s in zip(weights, states):
            acc += w * _as_matrix(s)
        return DensityMatrix(acc)

    def to_json(self) -> str:
        return json.dumps(
            {
                "entries_re": [[float(v) for v in row] for row in self.entries.real],
                "entries_im": [[float(v) for v in row] for row in self.entries.imag],
            }
        )

    @staticmethod
    def from_json(text: str) -> "DensityMatrix":
        d = json.loads(text)
        re = np.asarray(d["entries_re"], dtype=float)
        im = np.asarray(d["entries_im"], dtype=float)
        return DensityMatrix(re + 1j * im)

    def __repr__(self):
        return f"DensityMatrix(trace={np.trace(self.entries).real:.3f}, purity={purity(self):.4f})"


class HermitianOperator:
    """8x8 Hermitian observable with lazily cached Pauli coefficients."""

    __slots__ = ("entries", "_coeffs")

    def __init__(self, entries):
        m = np.array(entries, dtype=complex)
        if m.shape != (DIM, DIM):
            raise ValueError(f"expected an 8x8 matrix, got shape {m.shape}")
        herm = np.abs(m - m.conj().T).max()
        if herm > 1e-8:
            raise ValueError(f"matrix is not Hermitian: max deviation {herm:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "_coeffs", None)

    def __setattr__(self, name, value):
        raise AttributeError("HermitianOperator is immutable")

    @property
    def coeffs(self) -> np.ndarray:
        """Pauli coefficients c_s = Tr(A sigma_s)/8, ordered as ALL_PAULI_STRINGS."""
        if self._coeffs is None:
            object.__setattr__(self, "_coeffs", pauli_decompose(self.entries))
        return self._coeffs

    @staticmethod
    def zero() -> "HermitianOperator":
        return HermitianOperator(np.zeros((DIM, DIM)))

    @staticmethod
    def identity() -> "HermitianOperator":
        return HermitianOperator(np.eye(DIM))

    def to_json(self) -> str:
        return json.dumps(
            {
                "entries_re": [[float(v) for v in row] for row in self.entries.real],
                "entries_im": [[float(v) for v in row] for row in self.entries.imag],
            }
        )

    @staticmethod
    def from_json(text: str) -> "HermitianOperator":
        d = json.loads(text)
        re = np.asarray(d["entries_re"], dtype=float)
        im = np.asarray(d["entries_im"], dtype=float)
        return HermitianOperator(re + 1j * im)


# ---------------------------------------------------------------------------
# linear-algebra operations


def partial_trace(state, keep: int) -> np.ndarray:
    """Reduced 2x2 density matrix of one qubit.

    Parameters
    ----------
    state : PureState, DensityMatrix or array
        Three-qubit state.
    keep : int
        Qubit to keep, 1, 2 or 3 (1 is the most significant bit).
    """
    if keep not in (1, 2, 3):
        raise ValueError(f"keep must be 1, 2 or 3, got {keep!r}")
    ax = keep - 1
    if isinstance(state, PureState) or (
        not isinstance(state, (DensityMatrix, HermitianOperator))
        and np.asarray(state).shape == (DIM,)
    ):
        t = _as_amplitudes(state).reshape(2, 2, 2)
        m = np.moveaxis(t, ax, 0).reshape(2, 4)
        return m @ m.conj().T
    rho = _as_matrix(state).reshape(2, 2, 2, 2, 2, 2)
    # row axes 0..2, column axes 3..5
    rho = np.moveaxis(rho, (ax, ax + 3), (0, 3))
    return np.einsum("aijbij->ab", rho)


def purity(rho) -> float:
    m = _as_matrix(rho)
    return float(np.einsum("ij,ji->", m, m).real)


def fidelity(psi, rho) -> float:
    """<psi|rho|psi> for a pure reference state against any state."""
    a = _as_amplitudes(psi)
    m = _as_matrix(rho)
    return float(np.einsum("i,ij,j->", a.conj(), m, a).real)


def expectation(op, state) -> float:
    """Tr(A rho), or <psi|A|psi> for a pure state."""
    A = _as_matrix(op)
    if isinstance(state, PureState) or (
        not isinstance(state, (DensityMatrix, HermitianOperator))
        and np.asarray(state).shape == (DIM,)
    ):
        a = _as_amplitudes(state)
        return float(np.einsum("i,ij,j->", a.conj(), A, a).real)
    return float(np.einsum("ij,ji->", A, _as_matrix(state)).real)


def pauli_decompose(op) -> np.ndarray:
    """Coefficients c_s = Tr(A sigma_s)/8 for all 64 Pauli strings.

    The decomposition is exact: A = sum_s c_s sigma_s.
    """
    A = _as_matrix(op)
    out = np.empty(len(ALL_PAULI_STRINGS))
    for k, m in enumerate(PAULI_MATRICES):
        out[k] = np.einsum("ij,ji->", A, m).real / DIM
    return out


def pauli_recompose(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (len(ALL_PAULI_STRINGS),):
        raise ValueError("expected 64 coefficients")
    acc = np.zeros((DIM, DIM), dtype=complex)
    for v, m in zip(c, PAULI_MATRICES):
        if v != 0.0:
            acc += v * m
    return acc


def pauli_support(op, tol: float = 1e-9) -> dict:
    """Pauli strings with |coefficient| above tol, as a string->float map."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    c = op.coeffs if isinstance(op, HermitianOperator) else pauli_decompose(op)
    return {s: float(c[k]) for k, s in enumerate(ALL_PAULI_STRINGS) if abs(c[k]) > tol}


def required_settings(op, tol: float = 1e-9) -> frozenset:
    """Smallest set of local measurement settings covering an observable.

    Every Pauli string carrying weight above ``tol`` (the identity
    string excluded: its expectation is fixed) must be covered by some
    returned setting.  The minimum is exact, found by branch and bound
    over the 27 candidate settings.
    """
    support = [s for s in pauli_support(op, tol) if s != IDENTITY_STRING]
    if not support:
        return frozenset()
    universe = frozenset(support)
    cover = {b: frozenset(s for s in support if is_covered(s, b)) for b in ALL_SETTINGS}
    candidates = [b for b in ALL_SETTINGS if cover[b]]

    # greedy solution bounds the search
    remaining = set(universe)
    greedy = []
    while remaining:
        b = max(candidates, key=lambda b: len(cover[b] & remaining))
        greedy.append(b)
        remaining -= cover[b]
    best = greedy

    max_cover = max(len(cover[b]) for b in candidates)

    def descend(remaining, chosen):
        nonlocal best
        if not remaining:
            if len(chosen) < len(best):
                best = list(chosen)
            return
        if len(chosen) + math.ceil(len(remaining) / max_cover) >= len(best):
            return
        # branch on the hardest string to cover
        target = min(remaining, key=lambda s: sum(1 for b in candidates if s in cover[b]))
        for b in candidates:
            if target in cover[b]:
                descend(remaining - cover[b], chosen + [b])

    descend(universe, [])
    return frozenset(best)


# ---------------------------------------------------------------------------
# named states


def ghz() -> PureState:
    """(|000> + |111>)/sqrt(2)."""
    a = np.zeros(DIM, dtype=complex)
    a[0] = a[7] = 1 / math.sqrt(2)
    return PureState(a)


def w_state() -> PureState:
    """(|100> + |010> + |001>)/sqrt(3)."""
    a = np.zeros(DIM, dtype=complex)
    a[4] = a[2] = a[1] = 1 / math.sqrt(3)
    return PureState(a)


def bisep() -> PureState:
    """(|000> + |110>)/sqrt(2): entangles qubits 1 and 2, qubit 3 free."""
    a = np.zeros(DIM, dtype=complex)
    a[0] = a[6] = 1 / math.sqrt(2)
    return PureState(a)


def psi1() -> PureState:
    """(|000> + cos(pi/5)|110> + sin(pi/5)|111>)/sqrt(2)."""
    a = np.zeros(DIM, dtype=complex)
    a[0] = 1.0
    a[6] = math.cos(math.pi / 5)
    a[7] = math.sin(math.pi / 5)
    return PureState(a / math.sqrt(2))


def psi2() -> PureState:
    """cos(pi/8)|000> + sin(pi/8)|111>."""
    a = np.zeros(DIM, dtype=complex)
    a[0] = math.cos(math.pi / 8)
    a[7] = math.sin(math.pi / 8)
    return PureState(a)


def psi3() -> PureState:
    """|000>/sqrt(2) + |110>/2 + |111>/2."""
    a = np.zeros(DIM, dtype=complex)
    a[0] = 1 / math.sqrt(2)
    a[6] = 0.5
    a[7] = 0.5
    return PureState(a)


NAMED_STATES = {
    "ghz": ghz,
    "w": w_state,
    "bisep": bisep,
    "psi1": psi1,
    "psi2": psi2,
    "psi3": psi3,
}


def named_state(name: str) -> PureState:
    key = name.lower()
    if key not in NAMED_STATES:
        raise ValueError(f"unknown state {name!r}; known: {sorted(NAMED_STATES)}")
    return NAMED_STATES[key]()


# ---------------------------------------------------------------------------
# random sampling helpers


def haar_states(rng: np.random.Generator, n: int) -> np.ndarray:
    """n Haar-random kets as an (n, 8) array of unit rows."""
    z = rng.standard_normal((n, DIM)) + 1j * rng.standard_normal((n, DIM))
    return z / np.linalg.norm(z, axis=1)[:, None]


def haar_state(rng: np.random.Generator) -> PureState:
    return PureState(haar_states(rng, 1)[0])


def random_local_unitary(rng: np.random.Generator) -> np.ndarray:
    """Tensor product of three independent Haar 2x2 unitaries."""
    us = []
    for _ in range(N_QUBITS):
        z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        q, r = np.linalg.qr(z)
        q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
        us.append(q)
    return np.kron(np.kron(us[0], us[1]), us[2])
