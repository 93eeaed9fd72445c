"""Mixed-state entanglement by convex-roof minimization.

The convex roof of a pure-state measure E at a density matrix rho is

    E(rho) = min_{w, psi} sum_j w_j E(psi_j)
    over decompositions rho = sum_j w_j |psi_j><psi_j|.

Every decomposition of rho into m parts arises from an m x r isometry U
acting on the spectral decomposition rho = sum_i lam_i |v_i><v_i|:

    sqrt(w_j) psi_j = sum_i U_ji sqrt(lam_i) v_i,

so minimizing over isometries of growing m searches the full
decomposition space.  The search is a multi-start local optimization
and the returned value is an upper estimate of the roof; it never
claims global optimality, but reconstruction of rho is exact by
construction and re-checked on every reported decomposition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .measures import Measure, measure_by_name
from .qstate import DIM, DensityMatrix, PureState

__all__ = [
    "RANK_CUTOFF",
    "RoofConfig",
    "Decomposition",
    "RoofResult",
    "spectral",
    "decomposition_from_isometry",
    "theta_to_isometry",
    "convex_roof",
]

RANK_CUTOFF = 1e-10


@dataclass(frozen=True)
class RoofConfig:
    """Multi-start budget for one roof minimization."""

    starts: int = 50
    m_max: int | None = None  # default 2 * rank(rho)
    seed: int = 0
    fd_step: float = 1e-5
    maxiter: int = 200

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.m_max is not None and self.m_max < 1:
            raise ValueError("m_max must be >= 1")


def spectral(rho: DensityMatrix, cutoff: float = RANK_CUTOFF):
    """Eigenpairs of rho above the rank cutoff, trace renormalized.

    Returns (lam, vecs) with vecs[:, i] the eigenvector of lam[i].
    Tomographic outputs are nearly rank-deficient, so tiny eigenvalues
    are dropped rather than carried as spurious decomposition parts.
    """
    lam, vecs = np.linalg.eigh(rho.entries)
    keep = lam > cutoff
    lam, vecs = lam[keep], vecs[:, keep]
    return lam / lam.sum(), vecs


class Decomposition:
    """A pure-state ensemble realizing a density matrix."""

    __slots__ = ("weights", "states")

    def __init__(self, weights, states):
        weights = np.asarray(weights, dtype=float)
        if weights.min() < -1e-12:
            raise ValueError("decomposition weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-10:
            raise ValueError("decomposition weights must sum to 1")
        states = list(states)
        if len(states) != weights.size:
            raise ValueError("one state per weight required")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "states", states)

    def __setattr__(self, name, value):
        raise AttributeError("Decomposition is immutable")

    def __len__(self):
        return self.weights.size

    def density(self) -> np.ndarray:
        amps = np.stack([s.amplitudes for s in self.states])
        return np.einsum("j,ji,jk->ik", self.weights, amps, amps.conj())

    def value(self, measure: Measure) -> float:
        return float(sum(w * measure(s)
                         for w, s in zip(self.weights, self.states)))

    def to_json(self) -> str:
        return json.dumps({
            "weights": self.weights.tolist(),
            "states": [json.loads(s.to_json()) for s in self.states],
        })

    @staticmethod
    def from_json(text: str) -> "Decomposition":
        d = json.loads(text)
        return Decomposition(
            d["weights"],
            [PureState.from_json(json.dumps(s)) for s in d["states"]])


def _check_reconstruction(dec: Decomposition, rho: DensityMatrix):
    err = np.linalg.norm(dec.density() - rho.entries)
    if err > 1e-8:
        raise ValueError(f"decomposition misses rho by Frobenius {err:.3e}")


def decomposition_from_isometry(rho: DensityMatrix, U) -> Decomposition:
    """Decomposition of rho induced by an m x r isometry U.

    r must be the rank of rho at the spectral cutoff; parts whose
    weight falls below 1e-14 carry no mass and are dropped.
    """
    lam, vecs = spectral(rho)
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[1] != lam.size:
        raise ValueError(
            f"isometry must be m x {lam.size} for this rank-{lam.size} state")
    gram = U.conj().T @ U
    if np.abs(gram - np.eye(lam.size)).max() > 1e-10:
        raise ValueError("columns of U are not orthonormal")
    phi = U @ (np.sqrt(lam)[:, None] * vecs.T)  # rows sqrt(w_j) psi_j
    w = np.einsum("ji,ji->j", phi.conj(), phi).real
    keep = w > 1e-14
    dec = Decomposition(w[keep],
                        [PureState.normalized(row) for row in phi[keep]])
    _check_reconstruction(dec, rho)
    return dec


def theta_to_isometry(theta, m: int, r: int) -> np.ndarray:
    """First r columns of exp(iH) for the Hermitian H packed in theta.

    theta holds m*m reals: the diagonal of H followed by the real and
    imaginary parts of the strict upper triangle.  This chart is smooth
    and surjective onto the unitary group, so no isometry is out of
    reach of the optimizer.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.size != m * m:
        raise ValueError(f"need {m * m} parameters for m = {m}")
    H = np.zeros((m, m), dtype=complex)
    idx = np.triu_indices(m, 1)
    n_off = idx[0].size
    H[np.diag_indices(m)] = theta[:m]
    H[idx] = theta[m:m + n_off] + 1j * theta[m + n_off:]
    H = H + np.triu(H, 1).conj().T
    w, V = np.linalg.eigh(H)
    U = (V * np.exp(1j * w)[None, :]) @ V.conj().T
    return U[:, :r]


def _batch_isometries(thetas, m: int, r: int) -> np.ndarray:
    n = thetas.shape[0]
    H = np.zeros((n, m, m), dtype=complex)
    idx = np.triu_indices(m, 1)
    n_off = idx[0].size
    H[:, np.arange(m), np.arange(m)] = thetas[:, :m]
    H[:, idx[0], idx[1]] = (thetas[:, m:m + n_off]
                            + 1j * thetas[:, m + n_off:])
    H = H + np.conj(np.transpose(np.triu(H, 1), (0, 2, 1)))
    w, V = np.linalg.eigh(H)
    U = (V * np.exp(1j * w)[:, None, :]) @ np.conj(np.transpose(V, (0, 2, 1)))
    return U[:, :, :r]


def convex_roof(rho: DensityMatrix, measure, cfg: RoofConfig | None = None) -> "RoofResult":
    """Upper estimate of the convex roof of a measure at rho.

    Minimizes over isometries of m = r, ..., m_max parts with
    ``cfg.starts`` local searches per m (an identity start plus random
    ones), so the result is monotone nonincreasing in m_max up to
    optimizer noise.
    """
    measure = _as_measure(measure)
    cfg = cfg or RoofConfig()
    lam, vecs = spectral(rho)
    r = lam.size
    m_max = cfg.m_max if cfg.m_max is not None else 2 * r
    if m_max < r:
        raise ValueError(f"m_max {m_max} below rank {r}")
    B = np.sqrt(lam)[:, None] * vecs.T  # rows sqrt(lam_i) v_i

    best_value = np.inf
    best_dec = None
    best_m = r
    per_m = []

    for m in range(r, m_max + 1):
        nparams = m * m

        def values(thetas):
            U = _batch_isometries(thetas, m, r)
            phi = U @ B  # (n, m, DIM)
            w = np.einsum("nji,nji->nj", phi.conj(), phi).real
            norm = np.sqrt(np.maximum(w, 1e-300))
            e = measure.batch((phi / norm[:, :, None]).reshape(-1, DIM))
            return (w * e.reshape(w.shape)).sum(axis=1)

        def scalar(theta):
            return float(values(theta[None, :])[0])

        def jac(theta):
            probes = np.repeat(theta[None, :], 2 * nparams, axis=0)
            steps = np.arange(nparams)
            probes[steps, steps] += cfg.fd_step
            probes[nparams + steps, steps] -= cfg.fd_step
            v = values(probes)
            return (v[:nparams] - v[nparams:]) / (2 * cfg.fd_step)

        rng_starts = [np.zeros(nparams)]
        for i in range(cfg.starts - 1):
            rng = np.random.default_rng([cfg.seed, m, i])
            rng_starts.append(rng.normal(scale=1.5, size=nparams))

        m_best = np.inf
        m_conv = False
        for theta0 in rng_starts:
            res = scipy.optimize.minimize(
                scalar, theta0, jac=jac, method="L-BFGS-B",
                options={"maxiter": cfg.maxiter, "ftol": 1e-13, "gtol": 1e-10})
            dec = decomposition_from_isometry(
                rho, theta_to_isometry(res.x, m, r))
            val = dec.value(measure)  # exact, not the optimizer's estimate
            m_conv = m_conv or bool(res.success)
            if val < m_best:
                m_best = val
            if val < best_value:
                best_value, best_dec, best_m = val, dec, m
            if best_value < 1e-12:
                break
        per_m.append({"m": m, "best": m_best, "converged": m_conv})
        if best_value < 1e-12:
            break  # measures are nonnegative; zero cannot be improved on

    diagnostics = {
        "starts": cfg.starts, "seed": cfg.seed, "m_max": m_max,
        "per_m": per_m,
        "converged": all(entry["converged"] for entry in per_m),
    }
    return RoofResult(float(best_value), best_dec, best_m, measure, diagnostics)


def _as_measure(measure) -> Measure:
    return measure if isinstance(measure, Measure) else measure_by_name(measure)


class RoofResult:
    """Upper estimate of the roof with the decomposition achieving it."""

    __slots__ = ("value", "best", "m_used", "measure", "diagnostics")

    def __init__(self, value, best, m_used, measure, diagnostics=None):
        measure = _as_measure(measure)
        if not (-1e-12 <= value <= 1.0 + 1e-9):
            raise ValueError(f"roof value {value!r} outside [0, 1]")
        got = best.value(measure)
        if abs(got - value) > 1e-9:
            raise ValueError(
                f"decomposition value {got!r} disagrees with stored {value!r}")
        object.__setattr__(self, "value", float(value))
        object.__setattr__(self, "best", best)
        object.__setattr__(self, "m_used", int(m_used))
        object.__setattr__(self, "measure", measure)
        object.__setattr__(self, "diagnostics", dict(diagnostics or {}))

    def __setattr__(self, name, value):
        raise AttributeError("RoofResult is immutable")

    def to_json(self) -> str:
        return json.dumps({
            "value": self.value,
            "measure": self.measure.name,
            "m_used": self.m_used,
            "decomposition": json.loads(self.best.to_json()),
            "diagnostics": self.diagnostics,
        })

    @staticmethod
    def from_json(text: str) -> "RoofResult":
        d = json.loads(text)
        return RoofResult(
            d["value"],
            Decomposition.from_json(json.dumps(d["decomposition"])),
            d["m_used"], d["measure"], d.get("diagnostics"))
