"""Batched multi-start maximization over pure three-qubit states.

Every calibration problem in this package reduces to maximizing a
scalar objective f(psi) over unit vectors in C^8.  The landscapes have
boundary layers: objectives built from concurrence fill behave like
sqrt(eps) at distance eps from biseparable states, so plain Haar
screening essentially never lands close enough to resolve an extremum
sitting on such a state.  The search therefore combines

1. a large Haar screening batch,
2. caller-provided anchor states plus geometric epsilon-fans around
   them, reaching down to eps = 1e-7,
3. batched normalized-gradient ascent from the best screened points
   and from fresh Haar restarts (each fresh restart owns a private
   generator derived from the master seed and the restart index, so
   results are independent of scheduling),
4. L-BFGS-B polish of the best few endpoints.

States are parameterized by 16 reals (real and imaginary parts) and
normalized inside the objective; the global-phase redundancy is
harmless to extremum values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

DIM = 8
N_PARAMS = 2 * DIM

_FD_STEP = 1e-5
_CHUNK = 1 << 16


def states_from_params(z: np.ndarray) -> np.ndarray:
    """(k, 16) real parameters -> (k, 8) unit complex states."""
    a = z[:, :DIM] + 1j * z[:, DIM:]
    return a / np.linalg.norm(a, axis=1)[:, None]


def params_from_states(a: np.ndarray) -> np.ndarray:
    return np.concatenate([a.real, a.imag], axis=1)


@dataclass(frozen=True)
class SearchResult:
    value: float
    witness: np.ndarray  # unit ket, shape (8,)
    basin_gap: float  # value distance to the best non-equivalent endpoint
    n_distinct: int
    consensus: int  # endpoints within 1e-8 of the best value
    converged: bool


def haar_block(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, DIM)) + 1j * rng.standard_normal((n, DIM))
    return z / np.linalg.norm(z, axis=1)[:, None]


def anchor_fans(anchors: np.ndarray, rng: np.random.Generator,
                n_dirs: int = 48, eps_lo: float = 1e-7, eps_hi: float = 0.3,
                n_eps: int = 14) -> np.ndarray:
    """States sqrt(1-eps)*a + sqrt(eps)*d for each anchor a.

    Directions d are unit vectors orthogonal to a; eps is geometric so
    the fan probes every scale of a sqrt-type boundary layer.
    """
    if len(anchors) == 0:
        return np.zeros((0, DIM), dtype=complex)
    eps = np.geomspace(eps_lo, eps_hi, n_eps)
    out = []
    for a in anchors:
        d = rng.standard_normal((n_dirs, DIM)) + 1j * rng.standard_normal((n_dirs, DIM))
        d -= (d @ a.conj())[:, None] * a[None, :]
        d /= np.linalg.norm(d, axis=1)[:, None]
        for e in eps:
            out.append(np.sqrt(1 - e) * a[None, :] + np.sqrt(e) * d)
    return np.concatenate(out, axis=0)


def _eval_chunked(objective, states: np.ndarray) -> np.ndarray:
    if len(states) <= _CHUNK:
        return objective(states)
    parts = [objective(states[i:i + _CHUNK]) for i in range(0, len(states), _CHUNK)]
    return np.concatenate(parts)


def _batched_gradient(objective, z: np.ndarray) -> np.ndarray:
    """Central differences over the 16 parameters, batched over points."""
    k = len(z)
    probes = np.repeat(z[:, None, :], 2 * N_PARAMS, axis=1)
    idx = np.arange(N_PARAMS)
    probes[:, 2 * idx, idx] += _FD_STEP
    probes[:, 2 * idx + 1, idx] -= _FD_STEP
    vals = _eval_chunked(objective, states_from_params(probes.reshape(-1, N_PARAMS)))
    vals = vals.reshape(k, 2 * N_PARAMS)
    return (vals[:, 0::2] - vals[:, 1::2]) / (2 * _FD_STEP)


def maximize(objective, anchors, seed_seq, restarts: int = 200,
             screen: int = 200_000, iters: int = 250, lr0: float = 0.05,
             decay: float = 0.98, polish: int = 6, tolerance: float = 1e-8) -> SearchResult:
    """Best maximum of a batched objective over unit kets.

    Parameters
    ----------
    objective : callable
        Maps an (n, 8) complex array of unit kets to (n,) real values.
    anchors : array-like
        (m, 8) states worth probing exactly and via epsilon-fans.
    seed_seq : sequence of ints
        Entropy prefix; all randomness derives from it.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    seed_seq = list(seed_seq)
    anchors = np.asarray(anchors, dtype=complex).reshape(-1, DIM)

    rng = np.random.default_rng(seed_seq + [0])
    pool = [anchors, anchor_fans(anchors, rng)] if len(anchors) else []
    pool.append(haar_block(rng, screen))
    pool = np.concatenate(pool, axis=0)
    scores = _eval_chunked(objective, pool)

    n_top = max(1, restarts - restarts // 3)
    top = pool[np.argsort(scores)[::-1][:n_top]]
    fresh = [haar_block(np.random.default_rng(seed_seq + [1, i]), 1)[0]
             for i in range(restarts - n_top)]
    starts = np.concatenate([top, np.asarray(fresh).reshape(-1, DIM)], axis=0) \
        if fresh else top

    z = params_from_states(starts)
    for it in range(iters):
        g = _batched_gradient(objective, z)
        norms = np.linalg.norm(g, axis=1)
        step = np.where(norms > 1e-14, lr0 * decay ** it / np.maximum(norms, 1e-14), 0.0)
        z = z + step[:, None] * g

    endpoint_vals = _eval_chunked(objective, states_from_params(z))
    order = np.argsort(endpoint_vals)[::-1]

    def scalar(zz):
        return -float(objective(states_from_params(zz[None, :]))[0])

    def scalar_grad(zz):
        return -_batched_gradient(objective, zz[None, :])[0]

    polished_z, polished_v, all_ok = [], [], True
    for j in order[:max(1, polish)]:
        res = minimize(scalar, z[j], jac=scalar_grad, method="L-BFGS-B",
                       options={"ftol": 1e-14, "gtol": 1e-12, "maxiter": 500})
        all_ok = all_ok and bool(res.success)
        polished_z.append(res.x)
        polished_v.append(-res.fun)

    cand_z = np.concatenate([np.asarray(polished_z), z], axis=0)
    cand_v = np.concatenate([np.asarray(polished_v), endpoint_vals])
    cand_states = states_from_params(cand_z)

    best = int(np.argmax(cand_v))
    witness = cand_states[best]
    value = float(cand_v[best])

    overlap = np.abs(cand_states @ witness.conj()) ** 2
    distinct = overlap < 0.99
    n_distinct = 1 + len(np.unique(np.round(cand_v[distinct], 10))) if distinct.any() else 1
    basin_gap = float(value - cand_v[distinct].max()) if distinct.any() else float("inf")
    consensus = int(np.sum(cand_v > value - 1e-8))

    return SearchResult(value=value, witness=witness, basin_gap=basin_gap,
                        n_distinct=n_distinct, consensus=consensus, converged=all_ok)
