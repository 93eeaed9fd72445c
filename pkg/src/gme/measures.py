"""Pure-state entanglement measures for three qubits.

Both measures are built from the three squared one-to-other
concurrences ("edges")

    e_i = 2 (1 - Tr rho_i^2),   i = 1, 2, 3,

where rho_i is the reduced state of qubit i.  Each e_i lies in [0, 1]
for a pure three-qubit state, and the three edges always satisfy the
triangle inequality e_i <= e_j + e_k, so they are the squared side
lengths of a (possibly degenerate) triangle.

- ``concurrence_fill``: fourth root of (16/3 times) the squared Heron
  area of that triangle.  1 on GHZ, 8/9 on W, 0 exactly on every
  biseparable pure state.
- ``gmc``: genuine multipartite concurrence, here the minimum edge
  (squared concurrence convention, so it matches fill on symmetric
  states like GHZ and W).
"""

from __future__ import annotations

import numpy as np

from .qstate import PureState, _as_amplitudes

__all__ = [
    "edges",
    "edges_batch",
    "one_to_other_concurrence",
    "concurrence_fill",
    "gmc",
    "fill_batch",
    "gmc_batch",
    "MEASURES",
    "measure_by_name",
]


def edges(state) -> np.ndarray:
    """Squared one-to-other concurrences (e1, e2, e3), clipped to [0, 1]."""
    return edges_batch(_as_amplitudes(state)[None, :])[0]


def edges_batch(amps: np.ndarray) -> np.ndarray:
    """Edges for an (n, 8) array of kets, returned as (n, 3)."""
    t = np.asarray(amps, dtype=complex).reshape(-1, 2, 2, 2)
    p1 = _purity2(np.einsum("nijk,nljk->nil", t, t.conj()))
    p2 = _purity2(np.einsum("niak,nibk->nab", t, t.conj()))
    p3 = _purity2(np.einsum("nija,nijb->nab", t, t.conj()))
    e = 2.0 * (1.0 - np.stack([p1, p2, p3], axis=1))
    return np.clip(e, 0.0, 1.0)


def _purity2(rho2: np.ndarray) -> np.ndarray:
    return np.einsum("nij,nji->n", rho2, rho2).real


def one_to_other_concurrence(state, qubit: int) -> float:
    """Concurrence between one qubit and the remaining pair."""
    if qubit not in (1, 2, 3):
        raise ValueError(f"qubit must be 1, 2 or 3, got {qubit!r}")
    return float(np.sqrt(edges(state)[qubit - 1]))


def concurrence_fill(state) -> float:
    """Concurrence fill of a pure state, in [0, 1]."""
    return float(fill_batch(_as_amplitudes(state)[None, :])[0])


def gmc(state) -> float:
    """Genuine multipartite concurrence (squared convention), in [0, 1]."""
    return float(gmc_batch(_as_amplitudes(state)[None, :])[0])


def fill_batch(amps: np.ndarray) -> np.ndarray:
    e = edges_batch(amps)
    return fill_from_edges(e)


def fill_from_edges(e: np.ndarray) -> np.ndarray:
    e = np.atleast_2d(e)
    q = e.sum(axis=1) / 2.0
    r = (16.0 / 3.0) * q * (q - e[:, 0]) * (q - e[:, 1]) * (q - e[:, 2])
    bad = r < -1e-10
    if np.any(bad):
        raise ValueError(f"edge triple violates the triangle inequality: radicand {r[bad].min():.3e}")
    # exact zeros on biseparable states: the product picks up O(eps^2)
    # float noise whose fourth root would be ~1e-8
    r = np.where(r < 1e-26, 0.0, r)
    return r ** 0.25


def gmc_batch(amps: np.ndarray) -> np.ndarray:
    return edges_batch(amps).min(axis=1)


def _measure_fn(name):
    return {"fill": fill_batch, "gmc": gmc_batch}[name]


class Measure:
    """Named pure-state measure exposing scalar and batched evaluation."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        if name not in ("fill", "gmc"):
            raise ValueError(f"unknown measure {name!r}; known: ['fill', 'gmc']")
        object.__setattr__(self, "name", name)

    def __setattr__(self, name, value):
        raise AttributeError("Measure is immutable")

    def __call__(self, state) -> float:
        return float(self.batch(_as_amplitudes(state)[None, :])[0])

    def batch(self, amps: np.ndarray) -> np.ndarray:
        return _measure_fn(self.name)(amps)

    def __repr__(self):
        return f"Measure({self.name!r})"

    def __eq__(self, other):
        return isinstance(other, Measure) and other.name == self.name

    def __hash__(self):
        return hash(("Measure", self.name))


MEASURES = {"fill": Measure("fill"), "gmc": Measure("gmc")}


def measure_by_name(name: str) -> Measure:
    key = str(name).lower()
    if key not in MEASURES:
        raise ValueError(f"unknown measure {name!r}; known: {sorted(MEASURES)}")
    return MEASURES[key]
