"""Calibrated lower/upper bounds on mixed-state entanglement.

For a Hermitian operator A and a pure-state measure E, define

    lambda_lb(A) = max_psi ( <psi|A|psi> - E(psi) )
    lambda_ub(A) = min_psi ( <psi|A|psi> - E(psi) )

Averaging over any decomposition of a mixed state rho shows that the
convex-roof extension of E is sandwiched by

    <A>_rho - lambda_lb  <=  E(rho)  <=  <A>_rho - lambda_ub,

so a single measured expectation value yields certified bounds once the
two lambdas are known.  Operators differing by a multiple of the
identity (the fiber A + c*1) give identical bounds; calibration
exploits this by searching a grid-canonicalized traceless
representative shared by every member of the fiber, which pins fiber
invariance to float-addition precision instead of optimizer precision.

The lambdas come from heuristic global optimization.  An
underestimated lambda_lb silently breaks the lower bound, so
calibrations carry diagnostics (restart consensus, basin gap,
convergence flags) and support an audit pass with ten times the
restarts; consumers should treat a small basin gap as a convergence
caveat, not an error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _optim
from .measures import Measure, measure_by_name
from .qstate import (
    ALL_PAULI_STRINGS,
    DIM,
    DensityMatrix,
    HermitianOperator,
    PureState,
    ghz,
    named_state,
    pauli_decompose,
    pauli_recompose,
    random_local_unitary,
)

__all__ = [
    "OptimizerConfig",
    "FiberCalibration",
    "BoundEstimate",
    "PureProjector",
    "TwoProjectorMix",
    "ScaledTomogram",
    "realize",
    "family_to_spec",
    "family_from_spec",
    "operator_from_spec",
    "exact_expectation_provider",
    "provider_expectation",
    "calibrate",
    "lambda_lb",
    "lambda_ub",
    "bounds",
    "tune_parameters",
    "MAXIMIZE_LB",
    "MINIMIZE_UB",
    "MINIMIZE_GAP",
    "TUNE_MODES",
]


@dataclass(frozen=True)
class OptimizerConfig:
    """Multi-start search budget for one lambda calibration."""

    restarts: int = 200
    screen_samples: int = 200_000
    descent_iters: int = 250
    polish: int = 6
    tolerance: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")


def _as_operator(op) -> HermitianOperator:
    if isinstance(op, HermitianOperator):
        return op
    if isinstance(op, (PureProjector, TwoProjectorMix, ScaledTomogram)):
        return realize(op)
    return HermitianOperator(np.asarray(op, dtype=complex))


def _as_measure(measure) -> Measure:
    return measure if isinstance(measure, Measure) else measure_by_name(measure)


# ---------------------------------------------------------------------------
# calibration containers


class FiberCalibration:
    """Calibrated lambda pair for one operator and one measure.

    Invariants checked at construction: lambda_ub <= lambda_lb + 1e-8,
    and each witness reproduces its lambda within 1e-6.
    """

    __slots__ = ("operator", "measure", "lambda_lb", "lambda_ub",
                 "witness_lb", "witness_ub", "diagnostics")

    def __init__(self, operator, measure, lambda_lb, lambda_ub,
                 witness_lb, witness_ub, diagnostics=None):
        operator = _as_operator(operator)
        measure = _as_measure(measure)
        if lambda_ub > lambda_lb + 1e-8:
            raise ValueError(
                f"lambda_ub {lambda_ub!r} exceeds lambda_lb {lambda_lb!r}")
        for lam, w, side in ((lambda_lb, witness_lb, "lb"), (lambda_ub, witness_ub, "ub")):
            got = _fiber_objective(operator.entries, measure, w.amplitudes)
            if abs(got - lam) > 1e-6:
                raise ValueError(
                    f"witness_{side} reproduces {got!r}, stored lambda is {lam!r}")
        object.__setattr__(self, "operator", operator)
        object.__setattr__(self, "measure", measure)
        object.__setattr__(self, "lambda_lb", float(lambda_lb))
        object.__setattr__(self, "lambda_ub", float(lambda_ub))
        object.__setattr__(self, "witness_lb", witness_lb)
        object.__setattr__(self, "witness_ub", witness_ub)
        object.__setattr__(self, "diagnostics", dict(diagnostics or {}))

    def __setattr__(self, name, value):
        raise AttributeError("FiberCalibration is immutable")

    @property
    def caveat(self) -> bool:
        """True when a distinct optimizer basin came within 1e-6 of the best."""
        return bool(self.diagnostics.get("caveat", False))

    def to_json(self) -> str:
        return json.dumps({
            "measure": self.measure.name,
            "lambda_lb": self.lambda_lb,
            "lambda_ub": self.lambda_ub,
            "operator": json.loads(self.operator.to_json()),
            "witness_lb": json.loads(self.witness_lb.to_json()),
            "witness_ub": json.loads(self.witness_ub.to_json()),
            "diagnostics": _json_safe(self.diagnostics),
        })

    @staticmethod
    def from_json(text: str) -> "FiberCalibration":
        d = json.loads(text)
        return FiberCalibration(
            HermitianOperator.from_json(json.dumps(d["operator"])),
            d["measure"], d["lambda_lb"], d["lambda_ub"],
            PureState.from_json(json.dumps(d["witness_lb"])),
            PureState.from_json(json.dumps(d["witness_ub"])),
            d.get("diagnostics"),
        )


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


@dataclass(frozen=True)
class BoundEstimate:
    """Certified sandwich on the convex-roof measure of one state."""

    lower: float
    upper: float
    expectation: float
    expectation_stderr: float
    measure: Measure
    raw_lower: float  # before clamping to [0, 1]
    raw_upper: float

    def __post_init__(self):
        if self.expectation_stderr < 0:
            raise ValueError("expectation_stderr must be >= 0")
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError("clamped bounds must satisfy 0 <= lower <= upper <= 1")


# ---------------------------------------------------------------------------
# objectives and calibration


def _fiber_objective(A, measure, amps) -> float:
    e = float(np.real(amps.conj() @ A @ amps))
    return e - measure(PureState.normalized(amps))


_COEFF_GRID = float(2 ** 30)


def _canonical_traceless(operator: HermitianOperator) -> np.ndarray:
    """Search representative shared by every operator on one fiber.

    Operators on a fiber A + c*1 have equal non-identity Pauli
    coefficients up to float rounding of order 1e-15.  Snapping the
    coefficients to a 2^-30 grid absorbs that noise, so all fiber
    members hand the bitwise-identical matrix to the (deterministic)
    search and recover bitwise-identical witnesses; lambdas then shift
    by exactly c.  Reported lambdas are still exact evaluations of the
    requested operator at those witnesses, so the snap costs at most
    ~1e-8 of tightness and no validity.
    """
    c = np.round(operator.coeffs * _COEFF_GRID) / _COEFF_GRID
    c[0] = 0.0
    return pauli_recompose(c)


def _batched_objective(A0, measure, sign):
    def f(states):
        e = np.einsum("ni,ij,nj->n", states.conj(), A0, states).real
        return sign * (e - measure.batch(states))
    return f


def _anchor_states(A0) -> np.ndarray:
    kets = np.eye(DIM, dtype=complex)
    named = np.stack([named_state(n).amplitudes
                      for n in ("ghz", "w", "bisep", "psi1", "psi2", "psi3")])
    _, vecs = np.linalg.eigh(A0)
    return np.concatenate([named, kets, vecs.T], axis=0)


def _search(A0c, A0, measure, sign, config, stream) -> tuple[float, PureState, dict]:
    res = _optim.maximize(
        _batched_objective(A0c, measure, sign),
        _anchor_states(A0c),
        seed_seq=[config.seed, stream],
        restarts=config.restarts,
        screen=config.screen_samples,
        iters=config.descent_iters,
        polish=config.polish,
        tolerance=config.tolerance,
    )
    witness = PureState.normalized(res.witness)
    # the search runs on the canonical representative A0c, but the
    # reported lambda is the objective evaluated exactly at the witness
    # on the requested operator's own traceless part
    value = float(np.real(witness.amplitudes.conj() @ A0 @ witness.amplitudes)
                  - measure(witness))
    diag = {"basin_gap": res.basin_gap, "n_distinct": res.n_distinct,
            "consensus": res.consensus, "converged": res.converged}
    return value, witness, diag


def calibrate(operator, measure, config: OptimizerConfig | None = None,
              audit: bool = False) -> FiberCalibration:
    """Calibrate both lambdas of an operator for one measure.

    ``audit=True`` reruns with ten times the restarts and doubled
    screening, for spot-checking suspicious calibrations.
    """
    operator = _as_operator(operator)
    measure = _as_measure(measure)
    config = config or OptimizerConfig()
    if audit:
        config = replace(config, restarts=config.restarts * 10,
                         screen_samples=config.screen_samples * 2)

    c0 = float(np.trace(operator.entries).real) / DIM
    A0 = operator.entries - c0 * np.eye(DIM)
    A0c = _canonical_traceless(operator)

    lb0, w_lb, d_lb = _search(A0c, A0, measure, +1.0, config, stream=0)
    ub0, w_ub, d_ub = _search(A0c, A0, measure, -1.0, config, stream=1)

    diagnostics = {
        "restarts": config.restarts,
        "screen_samples": config.screen_samples,
        "tolerance": config.tolerance,
        "seed": config.seed,
        "audit": audit,
        "lb": d_lb,
        "ub": d_ub,
        "caveat": (d_lb["basin_gap"] < 1e-6) or (d_ub["basin_gap"] < 1e-6),
    }
    return FiberCalibration(operator, measure, lb0 + c0, ub0 + c0,
                            w_lb, w_ub, diagnostics)


def lambda_lb(operator, measure, config: OptimizerConfig | None = None):
    """(value, witness, diagnostics) of the lower-bound calibration."""
    cal = calibrate(operator, measure, config)
    return cal.lambda_lb, cal.witness_lb, cal.diagnostics["lb"]


def lambda_ub(operator, measure, config: OptimizerConfig | None = None):
    """(value, witness, diagnostics) of the upper-bound calibration."""
    cal = calibrate(operator, measure, config)
    return cal.lambda_ub, cal.witness_ub, cal.diagnostics["ub"]


def bounds(cal: FiberCalibration, expectation: float,
           stderr: float = 0.0) -> BoundEstimate:
    """Sandwich from one measured expectation value of cal.operator."""
    raw_lower = expectation - cal.lambda_lb
    raw_upper = expectation - cal.lambda_ub
    if raw_lower > raw_upper + 1e-8:
        raise ValueError("corrupted calibration: raw lower bound exceeds raw upper")
    return BoundEstimate(
        lower=float(np.clip(raw_lower, 0.0, 1.0)),
        upper=float(np.clip(raw_upper, 0.0, 1.0)),
        expectation=float(expectation),
        expectation_stderr=float(stderr),
        measure=cal.measure,
        raw_lower=float(raw_lower),
        raw_upper=float(raw_upper),
    )


# ---------------------------------------------------------------------------
# operator families


@dataclass(frozen=True)
class PureProjector:
    """A = x |phi><phi|."""

    phi: PureState
    x: float = 1.0

    def realize(self) -> HermitianOperator:
        a = self.phi.amplitudes
        return HermitianOperator(self.x * np.outer(a, a.conj()))


@dataclass(frozen=True)
class TwoProjectorMix:
    """A = x |phi1><phi1| + y |phi2><phi2|."""

    phi1: PureState
    phi2: PureState
    x: float = 1.0
    y: float = 1.0

    def realize(self) -> HermitianOperator:
        a1, a2 = self.phi1.amplitudes, self.phi2.amplitudes
        return HermitianOperator(self.x * np.outer(a1, a1.conj())
                                 + self.y * np.outer(a2, a2.conj()))


@dataclass(frozen=True)
class ScaledTomogram:
    """A = x * rho for a reconstructed (or exact) density matrix."""

    rho: DensityMatrix
    x: float = 1.0

    def realize(self) -> HermitianOperator:
        return HermitianOperator(self.x * self.rho.entries)


def realize(family) -> HermitianOperator:
    """Dense Hermitian operator of an operator family."""
    if isinstance(family, (PureProjector, TwoProjectorMix, ScaledTomogram)):
        return family.realize()
    raise TypeError(f"not an operator family: {type(family).__name__}")


def _state_ref_to_spec(ps: PureState):
    return json.loads(ps.to_json())


def _state_ref_from_spec(obj) -> PureState:
    if isinstance(obj, str):
        return named_state(obj)
    if isinstance(obj, dict):
        return PureState.from_json(json.dumps(obj))
    raise ValueError(f"not a state reference: {obj!r}")


def family_to_spec(family) -> dict:
    """Tagged-union dict form used by operator spec files."""
    if isinstance(family, PureProjector):
        return {"kind": "pure_projector", "x": family.x,
                "state": _state_ref_to_spec(family.phi)}
    if isinstance(family, TwoProjectorMix):
        return {"kind": "two_projector_mix", "x": family.x, "y": family.y,
                "state1": _state_ref_to_spec(family.phi1),
                "state2": _state_ref_to_spec(family.phi2)}
    if isinstance(family, ScaledTomogram):
        return {"kind": "scaled_tomogram", "x": family.x,
                "rho": json.loads(family.rho.to_json())}
    raise TypeError(f"not an operator family: {type(family).__name__}")


def family_from_spec(d: dict):
    kind = d.get("kind")
    if kind == "pure_projector":
        return PureProjector(_state_ref_from_spec(d["state"]), float(d.get("x", 1.0)))
    if kind == "two_projector_mix":
        return TwoProjectorMix(
            _state_ref_from_spec(d.get("state1", "bisep")),
            _state_ref_from_spec(d.get("state2", "w")),
            float(d.get("x", 1.0)), float(d.get("y", 1.0)))
    if kind == "scaled_tomogram":
        return ScaledTomogram(
            DensityMatrix.from_json(json.dumps(d["rho"])), float(d.get("x", 1.0)))
    raise ValueError(f"unknown operator family kind: {kind!r}")


def operator_from_spec(d: dict):
    """(operator, family or None) from a tagged-union spec dict.

    The "dense" kind carries a raw matrix and has no tunable family.
    """
    if not isinstance(d, dict):
        raise ValueError("operator spec must be a JSON object")
    if d.get("kind") == "dense":
        return HermitianOperator.from_json(json.dumps(
            {"entries_re": d["entries_re"], "entries_im": d["entries_im"]})), None
    family = family_from_spec(d)
    return realize(family), family


# ---------------------------------------------------------------------------
# expectation providers


def exact_expectation_provider(state):
    """Pauli-expectation provider from an exactly known state.

    Returns a callable mapping a Pauli string to <sigma_s>.  In a real
    run the same role is played by counting statistics; see lab.
    """
    rho = state.density() if isinstance(state, PureState) else state
    coeffs = pauli_decompose(rho.entries)
    table = {s: float(DIM * c) for s, c in zip(ALL_PAULI_STRINGS, coeffs)}

    def provider(labels: str) -> float:
        if labels not in table:
            raise ValueError(f"not a Pauli string: {labels!r}")
        return table[labels]

    return provider


def provider_expectation(operator, provider) -> float:
    """<A> assembled from per-string expectations of a provider."""
    operator = _as_operator(operator)
    if isinstance(provider, dict):
        table = provider
        provider = lambda s: table[s]
    total = 0.0
    for s, c in zip(ALL_PAULI_STRINGS, operator.coeffs):
        if abs(c) > 1e-12:
            total += c * (1.0 if s == "000" else provider(s))
    return float(total)


# ---------------------------------------------------------------------------
# parameter tuning

MAXIMIZE_LB = "maximize_lb"
MINIMIZE_UB = "minimize_ub"
MINIMIZE_GAP = "minimize_gap"
TUNE_MODES = (MAXIMIZE_LB, MINIMIZE_UB, MINIMIZE_GAP)


def _biseparable_block(rng, n) -> np.ndarray:
    """n random pure states that factor across a random bipartition."""
    u = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    v = rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))
    split = rng.integers(0, 3, n)
    out = np.empty((n, 2, 2, 2), dtype=complex)
    for s, expr in ((0, "ni,njk->nijk"), (1, "nj,nik->nijk"), (2, "nk,nij->nijk")):
        mask = split == s
        out[mask] = np.einsum(expr, u[mask], v[mask])
    out = out.reshape(n, DIM)
    return out / np.linalg.norm(out, axis=1)[:, None]


def _tune_ensemble(anchors, measure, seed) -> tuple[np.ndarray, np.ndarray]:
    """Sample states and their measure values for scan-stage lambda hats.

    The ensemble mixes Haar states, local-unitary images of GHZ (the
    maximal-measure stratum), biseparable products (the zero stratum,
    where lower-bound optima tend to sit), computational kets, and
    epsilon-fans around the anchors, so the surrogate lambdas see the
    same boundary layers the rigorous calibration does.
    """
    rng = np.random.default_rng([seed, 7001])
    g = ghz().amplitudes
    lu = np.stack([random_local_unitary(rng) @ g for _ in range(2_000)])
    anchors = np.asarray(anchors, dtype=complex).reshape(-1, DIM)
    fans = _optim.anchor_fans(anchors, rng)
    parts = [anchors, np.eye(DIM, dtype=complex), fans, lu,
             _biseparable_block(rng, 4_000), _optim.haar_block(rng, 8_000)]
    states = np.concatenate(parts, axis=0)
    return states, measure.batch(states)


def _golden_min(f, lo, hi, iters=70):
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    x = (a + b) / 2.0
    return x, f(x)


def _grid(lo, hi, step):
    if lo > hi:
        raise ValueError(f"empty parameter range: [{lo}, {hi}]")
    if lo == hi:
        return np.array([lo])
    n = max(2, int(round((hi - lo) / step)) + 1)
    return np.linspace(lo, hi, n)


def tune_parameters(template, measure, provider, mode,
                    config: OptimizerConfig | None = None,
                    x_range=(-4.0, 4.0), y_range=(-2.0, 4.0),
                    step=0.05, extend_cap=256.0):
    """Scan and refine family scalars, then calibrate the tuned operator.

    The scan estimates lambdas from a fixed sample ensemble (cheap,
    slightly optimistic); the returned calibration reruns the rigorous
    multi-start search at the tuned parameters, so tuning error costs
    tightness, never validity.  The scan grid is extended geometrically
    (doubling, up to |parameter| = extend_cap) whenever the optimum
    sits on a range edge; upper-bound tuning in particular needs large
    negative projector scales.

    ``provider`` maps Pauli strings to expectation values of the target
    state; re-tuning only re-weights already-measured expectations.
    """
    measure = _as_measure(measure)
    if mode not in TUNE_MODES:
        raise ValueError(f"unknown tune mode {mode!r}; known: {list(TUNE_MODES)}")
    config = config or OptimizerConfig()
    if isinstance(provider, dict):
        table = dict(provider)
        provider = lambda s: table[s]

    if isinstance(template, PureProjector):
        anchors = [template.phi.amplitudes]
        bases = [np.outer(anchors[0], anchors[0].conj())]
        ranges = [tuple(x_range)]
    elif isinstance(template, TwoProjectorMix):
        a1, a2 = template.phi1.amplitudes, template.phi2.amplitudes
        anchors = [a1, a2]
        bases = [np.outer(a1, a1.conj()), np.outer(a2, a2.conj())]
        ranges = [tuple(x_range), tuple(y_range)]
    elif isinstance(template, ScaledTomogram):
        evals, evecs = np.linalg.eigh(template.rho.entries)
        anchors = [evecs[:, k] for k in range(DIM) if evals[k] > 1e-6]
        bases = [template.rho.entries]
        ranges = [tuple(x_range)]
    else:
        raise TypeError(f"not an operator family: {type(template).__name__}")

    states, E = _tune_ensemble(anchors, measure, config.seed)
    # per-sample expectation of each unit-scale base operator
    feats = np.stack([
        np.einsum("ni,ij,nj->n", states.conj(), B, states).real for B in bases
    ], axis=1)
    m_base = np.array([provider_expectation(HermitianOperator(B), provider)
                       for B in bases])

    def score_rows(P):
        """Scores of candidate parameter rows P, shape (k, nparams)."""
        vals = P @ feats.T
        lam_lb = (vals - E[None, :]).max(axis=1)
        lam_ub = (vals - E[None, :]).min(axis=1)
        m_hat = P @ m_base
        if mode == MAXIMIZE_LB:
            return -(m_hat - lam_lb)
        if mode == MINIMIZE_UB:
            return m_hat - lam_ub
        # gap mode: width of the clamped sandwich reported for the target;
        # the raw lambda gap is bounded below by 1 for projector families
        # (a biseparable state and a maximal state orthogonal to every
        # projector always exist), so only clamping makes tuning meaningful
        lo = np.clip(m_hat - lam_lb, 0.0, 1.0)
        hi = np.clip(m_hat - lam_ub, 0.0, 1.0)
        return hi - lo

    nparams = len(ranges)
    best_p = None
    best_s = np.inf

    def scan(cands):
        # surrogate scores over-estimate achievable bounds, and the error
        # shrinks as the anchor term dominates, so exact score ties are
        # broken toward the larger parameter norm (for a lone projector
        # the rigorous lower bound is nondecreasing in the scale, by the
        # envelope theorem, so the largest tied scale is never worse)
        nonlocal best_p, best_s
        cands = np.atleast_2d(np.asarray(cands, dtype=float))
        for i in range(0, len(cands), 512):
            chunk = cands[i:i + 512]
            sc = score_rows(chunk)
            tied = np.flatnonzero(sc <= sc.min() + 1e-12)
            j = int(tied[np.argmax(np.einsum("ij,ij->i", chunk[tied], chunk[tied]))])
            norm = float(chunk[j] @ chunk[j])
            wins = sc[j] < best_s - 1e-12 or (
                sc[j] <= best_s + 1e-12
                and (best_p is None or norm > float(np.dot(best_p, best_p)) + 1e-12))
            if best_p is None or wins:
                best_s = float(sc[j])
                best_p = [float(v) for v in chunk[j]]

    def cartesian(axes):
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    grids = [_grid(lo, hi, step) for lo, hi in ranges]
    scan(cartesian(grids))

    # geometric extension while the optimum sits on a live edge
    spans = [float(g[-1] - g[0]) if len(g) > 1 else 0.0 for g in grids]
    for ax in range(nparams):
        lo, hi = ranges[ax]
        if lo == hi:
            continue
        guard = 0
        while guard < 16:
            guard += 1
            edge_step = max(spans[ax] / 8.0, step)
            at_hi = best_p[ax] >= hi - edge_step and hi < extend_cap
            at_lo = best_p[ax] <= lo + edge_step and lo > -extend_cap
            if at_hi:
                new_hi = min(extend_cap, max(2.0 * abs(hi), hi + spans[ax], 8.0))
                segment = np.linspace(hi, new_hi, 41)
                hi = new_hi
            elif at_lo:
                new_lo = max(-extend_cap, -max(2.0 * abs(lo), abs(lo) + spans[ax], 8.0))
                segment = np.linspace(new_lo, lo, 41)
                lo = new_lo
            else:
                break
            axes = [segment if k == ax else grids[k] for k in range(nparams)]
            scan(cartesian(axes))
            grids[ax] = np.unique(np.concatenate([grids[ax], segment]))
        spans[ax] = hi - lo
        ranges[ax] = (lo, hi)

    # golden-section polish around the incumbent, coordinate-wise
    for _ in range(2 if nparams > 1 else 1):
        for ax in range(nparams):
            lo, hi = ranges[ax]
            if lo == hi:
                continue
            local = max(spans[ax] / 40.0, step)
            a = max(lo, best_p[ax] - local)
            b = min(hi, best_p[ax] + local)

            def f1(v, ax=ax):
                p = list(best_p)
                p[ax] = float(v)
                return float(score_rows(np.asarray([p]))[0])

            x, s = _golden_min(f1, a, b)
            if s < best_s - 1e-12:
                best_s = s
                best_p[ax] = float(x)

    # the surrogate envelope bends where its sample ensemble runs out,
    # which is not always where the true envelope does, so the incumbent
    # and a short scale ladder around it are re-scored with reduced-budget
    # rigorous calibrations; a candidate replaces the incumbent only on a
    # strict improvement of the true objective
    if any(lo < hi for lo, hi in ranges):
        refine_cfg = replace(config,
                             restarts=max(16, config.restarts // 8),
                             screen_samples=max(20_000,
                                                config.screen_samples // 10))

        def build(p):
            if isinstance(template, TwoProjectorMix):
                return replace(template, x=p[0], y=p[1])
            return replace(template, x=p[0])

        def rigorous_score(p):
            A = realize(build(p))
            cal = calibrate(A, measure, refine_cfg)
            m_hat = provider_expectation(A, provider)
            if mode == MAXIMIZE_LB:
                return -(m_hat - cal.lambda_lb)
            if mode == MINIMIZE_UB:
                return m_hat - cal.lambda_ub
            width_lo = min(max(m_hat - cal.lambda_lb, 0.0), 1.0)
            width_hi = min(max(m_hat - cal.lambda_ub, 0.0), 1.0)
            return width_hi - width_lo

        incumbent = rigorous_score(best_p)
        for _ in range(2):
            moved = False
            for ax in range(nparams):
                lo, hi = ranges[ax]
                if lo == hi:
                    continue
                v = best_p[ax]
                d = max(step, abs(v) / 8.0)
                root2 = np.sqrt(2.0)
                cands = []
                for c in (2.0 * v, v * root2, v / root2, 0.5 * v,
                          v + d, v - d):
                    c = min(max(float(c), lo), hi)
                    if abs(c - v) > 1e-12 and all(
                            abs(c - o) > 1e-12 for o in cands):
                        cands.append(c)
                scores = []
                for c in cands:
                    p = list(best_p)
                    p[ax] = c
                    scores.append(rigorous_score(p))
                if not scores:
                    continue
                order = sorted(range(len(cands)),
                               key=lambda k: (scores[k], -abs(cands[k])))
                k = order[0]
                if scores[k] < incumbent - 1e-9:
                    incumbent = scores[k]
                    best_p[ax] = cands[k]
                    moved = True
            if not moved:
                break

    if isinstance(template, PureProjector):
        tuned = replace(template, x=best_p[0])
    elif isinstance(template, TwoProjectorMix):
        tuned = replace(template, x=best_p[0], y=best_p[1])
    else:
        tuned = replace(template, x=best_p[0])

    return tuned, calibrate(realize(tuned), measure, config)
