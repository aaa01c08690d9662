"""Trajectory simulation for one-step models.

Two engines over a shared configuration: an Euler-Maruyama integrator
for the Langevin model and an exact jump-process (Gillespie) sampler for
the underlying scheme.  Trajectory j of any run draws from a dedicated
counter-based Philox stream keyed by base_seed XOR j, so ensembles are
reproducible regardless of execution order and adding trajectories never
perturbs existing ones.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .cme import UnboundRateError, channel_rate, reaction_channels
from .derive import (DiffusionSign, NoiseStrategy, RateMode, SdeModel,
                     transition_rates)
from .poly import Polynomial, SymbolId, as_function, bind_values
from .scheme import InteractionScheme

_CHUNK_STEPS = 256      # noise draws are blocked per trajectory in chunks
_SSA_BLOCK = 1024       # random draws per refill of the jump sampler
_PSD_TOL = 1e-9
_RATE_TOL = 1e-9
_REJECT_LIMIT = 100


class Engine(enum.Enum):
    EULER_MARUYAMA = "em"
    SSA = "ssa"


class NegativePolicy(enum.Enum):
    CLAMP_ZERO = "clamp"
    REJECT_STEP = "reject"


class SimulationError(RuntimeError):
    pass


class NotSymmetricError(ValueError):
    pass


class NotPsdError(ValueError):
    pass


class NegativeRateError(ValueError):
    pass


class TooFewTrajectoriesError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    rates: Mapping[SymbolId, object]
    initial_state: tuple[float, ...]
    t_final: float
    dt: float = 1e-3
    trajectories: int = 100
    base_seed: int = 0
    negative_policy: NegativePolicy = NegativePolicy.CLAMP_ZERO
    grid_points: int = 200

    def __post_init__(self) -> None:
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")
        if self.dt <= 0 or self.dt > self.t_final:
            raise ValueError("dt must lie in (0, t_final]")
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")
        if self.grid_points < 2:
            raise ValueError("need at least two grid points")
        if any(x < 0 for x in self.initial_state):
            raise ValueError("initial state must be nonnegative")
        if not 0 <= self.base_seed < 2 ** 64:
            raise ValueError("base_seed must fit in 64 bits")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_final, self.grid_points)


@dataclass(frozen=True)
class TrajectoryEnsemble:
    engine: Engine
    species: tuple[SymbolId, ...]
    times: np.ndarray          # (G,)
    paths: np.ndarray          # (trajectories, G, n)
    clamp_events: np.ndarray   # (trajectories,) count of clamped steps


@dataclass(frozen=True)
class MomentReport:
    times: np.ndarray          # (G,)
    mean: np.ndarray           # (G, n)
    covariance: np.ndarray     # (G, n, n)
    standard_error: np.ndarray  # (G, n) standard error of the mean
    trajectories: int


@dataclass(frozen=True)
class ComparisonReport:
    times: np.ndarray
    mean_a: np.ndarray
    mean_b: np.ndarray
    z: np.ndarray              # (G, n) standardized mean differences
    max_abs_z: float
    threshold: float
    passed: bool


def trajectory_rng(base_seed: int, index: int) -> np.random.Generator:
    """The dedicated random stream of one trajectory: counter-based
    Philox (4x64, 10 rounds) keyed by base_seed XOR index."""
    if not 0 <= base_seed < 2 ** 64:
        raise ValueError("base_seed must fit in 64 bits")
    if not 0 <= index < 2 ** 64:
        raise ValueError("trajectory index must fit in 64 bits")
    return np.random.Generator(np.random.Philox(key=base_seed ^ index))


def matrix_sqrt_psd(b: np.ndarray, tol: float = _PSD_TOL) -> np.ndarray:
    """Symmetric square root of (a batch of) PSD matrices via eigh.

    Eigenvalues in [-tol * (1 + max|B|), 0) count as rounding noise and
    clamp to zero; anything lower raises NotPsdError.  Asymmetry beyond
    the same scaled tolerance raises NotSymmetricError.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.ndim < 2 or b.shape[-1] != b.shape[-2]:
        raise ValueError("expected square matrices on the last two axes")
    scale = 1.0 + np.abs(b).max(initial=0.0)
    asym = np.abs(b - np.swapaxes(b, -1, -2)).max(initial=0.0)
    if asym > tol * scale:
        raise NotSymmetricError(f"matrix asymmetry {asym:.3e} exceeds "
                                f"tolerance {tol * scale:.3e}")
    w, v = np.linalg.eigh(b)
    floor = -tol * scale
    if w.min(initial=0.0) < floor:
        raise NotPsdError(f"eigenvalue {w.min():.6e} below the PSD "
                          f"tolerance {floor:.3e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)[..., None, :]) @ np.swapaxes(v, -1, -2)


def _bound_functions(polys: Sequence[Polynomial], rates, species):
    out = []
    for p in polys:
        bound = bind_values(p, rates)
        leftovers = {s for s in bound.symbols if s not in set(species)}
        for s in leftovers:
            raise UnboundRateError(s)
        out.append(as_function(bound, species))
    return out


def _eval_columns(funcs, cols, count: int) -> np.ndarray:
    out = np.empty((count, len(funcs)))
    for i, f in enumerate(funcs):
        out[:, i] = f(*cols)
    return out


class _EmStepper:
    """Evaluates drift and noise increments for a batch of states."""

    def __init__(self, model: SdeModel, config: SimConfig):
        for r in model.rate_symbols:
            if r not in config.rates:
                raise UnboundRateError(r)
        self.species = model.species
        self.n = len(model.species)
        self.drift_funcs = _bound_functions(model.drift, config.rates,
                                            model.species)
        self.strategy = model.noise_strategy
        if self.strategy is NoiseStrategy.MATRIX_SQRT:
            self.diff_funcs = [
                [_bound_functions([model.diffusion[i][j]], config.rates,
                                  model.species)[0]
                 for j in range(self.n)] for i in range(self.n)]
            self.wiener_dim = self.n
        else:
            if model.scheme is None:
                raise ValueError("per-reaction noise needs the scheme")
            tr = transition_rates(model.scheme, model.rate_mode)
            amps = [f + g for f, g in zip(tr.forward, tr.backward)]
            self.amp_funcs = _bound_functions(amps, config.rates,
                                              model.species)
            self.change = np.array(
                [ia.change for ia in model.scheme.interactions],
                dtype=np.float64)                       # (s, n)
            self.wiener_dim = len(model.scheme.interactions)

    def drift(self, states: np.ndarray) -> np.ndarray:
        cols = [states[:, i] for i in range(self.n)]
        return _eval_columns(self.drift_funcs, cols, states.shape[0])

    def noise(self, states: np.ndarray, eps: np.ndarray) -> np.ndarray:
        count = states.shape[0]
        cols = [states[:, i] for i in range(self.n)]
        if self.strategy is NoiseStrategy.PER_REACTION:
            amp = _eval_columns(self.amp_funcs, cols, count)    # (T, s)
            low = amp.min(initial=0.0)
            if low < -_RATE_TOL:
                raise NegativeRateError(
                    f"per-reaction rate {low:.6e} is negative beyond "
                    f"tolerance {_RATE_TOL:.1e}")
            return (np.sqrt(np.clip(amp, 0.0, None)) * eps) @ self.change
        if self.n == 1:
            b = np.empty((count, 1))
            b[:, 0] = self.diff_funcs[0][0](*cols)
            scale = 1.0 + np.abs(b).max(initial=0.0)
            if b.min(initial=0.0) < -_PSD_TOL * scale:
                raise NotPsdError(f"diffusion value {b.min():.6e} is "
                                  "negative beyond tolerance")
            return np.sqrt(np.clip(b, 0.0, None)) * eps
        bmat = np.empty((count, self.n, self.n))
        for i in range(self.n):
            bmat[:, i, i] = self.diff_funcs[i][i](*cols)
            for j in range(i + 1, self.n):
                v = self.diff_funcs[i][j](*cols)
                bmat[:, i, j] = v
                bmat[:, j, i] = v
        root = matrix_sqrt_psd(bmat)
        return np.einsum("tij,tj->ti", root, eps)


def _grid_step_indices(times: np.ndarray, dt: float, nsteps: int) -> np.ndarray:
    return np.minimum(np.round(times / dt).astype(np.int64), nsteps)


def euler_maruyama(model: SdeModel, config: SimConfig) -> TrajectoryEnsemble:
    """Fixed-step Euler-Maruyama: phi += A dt + noise sqrt(dt), with the
    noise increment b(phi) eps for standard normal eps.

    Negative proposals follow config.negative_policy: clamp to zero (and
    count the event) or redraw the step's noise up to a retry limit.
    """
    n = len(model.species)
    if len(config.initial_state) != n:
        raise ValueError("initial state length does not match the model")
    stepper = _EmStepper(model, config)
    t_count = config.trajectories
    times = config.times
    nsteps = int(math.ceil(config.t_final / config.dt - 1e-9))
    grid_at = _grid_step_indices(times, config.dt, nsteps)
    dt = config.dt
    sqrt_dt = math.sqrt(dt)
    reject = config.negative_policy is NegativePolicy.REJECT_STEP

    states = np.tile(np.asarray(config.initial_state, dtype=np.float64),
                     (t_count, 1))
    paths = np.empty((t_count, len(times), n))
    clamps = np.zeros(t_count, dtype=np.int64)
    gens = [trajectory_rng(config.base_seed, j) for j in range(t_count)]

    g = 0
    step = 0
    while g < len(times) and grid_at[g] == 0:
        paths[:, g] = states
        g += 1
    m = stepper.wiener_dim
    while step < nsteps:
        k = min(_CHUNK_STEPS, nsteps - step)
        eps = np.empty((t_count, k, m))
        for j, gen in enumerate(gens):
            eps[j] = gen.standard_normal((k, m))
        for s in range(k):
            drift = stepper.drift(states)
            noise = stepper.noise(states, eps[:, s, :])
            proposal = states + drift * dt + noise * sqrt_dt
            bad = proposal < 0
            if bad.any():
                if reject:
                    for j in np.nonzero(bad.any(axis=1))[0]:
                        proposal[j] = _retry_step(stepper, states[j],
                                                  gens[j], dt, sqrt_dt)
                else:
                    clamps += bad.any(axis=1)
                    np.clip(proposal, 0.0, None, out=proposal)
            states = proposal
            step += 1
            while g < len(times) and grid_at[g] == step:
                paths[:, g] = states
                g += 1
    return TrajectoryEnsemble(engine=Engine.EULER_MARUYAMA,
                              species=model.species, times=times,
                              paths=paths, clamp_events=clamps)


def _retry_step(stepper: _EmStepper, state: np.ndarray,
                gen: np.random.Generator, dt: float,
                sqrt_dt: float) -> np.ndarray:
    row = state[None, :]
    drift = stepper.drift(row)
    for _ in range(_REJECT_LIMIT):
        eps = gen.standard_normal((1, stepper.wiener_dim))
        proposal = row + drift * dt + stepper.noise(row, eps) * sqrt_dt
        if (proposal >= 0).all():
            return proposal[0]
    raise SimulationError(
        f"no nonnegative step found in {_REJECT_LIMIT} redraws; "
        "the step size is likely too large for this state")


def _compile_ssa_rates(channels, n: int):
    """Generate a state -> (rates...) function for the jump sampler.

    For nonnegative integer states the plain falling-factorial product
    already vanishes whenever the state cannot supply a channel's complex
    (one factor is exactly zero), so the generated expressions need no
    feasibility guards.
    """
    used = sorted({i for stoich, _, _ in channels
                   for i, m in enumerate(stoich) if m})
    lines = ["def channel_rates(state):"]
    for i in used:
        lines.append(f"    x{i} = state[{i}]")
    exprs = []
    for stoich, _, value in channels:
        factors = [repr(float(value))]
        for i, m in enumerate(stoich):
            for k in range(m):
                factors.append(f"x{i}" if k == 0 else f"(x{i}-{k})")
        exprs.append("*".join(factors))
    joined = ",\n            ".join(exprs)
    lines.append(f"    return ({joined},)")
    namespace: dict = {}
    exec("\n".join(lines), namespace)
    return namespace["channel_rates"]


def gillespie_ssa(scheme: InteractionScheme,
                  config: SimConfig) -> TrajectoryEnsemble:
    """Exact jump-process sampling with exponential waiting times.

    States are integer occupation numbers; sampled paths are reported on
    the shared time grid by last-value interpolation.  The initial state
    must be integral.
    """
    n = len(scheme.species)
    if len(config.initial_state) != n:
        raise ValueError("initial state length does not match the scheme")
    init = []
    for x in config.initial_state:
        if abs(x - round(x)) > 1e-9:
            raise ValueError("jump-process simulation needs an integer "
                             f"initial state, got {x!r}")
        init.append(int(round(x)))

    float_rates = {sym: float(v) for sym, v in config.rates.items()}
    channels = reaction_channels(scheme, float_rates)
    deltas = [tuple((i, d) for i, d in enumerate(change) if d)
              for _, change, _ in channels]
    rate_fn = _compile_ssa_rates(channels, n)

    times = config.times
    grid = times.tolist()          # scalar loop below runs on plain floats
    g_count = len(grid)
    t_final = config.t_final
    paths = np.empty((config.trajectories, g_count, n))
    n_channels = len(channels)

    for j in range(config.trajectories):
        rng = trajectory_rng(config.base_seed, j)
        exp_buf = rng.standard_exponential(_SSA_BLOCK).tolist()
        uni_buf = rng.random(_SSA_BLOCK).tolist()
        ei = ui = 0
        state = list(init)
        t = 0.0
        g = 0
        while True:
            channel_rates = rate_fn(state)
            total = sum(channel_rates)
            if total <= 0.0:
                while g < g_count:            # absorbed: state holds forever
                    paths[j, g] = state
                    g += 1
                break
            if ei == _SSA_BLOCK:
                exp_buf = rng.standard_exponential(_SSA_BLOCK).tolist()
                ei = 0
            t_next = t + exp_buf[ei] / total
            ei += 1
            while g < g_count and grid[g] < t_next:
                paths[j, g] = state
                g += 1
            if t_next > t_final or g >= g_count:
                while g < g_count:
                    paths[j, g] = state
                    g += 1
                break
            if ui == _SSA_BLOCK:
                uni_buf = rng.random(_SSA_BLOCK).tolist()
                ui = 0
            u = uni_buf[ui] * total
            ui += 1
            acc = 0.0
            chosen = n_channels - 1
            for idx in range(n_channels):
                acc += channel_rates[idx]
                if u < acc:
                    chosen = idx
                    break
            for i, d in deltas[chosen]:
                state[i] += d
            t = t_next
    return TrajectoryEnsemble(engine=Engine.SSA, species=scheme.species,
                              times=times, paths=paths,
                              clamp_events=np.zeros(config.trajectories,
                                                    dtype=np.int64))


def ensemble_moments(ensemble: TrajectoryEnsemble) -> MomentReport:
    """Per-grid-time mean, sample covariance, and standard error of the
    mean across trajectories."""
    paths = ensemble.paths
    t_count = paths.shape[0]
    if t_count < 2:
        raise TooFewTrajectoriesError("moment estimates need at least two "
                                      "trajectories")
    mean = paths.mean(axis=0)
    centered = paths - mean
    cov = np.einsum("tgi,tgj->gij", centered, centered) / (t_count - 1)
    variances = np.diagonal(cov, axis1=1, axis2=2)
    stderr = np.sqrt(np.clip(variances, 0.0, None) / t_count)
    return MomentReport(times=ensemble.times, mean=mean, covariance=cov,
                        standard_error=stderr, trajectories=t_count)


def compare_reports(a: MomentReport, b: MomentReport,
                    threshold: float = 4.0) -> ComparisonReport:
    """Standardized mean differences z = (mean_a - mean_b) / pooled SE.

    Where both standard errors vanish, equal means give z = 0 and any
    difference gives an infinite z (a deterministic discrepancy)."""
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times):
        raise ValueError("moment reports use different time grids")
    se = np.sqrt(a.standard_error ** 2 + b.standard_error ** 2)
    diff = a.mean - b.mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / np.where(se > 0, se, 1.0),
                     np.where(diff == 0, 0.0, np.inf))
    max_abs_z = float(np.abs(z).max())
    return ComparisonReport(times=a.times, mean_a=a.mean, mean_b=b.mean,
                            z=z, max_abs_z=max_abs_z, threshold=threshold,
                            passed=bool(max_abs_z <= threshold))


def compare_engines(model: SdeModel, config: SimConfig,
                    threshold: float = 4.0) -> ComparisonReport:
    """Run both engines on the same model and standardize the difference
    of their mean estimates.

    The jump sampler gets a seed offset into a disjoint key range so the
    two engines never share a random stream."""
    if model.scheme is None:
        raise ValueError("engine comparison needs a model built from a scheme")
    em = ensemble_moments(euler_maruyama(model, config))
    ssa_config = replace(config, base_seed=config.base_seed ^ (1 << 63))
    ssa = ensemble_moments(gillespie_ssa(model.scheme, ssa_config))
    return compare_reports(em, ssa, threshold)


# ---------------------------------------------------------------------------
# output formats


def trajectories_to_csv(ensemble: TrajectoryEnsemble) -> str:
    names = ",".join(s.name for s in ensemble.species)
    lines = [f"trajectory,t,{names}"]
    for j in range(ensemble.paths.shape[0]):
        for g, t in enumerate(ensemble.times):
            row = ",".join(repr(float(v)) for v in ensemble.paths[j, g])
            lines.append(f"{j},{float(t)!r},{row}")
    return "\n".join(lines) + "\n"


def moments_to_csv(report: MomentReport,
                   species: Sequence[SymbolId]) -> str:
    names = [s.name for s in species]
    header = ["t"]
    header += [f"mean_{n}" for n in names]
    header += [f"cov_{a}_{b}" for a in names for b in names]
    header += [f"stderr_{n}" for n in names]
    lines = [",".join(header)]
    for g, t in enumerate(report.times):
        row = [repr(float(t))]
        row += [repr(float(v)) for v in report.mean[g]]
        row += [repr(float(v)) for v in report.covariance[g].ravel()]
        row += [repr(float(v)) for v in report.standard_error[g]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b")


def _svg_num(x: float) -> str:
    return format(x, ".6g")


def mean_band_svg(report: MomentReport, species: Sequence[SymbolId],
                  width: int = 640, height: int = 400) -> str:
    """Mean of each species over time with a +/-2 SE band, as a small
    self-contained SVG document."""
    ml, mr, mt, mb = 60.0, 20.0, 20.0, 45.0
    pw, ph = width - ml - mr, height - mt - mb
    times = report.times
    lo = float((report.mean - 2 * report.standard_error).min())
    hi = float((report.mean + 2 * report.standard_error).max())
    if hi <= lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    lo -= pad
    hi += pad
    t0, t1 = float(times[0]), float(times[-1])
    if t1 <= t0:
        t1 = t0 + 1.0

    def sx(t):
        return ml + (t - t0) / (t1 - t0) * pw

    def sy(v):
        return mt + (hi - v) / (hi - lo) * ph

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    # axes
    parts.append(f'<line x1="{_svg_num(ml)}" y1="{_svg_num(mt + ph)}" '
                 f'x2="{_svg_num(ml + pw)}" y2="{_svg_num(mt + ph)}" '
                 'stroke="black"/>')
    parts.append(f'<line x1="{_svg_num(ml)}" y1="{_svg_num(mt)}" '
                 f'x2="{_svg_num(ml)}" y2="{_svg_num(mt + ph)}" '
                 'stroke="black"/>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        t = t0 + frac * (t1 - t0)
        v = lo + frac * (hi - lo)
        parts.append(f'<text x="{_svg_num(sx(t))}" y="{_svg_num(mt + ph + 18)}" '
                     f'font-size="11" text-anchor="middle">{_svg_num(t)}</text>')
        parts.append(f'<text x="{_svg_num(ml - 6)}" y="{_svg_num(sy(v) + 4)}" '
                     f'font-size="11" text-anchor="end">{_svg_num(v)}</text>')
    parts.append(f'<text x="{_svg_num(ml + pw / 2)}" '
                 f'y="{_svg_num(height - 8)}" font-size="12" '
                 'text-anchor="middle">t</text>')

    for i, sp in enumerate(species):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        upper = report.mean[:, i] + 2 * report.standard_error[:, i]
        lower = report.mean[:, i] - 2 * report.standard_error[:, i]
        band = " ".join(f"{_svg_num(sx(t))},{_svg_num(sy(v))}"
                        for t, v in zip(times, upper))
        band += " " + " ".join(f"{_svg_num(sx(t))},{_svg_num(sy(v))}"
                               for t, v in zip(times[::-1], lower[::-1]))
        parts.append(f'<polygon points="{band}" fill="{color}" '
                     'fill-opacity="0.15" stroke="none"/>')
        line = " ".join(f"{_svg_num(sx(t))},{_svg_num(sy(v))}"
                        for t, v in zip(times, report.mean[:, i]))
        parts.append(f'<polyline points="{line}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{_svg_num(ml + pw - 8)}" '
                     f'y="{_svg_num(mt + 16 + 16 * i)}" font-size="12" '
                     f'text-anchor="end" fill="{color}">{sp.name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
