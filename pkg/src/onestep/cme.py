"""Truncated master-equation oracle and jump-moment enumeration.

Both tools work directly from the scheme's integer jump processes and
never touch the symbolic derivation, so they can serve as independent
ground truth for it.  The generator is assembled in exact rational
arithmetic (given exact rate values) and converted to floats only when
stored; states that would jump outside the truncation box send their
probability flux into an absorbing loss account instead.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse

from .poly import SymbolId, as_function, bind_values
from .scheme import InteractionScheme


class UnboundRateError(KeyError):
    def __init__(self, symbol: SymbolId):
        self.symbol = symbol
        super().__init__(f"no value bound for rate symbol {symbol.name!r}")

    def __str__(self) -> str:
        return self.args[0]


class UnstableStepError(ValueError):
    pass


class DegenerateDistributionError(ValueError):
    pass


@dataclass(frozen=True)
class StateBox:
    """Product box of occupation numbers, 0..bound inclusive per species.

    States are ordered row-major: the last species index varies fastest.
    """

    bounds: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.bounds or any(b < 0 or not isinstance(b, int)
                                  for b in self.bounds):
            raise ValueError("box bounds must be nonnegative integers")

    @property
    def size(self) -> int:
        out = 1
        for b in self.bounds:
            out *= b + 1
        return out

    def states(self):
        return itertools.product(*(range(b + 1) for b in self.bounds))

    def contains(self, state: Sequence[int]) -> bool:
        return all(0 <= x <= b for x, b in zip(state, self.bounds))

    def index(self, state: Sequence[int]) -> int:
        idx = 0
        for x, b in zip(state, self.bounds):
            idx = idx * (b + 1) + x
        return idx

    def state_array(self) -> np.ndarray:
        return np.array(list(self.states()), dtype=np.int64)


def reaction_channels(scheme: InteractionScheme,
                      rates: Mapping[SymbolId, object]):
    """Flatten a scheme into jump channels (consumed complex, state change,
    rate value): one channel per direction of each interaction."""
    channels = []
    for ia in scheme.interactions:
        try:
            kf = rates[ia.forward_rate]
        except KeyError:
            raise UnboundRateError(ia.forward_rate) from None
        channels.append((ia.initial, ia.change, kf))
        if ia.backward_rate is not None:
            try:
                kb = rates[ia.backward_rate]
            except KeyError:
                raise UnboundRateError(ia.backward_rate) from None
            channels.append((ia.final, tuple(-d for d in ia.change), kb))
    return channels


def channel_rate(value, stoich: Sequence[int], state: Sequence[int]):
    """Rate of one channel at an integer state: the rate value times the
    falling factorial of each consumed species count.  Exact for exact
    inputs; zero whenever the state cannot supply the complex."""
    v = value
    for x, m in zip(state, stoich):
        for k in range(m):
            v = v * (x - k)
            if v == 0:
                return v
    return v


def jump_moments(scheme: InteractionScheme, rates: Mapping[SymbolId, object],
                 state: Sequence[int]):
    """First and second jump moments at a state, by direct enumeration.

    Returns (first, second) as nested Python lists so that exact rate
    values give exact moments.  The second moment sums the directional
    rates; the first takes their difference.
    """
    n = len(scheme.species)
    first = [0] * n
    second = [[0] * n for _ in range(n)]
    for stoich, change, value in reaction_channels(scheme, rates):
        v = channel_rate(value, stoich, state)
        if v == 0:
            continue
        for i in range(n):
            if not change[i]:
                continue
            first[i] = first[i] + change[i] * v
            for j in range(n):
                if change[j]:
                    second[i][j] = second[i][j] + change[i] * change[j] * v
    return first, second


@dataclass(frozen=True)
class TruncatedGenerator:
    """Master-equation generator truncated to a box.

    matrix is the float generator Q (columns are source states); applying
    it as dp/dt = Q p conserves probability up to the absorbing loss
    described by lost_rate, the per-state outflow across the boundary.
    exact_lost retains that outflow in the arithmetic of the rate values.
    """

    scheme: InteractionScheme
    box: StateBox
    matrix: scipy.sparse.csr_matrix
    lost_rate: np.ndarray
    exact_lost: tuple

    @property
    def size(self) -> int:
        return self.box.size


def build_generator(scheme: InteractionScheme,
                    rates: Mapping[SymbolId, object],
                    box: StateBox) -> TruncatedGenerator:
    if len(box.bounds) != len(scheme.species):
        raise ValueError("box dimension does not match the species count")
    channels = reaction_channels(scheme, rates)
    size = box.size
    entries: dict[tuple[int, int], object] = {}
    lost = []
    for col, state in enumerate(box.states()):
        out_total = 0
        lost_here = 0
        for stoich, change, value in channels:
            v = channel_rate(value, stoich, state)
            if v == 0:
                continue
            out_total = out_total + v
            target = tuple(x + d for x, d in zip(state, change))
            if box.contains(target):
                row = box.index(target)
                key = (row, col)
                entries[key] = entries.get(key, 0) + v
            else:
                lost_here = lost_here + v
        if out_total != 0:
            key = (col, col)
            entries[key] = entries.get(key, 0) - out_total
        lost.append(lost_here)

    rows = np.fromiter((k[0] for k in entries), dtype=np.int64, count=len(entries))
    cols = np.fromiter((k[1] for k in entries), dtype=np.int64, count=len(entries))
    data = np.fromiter((float(v) for v in entries.values()), dtype=np.float64,
                       count=len(entries))
    matrix = scipy.sparse.coo_matrix((data, (rows, cols)),
                                     shape=(size, size)).tocsr()
    return TruncatedGenerator(scheme=scheme, box=box, matrix=matrix,
                              lost_rate=np.array([float(v) for v in lost]),
                              exact_lost=tuple(lost))


@dataclass(frozen=True)
class Distribution:
    box: StateBox
    probabilities: np.ndarray
    time: float = 0.0

    @property
    def leaked(self) -> float:
        return max(0.0, 1.0 - float(self.probabilities.sum()))


def point_mass(box: StateBox, state: Sequence[int]) -> Distribution:
    if not box.contains(state):
        raise ValueError(f"state {tuple(state)} lies outside the box")
    p = np.zeros(box.size)
    p[box.index(state)] = 1.0
    return Distribution(box=box, probabilities=p, time=0.0)


def evolve_distribution(gen: TruncatedGenerator, dist: Distribution,
                        t_final: float, dt: float = 1e-3) -> Distribution:
    """Integrate dp/dt = Q p from dist.time to t_final with classic
    fourth-order Runge-Kutta steps of size dt (plus one remainder step).

    Refuses steps with dt * max|diagonal| > 0.5, where the integrator
    would be outside its stability region.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    span = t_final - dist.time
    if span < 0:
        raise ValueError("t_final lies before the distribution's time")
    scale = float(np.abs(gen.matrix.diagonal()).max(initial=0.0))
    if dt * scale > 0.5:
        raise UnstableStepError(
            f"dt = {dt} is too large for this generator; need "
            f"dt <= {0.5 / scale:.3e}")

    q = gen.matrix
    p = np.array(dist.probabilities, dtype=np.float64)
    nfull = int(span / dt + 1e-9)
    rem = span - nfull * dt
    steps = [dt] * nfull
    if rem > 1e-12 * max(dt, 1.0):
        steps.append(rem)
    for h in steps:
        k1 = q @ p
        k2 = q @ (p + 0.5 * h * k1)
        k3 = q @ (p + 0.5 * h * k2)
        k4 = q @ (p + h * k3)
        p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Distribution(box=dist.box, probabilities=p, time=t_final)


def distribution_moments(dist: Distribution):
    """Mean vector and covariance matrix of the boxed distribution,
    renormalized by the surviving mass."""
    p = dist.probabilities
    mass = float(p.sum())
    if mass < 1e-12:
        raise DegenerateDistributionError(
            f"remaining probability mass {mass:.3e} is too small for moments")
    w = p / mass
    states = dist.box.state_array().astype(np.float64)
    mean = w @ states
    centered = states - mean
    cov = (w[:, None] * centered).T @ centered
    return mean, cov


def distribution_to_csv(dist: Distribution,
                        species: Sequence[SymbolId]) -> str:
    names = ",".join(s.name for s in species)
    lines = [f"{names},probability"]
    for state, p in zip(dist.box.states(), dist.probabilities):
        coords = ",".join(str(x) for x in state)
        lines.append(f"{coords},{float(p)!r}")
    return "\n".join(lines) + "\n"


def default_box(scheme: InteractionScheme, rates: Mapping[SymbolId, object],
                initial_state: Sequence[int] | None = None) -> StateBox:
    """Heuristic truncation box: four times the largest excursion of the
    deterministic drift flow (a proxy for the fixed point it settles at),
    32 where the flow gives no finite guidance, always at least covering
    the initial state."""
    from .derive import RateMode, drift_vector

    n = len(scheme.species)
    start = tuple(initial_state) if initial_state is not None else (1,) * n
    drift = [as_function(bind_values(p, rates), scheme.species)
             for p in drift_vector(scheme, RateMode.FOKKER_PLANCK)]

    x = [float(v) for v in start]
    peak = list(x)
    finite = True
    dt = 0.002
    for _ in range(50_000):
        a = [f(*x) for f in drift]
        x = [max(0.0, xi + dt * ai) for xi, ai in zip(x, a)]
        if any(not np.isfinite(xi) or xi > 1e7 for xi in x):
            finite = False
            break
        for i in range(n):
            if x[i] > peak[i]:
                peak[i] = x[i]

    bounds = []
    for i in range(n):
        if finite and peak[i] > 0:
            b = int(np.ceil(4.0 * peak[i]))
        else:
            b = 32
        b = max(b, int(np.ceil(start[i])), 4)
        bounds.append(min(b, 4096))
    return StateBox(tuple(bounds))
