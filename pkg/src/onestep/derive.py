"""From an interaction scheme to symbolic transition rates, drift, and
diffusion.

For state vector phi and an interaction with initial complex I, final
complex F, and change vector r = F - I, the forward transition rate is
the forward rate constant times a product of falling factorials of the
initial complex (exact mode) or of plain powers (fokker-planck mode);
the backward rate does the same with the final complex.  Drift collects
r * (forward - backward); the diffusion matrix collects r_i * r_j times
either the difference or the sum of the directional rates, selectable
because published second-moment conventions disagree and neither is
silently corrected here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .poly import (Polynomial, SymbolId, SymbolKind, falling_factorial,
                   power)
from .scheme import Interaction, InteractionScheme


class RateMode(enum.Enum):
    EXACT = "exact"            # falling factorials of the complex
    FOKKER_PLANCK = "fp"       # plain powers of the complex


class DiffusionSign(enum.Enum):
    DIFFERENCE = "difference"  # forward minus backward in the second moment
    SUM = "sum"                # forward plus backward (jump-moment form)


class NoiseStrategy(enum.Enum):
    MATRIX_SQRT = "sqrt"
    PER_REACTION = "per-reaction"


class IncompatibleNoiseError(ValueError):
    pass


@dataclass(frozen=True)
class TransitionRates:
    """Per-interaction rate polynomials; backward is the zero polynomial
    for irreversible interactions."""

    forward: tuple[Polynomial, ...]
    backward: tuple[Polynomial, ...]


def _complex_rate(rate_sym: SymbolId, stoich: tuple[int, ...],
                  species_syms: tuple[SymbolId, ...],
                  mode: RateMode) -> Polynomial:
    p = Polynomial.symbol(rate_sym)
    for sym, m in zip(species_syms, stoich):
        if m:
            factor = (falling_factorial(sym, m) if mode is RateMode.EXACT
                      else power(sym, m))
            p = p * factor
    return p


def transition_rates(scheme: InteractionScheme,
                     mode: RateMode = RateMode.EXACT) -> TransitionRates:
    fwd = []
    bwd = []
    for ia in scheme.interactions:
        fwd.append(_complex_rate(ia.forward_rate, ia.initial,
                                 scheme.species, mode))
        if ia.backward_rate is not None:
            bwd.append(_complex_rate(ia.backward_rate, ia.final,
                                     scheme.species, mode))
        else:
            bwd.append(Polynomial.zero())
    return TransitionRates(forward=tuple(fwd), backward=tuple(bwd))


def drift_vector(scheme: InteractionScheme,
                 mode: RateMode = RateMode.FOKKER_PLANCK) -> list[Polynomial]:
    rates = transition_rates(scheme, mode)
    n = len(scheme.species)
    out = [Polynomial.zero() for _ in range(n)]
    for ia, sp, sm in zip(scheme.interactions, rates.forward, rates.backward):
        net = sp - sm
        for i, r in enumerate(ia.change):
            if r:
                out[i] = out[i] + r * net
    return out


def diffusion_matrix(scheme: InteractionScheme,
                     mode: RateMode = RateMode.FOKKER_PLANCK,
                     sign: DiffusionSign = DiffusionSign.DIFFERENCE
                     ) -> list[list[Polynomial]]:
    rates = transition_rates(scheme, mode)
    n = len(scheme.species)
    out = [[Polynomial.zero() for _ in range(n)] for _ in range(n)]
    for ia, sp, sm in zip(scheme.interactions, rates.forward, rates.backward):
        combined = sp - sm if sign is DiffusionSign.DIFFERENCE else sp + sm
        r = ia.change
        for i in range(n):
            if not r[i]:
                continue
            for j in range(n):
                if r[j]:
                    out[i][j] = out[i][j] + (r[i] * r[j]) * combined
    return out


@dataclass(frozen=True)
class SdeModel:
    """A Langevin model: d phi = A(phi) dt + b(phi) dW with b b^T = B.

    species and rate_symbols fix the variable vocabulary; drift is A and
    diffusion is B as exact polynomials.  scheme is retained when the
    model was built from one (it is needed for jump-process simulation)
    and may be None for models restored from a serialized form without it.
    """

    species: tuple[SymbolId, ...]
    rate_symbols: tuple[SymbolId, ...]
    drift: tuple[Polynomial, ...]
    diffusion: tuple[tuple[Polynomial, ...], ...]
    rate_mode: RateMode
    diffusion_sign: DiffusionSign
    noise_strategy: NoiseStrategy
    scheme: InteractionScheme | None = field(default=None)

    def __post_init__(self) -> None:
        n = len(self.species)
        if len(self.drift) != n or len(self.diffusion) != n or any(
                len(row) != n for row in self.diffusion):
            raise ValueError("drift/diffusion shape does not match species")
        for i in range(n):
            for j in range(i + 1, n):
                if self.diffusion[i][j] != self.diffusion[j][i]:
                    raise ValueError("diffusion matrix is not symmetric")
        allowed = set(self.species) | set(self.rate_symbols)
        for p in list(self.drift) + [q for row in self.diffusion for q in row]:
            if not p.symbols <= allowed:
                raise ValueError("model polynomial uses an undeclared symbol")

    @property
    def display_order(self) -> tuple[SymbolId, ...]:
        """Symbol significance for printing: sorting terms ascending on
        this order groups them by rate constant in declaration order."""
        return tuple(reversed(self.rate_symbols)) + self.species


def build_sde_model(scheme: InteractionScheme,
                    rate_mode: RateMode = RateMode.FOKKER_PLANCK,
                    diffusion_sign: DiffusionSign = DiffusionSign.DIFFERENCE,
                    noise_strategy: NoiseStrategy = NoiseStrategy.MATRIX_SQRT
                    ) -> SdeModel:
    """Assemble the Langevin model for a scheme.

    Per-reaction noise reproduces B only when B is the directional sum,
    so requesting it together with the difference sign is rejected for
    any scheme with a reversible interaction.
    """
    if (noise_strategy is NoiseStrategy.PER_REACTION
            and diffusion_sign is DiffusionSign.DIFFERENCE
            and any(ia.reversible for ia in scheme.interactions)):
        raise IncompatibleNoiseError(
            "per-reaction noise squares to the directional sum; with a "
            "reversible interaction it cannot realize the difference form")
    return SdeModel(
        species=scheme.species,
        rate_symbols=scheme.rate_symbols,
        drift=tuple(drift_vector(scheme, rate_mode)),
        diffusion=tuple(tuple(row) for row in
                        diffusion_matrix(scheme, rate_mode, diffusion_sign)),
        rate_mode=rate_mode,
        diffusion_sign=diffusion_sign,
        noise_strategy=noise_strategy,
        scheme=scheme)
