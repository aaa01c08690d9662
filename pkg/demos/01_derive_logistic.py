"""
Deriving a Langevin model for logistic growth
=============================================

A two-line interaction scheme (reversible reproduction plus death) is all
the input needed.  Everything else, the transition rates, the drift, the
diffusion, and the stochastic differential equation, is derived
symbolically with exact rational coefficients.
"""

from onestep import (DiffusionSign, RateMode, build_sde_model, parse_scheme,
                     transition_rates)
from onestep.poly import canonical_string

SCHEME = """\
phi <-> 2 phi @ lambda, gamma
phi -> 0 @ beta
"""

scheme = parse_scheme(SCHEME)
print("scheme:")
print(SCHEME)
print("species:", ", ".join(s.name for s in scheme.species))
print("rates:  ", ", ".join(r.name for r in scheme.rate_symbols))
print()

# stoichiometry: initial complex, final complex, and the jump r = F - I
for i, ia in enumerate(scheme.interactions, start=1):
    print(f"interaction {i}: I = {ia.initial}  F = {ia.final}  "
          f"r = {ia.change}")
print()

model = build_sde_model(scheme)
order = model.display_order

# the power-form rates define the Fokker-Planck coefficients; the exact
# form counts ordered arrangements with falling factorials instead
for mode in (RateMode.FOKKER_PLANCK, RateMode.EXACT):
    tr = transition_rates(scheme, mode)
    print(f"{mode.value} transition rates:")
    for i, (f, b) in enumerate(zip(tr.forward, tr.backward), start=1):
        print(f"    s+_{i} = {canonical_string(f, order)}")
        print(f"    s-_{i} = {canonical_string(b, order)}")
print()

print("drift:     A(phi) =", canonical_string(model.drift[0], order))
print("diffusion: B(phi) =", canonical_string(model.diffusion[0][0], order))
print()

# the difference convention subtracts backward rates inside B; the sum
# convention adds them, which is what the jump process actually does
summed = build_sde_model(scheme, diffusion_sign=DiffusionSign.SUM)
print("B(phi) with the sum convention =",
      canonical_string(summed.diffusion[0][0], order))
print()

print("the Langevin equation, spelled out:")
a = canonical_string(model.drift[0], order)
b = canonical_string(model.diffusion[0][0], order)
print(f"    dphi = ({a}) dt + sqrt({b}) dW")
