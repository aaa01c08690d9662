"""
A two-species model and its exports
===================================

The predator-prey scheme couples two species through a mixed interaction.
The derived diffusion matrix picks up off-diagonal terms: prey and
predator noise are anticorrelated because one jump changes both counts.
The same model renders as LaTeX for a writeup and as a small C file for
embedding elsewhere.
"""

from onestep import build_sde_model, emit_c_source, emit_latex, parse_scheme
from onestep.poly import canonical_string

SCHEME = """\
x -> 2 x @ k_1
x + y -> 2 y @ k_2
y -> 0 @ k_3
"""

scheme = parse_scheme(SCHEME)
model = build_sde_model(scheme)
order = model.display_order

print("drift vector:")
for sp, p in zip(model.species, model.drift):
    print(f"    A({sp.name}) = {canonical_string(p, order)}")
print()

print("diffusion matrix:")
for i, a in enumerate(model.species):
    for j, b in enumerate(model.species):
        entry = canonical_string(model.diffusion[i][j], order)
        print(f"    B({a.name},{b.name}) = {entry}")
print()

print("LaTeX:")
print(emit_latex(model))

print("C source:")
print(emit_c_source(model, function_name="predator_prey"))
