"""Command line interface.

Subcommands: derive (scheme -> symbolic model + exports), simulate
(trajectory ensembles with either engine), check (self-verification of a
scheme's derived model against direct enumeration and cross-engine
statistics), codegen (single-target export).

Exit codes are a stable contract: 0 success, 1 a check failed, 2 parse
or usage error, 3 binding error (missing rate values or malformed
bindings).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .cme import UnboundRateError, jump_moments
from .codegen import (EmitTarget, ModelFormatError, emit, emit_c_source,
                      emit_latex, emit_model_json, model_from_json)
from .derive import (DiffusionSign, IncompatibleNoiseError, NoiseStrategy,
                     RateMode, SdeModel, build_sde_model, diffusion_matrix,
                     drift_vector, transition_rates)
from .cme import StateBox, default_box
from .poly import (ExpressionSyntaxError, MissingSymbolError, SymbolId,
                   bind_values, as_function, canonical_string)
from .scheme import (InteractionScheme, SchemeError, format_scheme,
                     parse_scheme)
from .sim import (Engine, NegativePolicy, SimConfig, compare_engines,
                  ensemble_moments, euler_maruyama, gillespie_ssa,
                  mean_band_svg, moments_to_csv, trajectories_to_csv)


class RatesFileError(ValueError):
    pass


class InitialStateError(ValueError):
    pass


class ManifestError(ValueError):
    pass


# ---------------------------------------------------------------------------
# input helpers


def parse_rates_file(text: str) -> dict[str, Fraction]:
    """Lines of "symbol = value" with '#' comments; values are decimals
    or integer rationals p/q, parsed exactly."""
    out: dict[str, Fraction] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, eq, value = line.partition("=")
        name = name.strip()
        value = value.strip()
        if not eq or not name or not value:
            raise RatesFileError(f"rates file line {line_no}: expected "
                                 "'symbol = value'")
        if name in out:
            raise RatesFileError(f"rates file line {line_no}: duplicate "
                                 f"binding for {name!r}")
        try:
            if "/" in value:
                num, den = value.split("/")
                parsed = Fraction(int(num), int(den))
            else:
                parsed = Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise RatesFileError(f"rates file line {line_no}: bad value "
                                 f"{value!r} ({exc})") from None
        if parsed < 0:
            raise RatesFileError(f"rates file line {line_no}: rate "
                                 f"{name!r} is negative")
        out[name] = parsed
    return out


def bind_rates(scheme_rates, table: dict[str, Fraction]):
    bound = {}
    for sym in scheme_rates:
        if sym.name not in table:
            raise UnboundRateError(sym)
        bound[sym] = table[sym.name]
    return bound


def parse_initial(text: str, species) -> tuple[float, ...]:
    values: dict[str, float] = {}
    for part in text.split(","):
        name, eq, value = part.partition("=")
        name = name.strip()
        value = value.strip()
        if not eq or not name:
            raise InitialStateError(f"bad initial-state entry {part!r}; "
                                    "expected name=value")
        try:
            values[name] = float(value)
        except ValueError:
            raise InitialStateError(f"bad initial value {value!r} for "
                                    f"{name!r}") from None
    names = [s.name for s in species]
    for name in values:
        if name not in names:
            raise InitialStateError(f"unknown species {name!r} in initial "
                                    "state")
    missing = [n for n in names if n not in values]
    if missing:
        raise InitialStateError("initial state missing species: "
                                + ", ".join(missing))
    return tuple(values[n] for n in names)


def _load_text(path: str) -> str:
    return Path(path).read_text()


def _is_model_input(path: str) -> bool:
    return path.endswith(".json")


def _stem(path: str) -> str:
    stem = Path(path).stem
    if stem.endswith(".model"):
        stem = stem[: -len(".model")]
    return stem


def _load_model_input(path: str, args) -> SdeModel:
    """A model either derived from scheme text or restored from JSON;
    derivation flags apply only to the scheme route."""
    text = _load_text(path)
    if _is_model_input(path):
        return model_from_json(text)
    scheme = parse_scheme(text, getattr(args, "allow_shared_rates", False))
    return build_sde_model(scheme,
                           RateMode(args.rate_mode),
                           DiffusionSign(args.diffusion_sign),
                           NoiseStrategy(args.noise))


# ---------------------------------------------------------------------------
# derive


def model_report(model: SdeModel) -> str:
    order = model.display_order
    lines = []
    if model.scheme is not None:
        lines.append("scheme:")
        for row in format_scheme(model.scheme).splitlines():
            lines.append(f"    {row}")
    lines.append("species: " + ", ".join(s.name for s in model.species))
    lines.append("rates: " + ", ".join(r.name for r in model.rate_symbols))
    lines.append(f"rate mode: {model.rate_mode.value}")
    lines.append(f"diffusion sign: {model.diffusion_sign.value}")
    lines.append(f"noise strategy: {model.noise_strategy.value}")
    if model.scheme is not None:
        tr = transition_rates(model.scheme, model.rate_mode)
        lines.append("stoichiometry (one row per interaction):")
        for i, ia in enumerate(model.scheme.interactions, start=1):
            init = ", ".join(str(c) for c in ia.initial)
            fin = ", ".join(str(c) for c in ia.final)
            vec = ", ".join(f"{d:+d}" for d in ia.change)
            lines.append(f"    I_{i} = ({init})   F_{i} = ({fin})   r_{i} = ({vec})")
        lines.append("transition rates:")
        for i, (f, b) in enumerate(zip(tr.forward, tr.backward), start=1):
            lines.append(f"    s+_{i} = {canonical_string(f, order)}")
            lines.append(f"    s-_{i} = {canonical_string(b, order)}")
    names = [s.name for s in model.species]
    lines.append("drift:")
    for name, p in zip(names, model.drift):
        lines.append(f"    A({name}) = {canonical_string(p, order)}")
    lines.append("diffusion:")
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            lines.append(f"    B({a},{b}) = "
                         f"{canonical_string(model.diffusion[i][j], order)}")
    lines.append("sde:")
    if len(names) == 1:
        a = canonical_string(model.drift[0], order)
        b = canonical_string(model.diffusion[0][0], order)
        lines.append(f"    d{names[0]} = ({a}) dt + sqrt({b}) dW")
    else:
        for i, name in enumerate(names):
            a = canonical_string(model.drift[i], order)
            lines.append(f"    d{name} = ({a}) dt + (b dW)_{name}")
        lines.append("    with b b^T = B")
    return "\n".join(lines) + "\n"


def cmd_derive(args) -> int:
    scheme = parse_scheme(_load_text(args.scheme), args.allow_shared_rates)
    model = build_sde_model(scheme,
                            RateMode(args.rate_mode),
                            DiffusionSign(args.diffusion_sign),
                            NoiseStrategy(args.noise))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = _stem(args.scheme)
    report = model_report(model)
    fn_name = re.sub(r"[^A-Za-z0-9_]", "_", stem)
    if not fn_name or fn_name[0].isdigit():
        fn_name = "_" + fn_name
    written = {
        out_dir / f"{stem}.tex": emit_latex(model),
        out_dir / f"{stem}_model.c": emit_c_source(model, function_name=fn_name),
        out_dir / f"{stem}.model.json": emit_model_json(model),
        out_dir / f"{stem}.report.txt": report,
    }
    for path, content in written.items():
        path.write_text(content)
    sys.stdout.write(report)
    for path in written:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# codegen


def cmd_codegen(args) -> int:
    model = _load_model_input(args.input, args)
    text = emit(model, EmitTarget(args.target),
                function_name=args.function_name)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# simulate


@dataclass
class RunManifest:
    """Everything needed to reproduce a simulation run byte for byte."""

    tool_version: str
    input_kind: str                 # "scheme" | "model"
    input_text: str
    rates: dict                     # name -> exact value string
    initial: dict                   # name -> float
    engine: str
    rate_mode: str
    diffusion_sign: str
    noise_strategy: str
    negative_policy: str
    t_final: float
    dt: float
    trajectories: int
    grid_points: int
    seed: int
    allow_shared_rates: bool
    prefix: str
    outputs: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @staticmethod
    def from_json(text: str) -> "RunManifest":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"malformed manifest JSON: {exc}") from exc
        try:
            return RunManifest(**data)
        except TypeError as exc:
            raise ManifestError(f"malformed manifest: {exc}") from exc


def _manifest_outputs(prefix: str) -> list:
    return [f"{prefix}.trajectories.csv", f"{prefix}.moments.csv",
            f"{prefix}.mean.svg"]


def execute_manifest(manifest: RunManifest, out_dir: Path) -> list[Path]:
    """Run the simulation a manifest describes and write its outputs.

    The same manifest always produces byte-identical files."""
    if manifest.input_kind == "model":
        model = model_from_json(manifest.input_text)
        scheme = model.scheme
    else:
        scheme = parse_scheme(manifest.input_text,
                              manifest.allow_shared_rates)
        model = build_sde_model(scheme,
                                RateMode(manifest.rate_mode),
                                DiffusionSign(manifest.diffusion_sign),
                                NoiseStrategy(manifest.noise_strategy))
    rate_table = {}
    for name, value in manifest.rates.items():
        if "/" in value:
            num, den = value.split("/")
            rate_table[name] = Fraction(int(num), int(den))
        else:
            rate_table[name] = Fraction(value)
    rates = bind_rates(model.rate_symbols, rate_table)
    initial = parse_initial(
        ",".join(f"{k}={v!r}" for k, v in manifest.initial.items()),
        model.species)
    config = SimConfig(rates=rates, initial_state=initial,
                       t_final=manifest.t_final, dt=manifest.dt,
                       trajectories=manifest.trajectories,
                       base_seed=manifest.seed,
                       negative_policy=NegativePolicy(
                           manifest.negative_policy),
                       grid_points=manifest.grid_points)
    if manifest.engine == Engine.SSA.value:
        if scheme is None:
            raise ManifestError("jump-process simulation needs a scheme, "
                                "but the model input carries none")
        ensemble = gillespie_ssa(scheme, config)
    else:
        ensemble = euler_maruyama(model, config)
    moments = ensemble_moments(ensemble)

    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = manifest.prefix
    manifest.outputs = _manifest_outputs(prefix)
    written = []
    contents = [trajectories_to_csv(ensemble),
                moments_to_csv(moments, model.species),
                mean_band_svg(moments, model.species)]
    for name, content in zip(manifest.outputs, contents):
        path = out_dir / name
        path.write_text(content)
        written.append(path)
    manifest_path = out_dir / f"{prefix}.manifest.json"
    manifest_path.write_text(manifest.to_json())
    written.append(manifest_path)
    return written


def cmd_simulate(args) -> int:
    if args.from_manifest:
        manifest = RunManifest.from_json(_load_text(args.from_manifest))
    else:
        if args.input is None:
            print("error: simulate needs a scheme/model input or "
                  "--from-manifest", file=sys.stderr)
            return 2
        if args.rates is None or args.initial is None:
            print("error: simulate needs --rates and --initial",
                  file=sys.stderr)
            return 2
        input_text = _load_text(args.input)
        input_kind = "model" if _is_model_input(args.input) else "scheme"
        model = _load_model_input(args.input, args)
        rate_table = parse_rates_file(_load_text(args.rates))
        bound = bind_rates(model.rate_symbols, rate_table)
        initial = parse_initial(args.initial, model.species)
        manifest = RunManifest(
            tool_version=__version__,
            input_kind=input_kind,
            input_text=input_text,
            rates={sym.name: str(v) for sym, v in bound.items()},
            initial={s.name: x for s, x in zip(model.species, initial)},
            engine=args.engine,
            rate_mode=(model.rate_mode.value),
            diffusion_sign=model.diffusion_sign.value,
            noise_strategy=model.noise_strategy.value,
            negative_policy=args.negative_policy,
            t_final=args.t_final,
            dt=args.dt,
            trajectories=args.trajectories,
            grid_points=args.grid_points,
            seed=args.seed,
            allow_shared_rates=getattr(args, "allow_shared_rates", False),
            prefix=_stem(args.input))
    written = execute_manifest(manifest, Path(args.out))
    for path in written:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# check


def _sample_states(box: StateBox, seed: int, cap: int = 4096,
                   sample: int = 512):
    if box.size <= cap:
        return list(box.states())
    rng = np.random.Generator(np.random.Philox(key=seed))
    states = set()
    while len(states) < sample:
        states.add(tuple(int(rng.integers(0, b + 1)) for b in box.bounds))
    return sorted(states)


def cmd_check(args) -> int:
    scheme = parse_scheme(_load_text(args.scheme), args.allow_shared_rates)
    rate_table = parse_rates_file(_load_text(args.rates))
    rates = bind_rates(scheme.rate_symbols, rate_table)
    sign = DiffusionSign(args.diffusion_sign)
    mode = RateMode(args.rate_mode)
    initial = parse_initial(args.initial, scheme.species) if args.initial \
        else None

    if args.box:
        parts = [int(p) for p in args.box.split(",")]
        if len(parts) == 1:
            parts = parts * len(scheme.species)
        box = StateBox(tuple(parts))
    else:
        box = default_box(scheme, rates, initial)

    reversible = any(ia.reversible for ia in scheme.interactions)
    mismatch_expected = (sign is DiffusionSign.DIFFERENCE) and reversible
    results = []  # (status, name, detail); status PASS | FAIL | ADVISORY

    states = _sample_states(box, args.seed)
    drift_exact = drift_vector(scheme, RateMode.EXACT)
    diff_checked = diffusion_matrix(scheme, RateMode.EXACT, sign)
    n = len(scheme.species)

    # enumerated jump moments vs the symbolic derivation, exact arithmetic
    first_bad = None
    second_bad = None
    for state in states:
        point = dict(zip(scheme.species, state))
        point.update(rates)
        first, second = jump_moments(scheme, rates, state)
        for i in range(n):
            if drift_exact[i].evaluate(point) != first[i]:
                first_bad = (state, i)
                break
        if first_bad:
            break
    for state in states:
        point = dict(zip(scheme.species, state))
        point.update(rates)
        _, second = jump_moments(scheme, rates, state)
        for i in range(n):
            for j in range(n):
                if diff_checked[i][j].evaluate(point) != second[i][j]:
                    second_bad = (state, i, j)
                    break
            if second_bad:
                break
        if second_bad:
            break

    if first_bad is None:
        results.append(("PASS", "first-jump-moment",
                        f"drift equals the enumerated first moment exactly "
                        f"on {len(states)} states"))
    else:
        results.append(("FAIL", "first-jump-moment",
                        f"mismatch at state {first_bad[0]}, "
                        f"component {first_bad[1]}"))

    if second_bad is None:
        results.append(("PASS", "second-jump-moment",
                        f"diffusion ({sign.value} form) equals the "
                        f"enumerated second moment exactly on "
                        f"{len(states)} states"))
    else:
        state, i, j = second_bad
        detail = (f"diffusion ({sign.value} form) differs from the "
                  f"enumerated second moment at state {state}, "
                  f"entry ({i},{j})")
        if mismatch_expected and args.allow_sign_mismatch:
            results.append(("ADVISORY", "second-jump-moment",
                            detail + "; expected for the difference "
                            "convention with reversible interactions"))
        else:
            results.append(("FAIL", "second-jump-moment", detail))

    # symbolic symmetry of the requested diffusion matrix
    requested_diff = diffusion_matrix(scheme, mode, sign)
    symmetric = all(requested_diff[i][j] == requested_diff[j][i]
                    for i in range(n) for j in range(n))
    results.append(("PASS" if symmetric else "FAIL", "diffusion-symmetry",
                    "B is symmetric as polynomials" if symmetric
                    else "B is not symmetric"))

    # positive semidefiniteness of B over the box, requested convention
    funcs = [[as_function(bind_values(requested_diff[i][j], rates),
                          scheme.species) for j in range(n)]
             for i in range(n)]
    min_eig = np.inf
    bad_state = None
    for state in states:
        b = np.array([[funcs[i][j](*map(float, state)) for j in range(n)]
                      for i in range(n)])
        w = float(np.linalg.eigvalsh(b).min())
        if w < min_eig:
            min_eig = w
            if w < -1e-9 * (1.0 + abs(b).max()) and bad_state is None:
                bad_state = state
    if bad_state is None:
        results.append(("PASS", "psd-sampling",
                        f"min eigenvalue {min_eig:.6g} over {len(states)} "
                        f"states"))
    else:
        detail = (f"B({bad_state}) has eigenvalue {min_eig:.6g} < 0 under "
                  f"the {sign.value} convention")
        if mismatch_expected and args.allow_sign_mismatch:
            results.append(("ADVISORY", "psd-sampling", detail))
        else:
            results.append(("FAIL", "psd-sampling", detail))

    # cross-engine agreement always runs on the exact/sum model, the one
    # convention whose Langevin equation matches the jump process
    if initial is None:
        results.append(("FAIL", "engine-consistency",
                        "needs --initial to start the trajectories"))
    else:
        check_model = build_sde_model(scheme, RateMode.EXACT,
                                      DiffusionSign.SUM,
                                      NoiseStrategy.MATRIX_SQRT)
        config = SimConfig(rates=rates, initial_state=initial,
                           t_final=args.t_final, dt=args.dt,
                           trajectories=args.trajectories,
                           base_seed=args.seed,
                           grid_points=args.grid_points)
        report = compare_engines(check_model, config,
                                 threshold=args.threshold)
        status = "PASS" if report.passed else "FAIL"
        results.append((status, "engine-consistency",
                        f"max |z| = {report.max_abs_z:.3f} vs threshold "
                        f"{report.threshold:.1f} over "
                        f"{len(report.times)} grid times, "
                        f"{args.trajectories} trajectories per engine"))

    failed = False
    for status, name, detail in results:
        print(f"{status} {name}: {detail}")
        if status == "FAIL":
            failed = True
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# parser


def _add_derivation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rate-mode", choices=[m.value for m in RateMode],
                   default=RateMode.FOKKER_PLANCK.value,
                   help="transition-rate form: falling factorials (exact) "
                        "or plain powers (fp)")
    p.add_argument("--diffusion-sign",
                   choices=[s.value for s in DiffusionSign],
                   default=DiffusionSign.DIFFERENCE.value,
                   help="second-moment convention: forward minus backward "
                        "(difference) or forward plus backward (sum)")
    p.add_argument("--noise", choices=[s.value for s in NoiseStrategy],
                   default=NoiseStrategy.MATRIX_SQRT.value,
                   help="how the Langevin noise realizes B")
    p.add_argument("--allow-shared-rates", action="store_true",
                   help="let one rate symbol appear in several interactions")


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-final", type=float, default=1.0)
    p.add_argument("--trajectories", type=int, default=100)
    p.add_argument("--grid-points", type=int, default=200)
    p.add_argument("--initial",
                   help="comma-separated name=value pairs, one per species")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onestep",
        description="Stochastize one-step interaction schemes: derive "
                    "Langevin models, verify them, simulate them, export "
                    "them.")
    parser.add_argument("--version", action="version",
                        version=f"onestep {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="derive the symbolic model and write "
                                      "all exports")
    p.add_argument("scheme", help="scheme text file")
    _add_derivation_flags(p)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("simulate", help="run trajectory ensembles")
    p.add_argument("input", nargs="?",
                   help="scheme text file or model JSON file")
    p.add_argument("--rates", help="rate bindings file (symbol = value)")
    p.add_argument("--engine", choices=[e.value for e in Engine],
                   default=Engine.EULER_MARUYAMA.value)
    p.add_argument("--negative-policy",
                   choices=[n.value for n in NegativePolicy],
                   default=NegativePolicy.CLAMP_ZERO.value)
    _add_derivation_flags(p)
    _add_sim_flags(p)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--from-manifest",
                   help="rerun a recorded simulation byte-for-byte")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="verify a scheme's derivation and "
                                     "engines against each other")
    p.add_argument("scheme", help="scheme text file")
    p.add_argument("--rates", required=True)
    _add_derivation_flags(p)
    _add_sim_flags(p)
    p.add_argument("--box", help="truncation box, one bound or "
                                 "comma-separated per-species bounds")
    p.add_argument("--threshold", type=float, default=4.0,
                   help="|z| limit for the engine comparison")
    p.add_argument("--allow-sign-mismatch", action="store_true",
                   help="downgrade the expected difference-convention "
                        "second-moment mismatch to an advisory")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("codegen", help="emit one export target")
    p.add_argument("input", help="scheme text file or model JSON file")
    p.add_argument("--target", choices=["latex", "c", "json"],
                   required=True)
    p.add_argument("--function-name", default="model",
                   help="symbol prefix for the C functions")
    _add_derivation_flags(p)
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_codegen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SchemeError, ExpressionSyntaxError, ModelFormatError,
            ManifestError, IncompatibleNoiseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (UnboundRateError, MissingSymbolError, RatesFileError,
            InitialStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
