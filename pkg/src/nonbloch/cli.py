"""Command-line front end.

Every subcommand reads a model file (or a shipped preset given as @name),
writes CSV data plus a summary and a manifest into --out, and optionally
SVG figures.  Exit codes: 0 success, 1 domain error (one line on stderr),
2 usage error or unreadable model file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bloch import bz_intersection_period, closed_form_bloch, find_bloch_points
from .errors import DomainError, NoPeriodError, NonBlochError, NoRealBlochPointError
from .gbz import detect_cusps, gbz_finite_size, gbz_sweep
from .model import (
    DisorderSpec,
    Model,
    bloch_energies,
    build_chain,
    load_model,
    load_preset,
    model_to_dict,
    preset_path,
)
from .scaling import (
    default_stride,
    disorder_series,
    dos_exponent,
    family_spread,
    periodicity_scan,
    profile_collapse,
    scaling_series,
    select_level,
    slope_family,
)
from .spectral import dense_eig, obc_spectrum
from .verify import run_checks


class UsageError(Exception):
    pass


# -- output helpers -------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else f"{float(x):.12g}"
    if x is None:
        return "none"
    return str(x)


@dataclass
class Output:
    out: Path
    manifest: dict
    svg: bool = False
    sections: list[tuple[str, list[tuple[str, object]]]] = field(default_factory=list)
    written: list[Path] = field(default_factory=list)

    @property
    def digest(self) -> str:
        blob = json.dumps(self.manifest, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def csv(self, name: str, header: list[str], rows) -> Path:
        path = self.out / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# manifest {self.digest}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        self.written.append(path)
        return path

    def section(self, title: str, items: list[tuple[str, object]]):
        self.sections.append((title, items))

    def figure(self, fn, name: str, *args, **kwargs):
        if self.svg:
            self.written.append(fn(*args, path=self.out / name, **kwargs))

    def finish(self) -> str:
        lines = []
        for title, items in self.sections:
            lines.append(f"[{title}]")
            lines.extend(f"{k} = {_fmt(v)}" for k, v in items)
            lines.append("")
        text = "\n".join(lines)
        (self.out / "summary.txt").write_text(text, encoding="utf-8")
        doc = dict(self.manifest, manifest_sha256=self.digest)
        (self.out / "manifest.json").write_text(
            json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        return text


def _plots():
    from . import plotting

    return plotting


# -- model loading ----------------------------------------------------------------

def preset_dir():
    return resources.files("nonbloch") / "presets"


def resolve_model(arg: str) -> tuple[Model, DisorderSpec | None, str]:
    try:
        if arg.startswith("@"):
            try:
                preset_path(arg[1:])
            except DomainError as exc:
                raise UsageError(str(exc)) from exc
            model, dis = load_preset(arg[1:])
        else:
            model, dis = load_model(arg)
    except UsageError:
        raise
    except (OSError, yaml.YAMLError, KeyError, TypeError, ValueError, NonBlochError) as exc:
        raise UsageError(f"cannot read model file {arg!r}: {exc}") from exc
    return model, dis, arg


def _pick_point(points, theta=None):
    if not points:
        return None
    if theta is not None:
        return min(points, key=lambda p: abs(p.theta - theta))
    upper = [p for p in points if p.theta >= 0]
    return min(upper, key=lambda p: p.theta) if upper else points[0]


def _bloch_items(bp, prefix=""):
    return [
        (prefix + "theta_B", bp.theta),
        (prefix + "beta_B_re", bp.beta.real),
        (prefix + "beta_B_im", bp.beta.imag),
        (prefix + "E_B_re", bp.energy.real),
        (prefix + "E_B_im", bp.energy.imag),
        (prefix + "l", bp.l),
        (prefix + "j", bp.j),
        (prefix + "slope", bp.slope),
        (prefix + "kind", bp.kind),
        (prefix + "cusp", bp.cusp),
        (prefix + "side", bp.side),
    ]


def _lengths(args, model, bp, lo=40, hi=400):
    if args.L:
        return [int(x) for x in args.L.split(",")], None
    L_min = args.L_min if args.L_min is not None else lo
    L_max = args.L_max if args.L_max is not None else hi
    stride = args.stride
    if stride is None:
        period = default_stride(model, bp)
        stride = period * math.ceil(10 / period)
    if L_max < L_min or stride < 1:
        raise UsageError("need L_max >= L_min and stride >= 1")
    return list(range(L_min, L_max + 1, stride)), stride


def _series_rows(points):
    return [(p.L, p.E_m.real, p.E_m.imag, p.kappa_m, p.delta_E, p.kappa_method) for p in points]


def _fit_items(series):
    items = []
    for key, fit in (("kappa", series.fit_kappa), ("energy", series.fit_energy), ("cross", series.fit_cross)):
        items += [
            (f"slope_{key}", fit.slope),
            (f"stderr_{key}", fit.stderr),
            (f"r2_{key}", fit.r2),
            (f"n_{key}", fit.n_points),
        ]
    return items


SCALING_HEADER = ["L", "re_E_m", "im_E_m", "kappa_m", "deltaE", "method"]


# -- subcommands ---------------------------------------------------------------

def cmd_gbz(args, model, dis, o: Output):
    c = gbz_sweep(model, n_phi=args.n_phi)
    rows = [
        (t, b.real, b.imag, m, -math.log(m), e.real, e.imag, c.source)
        for t, b, m, e in zip(c.theta, c.beta, c.modulus, c.energy)
    ]
    dots = []
    if args.finite_size:
        dots = gbz_finite_size(model, args.finite_size)
        for d in dots:
            for b in (d.beta_lo, d.beta_hi):
                rows.append((math.atan2(b.imag, b.real), b.real, b.imag, abs(b), -math.log(abs(b)),
                             d.energy.real, d.energy.imag, "finite-size"))
    o.csv("gbz.csv", ["theta", "re_beta", "im_beta", "abs_beta", "kappa", "re_E", "im_E", "source"], rows)
    try:
        points = find_bloch_points(model, c, classify=False)
    except NonBlochError as exc:
        points = []
        o.section("bloch", [("note", str(exc))])
    else:
        o.section("bloch", [("count", len(points))] + ([("note", "no Bloch point")] if not points else []))
    for i, bp in enumerate(points):
        o.sections[-1][1].append((f"theta_B_{i}", bp.theta))
    cusps = detect_cusps(c) if args.cusps else []
    o.section("gbz", [("n_points", len(c)), ("max_gap", c.max_gap()), ("cusps", " ".join(f"{t:.6f}" for t in cusps))])
    o.figure(_plots().plot_gbz, "gbz.svg", c, dots=dots, bloch=points)


def cmd_spectrum(args, model, dis, o: Output):
    m = build_chain(model, args.L_size, args.boundary, dis)
    if args.boundary == "open":
        spec = obc_spectrum(m)
        errs = spec.errors
    else:
        spec = dense_eig(m)
        errs = spec.residuals
    o.csv("spectrum.csv", ["index", "re_E", "im_E", "error"],
          [(i, v.real, v.imag, e) for i, (v, e) in enumerate(zip(spec.values, errs))])
    o.section("spectrum", [("L", args.L_size), ("boundary", args.boundary), ("N", len(spec.values)),
                           ("max_abs_imag", float(np.max(np.abs(spec.values.imag))))])
    k = np.linspace(-math.pi, math.pi, 512)
    pbc = np.concatenate([bloch_energies(model, kk) for kk in k]) if args.boundary == "open" else None
    o.figure(_plots().plot_spectrum, "spectrum.svg", spec.values, pbc=pbc)


def cmd_states(args, model, dis, o: Output):
    m = build_chain(model, args.L_size, "open", dis)
    spec = obc_spectrum(m)
    amps = np.abs(spec.vectors).reshape(args.L_size, model.bands, -1).max(axis=1).T
    rows = [
        (i, v.real, v.imag, n + 1, a)
        for i, (v, amp) in enumerate(zip(spec.values, amps))
        for n, a in enumerate(amp)
    ]
    o.csv("states.csv", ["level", "re_E", "im_E", "cell", "abs_psi"], rows)
    items = [("L", args.L_size), ("levels", len(spec.values))]
    hl = None
    points = find_bloch_points(model, gbz_sweep(model), classify=False)
    bp = _pick_point(points)
    if bp is not None:
        ch = select_level(spec, bp.energy, args.rule, model=model, edge_scale=float(np.linalg.norm(m.matrix)))
        hl = ch.index
        items += [("selected_level", ch.index), ("E_m_re", ch.energy.real), ("E_m_im", ch.energy.imag)]
    o.section("states", items)
    o.figure(_plots().plot_states, "states.svg", list(amps), highlight=hl)


def cmd_bloch_point(args, model, dis, o: Output):
    c = gbz_sweep(model)
    points = find_bloch_points(model, c)
    closed = None
    if model.bands == 1 and set(model.h.coeffs) == {-2, -1, 1} and all(
        abs(v.imag) == 0 for v in model.h.coeffs.values()
    ):
        t = model.h.coeffs
        try:
            closed = closed_form_bloch(t[-2].real, t[-1].real, t[1].real)
        except NoRealBlochPointError:
            closed = None
    try:
        per = bz_intersection_period(points)
        period_items = [("delta_theta", per.delta_theta), ("period", per.period), ("ratio", per.ratio)]
    except NoPeriodError:
        period_items = [("delta_theta", None), ("period", None)]
    o.section("summary", [("count", len(points))] + period_items + ([("note", "no Bloch point")] if not points else []))
    rows = []
    for i, bp in enumerate(points):
        source = "numerical"
        if closed is not None and min(abs(bp.theta - th) for th in closed[0]) < 1e-8 and abs(bp.energy - closed[1]) < 1e-8:
            source = "closed-form+numerical"
        o.section(f"point {i}", _bloch_items(bp) + [("provenance", source)])
        rows.append((bp.theta, bp.beta.real, bp.beta.imag, bp.energy.real, bp.energy.imag, bp.l, bp.j, bp.slope, bp.kind, bp.cusp, source))
    o.csv("bloch.csv", ["theta_B", "re_beta_B", "im_beta_B", "E_B_re", "E_B_im", "l", "j", "slope", "kind", "cusp", "provenance"], rows)


def _need_point(model, theta):
    points = find_bloch_points(model, gbz_sweep(model))
    bp = _pick_point(points, theta)
    if bp is None:
        raise NoRealBlochPointError("model has no Bloch point")
    return bp


def cmd_scaling(args, model, dis, o: Output):
    bp = _need_point(model, args.theta)
    Ls, stride = _lengths(args, model, bp)
    o.manifest["params"]["L_list"] = Ls
    s = scaling_series(model, bp, Ls, rule=args.rule, method=args.kappa_method, stride=stride)
    o.csv("scaling.csv", SCALING_HEADER, _series_rows(s.points))
    o.section("bloch", _bloch_items(bp))
    o.section("fit", _fit_items(s) + [("stride", s.stride), ("skipped", " ".join(map(str, s.skipped))),
                                     ("predicted_slope_kappa", -bp.j if bp.j else None),
                                     ("predicted_slope_energy", -bp.l if bp.l else None)])
    o.figure(_plots().plot_scaling, "scaling.svg", s)


def cmd_dos(args, model, dis, o: Output):
    bp = _need_point(model, args.theta)
    r = dos_exponent(model, bp.energy, args.L_size, args.window)
    o.csv("dos.csv", ["epsilon", "count"], list(zip(r.epsilon, r.counts)))
    o.section("bloch", _bloch_items(bp))
    o.section("dos", [("alpha", r.alpha), ("predicted_alpha", 1 - 1 / bp.l if bp.l else None),
                      ("slope", r.fit.slope), ("stderr", r.fit.stderr), ("r2", r.fit.r2),
                      ("L", args.L_size), ("window", args.window)])
    o.figure(_plots().plot_dos, "dos.svg", r)


def cmd_periodicity(args, model, dis, o: Output):
    points = find_bloch_points(model, gbz_sweep(model))
    bp = _pick_point(points, args.theta)
    if bp is None:
        raise NoRealBlochPointError("model has no Bloch point")
    expected = bz_intersection_period(points).period
    r = periodicity_scan(model, bp, args.L_min, args.L_max, expected=expected)
    o.csv("periodicity.csv", ["L", "kappa_m", "residual"], list(zip(r.L, r.kappa, r.residual)))
    o.section("periodicity", [("period", r.period), ("expected", expected),
                              ("match", r.period == expected), ("L_min", args.L_min), ("L_max", args.L_max)])
    o.figure(_plots().plot_periodicity, "periodicity.svg", r)


def cmd_disorder(args, model, dis, o: Output):
    if args.delta is not None:
        dis = DisorderSpec(args.target, args.delta, 0)
    if dis is None:
        raise UsageError("no disorder given: use --delta or a model file with a disorder block")
    bp = _need_point(model, args.theta)
    args.L_min = 30 if args.L_min is None else args.L_min
    args.L_max = 210 if args.L_max is None else args.L_max
    Ls, _ = _lengths(args, model, bp)
    o.manifest["params"]["L_list"] = Ls
    d = disorder_series(model, dis, bp, Ls, args.samples, args.seed, method=args.kappa_method, aggregate=args.aggregate)
    o.csv("scaling.csv", SCALING_HEADER, _series_rows(d.series.points))
    o.csv("samples.csv", ["L", "sample", "re_E_m", "im_E_m", "kappa_m", "deltaE"],
          [(p.L, i, p.E_m.real, p.E_m.imag, p.kappa_m, p.delta_E) for row in d.samples for i, p in enumerate(row)])
    o.section("disorder", [("target", dis.target), ("delta", dis.amplitude), ("samples", args.samples),
                           ("master_seed", args.seed), ("aggregate", args.aggregate)])
    o.section("fit", _fit_items(d.series))
    o.figure(_plots().plot_scaling, "scaling.svg", d.series)


def cmd_verify(args, model, dis, o: Output):
    if dis is not None:
        raise UsageError("verify needs a clean (disorder-free) model")
    res = run_checks(model)
    o.csv("verify.csv", ["check", "value", "tolerance", "passed", "note"],
          [(r.name, r.value, r.tolerance, r.passed, r.note) for r in res])
    o.section("verify", [(r.name, "PASS" if r.passed else "FAIL") for r in res] +
              [("all_passed", all(r.passed for r in res))])


def run_families(spec: dict, o: Output):
    thetas = [math.pi * f for f in spec["theta_over_pi"]]
    tm2 = np.linspace(*spec["t_m2"])
    fits = [slope_family(th, tm2, spec["L"], spec.get("rule", "lowest-above-real")) for th in thetas]
    pooled, r2, spread = family_spread(fits)
    o.csv("families.csv", ["theta_B", "t_m2", "slope", "kappa_m"],
          [(f.theta_B, t, s, k) for f in fits for t, s, k in zip(f.t_m2, f.slope, f.kappa)])
    o.section("families", [(f"ratio_{i}", f.ratio) for i, f in enumerate(fits)] +
              [(f"r2_{i}", f.r2) for i, f in enumerate(fits)] +
              [("pooled_ratio", pooled), ("pooled_r2", r2), ("max_family_deviation", spread)])
    o.figure(_plots().plot_families, "families.svg", fits, pooled=pooled)


def run_profiles(spec: dict, model, o: Output):
    bp = _need_point(model, None)
    dev, grid, curves = profile_collapse(model, bp.energy, spec["sizes"])
    o.csv("profiles.csv", ["x_over_L"] + [f"L{L}" for L in spec["sizes"]],
          [(x, *c) for x, c in zip(grid, curves.T)])
    o.section("profiles", [("max_pairwise_deviation", dev)])
    o.figure(_plots().plot_profiles, "profiles.svg", grid, curves, spec["sizes"])


def cmd_reproduce(args, o_root: Path) -> int:
    with resources.as_file(preset_dir() / "figures.yaml") as p:
        figures = yaml.safe_load(p.read_text(encoding="utf-8"))
    if args.figure not in figures:
        raise UsageError(f"unknown figure {args.figure!r}; choose from {', '.join(figures)}")
    status = 0
    for step in figures[args.figure]["steps"]:
        sub = o_root / f"{args.figure}" / step["name"]
        if step["command"] in ("families", "profiles"):
            sub.mkdir(parents=True, exist_ok=True)
            manifest = {"tool": "nonbloch", "version": __version__, "command": step["command"], "params": step}
            o = Output(sub, manifest, args.svg)
            if step["command"] == "families":
                run_families(step, o)
            else:
                model, _, _ = resolve_model("@" + step["model"])
                run_profiles(step, model, o)
            sys.stdout.write(o.finish())
            continue
        argv = [step["command"], "@" + step["model"], "--out", str(sub)]
        for k, v in step.get("options", {}).items():
            flag = "-L" if k == "L" else "--" + k.replace("_", "-")
            argv += [flag] if v is True else [flag, str(v)]
        if args.svg:
            argv.append("--svg")
        status = max(status, run(argv))
    return status


# -- parser -------------------------------------------------------------------

COMMANDS = {
    "gbz": cmd_gbz,
    "spectrum": cmd_spectrum,
    "states": cmd_states,
    "bloch-point": cmd_bloch_point,
    "scaling": cmd_scaling,
    "dos": cmd_dos,
    "periodicity": cmd_periodicity,
    "disorder": cmd_disorder,
    "verify": cmd_verify,
}


def _positive(kind):
    def conv(s):
        v = kind(s)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v

    return conv


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nonbloch", description="Non-Bloch band theory toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sp = ap.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sp.add_parser(name, help=help_)
        p.add_argument("model", help="model file (YAML) or @preset")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--svg", action="store_true", help="also write SVG figures")
        return p

    def lengths(p):
        p.add_argument("--L", help="comma-separated chain lengths")
        p.add_argument("--L-min", type=_positive(int))
        p.add_argument("--L-max", type=_positive(int))
        p.add_argument("--stride", type=_positive(int))

    def selection(p):
        p.add_argument("--theta", type=float, help="use the Bloch point nearest this angle")
        p.add_argument("--rule", choices=["nearest-complex", "lowest-above-real"], default="nearest-complex")

    p = add("gbz", "GBZ contour and Bloch-point overview")
    p.add_argument("--n-phi", type=_positive(int), default=2048)
    p.add_argument("--finite-size", type=_positive(int), help="also add open-chain root pairs at this L")
    p.add_argument("--cusps", action="store_true", help="scan the contour for cusps")

    p = add("spectrum", "finite-chain spectrum")
    p.add_argument("-L", dest="L_size", type=_positive(int), default=30)
    p.add_argument("--boundary", choices=["open", "periodic"], default="open")

    p = add("states", "open-chain eigenvector profiles")
    p.add_argument("-L", dest="L_size", type=_positive(int), default=30)
    p.add_argument("--rule", choices=["nearest-complex", "lowest-above-real"], default="nearest-complex")

    add("bloch-point", "locate and classify Bloch points")

    p = add("scaling", "kappa_m and |E_m - E_B| against L")
    lengths(p)
    selection(p)
    p.add_argument("--kappa-method", choices=["middle-root", "envelope"], default="middle-root")

    p = add("dos", "density-of-states exponent at a Bloch point")
    p.add_argument("-L", dest="L_size", type=_positive(int), default=1000)
    p.add_argument("--window", type=_positive(float), default=0.3)
    p.add_argument("--theta", type=float)

    p = add("periodicity", "period of kappa_m in L")
    p.add_argument("--L-min", type=_positive(int), default=40)
    p.add_argument("--L-max", type=_positive(int), default=100)
    p.add_argument("--theta", type=float)

    p = add("disorder", "scaling over disorder ensembles")
    lengths(p)
    selection(p)
    p.add_argument("--delta", type=float, help="disorder amplitude (overrides the model file)")
    p.add_argument("--target", type=int, default=0, help="hopping degree to perturb (0 = intracell)")
    p.add_argument("--samples", type=_positive(int), default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--aggregate", choices=["mean", "median"], default="mean")
    p.add_argument("--kappa-method", choices=["middle-root", "envelope"], default="envelope")

    add("verify", "cross-oracle checks")

    p = sp.add_parser("reproduce", help="regenerate a figure dataset from shipped presets")
    p.add_argument("--figure", required=True)
    p.add_argument("--out", default=".")
    p.add_argument("--svg", action="store_true")
    return ap


def _params(args) -> dict:
    skip = {"model", "out", "svg", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "reproduce":
            return cmd_reproduce(args, out)
        model, dis, _ = resolve_model(args.model)
        manifest = {
            "tool": "nonbloch",
            "version": __version__,
            "command": args.command,
            "model": model_to_dict(model, dis),
            "params": _params(args),
        }
        o = Output(out, manifest, args.svg)
        COMMANDS[args.command](args, model, dis, o)
        sys.stdout.write(o.finish())
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except NonBlochError as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
