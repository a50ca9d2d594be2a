"""Command-line driver.

Exit codes: 0 ok, 1 verification failure, 2 configuration error,
3 inconclusive / no convergence, 4 map is not a self-map.

Every JSON output carries a ``meta`` block and every CSV starts with a
``# tool=... version=... config_hash=... rng_seed=...`` comment line.  The
config hash covers the command and every parameter except output location,
so identical configurations give byte-identical files.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, ball, dynamics1d as d1, valiron, verify
from .corpus import by_name
from .errors import ConvergenceError, DescriptorError, DomainError, Inconclusive, NotSelfMap
from .maps import MapDescriptor, from_json, require_self_map, to_halfplane
from .siegel import KORANYI_THRESHOLD

EXIT_OK, EXIT_SUITE, EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_NOT_SELF_MAP = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    pass


# --- config helpers ---------------------------------------------------------------------

def load_map(source: str) -> MapDescriptor:
    """``--map`` value: a JSON file path, inline JSON, or ``corpus:<name>``."""
    if source.startswith("corpus:"):
        try:
            return by_name(source[len("corpus:"):]).m
        except KeyError as exc:
            raise ConfigError(f"unknown corpus map {exc}") from exc
    if os.path.isfile(source):
        with open(source) as fh:
            text = fh.read()
    else:
        text = source
    return from_json(text)


def parse_point(text: str | None, default):
    if text is None:
        return default
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad point {text!r}") from exc
    if len(parts) == 2:
        return complex(parts[0], parts[1])
    if len(parts) % 2 == 0 and parts:
        return np.array([complex(parts[i], parts[i + 1]) for i in range(0, len(parts), 2)])
    raise ConfigError(f"bad point {text!r}: give re,im pairs")


def parse_seed_grid(text: str) -> np.ndarray:
    """``a,b,nx,ny``: Re z0 in [-a, a] (nx points), Im z0 in [b/ny, b] (ny points)."""
    try:
        a, b, nx, ny = text.split(",")
        a, b, nx, ny = float(a), float(b), int(nx), int(ny)
    except ValueError as exc:
        raise ConfigError(f"bad --seed-grid {text!r}; expected a,b,nx,ny") from exc
    if a < 0 or b <= 0 or nx < 1 or ny < 1:
        raise ConfigError("--seed-grid needs a >= 0, b > 0, nx, ny >= 1")
    xs = np.linspace(-a, a, nx) if nx > 1 else np.array([0.0])
    ys = b * np.arange(1, ny + 1) / ny
    return np.array([complex(x, y) for y in ys for x in xs])


def parse_floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc
    return vals


def config_hash(command: str, args: argparse.Namespace, maps: list[MapDescriptor]) -> str:
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in ("out", "figures", "func", "map", "command")}
    blob = json.dumps({"command": command, "params": params,
                       "maps": [m.dumps() for m in maps]}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class Run:
    """Output bookkeeping for one command invocation."""

    def __init__(self, command, args, maps):
        self.command = command
        self.args = args
        self.meta = {"tool": "valironkit", "version": __version__,
                     "config_hash": config_hash(command, args, maps), "rng_seed": args.rng_seed}
        self.out = args.out
        if self.out:
            os.makedirs(self.out, exist_ok=True)

    @property
    def header(self):
        return [" ".join(f"{k}={v}" for k, v in self.meta.items())]

    def path(self, name):
        return os.path.join(self.out, name) if self.out else None

    def emit_json(self, name, payload, stdout=True):
        doc = {"meta": self.meta, **payload}
        text = json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"
        if self.out:
            with open(self.path(name), "w") as fh:
                fh.write(text)
        if stdout:
            sys.stdout.write(text)

    def emit_csv(self, name, header, rows):
        if not self.out:
            return
        with open(self.path(name), "w") as fh:
            for line in self.header:
                fh.write(f"# {line}\n")
            fh.write(",".join(header) + "\n")
            for r in rows:
                fh.write(",".join(_fmt(v) for v in r) + "\n")

    def figure(self, kind, name, *a, **kw):
        """Render ``plotting.<kind>`` into ``--out``; matplotlib is only imported here."""
        if self.out and getattr(self.args, "figures", False):
            from . import plotting
            getattr(plotting, kind)(*a, path=self.path(name), **kw)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _clean(obj):
    """JSON-safe copy: complex -> {re, im}, non-finite floats -> strings, numpy -> python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(float(obj.real)), "im": _clean(float(obj.imag))}
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    return obj


def _threads():
    return verify.thread_cap()


# --- commands ---------------------------------------------------------------------------

def cmd_classify(args):
    m = load_map(args.map)
    run = Run("classify", args, [m])
    require_self_map(m)
    if m.vector:
        if ball.interior_attractor(m) is not None:
            run.emit_json("classify.json", {"kind": "elliptic"})
            return EXIT_OK
        dil = ball.ball_dilatation(m)
        kind = "hyperbolic" if dil.c <= d1.HYPERBOLIC_ALPHA_MAX else "parabolic"
        run.emit_json("classify.json", {
            "kind": kind, "c": dil.c,
            "evidence": {"c_radial": dil.radial.value, "c_orbital": dil.orbital.value,
                         "radial_residual": dil.radial.residual, "flagged": dil.flagged,
                         "iterate_law": dil.iterate_law, "notes": dil.notes}})
        return EXIT_OK
    cl = d1.classify(m, max_n=args.max_n or 10000)
    run.emit_json("classify.json", cl.to_dict())
    return EXIT_OK


def _orbit_start(m, args):
    return parse_point(args.z0, 0j if m.domain == "disk" else 1j)


def cmd_orbit(args):
    m = load_map(args.map)
    run = Run("orbit", args, [m])
    if m.vector:
        z0 = parse_point(args.z0, np.zeros(m.N, dtype=complex))
        tr = ball.koranyi_trace(m, z0, args.max_n or 200)
        if run.out:
            tr.write_csv(run.path("koranyi.csv"), run.header)
        else:
            sys.stdout.write("\n".join(f"{r['n']},{_fmt(r['L'])}" for r in tr.rows()) + "\n")
        return EXIT_OK
    tr = d1.iterate_orbit(m, _orbit_start(m, args), max_n=args.max_n or 1000)
    if run.out:
        tr.write_csv(run.path("orbit.csv"), run.header)
        run.figure("orbit_figure", "orbit.png", tr)
    else:
        for line in run.header:
            sys.stdout.write(f"# {line}\n")
        sys.stdout.write("n,re,im,abs,arg,step_d,ratio_re,ratio_im\n")
        for r in tr.rows():
            sys.stdout.write(",".join(_fmt(v) for v in r.values()) + "\n")
    return EXIT_OK


def _hyperbolic_halfplane(m):
    """Half-plane form of a hyperbolic one-variable map (Denjoy-Wolff point at infinity)."""
    if m.vector:
        raise ConfigError("this command needs a disk or half-plane map")
    require_self_map(m)
    cl = d1.classify(m)
    if cl.kind != "hyperbolic":
        raise Inconclusive(f"map is {cl.kind}; the intertwining map needs hyperbolic type")
    return to_halfplane(m, cl.dw.disk_point) if m.domain == "disk" else m


def _theta_field(m, seeds, max_n):
    def one(z0):
        try:
            return valiron.theta_at(m, z0, max_n=max_n)
        except (ConvergenceError, ValueError, Inconclusive):
            return float("nan")
    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        return list(ex.map(one, seeds))


def cmd_valiron(args):
    m = load_map(args.map)
    run = Run("valiron", args, [m])
    seeds = parse_seed_grid(args.seed_grid)
    m = _hyperbolic_halfplane(m)
    tol = args.tol if args.tol is not None else valiron.SIGMA_TOL
    z0 = _orbit_start(m, args)
    max_n = args.max_n or 400
    try:
        model = valiron.build_model(m, z0, max_n=max_n, residual_grid=False)
        grid = valiron.hyperbolic_grid(model.z0)
        s = valiron.sigma_evaluate(model, grid, tol)
        sp = valiron.sigma_evaluate(model, d1.evaluate(m, grid), tol)
        r = np.abs(sp - model.A * s - model.b_inf)
        model.residual_stats = {"max": float(np.max(r)), "mean": float(np.mean(r))}
    except ConvergenceError as exc:
        run.emit_json("valiron_partial.json", {"error": str(exc), "last": exc.last}, stdout=False)
        raise
    ang = valiron.angular_derivative(model)
    payload = {
        "A": model.A, "b_inf": model.b_inf, "theta": model.theta,
        "residual_max": model.residual_stats["max"], "residual_mean": model.residual_stats["mean"],
        "angular_derivative": ang.value, "n_max_used": model.n_max_used,
        "theta_direct": model.limits.theta_direct, "flagged": model.flagged,
        "z0": model.z0,
    }
    run.emit_json("valiron.json", payload)
    if run.out:
        model.base_orbit.write_csv(run.path("orbit.csv"), run.header)
        theta = _theta_field(m, seeds, max_n)
        run.emit_csv("theta_field.csv", ["re_z0", "im_z0", "theta"],
                     [(z.real, z.imag, t) for z, t in zip(seeds, theta)])
        run.figure("orbit_figure", "orbit.png", model.base_orbit)
        run.figure("theta_field_figure", "theta_field.png", seeds, theta)
    return EXIT_OK


def cmd_heins(args):
    m = load_map(args.map)
    run = Run("heins", args, [m])
    ts = parse_floats(args.t)
    if any(not t > 0 for t in ts):
        raise ConfigError("heins parameters t must be positive")
    m = _hyperbolic_halfplane(m)
    model = valiron.build_model(m, _orbit_start(m, args), max_n=args.max_n or 400, residual_grid=False)
    samples = valiron.heins_curve(model, ts)
    rows = [tuple(s.row().values()) for s in samples]
    run.emit_csv("heins.csv", ["t", "kind", "re", "im"], rows)
    run.emit_json("heins.json", {"samples": [s.row() for s in samples]}, stdout=True)
    run.figure("heins_figure", "heins.png", samples)
    if any(s.kind == "inconclusive" for s in samples):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_ball_claim(args):
    m = load_map(args.map)
    run = Run("ball-claim", args, [m])
    if not m.vector:
        raise ConfigError("ball-claim needs a ball or Siegel map")
    require_self_map(m)
    if ball.interior_attractor(m) is not None:
        raise Inconclusive("map has an interior attracting point; the Korányi claim does not apply")
    dil = ball.ball_dilatation(m)
    if not dil.c < d1.HYPERBOLIC_ALPHA_MAX:
        raise Inconclusive(f"c = {dil.c:.6g}: map is not of hyperbolic type")
    if ball.siegel_form(m) is None:
        raise ConfigError("ball-claim needs a Siegel map or a Cayley-transported one")
    n_power = args.n_power or next(n for n in range(1, 64) if dil.c ** n < KORANYI_THRESHOLD)
    steps = args.max_n or 200
    seeds = ball.seed_points(m.N, args.seeds, args.rng_seed)
    per_seed, first = [], None
    for z0 in seeds:
        if n_power == 1:
            tr = ball.koranyi_trace(m, z0, steps, c=dil.c)
            first = first or tr
            per_seed.append({"sup_L": tr.sup_L, "argmax": tr.argmax, "bounded": tr.bounded_verdict,
                             "stable": tr.stable, "sn_bound_ok": tr.julia_ok})
        else:
            ce = ball.claim_extension_check(m, z0, n_power, steps, c=dil.c)
            first = first or ce.iterate_trace
            per_seed.append({"sup_L": ce.sup_L, "bounded": ce.bounded,
                             "interleave_ok": ce.interleave_ok,
                             "interleave_excess": ce.interleave_excess})
    bounded = all(s["bounded"] for s in per_seed)
    payload = {"c": dil.c, "threshold": KORANYI_THRESHOLD, "N_power": n_power,
               "sup_L": max(s["sup_L"] for s in per_seed), "bounded": bounded,
               "c_power": dil.c ** n_power, "iterate_law": dil.iterate_law,
               "dilatation_flagged": dil.flagged, "seeds": per_seed}
    run.emit_json("claim.json", payload)
    if run.out:
        first.write_csv(run.path("koranyi.csv"), run.header)
        run.figure("koranyi_figure", "koranyi.png", first, threshold=KORANYI_THRESHOLD)
    return EXIT_OK


def cmd_verify_all(args):
    extra = [load_map(s) for s in (args.map or [])]
    run = Run("verify-all", args, extra)
    checks = verify.run_all(extra=extra, n_pairs=args.n_pairs, seed=args.rng_seed)
    summary = verify.summarize(checks)
    for c in checks:
        val = "" if c.value is None else _fmt(c.value)
        sys.stdout.write(f"{'PASS' if c.passed else 'FAIL'} {c.suite} {c.map} {c.invariant} {val}\n")
    sys.stdout.write(f"{summary['n_checks'] - summary['n_failed']}/{summary['n_checks']} checks passed\n")
    run.emit_json("verify_report.json", {**summary, "checks": [c.to_dict() for c in checks]},
                  stdout=False)
    return EXIT_OK if summary["passed"] else EXIT_SUITE


# --- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (JSON also goes to stdout)")
    common.add_argument("--rng-seed", type=int, default=0, help="seed for every sampled quantity")
    common.add_argument("--max-n", type=int, default=None, help="iteration budget")
    common.add_argument("--tol", type=float, default=None, help="convergence tolerance")
    common.add_argument("--figures", action="store_true",
                        help="also render PNG figures into --out (matplotlib)")

    p = argparse.ArgumentParser(prog="valironkit",
                                description="Iteration of hyperbolic self-maps of the disk, half-plane and ball.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_, need_map=True):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if need_map:
            sp.add_argument("--map", required=True, help="map descriptor: JSON file, inline JSON or corpus:<name>")
        sp.set_defaults(func=func)
        return sp

    add("classify", cmd_classify, "elliptic / hyperbolic / parabolic type")
    sp = add("orbit", cmd_orbit, "orbit trace as CSV")
    sp.add_argument("--z0", help="start point re,im (vector maps: re,im,re,im,...)")
    sp = add("valiron", cmd_valiron, "limit data, intertwining map, theta field")
    sp.add_argument("--z0", help="base point re,im (default i)")
    sp.add_argument("--seed-grid", default="1,2,3,3", help="a,b,nx,ny: Re z0 in [-a,a], Im z0 in [b/ny,b]")
    sp = add("heins", cmd_heins, "Heins curve T(t) of the intertwining map")
    sp.add_argument("--z0", help="base point re,im (default i)")
    sp.add_argument("--t", default="0.5,1,1.5,2.5", help="comma-separated t values")
    sp = add("ball-claim", cmd_ball_claim, "Korányi-region confinement test in the ball")
    sp.add_argument("--n-power", type=int, default=None, help="iterate to test (default: smallest with c^N < 3-sqrt 8)")
    sp.add_argument("--seeds", type=int, default=5, help="number of random start points")
    sp = add("verify-all", cmd_verify_all, "run every invariant suite on the built-in corpus", need_map=False)
    sp.add_argument("--map", action="append", help="extra map(s) to include")
    sp.add_argument("--n-pairs", type=int, default=10000, help="sampled pairs per map")
    return p


def _validate(args):
    if args.tol is not None and not args.tol > 0:
        raise ConfigError("--tol must be positive")
    if args.max_n is not None and args.max_n < 1:
        raise ConfigError("--max-n must be positive")
    if getattr(args, "seeds", 1) < 1 or getattr(args, "n_pairs", 1) < 1:
        raise ConfigError("counts must be positive")
    if getattr(args, "n_power", None) is not None and args.n_power < 1:
        raise ConfigError("--n-power must be positive")
    if args.figures and not args.out:
        raise ConfigError("--figures needs --out")
    if args.out and os.path.exists(args.out) and not os.path.isdir(args.out):
        raise ConfigError(f"--out {args.out!r} is not a directory")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
        return args.func(args)
    except NotSelfMap as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_SELF_MAP
    except (ConvergenceError, Inconclusive) as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (ConfigError, DescriptorError, DomainError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # raised by preconditions such as "not hyperbolic"
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


if __name__ == "__main__":
    sys.exit(main())
