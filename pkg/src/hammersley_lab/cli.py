"""Command-line front end.

Configuration files are plain text, one ``section.key = value`` per line.
Blank lines and lines starting with ``#`` are ignored. Values are typed by
the schema below; lists are comma separated; functions are written as
``name(arg, ...)`` with ``name`` one of ``zero``, ``constant``, ``tent``,
``step`` or ``interp``::

    run.command = experiment
    run.experiment = thm2
    run.seeds = 0, 1
    scaling.n = 50
    scaling.beta = 0.25
    scaling.t = 0.5
    profile.v0 = tent(0.0, 2.0, 2.0)

Floats are rendered with ``repr``, the shortest string that parses back to
the same double, so ``parse_config(render(cfg)) == cfg``.

Exit codes: 0 success, 2 configuration error, 3 window exhausted,
4 internal failure. Output goes to ``--out``, else ``run.out``, else
``$HAMMERSLEY_LAB_OUT``, else the working directory.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import burgers, experiments, hammersley, increasing_seq, poisson_plane, sticks
from .burgers import PiecewisePoly

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_WINDOW = 3
EXIT_INTERNAL = 4

OUT_ENV = "HAMMERSLEY_LAB_OUT"
COMMANDS = ("lis", "gamma", "evolve", "sticks", "burgers", "experiment", "selftest")


class ConfigError(ValueError):
    """Every problem found in a configuration, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


# function specs -----------------------------------------------------------------

_FUNCTION_ARITY = {"zero": (0, 0), "constant": (1, 1), "tent": (3, 3),
                   "step": (3, 3), "interp": (4, None)}


@dataclass(frozen=True)
class FunctionSpec:
    """A named piecewise-linear function: ``tent(center, half_width, height)``,
    ``step(at, left, right)``, ``interp(x1, y1, x2, y2, ...)``, ``constant(c)``
    or ``zero()``."""

    name: str
    args: tuple = ()

    def build(self) -> PiecewisePoly:
        a = self.args
        if self.name == "zero":
            return burgers.constant(0.0)
        if self.name == "constant":
            return burgers.constant(a[0])
        if self.name == "tent":
            return burgers.tent(a[0], a[1], a[2])
        if self.name == "step":
            return burgers.step([a[0]], [a[1], a[2]])
        return burgers.linear_interp(a[0::2], a[1::2])

    def render(self) -> str:
        return f"{self.name}({', '.join(repr(v) for v in self.args)})"


def parse_function(text: str) -> FunctionSpec:
    text = text.strip()
    if not text.endswith(")") or "(" not in text:
        raise ValueError(f"expected name(args...), got {text!r}")
    name, _, rest = text[:-1].partition("(")
    name = name.strip()
    if name not in _FUNCTION_ARITY:
        raise ValueError(f"unknown function {name!r}; choose from {', '.join(_FUNCTION_ARITY)}")
    args = tuple(float(v) for v in rest.split(",") if v.strip())
    lo, hi = _FUNCTION_ARITY[name]
    if len(args) < lo or (hi is not None and len(args) > hi):
        raise ValueError(f"{name} takes {lo if hi == lo else f'at least {lo}'} arguments, got {len(args)}")
    if name == "interp":
        if len(args) % 2:
            raise ValueError("interp needs x, y pairs")
        xs = args[0::2]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("interp abscissae must increase")
    if name == "tent" and args[1] <= 0:
        raise ValueError("tent half_width must be positive")
    return FunctionSpec(name, args)


# schema ---------------------------------------------------------------------------

def _int(s):
    return int(s.strip())


def _float(s):
    v = float(s.strip())
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _bool(s):
    s = s.strip().lower()
    if s in ("true", "yes", "1"):
        return True
    if s in ("false", "no", "0"):
        return False
    raise ValueError("expected true or false")


def _str(s):
    s = s.strip()
    if not s:
        raise ValueError("empty value")
    return s


def _list(conv):
    def parse(s):
        items = [p for p in s.split(",") if p.strip()]
        if not items:
            raise ValueError("empty list")
        return tuple(conv(p) for p in items)
    return parse


def _choice(*options):
    def parse(s):
        s = s.strip()
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    return parse


_TYPE_NAMES = {_int: "integer", _float: "real", _bool: "boolean", _str: "string"}

SCHEMA = {
    "run": {"command": _choice(*COMMANDS), "experiment": _choice(*experiments.EXPERIMENTS),
            "seeds": _list(_int), "seed_count": _int, "master_seed": _int,
            "out": _str, "workers": _int, "fit": _bool},
    "scaling": {"n": _int, "ns": _list(_int), "nu": _float, "beta": _float, "q": _float,
                "t": _float, "x": _float, "y": _float, "delta": _float},
    "profile": {"v0": parse_function},
    "window": {"delta_w": _float, "b": _float, "max_widenings": _int},
    "test": {"phi": parse_function},
    "thm2": {"method": _choice("event", "variational")},
    "thm4": {"case": _int},
    "benchmark": {"K": _int},
    "lis": {"count": _int, "side": _float},
    "gamma": {"a": _float, "s": _float, "m": _int, "tau": _float, "width_cap": _float},
    "evolve": {"particles": _int, "t": _float, "q": _float, "snapshots": _int,
               "method": _choice("event", "variational")},
    "sticks": {"sites": _int, "t": _float, "q": _float, "closed_right": _bool},
    "burgers": {"v0": parse_function, "x_min": _float, "x_max": _float,
                "x_points": _int, "times": _list(_float)},
}

DEFAULTS = {
    ("run", "seeds"): (0,), ("run", "workers"): 1, ("run", "fit"): False,
    ("scaling", "n"): 50, ("scaling", "nu"): 1.0, ("scaling", "beta"): 0.25,
    ("scaling", "q"): 1.0, ("scaling", "t"): 0.5, ("scaling", "x"): 0.0,
    ("scaling", "y"): 1.0, ("scaling", "delta"): experiments.DEFAULT_DELTA,
    ("profile", "v0"): FunctionSpec("zero"),
    ("window", "delta_w"): 0.05, ("window", "b"): 4.0, ("window", "max_widenings"): 4,
    ("test", "phi"): FunctionSpec("tent", (0.0, 1.0, 1.0)),
    ("thm2", "method"): "event", ("thm4", "case"): 2,
    ("lis", "count"): 200, ("lis", "side"): 10.0,
    ("gamma", "a"): 0.0, ("gamma", "s"): 0.0, ("gamma", "m"): 20,
    ("gamma", "tau"): 10.0, ("gamma", "width_cap"): 1000.0,
    ("evolve", "particles"): 200, ("evolve", "t"): 5.0, ("evolve", "q"): 1.0,
    ("evolve", "snapshots"): 1, ("evolve", "method"): "event",
    ("sticks", "sites"): 100, ("sticks", "t"): 5.0, ("sticks", "q"): 1.0,
    ("sticks", "closed_right"): False,
    ("burgers", "v0"): FunctionSpec("step", (0.0, 1.0, 0.0)), ("burgers", "x_min"): -2.0,
    ("burgers", "x_max"): 2.0, ("burgers", "x_points"): 41, ("burgers", "times"): (0.5,),
}


@dataclass
class RunConfig:
    """Explicitly set values keyed by ``(section, key)``; defaults fill the rest."""

    values: dict = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.values.get((section, key), DEFAULTS.get((section, key)))

    def has(self, section: str, key: str) -> bool:
        return (section, key) in self.values

    @property
    def command(self):
        return self.values.get(("run", "command"))

    @property
    def seeds(self) -> tuple:
        if self.has("run", "seed_count"):
            base = self.get("run", "master_seed") or 0
            return tuple(range(base, base + self.get("run", "seed_count")))
        return self.get("run", "seeds")

    def ns(self) -> tuple:
        return self.get("scaling", "ns") or (self.get("scaling", "n"),)


def _render_value(v) -> str:
    if isinstance(v, FunctionSpec):
        return v.render()
    if isinstance(v, tuple):
        return ", ".join(_render_value(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(config: RunConfig) -> str:
    """Canonical text: schema order, one explicitly set value per line."""
    lines = []
    for section, keys in SCHEMA.items():
        for key in keys:
            if (section, key) in config.values:
                lines.append(f"{section}.{key} = {_render_value(config.values[(section, key)])}")
    return "\n".join(lines) + "\n"


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate; raises :class:`ConfigError` listing every problem."""
    errors = []
    values = {}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{source}:{lineno}"
        name, eq, value = line.partition("=")
        name = name.strip()
        if not eq:
            errors.append(f"{where}: expected 'section.key = value', got {line!r}")
            continue
        section, dot, key = name.partition(".")
        if not dot or section not in SCHEMA or key not in SCHEMA[section]:
            errors.append(f"{where}: unknown key {name!r}")
            continue
        if (section, key) in seen:
            errors.append(f"{where}: duplicate key {name!r}, first set at {seen[(section, key)]}")
            continue
        seen[(section, key)] = where
        conv = SCHEMA[section][key]
        try:
            values[(section, key)] = conv(value)
        except ValueError as exc:
            kind = _TYPE_NAMES.get(conv, "value")
            errors.append(f"{where}: {name}: invalid {kind} {value.strip()!r} ({exc})")
    config = RunConfig(values)
    # keys that failed to parse fall back to defaults here, so their constraints stay quiet
    errors.extend(validate(config))
    if errors:
        raise ConfigError(errors)
    return config


def validate(config: RunConfig) -> list[str]:
    """Cross-field constraints of the owning modules, as messages."""
    g = config.get
    errs = []

    def need(cond, msg):
        if not cond:
            errs.append(msg)

    for n in config.ns():
        need(n >= 1, f"scaling.n must be >= 1, got {n}")
    need(g("scaling", "nu") >= 1, f"scaling.nu must be >= 1, got {g('scaling', 'nu')}")
    need(g("scaling", "beta") > 0, f"scaling.beta: need beta > 0, got {g('scaling', 'beta')}")
    need(g("scaling", "q") > 0, f"scaling.q: need q > 0, got {g('scaling', 'q')}")
    need(g("scaling", "t") >= 0, f"scaling.t must be >= 0, got {g('scaling', 't')}")
    need(g("scaling", "x") < g("scaling", "y"),
         f"scaling.x must be < scaling.y, got {g('scaling', 'x')} and {g('scaling', 'y')}")
    need(g("scaling", "delta") > 0, "scaling.delta must be positive")
    need(g("window", "delta_w") > 0, "window.delta_w must be positive")
    need(g("window", "b") > 0, "window.b must be positive")
    need(g("window", "max_widenings") >= 0, "window.max_widenings must be >= 0")
    need(g("run", "workers") >= 1, "run.workers must be >= 1")
    if config.has("run", "seed_count"):
        need(g("run", "seed_count") >= 1, "run.seed_count must be >= 1")
        need(not config.has("run", "seeds"), "set either run.seeds or run.seed_count, not both")
    need(all(s >= 0 for s in config.seeds), "seeds must be nonnegative")

    v0 = g("profile", "v0").build()
    beta, q = g("scaling", "beta"), g("scaling", "q")
    if beta > 0 and q > 0:
        sup = v0.sup_abs()
        for n in config.ns():
            if n >= 1 and not n ** (-beta) * sup < q:
                errs.append(f"profile.v0: need q > n^-beta sup|v0|, got q={q!r} and "
                            f"n^-beta sup|v0|={n ** -beta * sup!r} at n={n}")
    phi = g("test", "phi").build()
    if np.any(phi.coeffs[0] != 0) or np.any(phi.coeffs[-1] != 0) or not phi.is_continuous():
        errs.append("test.phi must be continuous and compactly supported")
    need(g("thm4", "case") in (1, 2, 3), f"thm4.case must be 1, 2 or 3, got {g('thm4', 'case')}")

    need(g("lis", "count") >= 0, "lis.count must be >= 0")
    need(g("lis", "side") > 0, "lis.side must be positive")
    need(g("gamma", "m") >= 0, "gamma.m must be >= 0")
    need(g("gamma", "tau") > 0, "gamma.tau must be positive")
    need(g("gamma", "width_cap") > 0, "gamma.width_cap must be positive")
    need(g("evolve", "particles") >= 2, "evolve.particles must be >= 2")
    need(g("evolve", "t") >= 0, "evolve.t must be >= 0")
    need(g("evolve", "q") > 0, "evolve.q must be positive")
    need(g("evolve", "snapshots") >= 1, "evolve.snapshots must be >= 1")
    need(g("sticks", "sites") >= 1, "sticks.sites must be >= 1")
    need(g("sticks", "t") >= 0, "sticks.t must be >= 0")
    need(g("sticks", "q") > 0, "sticks.q must be positive")
    need(g("burgers", "x_min") < g("burgers", "x_max"), "burgers.x_min must be < burgers.x_max")
    need(g("burgers", "x_points") >= 1, "burgers.x_points must be >= 1")
    need(all(t >= 0 for t in g("burgers", "times")), "burgers.times must be >= 0")
    bv0 = g("burgers", "v0").build()
    need(bv0.degree <= 1, "burgers.v0 must be piecewise linear")
    return errs


# commands -------------------------------------------------------------------------

def _out_dir(config: RunConfig, flag: str | None) -> Path:
    path = flag or config.get("run", "out") or os.environ.get(OUT_ENV) or "."
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, tag]))


def cmd_lis(config: RunConfig, out: Path) -> str:
    seed = config.seeds[0]
    side = config.get("lis", "side")
    rng = _rng(seed, 0x115)
    count = config.get("lis", "count")
    xs, ts = side * rng.random(count), side * rng.random(count)
    poisson_plane.write_points_csv(out / "points.csv", xs, ts)
    return f"lis seed={seed} points={count} length={increasing_seq.lis_length((xs, ts))}"


def cmd_gamma(config: RunConfig, out: Path) -> str:
    g = config.get
    seed = config.seeds[0]
    store = poisson_plane.PointStore(seed)
    a, s, m = g("gamma", "a"), g("gamma", "s"), g("gamma", "m")
    reach = increasing_seq.gamma_reach(store, a, s, m, g("gamma", "tau"), a + g("gamma", "width_cap"))
    with open(out / "gamma.csv", "w", newline="") as fh:
        fh.write("m,width\n")
        for k in range(m + 1):
            fh.write(f"{k},{float(reach[k] - a)!r}\n")
    return f"gamma seed={seed} m={m} width={float(reach[m] - a)!r}"


def cmd_evolve(config: RunConfig, out: Path) -> str:
    g = config.get
    seed = config.seeds[0]
    n, T, q = g("evolve", "particles"), g("evolve", "t"), g("evolve", "q")
    gaps = _rng(seed, 0xE7).exponential(q, n - 1)
    z0 = hammersley.ParticleConfig(0, np.concatenate([[0.0], np.cumsum(gaps)]))
    store = poisson_plane.PointStore(seed)
    k = g("evolve", "snapshots")
    snaps = [z0]
    for j in range(1, k + 1):
        tj = T * j / k
        if g("evolve", "method") == "event":
            snaps.append(hammersley.evolve_event_driven(snaps[-1], store, tj))
        else:
            snaps.append(hammersley.evolve_variational_config(z0, store, tj))
    hammersley.write_trajectory_csv(out / "trajectory.csv", snaps)
    moved = int(np.count_nonzero(snaps[-1].positions != z0.positions))
    return f"evolve seed={seed} particles={n} t={T!r} moved={moved}"


def cmd_sticks(config: RunConfig, out: Path) -> str:
    g = config.get
    seed = config.seeds[0]
    eta0 = sticks.StickConfig(1, _rng(seed, 0x57).exponential(g("sticks", "q"), g("sticks", "sites")))
    eta = sticks.evolve_sticks_direct(eta0, g("sticks", "t"), _rng(seed, 0x58),
                                      closed_right=g("sticks", "closed_right"))
    sticks.write_sticks_csv(out / "sticks.csv", eta)
    return f"sticks seed={seed} sites={eta.heights.size} mass={eta.total_mass!r}"


def cmd_burgers(config: RunConfig, out: Path) -> str:
    g = config.get
    v0 = g("burgers", "v0").build()
    V0 = v0.antiderivative(0.0)
    xs = np.linspace(g("burgers", "x_min"), g("burgers", "x_max"), g("burgers", "x_points"))
    burgers.write_field_csv(out / "field.csv", V0, xs, g("burgers", "times"))
    return f"burgers points={xs.size} times={len(g('burgers', 'times'))}"


def build_experiment(config: RunConfig):
    """Arguments of :func:`experiments.run_sweep` for the configured experiment."""
    g = config.get
    name = g("run", "experiment")
    if name is None:
        raise ConfigError(["run.experiment is required for the experiment command"])
    nu = g("scaling", "nu")
    if name == "thm2":
        nu = 1.0 + g("scaling", "beta")
    base = experiments.ScalingParams(config.ns()[0], nu, g("scaling", "beta"), g("scaling", "q"),
                                     g("scaling", "t"), g("scaling", "x"), g("scaling", "y"),
                                     config.seeds)
    policy = hammersley.WindowPolicy(nu, g("scaling", "beta"), g("window", "delta_w"),
                                     g("window", "b"), g("window", "max_widenings"))
    kwargs = {"policy": policy}
    if name in ("thm1", "thm3", "benchmark"):
        kwargs["delta"] = g("scaling", "delta")
    if name == "thm2":
        kwargs["phi"] = g("test", "phi").build()
        kwargs["method"] = g("thm2", "method")
    if name == "thm4":
        kwargs["case"] = g("thm4", "case")
    if name == "benchmark" and config.has("benchmark", "K"):
        kwargs["K"] = g("benchmark", "K")
    return name, base, config.ns(), g("profile", "v0").build(), kwargs


def cmd_experiment(config: RunConfig, out: Path) -> str:
    name, base, ns, v0, kwargs = build_experiment(config)
    result = experiments.run_sweep(name, base, ns, v0, workers=config.get("run", "workers"),
                                   fit=config.get("run", "fit"), **kwargs)
    result.write_csv(out / f"{result.experiment}.csv")
    result.write_summary_csv(out / f"{result.experiment}_summary.csv")
    last = result.summary()[-1]
    return (f"{result.experiment} n={last['n']} seeds={last['count']} "
            f"mean_residual={last['mean_residual']!r} se={last['se_residual']!r}")


def cmd_selftest(config: RunConfig, out: Path) -> str:
    from . import selftest
    failures = selftest.run_all(seed=config.seeds[0], echo=print)
    if failures:
        raise AssertionError(f"selftest failed: {', '.join(failures)}")
    return "selftest passed"


_HANDLERS = {"lis": cmd_lis, "gamma": cmd_gamma, "evolve": cmd_evolve, "sticks": cmd_sticks,
             "burgers": cmd_burgers, "experiment": cmd_experiment, "selftest": cmd_selftest}


def run(config: RunConfig, out: str | None = None) -> int:
    """Execute the configured command; returns the process exit status."""
    try:
        outdir = _out_dir(config, out)
        print(_HANDLERS[config.command](config, outdir))
        return EXIT_OK
    except (ConfigError, experiments.CaseMismatch, sticks.ConfigurationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except hammersley.WindowExhausted as exc:
        print(f"window exhausted: {exc}", file=sys.stderr)
        return EXIT_WINDOW
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file in section.key = value form")
    common.add_argument("--seed", type=int, help="single seed (overrides run.seeds)")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="extra config line, applied after --config")
    p = argparse.ArgumentParser(prog="hammersley-lab", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "experiment":
            sp.add_argument("experiment", choices=experiments.EXPERIMENTS)
    return p


def load(argv) -> tuple[RunConfig, str | None]:
    """Build the config from command-line arguments (file, then --set, then flags)."""
    args = _parser().parse_args(argv)
    lines = []
    if args.config:
        try:
            lines.append(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError([f"cannot read config {args.config}: {exc.strerror}"])
    text = "\n".join(lines)
    drop = {s.partition("=")[0].strip() for s in args.set}
    drop |= {"run.command", "run.experiment"}
    if args.seed is not None:
        drop |= {"run.seeds", "run.seed_count", "run.master_seed"}
    # overridden lines are blanked, not removed, so line numbers still match the file
    merged = ["" if ln.partition("=")[0].strip() in drop else ln for ln in text.splitlines()]
    merged += args.set
    if args.seed is not None:
        merged.append(f"run.seeds = {args.seed}")
    merged.append(f"run.command = {args.command}")
    if args.command == "experiment":
        merged.append(f"run.experiment = {args.experiment}")
    config = parse_config("\n".join(merged), args.config or "<args>")
    return config, args.out


def main(argv=None) -> int:
    try:
        config, out = load(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for e in exc.errors:
            print(f"  {e}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config, out)


if __name__ == "__main__":
    sys.exit(main())
