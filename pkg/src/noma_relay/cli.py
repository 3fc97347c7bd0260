"""Command-line front end: SNR sweeps, Monte Carlo runs, placement, validation.

Configs are flat ``key=value`` text with dotted sections, for example::

    relays=3
    mode=fd
    power.a1=0.75
    rates.d1=0.1
    link.s1.m=2
    si.theta=0.2
    relay.2.sic.eps_r=0.01
    run.db_stop=60

Link means are given either directly (``link.<node>.omega``) or through
path loss (``link.<node>.omega0`` plus ``geometry.*``), never both.
"""

import argparse
import csv
from dataclasses import dataclass, field
import io
import math
import random
import sys

from .analytic import (
    CapacityError,
    op_ssrs_asymptotic,
    op_ssrs_exact,
    op_tsrs_asymptotic,
    op_tsrs_exact,
    phi1,
    phi1_psic,
    phi3,
    phi3_reduced,
    prob_relay_in_kr,
    relay_inputs,
    relay_user1_success,
    relay_user1_success_reduced,
)
from .model import (
    NODES,
    ConfigError,
    Duplex,
    ImperfectSic,
    LinkFading,
    NodeLayout,
    PowerAllocation,
    RelayProfile,
    SelfInterferenceModel,
    SystemConfig,
    db_to_linear,
)
from .oracle import (
    op_ssrs_quadrature,
    op_tsrs_quadrature,
    quad_phi1,
    quad_phi3,
    quad_prob_relay_in_kr,
)
from .placement import PlacementGrid, evaluate_position, optimize
from .simulate import McSettings, Strategy, estimate_both, estimate_op

__all__ = ["ParseError", "ExperimentConfig", "parse_config", "load_config", "main"]

METHODS = ("exact", "asymptotic", "mc", "quadrature")
EXIT_OK, EXIT_GATE, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3

_LINK_KEYS = {"m", "omega", "omega0"}
_SI_KEYS = {"m": float, "omega": float, "kappa": float, "theta": float}
_SIC_KEYS = {"eps_r": float, "eps_d2": float, "m_r": float, "m_d2": float}
_RUN_KEYS = {
    "db_start": float, "db_stop": float, "db_step": float, "snr_db": float,
    "trials": int, "seed": int, "workers": int, "methods": str, "strategy": str,
}
_TOP_KEYS = {"relays": int, "mode": str}


class ParseError(ValueError):
    def __init__(self, message, key=None, line=None):
        where = f"line {line}: " if line else ""
        what = f"key '{key}': " if key else ""
        super().__init__(f"{where}{what}{message}")
        self.key = key
        self.line = line


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig
    run: dict = field(default_factory=dict)


def _convert(kind, raw, key, line):
    try:
        return kind(raw)
    except ValueError:
        raise ParseError(f"cannot read {raw!r} as {kind.__name__}", key, line) from None


def _read_pairs(text):
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected key=value", line.split()[0], lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("empty key", None, lineno)
        if key in pairs:
            raise ParseError("duplicate key", key, lineno)
        pairs[key] = (value, lineno)
    return pairs


def _classify(key, n_relays):
    """Return (scope, relay index or None, rest) or None for unknown keys."""
    parts = key.split(".")
    head = parts[0]
    if len(parts) == 1 and head in _TOP_KEYS:
        return "top", None, head
    if head == "relay" and len(parts) >= 3 and parts[1].isdigit():
        idx = int(parts[1])
        if not 1 <= idx <= n_relays:
            return None
        inner = _classify(".".join(["link"] + parts[2:]) if parts[2] in NODES else ".".join(parts[2:]),
                          n_relays)
        if inner is None or inner[0] not in ("link", "si", "sic"):
            return None
        return inner[0], idx - 1, inner[2]
    if head == "link" and len(parts) == 3 and parts[1] in NODES and parts[2] in _LINK_KEYS:
        return "link", None, (parts[1], parts[2])
    if head == "si" and len(parts) == 2 and parts[1] in _SI_KEYS:
        return "si", None, parts[1]
    if head == "sic" and len(parts) == 2 and parts[1] in _SIC_KEYS:
        return "sic", None, parts[1]
    if head == "power" and len(parts) == 2 and parts[1] in ("a1", "a2", "a3", "a4"):
        return "power", None, parts[1]
    if head == "rates" and len(parts) == 2 and parts[1] in ("d1", "d2"):
        return "rates", None, parts[1]
    if head == "noise" and len(parts) == 2 and parts[1] in ("r", "d1", "d2"):
        return "noise", None, parts[1]
    if head == "geometry" and len(parts) == 2 and parts[1] in ("alpha", "r", "theta") + NODES:
        return "geometry", None, parts[1]
    if head == "run" and len(parts) == 2 and parts[1] in _RUN_KEYS:
        return "run", None, parts[1]
    return None


def _point(raw, key, line):
    bits = raw.split(",")
    if len(bits) != 2:
        raise ParseError("expected 'x,y'", key, line)
    return tuple(_convert(float, b.strip(), key, line) for b in bits)


def _build(ctor, prefix, lines, **kwargs):
    try:
        return ctor(**kwargs)
    except ConfigError as exc:
        name = exc.field or ""
        key = name if "." in name else (f"{prefix}.{name}" if name else prefix)
        raise ParseError(str(exc), key, lines.get(key)) from None


def parse_config(text):
    """Parse config text into an ExperimentConfig; errors name key and line."""
    pairs = _read_pairs(text)
    n_relays = 1
    if "relays" in pairs:
        raw, line = pairs["relays"]
        n_relays = _convert(int, raw, "relays", line)
        if n_relays < 1:
            raise ParseError("must be >= 1", "relays", line)

    lines = {k: line for k, (_, line) in pairs.items()}
    shared = {"link": {}, "si": {}, "sic": {}}
    per_relay = [{"link": {}, "si": {}, "sic": {}} for _ in range(n_relays)]
    sections = {"power": {}, "rates": {}, "noise": {}, "geometry": {}, "run": {}}
    mode = "fd"
    for key, (raw, line) in pairs.items():
        kind = _classify(key, n_relays)
        if kind is None:
            raise ParseError("unknown configuration key", key, line)
        scope, idx, name = kind
        if scope == "top":
            if name == "mode":
                mode = raw.lower()
                if mode not in ("fd", "hd"):
                    raise ParseError("mode must be 'fd' or 'hd'", key, line)
            continue
        if scope == "geometry" and name in NODES:
            sections["geometry"][name] = _point(raw, key, line)
        elif scope == "run":
            sections["run"][name] = _convert(_RUN_KEYS[name], raw, key, line)
        elif scope in ("link", "si", "sic"):
            target = shared if idx is None else per_relay[idx]
            conv = float
            target[scope][name] = (_convert(conv, raw, key, line), key)
        else:
            sections[scope][name] = _convert(float, raw, key, line)

    link_keys = [(v[1], n[1]) for d in [shared] + per_relay for n, v in d["link"].items()]
    geometric = bool(sections["geometry"]) or any(n == "omega0" for _, n in link_keys)
    for key, name in link_keys:
        if geometric and name == "omega":
            raise ParseError("direct link mean mixed with geometric mode (use omega0)", key, lines[key])
        if not geometric and name == "omega0":
            raise ParseError("omega0 needs geometric mode", key, lines[key])
    mean_key = "omega0" if geometric else "omega"

    def merged(i, scope):
        out = {k: v[0] for k, v in shared[scope].items()}
        out.update({k: v[0] for k, v in per_relay[i][scope].items()})
        return out

    profiles = []
    for i in range(n_relays):
        lk = merged(i, "link")
        prefix = f"relay.{i + 1}." if per_relay[i]["link"] else "link."
        links = {}
        for node in NODES:
            links[node] = _build(LinkFading, f"{prefix}{node}", lines,
                                 m=lk.get((node, "m"), 1.0), omega=lk.get((node, mean_key), 1.0))
        si = _build(SelfInterferenceModel, "si", lines, **merged(i, "si"))
        sic = _build(ImperfectSic, "sic", lines, **merged(i, "sic"))
        profiles.append(RelayProfile(si=si, sic=sic, **links))

    pw = sections["power"]
    a1 = pw.get("a1", 0.75)
    a3 = pw.get("a3", 0.75)
    power = _build(PowerAllocation, "power", lines, a1=a1, a2=pw.get("a2", 1.0 - a1),
                   a3=a3, a4=pw.get("a4", 1.0 - a3))
    layout = None
    if geometric:
        geo = dict(sections["geometry"])
        layout = _build(NodeLayout, "geometry", lines, **geo)
    run = sections["run"]
    noise = sections["noise"]
    rates = sections["rates"]
    system = _build(
        SystemConfig, "config", lines,
        relays=tuple(profiles), power=power, duplex=Duplex(mode),
        rate_d1=rates.get("d1", 0.1), rate_d2=rates.get("d2", 1.0),
        pt=db_to_linear(run.get("snr_db", 0.0)),
        noise_r=noise.get("r", 1.0), noise_d1=noise.get("d1", 1.0), noise_d2=noise.get("d2", 1.0),
        layout=layout,
    )
    return ExperimentConfig(system=system, run=run)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc.strerror}", None, None) from None
    return parse_config(text)


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    return format(float(v), ".10g")


def _write_csv(rows, header, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _db_grid(start, stop, step):
    if not step > 0:
        raise ParseError("sweep step must be > 0", "run.db_step")
    out = []
    k = 0
    while start + k * step <= stop + 1e-9 * max(1.0, abs(stop)):
        out.append(round(start + k * step, 12))
        k += 1
    return out


def _methods(raw):
    items = [m.strip().lower() for m in raw.split(",") if m.strip()]
    bad = [m for m in items if m not in METHODS]
    if bad or not items:
        raise ParseError(f"unknown method(s) {bad or raw!r}; choose from {','.join(METHODS)}",
                         "run.methods")
    return [m for m in METHODS if m in items]


def _strategy(raw):
    try:
        return Strategy(raw.lower())
    except ValueError:
        raise ParseError("strategy must be 'ssrs' or 'tsrs'", "run.strategy") from None


def _setting(args, run, name, default):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return run.get(name, default)


def _mc_settings(args, run):
    return McSettings(trials=_setting(args, run, "trials", 10 ** 5),
                      seed=_setting(args, run, "seed", 0),
                      workers=_setting(args, run, "workers", 1))


_EXACT = {Strategy.SSRS: op_ssrs_exact, Strategy.TSRS: op_tsrs_exact}
_ASYM = {Strategy.SSRS: op_ssrs_asymptotic, Strategy.TSRS: op_tsrs_asymptotic}
_QUAD = {Strategy.SSRS: op_ssrs_quadrature, Strategy.TSRS: op_tsrs_quadrature}


def cmd_curve(args):
    exp = load_config(args.config)
    run = exp.run
    methods = _methods(_setting(args, run, "methods", "exact"))
    strategy = _strategy(_setting(args, run, "strategy", "tsrs"))
    grid = _db_grid(_setting(args, run, "db_start", 0.0), _setting(args, run, "db_stop", 60.0),
                    _setting(args, run, "db_step", 5.0))
    settings = _mc_settings(args, run) if "mc" in methods else None
    header = ["snr_db"]
    for m in methods:
        header.append(m)
        if m == "mc":
            header.append("mc_half_width")
    rows = []
    for db in grid:
        cfg = exp.system.at_snr_db(db)
        row = [db]
        for m in methods:
            if m == "exact":
                row.append(_EXACT[strategy](cfg).value)
            elif m == "asymptotic":
                row.append(_ASYM[strategy](cfg).value)
            elif m == "quadrature":
                row.append(_QUAD[strategy](cfg).value)
            else:
                est = estimate_op(cfg, strategy, settings)
                row += [est.value, est.half_width]
        rows.append(row)
    _write_csv(rows, header, args.out)
    return EXIT_OK


def cmd_mc(args):
    exp = load_config(args.config)
    run = exp.run
    db = _setting(args, run, "snr_db", 0.0)
    cfg = exp.system.at_snr_db(db)
    settings = _mc_settings(args, run)
    raw = _setting(args, run, "strategy", None)
    wanted = [_strategy(raw)] if raw else [Strategy.SSRS, Strategy.TSRS]
    est = estimate_both(cfg, settings)
    rows = [[db, s.value, est[s].value, est[s].half_width, settings.trials] for s in wanted]
    _write_csv(rows, ["snr_db", "strategy", "op", "half_width", "trials"], args.out)
    return EXIT_OK


def cmd_placement(args):
    exp = load_config(args.config)
    run = exp.run
    db = _setting(args, run, "snr_db", 0.0)
    cfg = exp.system.at_snr_db(db)
    if cfg.layout is None:
        raise ParseError("placement needs geometric mode (geometry.* or link.*.omega0 keys)",
                         "geometry")
    if args.origin_only:
        grid = PlacementGrid(n_radial=1)
    else:
        grid = PlacementGrid()
    res = optimize(cfg, grid, workers=_setting(args, run, "workers", 1))
    b = res.best
    summary = [[b.x, b.y, b.op, *b.distances]]
    _write_csv(summary, ["x", "y", "op_min", "d_s1", "d_s2", "d_d1", "d_d2"], args.out)
    if args.grid_csv:
        rows = [[g.n, g.p, g.r, g.theta, g.x, g.y, g.op, *g.distances] for g in res.grid]
        _write_csv(rows, ["n", "p", "r", "theta", "x", "y", "op", "d_s1", "d_s2", "d_d1", "d_d2"],
                   args.grid_csv)
    return EXIT_OK


# ---- validation suites ----

@dataclass(frozen=True)
class Gate:
    name: str
    measured: float
    bound: float

    @property
    def passed(self):
        return self.measured <= self.bound


def _rel(a, b):
    if a == b:
        return 0.0
    return abs(a - b) / abs(b) if b else abs(a - b)


def _rayleigh_cfg(mode, db, eps, n_relays=2):
    prof = RelayProfile(si=SelfInterferenceModel(1.0, 1.0, 1.0, 0.2),
                        sic=ImperfectSic(eps, eps, 1.0, 1.0))
    return SystemConfig.homogeneous(prof, n_relays, power=PowerAllocation.from_primary(0.75, 0.75),
                                    duplex=mode, rate_d1=0.1, rate_d2=1.0, pt=db_to_linear(db))


def oracle_gates(cfg, label, bound=1e-5):
    """Closed forms against quadrature for every distinct relay of ``cfg``."""
    gates = []
    seen = set()
    for i, prof in enumerate(cfg.relays):
        if prof in seen:
            continue
        seen.add(prof)
        inp = relay_inputs(cfg, i)
        for name, closed, quad in (("kr", prob_relay_in_kr, quad_prob_relay_in_kr),
                                   ("phi1", phi1, quad_phi1), ("phi3", phi3, quad_phi3)):
            gates.append(Gate(f"{label} relay{i + 1} {name}", _rel(closed(inp), quad(inp)), bound))
    return gates


def suite_rayleigh():
    gates = []
    for mode in Duplex:
        for db in (10, 30, 50):
            for eps in (0.0, 0.05):
                cfg = _rayleigh_cfg(mode, db, eps)
                label = f"rayleigh {mode.value} {db}dB eps={eps}"
                gates += oracle_gates(cfg, label)
                gates.append(Gate(f"{label} tsrs op",
                                  _rel(op_tsrs_exact(cfg).value, op_tsrs_quadrature(cfg).value), 1e-5))
    return gates


def suite_degenerate():
    gates = []
    for mode in Duplex:
        # 2^(k R) - 1 >= a3 / a4 = 3 for R = 2.5 in both modes
        cfg = _rayleigh_cfg(mode, 30, 0.0, n_relays=3).replace(rate_d1=2.5)
        label = f"degenerate {mode.value}"
        mc = estimate_both(cfg, McSettings(trials=2000, seed=1))
        for s in Strategy:
            for meth, val in (("exact", _EXACT[s](cfg).value), ("asymptotic", _ASYM[s](cfg).value),
                              ("quadrature", _QUAD[s](cfg).value), ("mc", mc[s].value)):
                gates.append(Gate(f"{label} {s.value} {meth} op=1", abs(1.0 - val), 0.0))
    return gates


def random_reduction_config(rng, n_relays=2):
    """Random HD, perfect-SIC config with integer source shapes."""
    def link(integer):
        m = rng.choice([1, 2, 3]) if integer else rng.uniform(0.5, 3.0)
        return LinkFading(m, rng.uniform(0.2, 3.0))

    prof = RelayProfile(link(True), link(True), link(False), link(False),
                        si=SelfInterferenceModel(rng.uniform(0.5, 3.0), 1.0, 1.0, 0.2))
    return SystemConfig.homogeneous(
        prof, n_relays, power=PowerAllocation.from_primary(rng.uniform(0.55, 0.9), rng.uniform(0.55, 0.9)),
        duplex=Duplex.HD, rate_d1=rng.uniform(0.05, 0.5), rate_d2=rng.uniform(0.2, 2.0),
        pt=db_to_linear(rng.choice([10, 30, 50])))


def suite_reduction(count=20, seed=7):
    rng = random.Random(seed)
    gates = []
    for k in range(count):
        inp = relay_inputs(random_reduction_config(rng), 0)
        for name, general, reduced in (("relay user1", relay_user1_success, relay_user1_success_reduced),
                                       ("phi1", phi1, phi1_psic), ("phi3", phi3, phi3_reduced)):
            gates.append(Gate(f"reduction #{k} {name}", _rel(general(inp), reduced(inp)), 1e-10))
    return gates


SUITES = {"rayleigh": suite_rayleigh, "degenerate": suite_degenerate, "reduction": suite_reduction}


def cmd_validate(args):
    if args.config:
        exp = load_config(args.config)
        cfg = exp.system.at_snr_db(_setting(args, exp.run, "snr_db", 0.0))
        gates = oracle_gates(cfg, "config")
    else:
        names = list(SUITES) if args.suite == "all" else [args.suite]
        gates = [g for n in names for g in SUITES[n]()]
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", encoding="utf-8", newline="")
    try:
        for g in gates:
            out.write(f"{'PASS' if g.passed else 'FAIL'}  {g.name}  measured={g.measured:.3e}  "
                      f"bound={g.bound:.1e}\n")
        failed = sum(not g.passed for g in gates)
        out.write(f"{len(gates) - failed}/{len(gates)} gates passed\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_GATE if failed else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="noma-relay",
                                description="Outage probability of NOMA relay selection schemes.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="key=value config file")
        sp.add_argument("--out", help="output path (default stdout)")

    def mc_flags(sp):
        sp.add_argument("--trials", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)

    c = sub.add_parser("curve", help="OP versus P_T/sigma^2 as CSV")
    common(c)
    c.add_argument("--methods", help="comma list of exact,asymptotic,mc,quadrature")
    c.add_argument("--db-start", dest="db_start", type=float)
    c.add_argument("--db-stop", dest="db_stop", type=float)
    c.add_argument("--db-step", dest="db_step", type=float)
    c.add_argument("--strategy", choices=[s.value for s in Strategy])
    mc_flags(c)
    c.set_defaults(func=cmd_curve)

    m = sub.add_parser("mc", help="single-point Monte Carlo estimate")
    common(m)
    m.add_argument("--snr-db", dest="snr_db", type=float)
    m.add_argument("--strategy", choices=[s.value for s in Strategy])
    mc_flags(m)
    m.set_defaults(func=cmd_mc)

    pl = sub.add_parser("placement", help="grid search for the best relay position")
    common(pl)
    pl.add_argument("--snr-db", dest="snr_db", type=float)
    pl.add_argument("--grid-csv", dest="grid_csv", help="write every grid point here")
    pl.add_argument("--origin-only", dest="origin_only", action="store_true")
    pl.add_argument("--workers", type=int)
    pl.set_defaults(func=cmd_placement)

    v = sub.add_parser("validate", help="closed forms against quadrature and MC")
    common(v, config_required=False)
    v.add_argument("--suite", choices=["all", *SUITES], default="all")
    v.add_argument("--snr-db", dest="snr_db", type=float)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ArithmeticError, CapacityError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
