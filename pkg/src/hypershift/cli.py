"""Command-line front end.

Configuration files are flat ``key = value`` lines with ``#`` comments. Keys
before the first ``[section]`` apply to every command; a section named after
a command (``[check]``, ``[pressure]``, ``[decay]``, ``[report]``) overrides
them for that command. Key names are case-insensitive and ignore
underscores, so ``orbit_length`` and ``orbitLength`` are the same key.

Exit codes: 0 pass, 1 quantitative failure, 2 usage or configuration error.
"""
import argparse
import configparser
import math
import os
import sys
import warnings
from pathlib import Path

from . import conditions, io, srb, thermo
from .errors import ConfigError, HypershiftError, InvalidArgument
from .map_model import make_dyadic_family, make_perturbed_family

ROOT = "run"
COMMANDS = ("check", "pressure", "decay", "report")


def _int(v):
    f = float(v)
    if not math.isfinite(f) or f != int(f):
        raise ValueError(f"not an integer: {v}")
    return int(f)


def _bool(v):
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v}")


def _ints(v):
    return tuple(_int(s) for s in str(v).replace(",", " ").split())


# normalised key -> (canonical name, parser, default)
FIELDS = {
    "family": ("family", str, "dyadic"),
    "truncn": ("truncN", _int, 20),
    "eps": ("eps", float, 0.1),
    "decay": ("decay", str, "geometric"),
    "shear": ("shear", float, 0.0),
    "alpha": ("alpha", float, 0.5),
    "k0": ("K0", float, None),
    "c0": ("C0", float, 1.0),
    "grid": ("grid", _int, 64),
    "conesamples": ("coneSamples", _int, 10_000),
    "orbitlength": ("orbitLength", _int, 10 ** 6),
    "seed": ("seed", _int, 0),
    "nmax": ("nMax", _int, 8),
    "anchors": ("anchors", _ints, (1,)),
    "tol": ("tol", float, 1e-3),
    "potentialshift": ("potentialShift", float, 0.0),
    "potentialindexshift": ("potentialIndexShift", float, 0.0),
    "bins": ("bins", _int, 2 ** 12),
    "lags": ("lags", _ints, tuple(range(11))),
    "observable": ("observable", str, "x"),
    "etatol": ("etaTol", float, 0.05),
    "maxrank": ("maxRank", _int, 4),
    "gibbsband": ("gibbsBand", float, 2.0),
    "ruellesamples": ("ruelleSamples", _int, 1000),
    "holdern": ("holderN", _int, 8),
}


def _norm(key):
    return key.replace("_", "").replace("-", "").lower()


def load_config(path, command):
    """Parsed and validated settings for ``command`` (canonical key names)."""
    cfg = {name: default for name, _, default in FIELDS.values()}
    if path is None:
        return cfg
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",),
                                   interpolation=None, default_section="\0none")
    cp.optionxform = str
    try:
        cp.read_string(f"[{ROOT}]\n" + text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from e
    for sec in cp.sections():
        if sec not in (ROOT,) + COMMANDS:
            raise ConfigError(f"unknown section [{sec}]")
    for sec in (ROOT, command):
        if not cp.has_section(sec):
            continue
        for key, raw in cp.items(sec):
            k = _norm(key)
            if k not in FIELDS:
                raise ConfigError(f"unknown key {key!r}")
            name, parse, _ = FIELDS[k]
            try:
                cfg[name] = parse(raw.strip())
            except ValueError as e:
                raise ConfigError(f"bad value for {key}: {raw!r}") from e
    return cfg


def make_family(cfg):
    kw = dict(alpha=cfg["alpha"], C0=cfg["C0"])
    if cfg["K0"] is not None:
        kw["K0"] = cfg["K0"]
    fam = cfg["family"].lower()
    if fam == "dyadic":
        return make_dyadic_family(cfg["truncN"], **kw)
    if fam == "perturbed":
        return make_perturbed_family(cfg["truncN"], cfg["eps"], cfg["decay"], cfg["shear"], **kw)
    raise ConfigError(f"unknown family {cfg['family']!r}")


def _observable(name):
    name = name.lower()
    if name == "x":
        return srb.Observable.x()
    if name == "y":
        return srb.Observable.y()
    if name.startswith("const"):
        return srb.Observable.constant(1.0)
    raise ConfigError(f"unknown observable {name!r}")


def _say(msg):
    print(msg, file=sys.stderr)


def cmd_check(cfg, out):
    fam = make_family(cfg)
    reps = conditions.check_all(fam, cfg["grid"], cfg["coneSamples"], cfg["seed"])
    path = io.write_csv(out / "conditions.csv", io.CONDITIONS_HEADER, io.conditions_rows(reps))
    failed = [r for r in reps if not r.passed]
    for r in reps:
        _say(f"{r.condition:5s} {r.status:26s} margin {r.worst_margin:.6g}"
             + (f" branch {r.branch}" if r.branch is not None else ""))
    return (1 if failed else 0), [path], {}


def cmd_pressure(cfg, out):
    if cfg["nMax"] < 3:
        raise ConfigError("nMax must be >= 3")
    fam = make_family(cfg)
    ctx = thermo.make_context(fam, potential_shift=cfg["potentialShift"],
                              potential_index_shift=cfg["potentialIndexShift"])
    ests = [thermo.pressure(ctx, a, cfg["nMax"]) for a in cfg["anchors"]]
    rows = [r for e in ests for r in io.pressure_rows(e)]
    p1 = io.write_csv(out / "pressure.csv", io.PRESSURE_HEADER, rows)
    p2 = io.write_csv(out / "pressure_summary.csv", io.PRESSURE_SUMMARY_HEADER,
                      [io.pressure_summary_row(e) for e in ests])
    bad = False
    for e in ests:
        flag = " (P = +inf: tail weights diverge)" if e.divergent else ""
        _say(f"anchor {e.anchor}: P = {e.P:.10g}{flag}")
        bad |= not (e.finite and abs(e.P) <= cfg["tol"])
    return (1 if bad else 0), [p1, p2], {"P": {e.anchor: e.P for e in ests}}


def cmd_decay(cfg, out):
    fam = make_family(cfg)
    obs = _observable(cfg["observable"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        orb = srb.correlation(fam, obs, obs, cfg["orbitLength"], cfg["lags"], cfg["seed"])
    for w in caught:
        _say(f"warning: {w.message}")
    op = srb.ulam_decay(fam, cfg["bins"], cfg["lags"], obs, seed=cfg["seed"])
    p1 = io.write_csv(out / "decay_orbit.csv", io.DECAY_HEADER, io.decay_rows(orb))
    p2 = io.write_csv(out / "decay_operator.csv", io.DECAY_HEADER, io.decay_rows(op))
    _say(f"orbit:    status {orb.status}, eta {orb.fitted_eta:.6g} {orb.note}")
    _say(f"operator: status {op.status}, eta {op.fitted_eta:.6g} (correlation fit {op.correlation_eta:.6g})")
    code = 0
    if orb.status == "noise" or op.status == "noise":
        _say("noise floor exceeds the correlation signal")
        code = 1
    elif orb.status == "ok" and op.status == "ok" and abs(orb.fitted_eta - op.fitted_eta) > cfg["etaTol"]:
        _say(f"orbit and operator eta differ by more than {cfg['etaTol']}")
        code = 1
    return code, [p1, p2], {"eta": {"orbit": orb.fitted_eta, "operator": op.fitted_eta}}


def cmd_report(cfg, out):
    fam = make_family(cfg)
    ctx = thermo.make_context(fam, potential_shift=cfg["potentialShift"],
                              potential_index_shift=cfg["potentialIndexShift"])
    rows = []
    flags = []
    hyp = thermo.verify_hypotheses(ctx, tol=cfg["tol"], holder_n=cfg["holderN"],
                                   ruelle_samples=cfg["ruelleSamples"], seed=cfg["seed"])
    for it in hyp.items:
        rows.append(("hypotheses", it.key, it.passed, it.value, it.detail))
    flags += list(hyp.flags)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        orbit = srb.simulate(fam, None, cfg["orbitLength"], cfg["seed"])
    flags += [str(w.message) for w in caught]
    lyap = srb.lyapunov(fam, orbit)
    res = srb.entropy_check(fam, orbit)
    rows.append(("entropy", "lyapunov", math.isfinite(lyap), lyap, "(1/n) sum log DuF"))
    rows.append(("entropy", "residual", res < 1e-10, res, "|birkhoff(log DuF) - lyapunov|"))
    g = srb.gibbs_vs_srb(fam, cfg["maxRank"], orbit=orbit)
    c = cfg["gibbsBand"]
    ok_g = 1.0 / c <= g.min_ratio and g.max_ratio <= c
    rows.append(("gibbs", "ratio_min", ok_g, g.min_ratio, f"band [1/{c:g}, {c:g}]"))
    rows.append(("gibbs", "ratio_max", ok_g, g.max_ratio, f"band [1/{c:g}, {c:g}]"))
    for f in flags:
        rows.append(("flags", "warning", True, None, f))
        _say(f"warning: {f}")
    p1 = io.write_csv(out / "report.csv", io.REPORT_HEADER, rows)
    p2 = io.write_csv(out / "gibbs.csv", io.GIBBS_HEADER, io.gibbs_rows(g))
    for r in rows:
        if r[0] != "flags":
            _say(f"{r[0]:10s} {r[1]:10s} {'pass' if r[2] else 'FAIL'}  {io.fmt(r[3])}")
    failed = any(not r[2] for r in rows)
    return (1 if failed else 0), [p1, p2], {"flags": flags}


HANDLERS = {"check": cmd_check, "pressure": cmd_pressure, "decay": cmd_decay, "report": cmd_report}


def _set_threads():
    v = os.environ.get("HYPERSHIFT_THREADS")
    if not v:
        return
    import numba
    try:
        n = int(v)
    except ValueError:
        raise ConfigError(f"HYPERSHIFT_THREADS must be an integer, got {v!r}") from None
    if n < 1:
        raise ConfigError("HYPERSHIFT_THREADS must be >= 1")
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def build_parser():
    p = argparse.ArgumentParser(prog="hypershift", description="Analyses of piecewise hyperbolic maps.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--out", default="hypershift-out", help="output directory")
    p.add_argument("--seed", type=int, help="overrides the configured seed")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    try:
        _set_threads()
        cfg = load_config(args.config, args.command)
        if args.seed is not None:
            cfg["seed"] = args.seed
        out = Path(args.out)
        code, outputs, extra = HANDLERS[args.command](cfg, out)
    except (ConfigError, InvalidArgument) as e:
        _say(f"error: {e}")
        return 2
    except HypershiftError as e:
        _say(f"error: {e}")
        return 1
    io.write_manifest(out, args.command, cfg, cfg["seed"], outputs, code, extra)
    return code


if __name__ == "__main__":
    sys.exit(main())
