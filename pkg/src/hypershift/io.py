"""CSV tables and run manifests."""
import csv
import json
import math
import platform
import sys
from pathlib import Path

FLOAT_FMT = ".17g"


def fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, complex):
        return f"{format(v.real, FLOAT_FMT)}{format(v.imag, '+' + FLOAT_FMT)}j"
    if isinstance(v, float) or type(v).__name__.startswith("float"):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, FLOAT_FMT)
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def conditions_rows(reports):
    for r in reports:
        wx = r.witness.x if r.witness is not None else None
        wy = r.witness.y if r.witness is not None else None
        yield (r.condition, r.status, r.worst_margin, wx, wy, r.branch, r.first_failing_branch,
               r.value, r.samples_per_branch, r.note)


CONDITIONS_HEADER = ("condition", "status", "worst_margin", "witness_x", "witness_y", "branch",
                     "first_failing_branch", "value", "samples", "note")

PRESSURE_HEADER = ("anchor", "n", "Z_n", "log_Z_n_over_n")
PRESSURE_SUMMARY_HEADER = ("anchor", "P", "lambda", "band_lo", "band_hi", "divergent", "tail_mass",
                           "alphabet", "correction")

DECAY_HEADER = ("lag", "correlation", "fit_c", "fit_eta", "method")
GIBBS_HEADER = ("cylinder", "frequency", "length", "ratio")
REPORT_HEADER = ("section", "item", "passed", "value", "detail")


def pressure_rows(est):
    for n, z, rate in est.values:
        yield (est.anchor, n, z, rate)


def pressure_summary_row(est):
    return (est.anchor, est.P, est.lam, est.band[0], est.band[1], est.divergent, est.tail_mass,
            est.alphabet, est.correction)


def decay_rows(fit):
    for lag, c in zip(fit.lags, fit.correlations):
        yield (lag, c, fit.fitted_c, fit.fitted_eta, fit.method)


def gibbs_rows(report):
    for r in report.rows:
        yield ("-".join(map(str, r.word)), r.frequency, r.length, r.ratio)


def versions():
    import numba
    import numpy
    import scipy
    from . import __version__
    return {"hypershift": __version__, "python": platform.python_version(), "numpy": numpy.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def write_manifest(out_dir, command, config, seed, outputs, status, extra=None):
    m = {"command": command, "config": config, "seed": seed, "versions": versions(),
         "argv": sys.argv, "outputs": [str(Path(p).name) for p in outputs], "exit_code": status}
    if extra:
        m.update(extra)
    path = Path(out_dir) / "manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(m, indent=2, sort_keys=True, default=str) + "\n")
    return path
