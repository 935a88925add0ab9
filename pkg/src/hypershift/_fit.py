"""Log-linear fits of geometric decay ``v_k ~ c * theta**k``."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GeometricFit:
    c: float
    theta: float
    residual: float  # rms of log residuals
    used: tuple
    exact_zero: bool = False


def geometric_fit(k, v, floor=0.0):
    """Least-squares fit of ``log v = log c + k log theta``.

    Entries with ``v <= floor`` are dropped. If every entry is exactly zero
    the fit is degenerate and reported with ``exact_zero=True``.
    """
    k = np.asarray(k, dtype=float)
    v = np.abs(np.asarray(v, dtype=float))
    if np.all(v == 0.0):
        return GeometricFit(0.0, 0.0, 0.0, tuple(k.astype(int)), exact_zero=True)
    keep = v > floor
    if keep.sum() < 2:
        return GeometricFit(float("nan"), float("nan"), float("inf"), tuple(k[keep].astype(int)))
    kk, lv = k[keep], np.log(v[keep])
    slope, icpt = np.polyfit(kk, lv, 1)
    resid = lv - (icpt + slope * kk)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return GeometricFit(float(np.exp(icpt)), float(np.exp(slope)), rms, tuple(kk.astype(int)))
