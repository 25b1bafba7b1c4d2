"""Adaptive explicit Runge-Kutta stepping for the Schroedinger equation.

Solves ``i dpsi/dt = H(t) psi`` (hbar = 1) for one state or a batch of states
stored as the columns of a ``(dim, batch)`` array. Two embedded pairs are
available: Dormand-Prince 5(4) and Dormand-Prince 8(5,3) (``dop853``, the
default). Step control uses a per-column RMS error norm, so every column meets
the tolerance on its own.

The integrator rotates out a global phase: it integrates
``i dphi/dt = (H - e) phi`` where ``e`` is the column's energy expectation at
the start of each step, and multiplies the accumulated phase back in at the
end. Populated low-energy components then oscillate slowly and the error
control can take much longer steps; without it the phase error of the
populated components alone breaks the 1e-6 norm budget at large T.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop853

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class _Tableau:
    order: int
    c: np.ndarray
    a: list
    b: np.ndarray
    e: np.ndarray  # error weights over stages + FSAL stage
    e3: np.ndarray | None = None  # dop853 secondary estimate


def _dopri5() -> _Tableau:
    # Dormand & Prince (1980), RK5(4)7M; stage 7 is the FSAL evaluation
    a = [
        [1 / 5],
        [3 / 40, 9 / 40],
        [44 / 45, -56 / 15, 32 / 9],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    ]
    b = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
    b_low = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
    e = np.append(b, 0.0) - b_low
    c = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
    return _Tableau(4, c, a, b, e)


def _dop853_tableau() -> _Tableau:
    s = _dop853.N_STAGES
    a = [list(_dop853.A[i, :i]) for i in range(1, s)]
    return _Tableau(7, _dop853.C[:s], a, _dop853.B, _dop853.E5, _dop853.E3)


TABLEAUS = {"dopri5": _dopri5(), "dop853": _dop853_tableau()}


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    max_norm_drift: float = 0.0


def _lincomb(weights, ks) -> np.ndarray:
    out = None
    for w, k in zip(weights, ks):
        if w != 0.0:
            out = w * k if out is None else out + w * k
    return out


def _error_norm(tab: _Tableau, ks, h: float, scale: np.ndarray) -> float:
    dim = scale.shape[0]
    err = _lincomb(tab.e, ks) / scale
    err2 = np.sum(np.abs(err) ** 2, axis=0)
    if tab.e3 is None:
        return float(np.max(abs(h) * np.sqrt(err2 / dim)))
    err3 = _lincomb(tab.e3, ks) / scale
    err32 = np.sum(np.abs(err3) ** 2, axis=0)
    denom = err2 + 0.01 * err32
    ratio = np.divide(err2, np.sqrt(denom * dim), out=np.zeros_like(err2), where=denom > 0)
    return float(np.max(abs(h) * ratio))


def evolve_schrodinger(
    apply_h: Callable[[float, np.ndarray], np.ndarray],
    psi0: np.ndarray,
    t0: float,
    t1: float,
    tol: float = 1e-9,
    max_step: float = np.inf,
    norm_fail: float = 1e-6,
    stats: StepStats | None = None,
    method: str = "dop853",
) -> np.ndarray:
    """Integrate from ``t0`` to ``t1``; returns psi(t1) with the same shape as ``psi0``.

    ``apply_h(t, psi)`` must return ``H(t) @ psi`` for a ``(dim, batch)`` array.
    ``tol`` is used as both the absolute and the relative local error tolerance.
    Raises :class:`IntegrationError` when any column's norm drifts from its
    initial value by more than ``norm_fail``.
    """
    tab = TABLEAUS[method]
    stats = stats if stats is not None else StepStats()
    squeeze = psi0.ndim == 1
    y = np.array(psi0, dtype=np.complex128).reshape(psi0.shape[0], -1)
    norm0 = np.linalg.norm(y, axis=0)
    if t1 <= t0:
        return y[:, 0] if squeeze else y

    def energy(y, hy):
        return np.real(np.sum(y.conj() * hy, axis=0)) / np.sum(np.abs(y) ** 2, axis=0)

    hy = apply_h(t0, y)
    shift = energy(y, hy)
    phase = np.zeros_like(shift)
    f0 = -1j * (hy - shift * y)

    scale = tol + tol * np.abs(y)
    d0 = np.max(np.sqrt(np.mean(np.abs(y / scale) ** 2, axis=0)))
    d1 = np.max(np.sqrt(np.mean(np.abs(f0 / scale) ** 2, axis=0)))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, max_step, t1 - t0)
    exponent = -1.0 / (tab.order + 1)

    t = t0
    while t < t1:
        h = min(h, t1 - t)
        last = t + h >= t1
        ks = [f0]
        for row, c in zip(tab.a, tab.c[1:]):
            yi = y + h * _lincomb(row, ks)
            ks.append(-1j * (apply_h(t + c * h, yi) - shift * yi))
        y_new = y + h * _lincomb(tab.b, ks)
        t_new = t1 if last else t + h
        hy = apply_h(t_new, y_new)
        ks.append(-1j * (hy - shift * y_new))
        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = _error_norm(tab, ks, h, scale)

        if err_norm <= 1.0:
            stats.accepted += 1
            phase += shift * h
            t, y = t_new, y_new
            drift = float(np.max(np.abs(np.linalg.norm(y, axis=0) - norm0)))
            stats.max_norm_drift = max(stats.max_norm_drift, drift)
            if drift > norm_fail:
                raise IntegrationError(f"norm drift {drift:.3e} exceeds {norm_fail:.1e} at t={t:.6g}")
            shift = energy(y, hy)
            f0 = -1j * (hy - shift * y)
            factor = _MAX_FACTOR if err_norm == 0 else min(_MAX_FACTOR, _SAFETY * err_norm**exponent)
        else:
            stats.rejected += 1
            factor = max(_MIN_FACTOR, _SAFETY * err_norm**exponent)
            if h * factor < 1e-14 * max(1.0, abs(t)):
                raise IntegrationError(f"step size underflow at t={t:.6g}")
        h = min(h * factor, max_step)

    y = y * np.exp(-1j * phase)
    return y[:, 0] if squeeze else y
