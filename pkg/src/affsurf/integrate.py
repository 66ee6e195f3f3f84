"""Adaptive ODE integration with escape diagnostics.

A Dormand-Prince 5(4) embedded Runge-Kutta pair drives every flow and
geodesic in this package (relative tolerance 1e-10, absolute 1e-12, cubic
Hermite dense output).  On top of plain propagation the stepper watches for
the ways a trajectory can fail to reach its horizon:

* Blowup(t_lo, t_hi): the state norm ran through an escalating threshold
  ladder whose crossing intervals shrink geometrically, the signature of a
  finite-time singularity.  The bracket encloses the blowup time t* and is
  far narrower than the 1e-3 contract.
* Unbounded(t): the state grew beyond the numeric cap (or the domain value
  underflowed to zero) without a finite-time signature: exponential and
  doubly exponential flows do this while existing for all time.  The run is
  cut off at t and no escape is claimed.
* LeftDomain(t): a monitored domain function crossed its threshold (the
  half-plane edge x1 = 0).  The crossing time is located by bisection on
  the dense output.
* StepCollapse(t): the adaptive step fell under 1e-13 without ladder
  evidence, which happens when the right-hand side itself becomes singular
  while the state stays moderate (log-type escapes).

Distinguishing Blowup/LeftDomain/StepCollapse from Unbounded matters:
complete flows routinely overflow doubles long before the horizon, and only
the ladder convergence test separates them from finite-time escapes.

State dimensions here are 2 (flows) and 4 (geodesics), so the stepper core
works on plain float tuples; numpy enters only for storage and dense output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .expr import DomainError

RTOL = 1e-10
ATOL = 1e-12
H_MIN = 1e-13
STATE_CAP = 1e15
LADDER = (1e7, 1e9, 1e11, 1e13, 1e15)
CONVERGENCE_RATIO = 0.5
# Domain values at or below this are float-underflow artifacts: the
# trajectory approached the edge asymptotically and ran out of dynamic
# range, which is evidence of completeness, not of finite-time exit.
UNDERFLOW_G = 1e-280


@dataclass(frozen=True)
class ReachedHorizon:
    t: float

    def to_json(self):
        return {"status": "reached-horizon", "t": self.t}


@dataclass(frozen=True)
class Blowup:
    t_lo: float
    t_hi: float

    @property
    def width(self) -> float:
        return abs(self.t_hi - self.t_lo)

    def to_json(self):
        return {"status": "blowup", "t_star_bracket": [self.t_lo, self.t_hi]}


@dataclass(frozen=True)
class LeftDomain:
    t: float

    def to_json(self):
        return {"status": "left-domain", "t_star": self.t}


@dataclass(frozen=True)
class StepCollapse:
    t: float
    rhs_grew: bool

    def to_json(self):
        return {"status": "step-collapse", "t_star": self.t, "rhs_grew": self.rhs_grew}


@dataclass(frozen=True)
class Unbounded:
    t: float

    def to_json(self):
        return {"status": "unbounded-growth", "t_reached": self.t}


Status = Union[ReachedHorizon, Blowup, LeftDomain, StepCollapse, Unbounded]

#: statuses that witness failure of the flow to extend to the horizon
ESCAPE_STATUSES = (Blowup, LeftDomain, StepCollapse)


@dataclass
class Trajectory:
    """Time-stamped samples of a flow or geodesic plus a termination status.

    times are strictly monotone in the integration direction; states hold
    the sampled points (dimension 2 for flows, 4 for geodesics).  The nodal
    derivatives are kept so samples can be interpolated by cubic Hermite.
    """

    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    status: Status
    direction: str  # "forward" | "backward"

    @property
    def escaped(self) -> bool:
        return isinstance(self.status, ESCAPE_STATUSES)

    def eval(self, t: float) -> np.ndarray:
        """Dense output by cubic Hermite interpolation between nodes."""
        ts = self.times
        lo, hi = (ts[0], ts[-1]) if ts[0] <= ts[-1] else (ts[-1], ts[0])
        if not (lo - 1e-12 <= t <= hi + 1e-12):
            raise ValueError(f"t={t} outside trajectory range [{lo}, {hi}]")
        if ts[0] <= ts[-1]:
            i = int(np.searchsorted(ts, t, side="right")) - 1
        else:
            i = int(np.searchsorted(-ts, -t, side="right")) - 1
        i = max(0, min(i, len(ts) - 2))
        return _hermite(ts[i], self.states[i], self.derivs[i],
                        ts[i + 1], self.states[i + 1], self.derivs[i + 1], t)


def _hermite(t0, y0, f0, t1, y1, f1, t):
    dt = t1 - t0
    if dt == 0:
        return np.array(y0)
    s = (t - t0) / dt
    s2, s3 = s * s, s * s * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * y0 + h10 * dt * f0 + h01 * y1 + h11 * dt * f1


# Dormand-Prince 5(4) tableau (propagates the 5th order solution).
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

_RHS_ERRORS = (DomainError, OverflowError, ZeroDivisionError, ValueError)


def integrate(rhs: Callable,
              y0,
              t_end: float,
              *,
              rtol: float = RTOL,
              atol: float = ATOL,
              h_min: float = H_MIN,
              cap: float = STATE_CAP,
              domain_fn: Callable | None = None,
              domain_threshold: float = 0.0,
              max_steps: int = 400_000) -> Trajectory:
    """Integrate the autonomous system y' = rhs(y) from t = 0 to t_end
    (t_end may be negative).  rhs maps a float tuple to a float sequence.
    domain_fn, when given, must stay above domain_threshold along the
    trajectory (the half-plane monitor passes x1)."""
    y = tuple(float(v) for v in y0)
    dim = len(y)
    rng = range(dim)
    direction = "forward" if t_end >= 0 else "backward"
    sgn = 1.0 if t_end >= 0 else -1.0
    span = abs(t_end)
    if domain_fn is not None and domain_fn(y) <= domain_threshold:
        raise DomainError("initial point outside the domain")
    try:
        f = tuple(float(v) for v in rhs(y))
    except _RHS_ERRORS as err:
        raise DomainError(f"right-hand side undefined at the initial point: {err}") from err

    ts, ys, fs = [0.0], [y], [f]
    ladder_times: list[float] = []
    ladder_idx = 0
    while ladder_idx < len(LADDER) and _norm_inf(y) >= LADDER[ladder_idx]:
        ladder_times.append(0.0)
        ladder_idx += 1

    h = _initial_step(y, f, rtol, atol)
    if span > 0:
        h = min(h, span)
    t = 0.0
    rhs_norm_hist = [_norm_inf(f)]

    def finish(status: Status) -> Trajectory:
        return Trajectory(np.array(ts), np.array(ys), np.array(fs), status, direction)

    def stalled_status():
        blow = _classify_ladder(ladder_times, t, sgn)
        if blow is not None:
            return blow
        if domain_fn is not None:
            g = domain_fn(y)
            if g <= UNDERFLOW_G:
                return Unbounded(sgn * t)
            if g <= max(1e-8, domain_threshold * 4):
                return LeftDomain(sgn * t)
        return StepCollapse(sgn * t, _rhs_grew(rhs_norm_hist))

    for _ in range(max_steps):
        if t >= span:
            return finish(ReachedHorizon(sgn * span))
        h = min(h, span - t)

        step = _try_step(rhs, sgn, y, f, h, rng)
        if step is None:  # right-hand side failed inside the step
            h *= 0.25
            if h < h_min:
                return finish(stalled_status())
            continue
        y_new, f_new, err = step
        enorm = 0.0
        for c in rng:
            nc = y_new[c]
            if not math.isfinite(nc):
                enorm = math.inf
                break
            sc = atol + rtol * max(abs(y[c]), abs(nc))
            enorm += (err[c] / sc) ** 2
        if math.isfinite(enorm):
            enorm = math.sqrt(enorm / dim)
        if enorm > 1.0:
            factor = 0.25 if not math.isfinite(enorm) else max(0.2, 0.9 * enorm ** -0.2)
            h *= factor
            if h < h_min:
                return finish(stalled_status())
            continue

        t_new = t + h
        # domain crossing within the accepted step
        if domain_fn is not None:
            if domain_fn(y_new) <= domain_threshold:
                if domain_fn(y) <= UNDERFLOW_G:
                    return finish(Unbounded(sgn * t))
                seg = _segment(t, y, f, t_new, y_new, f_new, sgn)
                t_cross = _bisect_crossing(
                    lambda tt: domain_fn(seg(tt)) - domain_threshold, t, t_new)
                y_cross = tuple(float(v) for v in seg(t_cross))
                ts.append(sgn * t_cross)
                ys.append(y_cross)
                fs.append(_safe_rhs(rhs, y_cross, f_new))
                return finish(LeftDomain(sgn * t_cross))

        # threshold ladder crossings (for blowup/unbounded classification)
        n_new = _norm_inf(y_new)
        while ladder_idx < len(LADDER) and n_new >= LADDER[ladder_idx]:
            rung = LADDER[ladder_idx]
            seg = _segment(t, y, f, t_new, y_new, f_new, sgn)
            t_cross = _bisect_crossing(lambda tt: _norm_inf(seg(tt)) - rung, t, t_new)
            ladder_times.append(t_cross)
            ladder_idx += 1

        t, y, f = t_new, y_new, f_new
        ts.append(sgn * t)
        ys.append(y)
        fs.append(f)
        rhs_norm_hist.append(_norm_inf(f))

        if n_new >= cap:
            blow = _classify_ladder(ladder_times, t, sgn)
            return finish(blow if blow is not None else Unbounded(sgn * t))

        h *= min(5.0, max(0.2, 0.9 * (enorm + 1e-300) ** -0.2))
    raise RuntimeError("integrator exceeded max_steps; raise the limit or loosen tolerances")


def _try_step(rhs, sgn, y, f, h, rng):
    """One Dormand-Prince step of signed size h on float tuples; returns
    None when the right-hand side is undefined at a stage point."""
    sh = sgn * h
    k = [f]
    try:
        for row in _A[1:]:
            yi = tuple(y[c] + sh * sum(aij * k[s][c] for s, aij in enumerate(row)) for c in rng)
            k.append(tuple(float(v) for v in rhs(yi)))
        y_new = tuple(y[c] + sh * sum(bi * k[s][c] for s, bi in enumerate(_B)) for c in rng)
        f_new = tuple(float(v) for v in rhs(y_new))
        k.append(f_new)
        err = tuple(h * sum(ei * k[s][c] for s, ei in enumerate(_E)) for c in rng)
    except _RHS_ERRORS:
        return None
    return y_new, f_new, err


def _segment(t0, y0, f0, t1, y1, f1, sgn):
    """Cubic Hermite interpolant over one internal step."""
    a0, a1 = np.array(y0), np.array(y1)
    d0, d1 = sgn * np.array(f0), sgn * np.array(f1)

    def at(tt):
        return _hermite(t0, a0, d0, t1, a1, d1, tt)
    return at


def _safe_rhs(rhs, y, fallback):
    try:
        return tuple(float(v) for v in rhs(y))
    except _RHS_ERRORS:
        return tuple(fallback)


def _initial_step(y, f, rtol, atol):
    d0 = max(abs(v) / (atol + rtol * abs(v)) for v in y)
    d1 = max(abs(fv) / (atol + rtol * abs(yv)) for fv, yv in zip(f, y))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return max(min(h, 0.1), 1e-10)


def _norm_inf(v) -> float:
    return max(abs(c) for c in v)


def _rhs_grew(hist) -> bool:
    if len(hist) < 4:
        return True
    ref = float(np.median(hist[: max(4, len(hist) // 2)]))
    return hist[-1] > 1e3 * max(ref, 1e-12)


def _bisect_crossing(g, t_lo, t_hi, iters: int = 80) -> float:
    """Bisection for the first sign change of g on [t_lo, t_hi]; assumes
    g(t_lo) > 0 >= g(t_hi)."""
    lo, hi = t_lo, t_hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def _classify_ladder(ladder_times, t_last, sgn):
    """Blowup when at least three ladder rungs were crossed with gaps that
    shrink geometrically.  The bracket is reported in real time, ordered
    ascending, padded by an allowance for the integration drift that
    accumulates while resolving the singularity (observed around 1e-11 at
    these tolerances; 2e-4 is generous and keeps the bracket far inside
    the 1e-3 contract)."""
    if len(ladder_times) < 3:
        return None
    gaps = np.diff(ladder_times)
    gaps = gaps[gaps > 0]
    if len(gaps) < 2:
        return None
    ratios = gaps[1:] / gaps[:-1]
    r = float(np.median(ratios))
    if r >= CONVERGENCE_RATIO:
        return None
    tail = float(gaps[-1]) * r / (1.0 - r)
    drift = 2e-4
    lo = t_last - drift
    hi = t_last + 3.0 * tail + drift
    a, b = sgn * lo, sgn * hi
    return Blowup(t_lo=min(a, b), t_hi=max(a, b))
