"""Convection nonlinearities h and their integral profiles.

Families implemented (all odd extensions, so h(-s) = -h(s)):

    power:    h(s) = s |s|^theta
    power_mu: h(s) = s |s|^(p - 2 + theta)   (lower-order-term scenarios)
    log:      h(s) = s log(e + |s|)
    linear:   h(s) = s        (non-conforming: growth is not superlinear)
    zero:     h(s) = 0        (non-conforming, for testing)
    custom:   caller-supplied (h, h') pair

The profiles

    R(k) = int_0^k ds / (|h(s)| + 1)^{p'}
    S(t) = int_0^t ds / (|h(s)| + 1)^{p'/p}

drive the L-infinity machinery: boundedness of solutions hinges on
whether |S(t)| -> infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .quadrature import integrate

_CONFORMING = ("power", "power_mu", "log", "custom")


class GrowthIndeterminateError(RuntimeError):
    """Numeric tail test on a custom h could not decide bounded vs divergent."""


@dataclass(frozen=True)
class HSpec:
    """A convection nonlinearity h with evaluator and derivative evaluator.

    For family "power_mu" the exponent record p of the target problem is
    part of the nonlinearity itself (h(s) = s|s|^(p-2+theta)).
    """

    family: str
    theta: float = 0.0
    p: float = 2.0
    h_fn: Optional[Callable[[float], float]] = field(default=None, repr=False)
    dh_fn: Optional[Callable[[float], float]] = field(default=None, repr=False)
    # T_n o h for the truncated approximating problems; None = untruncated
    clip_level: Optional[float] = None

    def __post_init__(self):
        if self.family not in ("power", "power_mu", "log", "linear", "zero", "custom"):
            raise ValueError(f"unknown h family {self.family!r}")
        if self.family in ("power", "power_mu") and self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.family == "power_mu" and self.p < 2:
            raise ValueError("power_mu requires p >= 2")
        if self.family == "custom" and (self.h_fn is None or self.dh_fn is None):
            raise ValueError("custom family needs h_fn and dh_fn")

    @property
    def conforming(self) -> bool:
        """Whether the family has genuinely superlinear growth."""
        return self.family in _CONFORMING

    def exponent(self) -> float:
        """Power-law exponent q in h(s) = s|s|^q, where applicable."""
        if self.family == "power":
            return self.theta
        if self.family == "power_mu":
            return self.p - 2.0 + self.theta
        raise ValueError(f"family {self.family!r} is not a power law")


def eval_h(h: HSpec, s):
    """Evaluate h(s) (clipped to the truncation level, if any).
    Accepts scalars or numpy arrays."""
    import numpy as np

    raw = _eval_h_raw(h, s)
    if h.clip_level is None:
        return raw
    if hasattr(raw, "shape"):
        return np.clip(raw, -h.clip_level, h.clip_level)
    return max(-h.clip_level, min(raw, h.clip_level))


def _eval_h_raw(h: HSpec, s):
    import numpy as np

    if h.family == "zero":
        return 0.0 * s if hasattr(s, "shape") else 0.0
    if h.family == "linear":
        return s * 1.0 if hasattr(s, "shape") else float(s)
    if h.family in ("power", "power_mu"):
        q = h.exponent()
        return s * np.abs(s) ** q
    if h.family == "log":
        return s * np.log(math.e + np.abs(s))
    if hasattr(s, "shape"):
        return np.vectorize(h.h_fn)(s)
    return h.h_fn(s)


def eval_dh(h: HSpec, s):
    """Evaluate h'(s) (zero where the truncation is active).
    Accepts scalars or numpy arrays."""
    import numpy as np

    raw = _eval_dh_raw(h, s)
    if h.clip_level is None:
        return raw
    hv = _eval_h_raw(h, s)
    if hasattr(raw, "shape") or hasattr(hv, "shape"):
        return np.where(np.abs(hv) < h.clip_level, raw, 0.0)
    return raw if abs(hv) < h.clip_level else 0.0


def _eval_dh_raw(h: HSpec, s):
    import numpy as np

    if h.family == "zero":
        return 0.0 * s if hasattr(s, "shape") else 0.0
    if h.family == "linear":
        return np.ones_like(s, dtype=float) if hasattr(s, "shape") else 1.0
    if h.family in ("power", "power_mu"):
        q = h.exponent()
        return (1.0 + q) * np.abs(s) ** q
    if h.family == "log":
        a = np.abs(s)
        return np.log(math.e + a) + a / (math.e + a)
    if hasattr(s, "shape"):
        return np.vectorize(h.dh_fn)(s)
    return h.dh_fn(s)


def _check_p(p: float) -> float:
    if p < 2:
        raise ValueError("profiles are defined for p >= 2")
    return p / (p - 1.0)  # conjugate exponent p'


def compute_R(h: HSpec, p: float, k: float, abs_tol: float = 1e-10) -> float:
    """R(k) = int_0^k ds / (|h(s)| + 1)^{p'}."""
    pc = _check_p(p)
    if k < 0:
        raise ValueError("R is defined for k >= 0")
    return integrate(lambda s: (abs(eval_h(h, s)) + 1.0) ** (-pc), 0.0, k, abs_tol)


def compute_S(h: HSpec, p: float, t: float, abs_tol: float = 1e-10) -> float:
    """S(t) = int_0^t ds / (|h(s)| + 1)^{p'/p}; odd in t by construction."""
    pc = _check_p(p)
    e = pc / p
    val = integrate(lambda s: (abs(eval_h(h, s)) + 1.0) ** (-e), 0.0, abs(t), abs_tol)
    return math.copysign(val, t) if t != 0 else 0.0


@dataclass(frozen=True)
class GrowthClass:
    """Whether |S(t)| stays bounded (horizontal asymptote) or diverges."""

    kind: str  # "bounded" | "divergent"
    method: str  # "closed-form" | "tail-test"
    asymptote: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("bounded", "divergent"):
            raise ValueError(f"bad growth kind {self.kind!r}")
        if self.kind == "bounded" and not (
            self.asymptote is not None and self.asymptote > 0
        ):
            raise ValueError("bounded classification needs a positive asymptote")


def _power_tail_exponent(q: float, p: float) -> float:
    # S integrand ~ s^{-q p'/p} = s^{-q/(p-1)} for h(s) = s|s|^q (q = 1+theta).
    return q / (p - 1.0)


def classify_growth(h: HSpec, p: float) -> GrowthClass:
    """Decide whether S has a horizontal asymptote.

    Known families use the closed-form tail rule; custom h falls back to a
    numeric test on the increments S(2^k T) - S(2^{k-1} T).
    """
    _check_p(p)
    if h.family in ("zero", "linear", "log"):
        # |h(s)| + 1 grows at most like s log s; the S integrand decays
        # no faster than s^{-1/(p-1)} * (log s)^{-p'/p}, never integrable.
        return GrowthClass(kind="divergent", method="closed-form")
    if h.family in ("power", "power_mu"):
        tail = _power_tail_exponent(1.0 + h.exponent(), p)
        if tail > 1.0:  # equivalent to theta > p - 2 for the power family
            return GrowthClass(
                kind="bounded", method="closed-form", asymptote=_asymptote(h, p)
            )
        return GrowthClass(kind="divergent", method="closed-form")
    return _tail_test(h, p)


def _asymptote(h: HSpec, p: float, t_big: float = 1e8) -> float:
    return compute_S(h, p, t_big)


def _tail_test(h: HSpec, p: float, t0: float = 1e3, doublings: int = 10) -> GrowthClass:
    """Geometric-decay heuristic: if the increments over doubling windows
    shrink by less than a factor 0.5, the tail behaves like an integrable
    power law and S is bounded."""
    prev = compute_S(h, p, t0)
    increments = []
    t = t0
    for _ in range(doublings):
        t *= 2.0
        cur = compute_S(h, p, t)
        increments.append(cur - prev)
        prev = cur
    ratios = [
        b / a for a, b in zip(increments, increments[1:]) if a > 0
    ]
    if not ratios:
        return GrowthClass(kind="bounded", method="tail-test", asymptote=prev)
    if all(r < 0.5 for r in ratios):
        # geometric tail: bound the remainder by the last increment's series
        last = increments[-1]
        r = max(ratios[-1], 1e-12)
        return GrowthClass(
            kind="bounded", method="tail-test", asymptote=prev + last * r / (1.0 - r)
        )
    if all(r >= 0.5 for r in ratios):
        return GrowthClass(kind="divergent", method="tail-test")
    raise GrowthIndeterminateError(
        f"tail increments of S neither uniformly shrink nor persist: ratios {ratios}"
    )
