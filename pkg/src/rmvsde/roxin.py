"""Finite-grid convexity probe and strict selection.

At a state point, a relaxed weight vector induces the barycenter of the
joint drift/running-cost image set S = {(b(a), f(a)) : a in the action set}.
When that barycenter is (near) attainable by a single action the relaxed
mixture is locally replaceable by a strict choice; the selection below finds
the best such action by exhaustive search, which is exact on a finite set.

Convexity of S itself is only sampled: every pairwise midpoint of the image
is tested for proximity to the image. A failing pair is a witness that no
strict selection can reproduce the mixture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controls import ActionSet
from .cost import CostSet
from .dynamics import CoefficientSet
from .errors import DomainViolation, ShapeError

__all__ = ["SelectionResult", "barycenter", "select_strict", "check_roxin_sampled"]


@dataclass(frozen=True)
class SelectionResult:
    action: float
    residual: float
    representable: bool


def _image(coeffs: CoefficientSet, costs: CostSet, t, x, m1, m2, pts: np.ndarray):
    bs = np.array([float(np.asarray(coeffs.b(t, x, m1, m2, float(a)))) for a in pts])
    fs = np.array([float(np.asarray(costs.f(t, x, m1, m2, float(a)))) for a in pts])
    return bs, fs


def barycenter(
    coeffs: CoefficientSet,
    costs: CostSet,
    action_set: ActionSet,
    q_weights,
    t, x, m1, m2,
):
    """Exact finite mixture of (b, f) over the action set."""
    w = np.asarray(q_weights, dtype=np.float64)
    if w.shape != (action_set.size,):
        raise ShapeError("need one weight per action")
    bs, fs = _image(coeffs, costs, t, x, m1, m2, action_set.points)
    return float(np.dot(w, bs)), float(np.dot(w, fs))


def select_strict(
    coeffs: CoefficientSet,
    costs: CostSet,
    action_set: ActionSet,
    q_weights,
    t, x, m1, m2,
    tolerance: float,
) -> SelectionResult:
    """Single action closest to the mixture barycenter in the (b, f) plane.

    Ties break toward the smaller action value. `representable` records
    whether the residual distance is within the tolerance.
    """
    if tolerance <= 0.0:
        raise DomainViolation("tolerance must be > 0")
    b_bar, f_bar = barycenter(coeffs, costs, action_set, q_weights, t, x, m1, m2)
    bs, fs = _image(coeffs, costs, t, x, m1, m2, action_set.points)
    dist = np.hypot(bs - b_bar, fs - f_bar)
    best = int(np.argmin(dist))  # first minimum = smallest action
    residual = float(dist[best])
    return SelectionResult(
        action=float(action_set.points[best]),
        residual=residual,
        representable=residual <= tolerance,
    )


def check_roxin_sampled(
    coeffs: CoefficientSet,
    costs: CostSet,
    action_set: ActionSet,
    probes,
    tolerance: float,
):
    """Midpoint convexity probe of the (b, f) image over sampled states.

    For each probe (t, x, m1, m2) every pairwise midpoint of the image must
    lie within `tolerance` of the image. Returns (True, None) or
    (False, witness) where the witness names the first failing probe and
    action pair (pairs scanned in ascending lexicographic order).
    """
    probes = list(probes)
    if not probes:
        raise DomainViolation("need at least one probe point")
    pts = action_set.points
    for probe in probes:
        t, x, m1, m2 = (float(v) for v in probe)
        bs, fs = _image(coeffs, costs, t, x, m1, m2, pts)
        for i in range(pts.size):
            for j in range(i + 1, pts.size):
                mb = 0.5 * (bs[i] + bs[j])
                mf = 0.5 * (fs[i] + fs[j])
                gap = float(np.min(np.hypot(bs - mb, fs - mf)))
                if gap > tolerance:
                    return False, {
                        "probe": (t, x, m1, m2),
                        "pair": (float(pts[i]), float(pts[j])),
                        "midpoint_distance": gap,
                    }
    return True, None
