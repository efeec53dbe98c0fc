"""Gromov products, shadows and pointwise hyperbolic-geometry checks.

Everything here works over any ``ModelSpace``.  On the tree all arithmetic is
exact (distances are integers, products half-integers, which floats represent
exactly).  On the plane comparisons use ``EPS_GEOM`` and resolve ties against
the claim being checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import UsageError
from .model_spaces import EPS_GEOM, FreeWord, GroupElement, ModelSpace, PlanePoint, SpacePoint, random_word

# a point sampler draws one point from the supplied generator
PointSampler = Callable[[np.random.Generator], SpacePoint]


def _clears(lhs: float, rhs: float, space: ModelSpace) -> bool:
    """lhs >= rhs, exactly on the tree; by more than EPS_GEOM on the plane."""
    if space.exact:
        return lhs >= rhs
    return lhs - rhs > EPS_GEOM


def gromov_product(p: SpacePoint, q: SpacePoint, base: SpacePoint, space: ModelSpace) -> float:
    """(p . q)_base = (d(base, p) + d(base, q) - d(p, q)) / 2."""
    d_bp = space.distance(base, p)
    d_bq = space.distance(base, q)
    d_pq = space.distance(p, q)
    return (d_bp + d_bq - d_pq) / 2


def _product_from(d_xy: float, d_xz: float, d_yz: float) -> float:
    return (d_xy + d_xz - d_yz) / 2


def four_point_defect(a: SpacePoint, b: SpacePoint, c: SpacePoint, d: SpacePoint,
                      space: ModelSpace) -> float:
    """min{(a.b)_d, (b.c)_d} - (a.c)_d; any valid delta is at least this."""
    ab = gromov_product(a, b, d, space)
    bc = gromov_product(b, c, d, space)
    ac = gromov_product(a, c, d, space)
    return min(ab, bc) - ac


def _max_defect(pts: Sequence[SpacePoint], space: ModelSpace) -> float:
    a, b, c, d = pts
    dd = {}
    names = "abcd"
    for i in range(4):
        for j in range(i + 1, 4):
            dd[names[i] + names[j]] = space.distance(pts[i], pts[j])
    # products based at d
    ab = _product_from(dd["ad"], dd["bd"], dd["ab"])
    bc = _product_from(dd["bd"], dd["cd"], dd["bc"])
    ac = _product_from(dd["ad"], dd["cd"], dd["ac"])
    return max(min(ab, bc) - ac, min(ab, ac) - bc, min(ac, bc) - ab)


@dataclass(frozen=True)
class DeltaEstimate:
    delta_hat: float
    quadruples_sampled: int
    safety_factor: float

    @property
    def delta_used(self) -> float:
        return self.delta_hat * self.safety_factor


def estimate_delta(space: ModelSpace, point_sampler: PointSampler, num_quadruples: int,
                   safety_factor: float = 1.0, seed: int = 0) -> DeltaEstimate:
    """Largest four-point defect over random quadruples (a lower bound on the true delta)."""
    if num_quadruples < 1:
        raise UsageError("num_quadruples must be >= 1")
    if safety_factor < 1:
        raise UsageError("safety_factor must be >= 1")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(num_quadruples):
        pts = [point_sampler(rng) for _ in range(4)]
        best = max(best, _max_defect(pts, space))
    return DeltaEstimate(float(best), num_quadruples, float(safety_factor))


def tree_ball_sampler(rank: int, max_len: int) -> PointSampler:
    """Reduced words with length uniform in 0..max_len."""
    def sample(rng: np.random.Generator) -> FreeWord:
        return random_word(rng, rank, int(rng.integers(0, max_len + 1)))
    return sample


def plane_point_at(r: float, theta: float) -> PlanePoint:
    """Point at hyperbolic distance r from i, in direction theta (rotation about i)."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    y0 = math.exp(r)
    # rotation [[c, s], [-s, c]] applied to i*y0
    den2 = s * s * y0 * y0 + c * c
    x = (c * s * (1 - y0 * y0)) / den2
    y = y0 / den2
    return PlanePoint(x, y)


def plane_ball_sampler(radius: float) -> PointSampler:
    """Points within distance ``radius`` of i: uniform radius and angle."""
    def sample(rng: np.random.Generator) -> PlanePoint:
        return plane_point_at(float(rng.uniform(0, radius)), float(rng.uniform(0, 2 * math.pi)))
    return sample


def default_sampler(space: ModelSpace, radius: float = 20.0) -> PointSampler:
    if space.kind == "tree":
        return tree_ball_sampler(space.rank, int(radius))
    return plane_ball_sampler(radius)


@dataclass(frozen=True)
class ChainCheck:
    ok: bool
    first_violation: Optional[int] = None

    def __bool__(self) -> bool:
        return self.ok


def check_chain_inequality(points: Sequence[SpacePoint], delta: float, space: ModelSpace) -> ChainCheck:
    """Check min{d(p[i-1], p[i]), d(p[i], p[i+1])} >= 2 (p[i-1] . p[i+1])_{p[i]} + 18 delta + 1.

    When every interior index passes, d(p[0], p[-1]) >= len(points) - 1.
    """
    return _chain(points, delta, space, space.distance)


def check_orbit_chain(elements: Sequence[GroupElement], delta: float, space: ModelSpace) -> ChainCheck:
    """The chain inequality for p[i] = elements[i] x0, with every distance taken as
    a displacement of elements[i]^-1 elements[j].  Exact for integer matrices, where
    the orbit points themselves are too close to the boundary for floats."""
    return _chain(elements, delta, space, space.orbit_distance)


def _chain(points, delta, space, dist) -> ChainCheck:
    if len(points) < 2:
        raise UsageError("a chain needs at least two points")
    if delta < 0:
        raise UsageError("delta must be >= 0")
    steps = [dist(points[i], points[i + 1]) for i in range(len(points) - 1)]
    for i in range(1, len(points) - 1):
        lhs = min(steps[i - 1], steps[i])
        prod = _product_from(steps[i - 1], steps[i], dist(points[i - 1], points[i + 1]))
        if not _clears(lhs, 2 * prod + 18 * delta + 1, space):
            return ChainCheck(False, i)
    return ChainCheck(True)


@dataclass(frozen=True)
class FellowTravel:
    hypotheses_hold: bool
    conclusion_holds: bool


def fellow_travel_check(a: SpacePoint, b: SpacePoint, c: SpacePoint, d: SpacePoint,
                        base: SpacePoint, delta: float, A: float, space: ModelSpace) -> FellowTravel:
    """If (a.b) >= A, (c.d) >= A and (a.c) <= A - 3 delta, then |(b.d) - (a.c)| <= 2 delta.

    On the plane the hypotheses must hold by a margin of EPS_GEOM and the
    conclusion may miss by EPS_GEOM, so rounding never manufactures a violation.
    """
    ab = gromov_product(a, b, base, space)
    cd = gromov_product(c, d, base, space)
    ac = gromov_product(a, c, base, space)
    bd = gromov_product(b, d, base, space)
    if space.exact:
        hyp = ab >= A and cd >= A and ac <= A - 3 * delta
        concl = bd - 2 * delta <= ac <= bd + 2 * delta
    else:
        hyp = ab - A > EPS_GEOM and cd - A > EPS_GEOM and (A - 3 * delta) - ac > EPS_GEOM
        concl = abs(bd - ac) <= 2 * delta + EPS_GEOM
    return FellowTravel(hyp, concl)


@dataclass(frozen=True)
class ShadowSpec:
    """S_base(center, R) = {y : (center . y)_base >= d(base, center) - R}; empty when R < 0."""

    base: SpacePoint
    center: SpacePoint
    radius_offset: float

    def distance_parameter(self, space: ModelSpace) -> float:
        return space.distance(self.base, self.center) - self.radius_offset


def in_shadow(y: SpacePoint, shadow: ShadowSpec, space: ModelSpace) -> bool:
    if shadow.radius_offset < 0:
        return False
    prod = gromov_product(shadow.center, y, shadow.base, space)
    param = shadow.distance_parameter(space)
    if space.exact:
        return prod >= param
    return prod >= param - EPS_GEOM


def shadow_complement_cover(shadow: ShadowSpec, space: ModelSpace, C: float = 0.0) -> ShadowSpec:
    """Shadow S_x(x0, d(x0, x) - R + C) containing the complement of S_x0(x, R).

    With these definitions (x0.y)_x + (x.y)_x0 = d(x0, x), so C = 0 already works.
    """
    d = space.distance(shadow.base, shadow.center)
    return ShadowSpec(shadow.center, shadow.base, d - shadow.radius_offset + C)
