"""Generalized commuting costs, mode choice, sparse sampling and interpolation.

Commuting is monetized per period as opportunity cost of time (valued at the
hourly wage) plus the monetary cost of the mode: fuel burned over the driven
distance for cars, a flat fare per trip for transit.  Households take the
cheaper mode.  Documented conventions, used when deriving parameters from a
city income: a period has ``DEFAULT_WORK_HOURS`` paid hours and commuting makes
two trips per working day.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator
from scipy.spatial import QhullError, cKDTree

from .errors import DomainError

__all__ = [
    "TransportParams",
    "ModalCost",
    "SampledField",
    "InterpolatedField",
    "car_cost",
    "transit_cost",
    "generalized_cost",
    "generalized_cost_arrays",
    "star_sample",
    "interpolate_field",
    "rush_hour_select",
]

DEFAULT_WORK_HOURS = 2000.0     # paid hours per period
DEFAULT_WORKING_DAYS = 250.0    # commuting days per period


@dataclass(frozen=True)
class TransportParams:
    """Monetary constants of the commuting-cost engine.

    ``speed_car``/``speed_transit`` (km/h) and ``route_factor`` (network km per
    euclidean km) are only needed when travel times are synthesized rather
    than measured.
    """

    wage: float                 # currency per hour
    fuel_price: float           # currency per liter
    fuel_efficiency: float      # liter per km
    transit_fare: float         # currency per trip
    trips_per_period: float
    speed_car: float | None = None
    speed_transit: float | None = None
    route_factor: float = 1.0

    def __post_init__(self):
        for name in ("wage", "fuel_price", "fuel_efficiency", "trips_per_period"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive, got {v}")
        if not (np.isfinite(self.transit_fare) and self.transit_fare >= 0):
            raise DomainError(f"transit_fare must be non-negative, got {self.transit_fare}")
        for name in ("speed_car", "speed_transit"):
            v = getattr(self, name)
            if v is not None and not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive when given, got {v}")
        if not (np.isfinite(self.route_factor) and self.route_factor >= 1.0):
            raise DomainError(f"route_factor must be >= 1, got {self.route_factor}")

    @classmethod
    def from_income(cls, income: float, *, fuel_price: float,
                    fuel_efficiency: float, transit_fare: float,
                    speed_car: float | None = None,
                    speed_transit: float | None = None,
                    route_factor: float = 1.0,
                    work_hours: float = DEFAULT_WORK_HOURS,
                    working_days: float = DEFAULT_WORKING_DAYS) -> "TransportParams":
        """Wage = income / paid hours; trips = 2 per working day."""
        return cls(wage=income / work_hours, fuel_price=fuel_price,
                   fuel_efficiency=fuel_efficiency, transit_fare=transit_fare,
                   trips_per_period=2.0 * working_days, speed_car=speed_car,
                   speed_transit=speed_transit, route_factor=route_factor)

    def replace(self, **changes) -> "TransportParams":
        from dataclasses import replace as _replace
        return _replace(self, **changes)


def car_cost(dist_km, time_h, p: TransportParams):
    """Per-period car cost: time at the wage plus fuel over the distance."""
    if np.any(np.asarray(dist_km) < 0) or np.any(np.asarray(time_h) < 0):
        raise DomainError("distance and time must be non-negative")
    return p.trips_per_period * (time_h * p.wage
                                 + dist_km * p.fuel_efficiency * p.fuel_price)


def transit_cost(time_h, p: TransportParams):
    """Per-period transit cost: time at the wage plus a flat fare per trip."""
    if np.any(np.asarray(time_h) < 0):
        raise DomainError("time must be non-negative")
    return p.trips_per_period * (time_h * p.wage + p.transit_fare)


def generalized_cost(p: TransportParams, *, car: tuple[float, float] | None,
                     transit_time_h: float | None):
    """Cheapest-mode commuting cost for one location.

    ``car`` is ``(dist_km, time_h)``.  Returns ``(cost, mode)`` with ties
    broken to transit, or ``None`` when neither mode has data (the caller
    excludes such cells).
    """
    costs = []
    if transit_time_h is not None and np.isfinite(transit_time_h):
        costs.append((transit_cost(transit_time_h, p), "transit"))
    if car is not None and np.all(np.isfinite(car)):
        costs.append((car_cost(car[0], car[1], p), "car"))
    if not costs:
        return None
    # min() returns the first minimum and transit was appended first, so a
    # tie keeps transit
    return min(costs, key=lambda pair: pair[0])


def generalized_cost_arrays(p: TransportParams, dist_car_km, time_car_h,
                            time_transit_h):
    """Vectorized cheapest-mode cost over cell arrays.

    NaN marks a missing mode; cells missing both modes get NaN cost and mode
    code ''.  Returns ``(cost, mode)`` arrays.
    """
    dist_car_km = np.asarray(dist_car_km, dtype=float)
    time_car_h = np.asarray(time_car_h, dtype=float)
    time_transit_h = np.asarray(time_transit_h, dtype=float)
    with np.errstate(invalid="ignore"):
        c_car = p.trips_per_period * (time_car_h * p.wage
                                      + dist_car_km * p.fuel_efficiency * p.fuel_price)
        c_transit = p.trips_per_period * (time_transit_h * p.wage + p.transit_fare)
    cost = np.where(np.isnan(c_car), c_transit,
                    np.where(np.isnan(c_transit), c_car,
                             np.minimum(c_car, c_transit)))
    mode = np.where(np.isnan(cost), "",
                    np.where(np.isnan(c_transit) | (c_car < c_transit), "car", "transit"))
    return cost, mode


@dataclass(frozen=True)
class ModalCost:
    """Distance-to-cost map used by the equilibrium solver under mode choice.

    Both modes are affine in euclidean distance: the car has no fixed cost,
    transit pays the fare regardless of distance.  The envelope
    ``min(car, transit)`` is increasing, piecewise affine and invertible.
    """

    car_per_km: float
    transit_per_km: float
    transit_fixed: float

    @classmethod
    def from_params(cls, p: TransportParams) -> "ModalCost":
        if p.speed_car is None or p.speed_transit is None:
            raise DomainError("ModalCost needs speed_car and speed_transit")
        per_km_car = p.trips_per_period * p.route_factor * (
            p.wage / p.speed_car + p.fuel_efficiency * p.fuel_price)
        per_km_transit = p.trips_per_period * p.route_factor * p.wage / p.speed_transit
        return cls(car_per_km=per_km_car, transit_per_km=per_km_transit,
                   transit_fixed=p.trips_per_period * p.transit_fare)

    def cost(self, dist_km):
        return np.minimum(self.car_per_km * dist_km,
                          self.transit_fixed + self.transit_per_km * dist_km)

    def inverse(self, cost):
        """Distance at which the cheapest-mode cost reaches ``cost``.

        The envelope is a minimum of increasing affine maps, so its inverse is
        the maximum of the branch inverses (a branch inverse undershoots
        whenever the other mode is cheaper there).
        """
        d_car = cost / self.car_per_km
        d_transit = (cost - self.transit_fixed) / self.transit_per_km
        return np.maximum(d_car, d_transit)

    def breakpoints(self) -> tuple[float, ...]:
        """Mode-switch distances (kinks of the cost envelope)."""
        if self.transit_per_km >= self.car_per_km:
            return ()  # car stays cheaper everywhere
        d = self.transit_fixed / (self.car_per_km - self.transit_per_km)
        return (d,) if d > 0 else ()


# ---------------------------------------------------------------------------
# Sparse sampling and interpolation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampledField:
    """Values measured at a subset of grid cells."""

    cell_indices: np.ndarray   # positions into the grid arrays
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray         # hours
    coverage_fraction: float

    def __post_init__(self):
        if np.any(~np.isfinite(self.values)) or np.any(self.values < 0):
            raise DomainError("sampled values must be finite and non-negative")


@dataclass(frozen=True)
class InterpolatedField:
    """Per-cell values plus a flag for the degraded (nearest-only) mode."""

    values: np.ndarray
    degraded: bool


def star_sample(x, y, values, branches: int = 8, fraction: float = 0.10,
                center: tuple[float, float] = (0.0, 0.0)) -> SampledField:
    """Sample a per-cell field on a star of radial branches.

    Branches leave the center at equal angles starting from 0 degrees; sample
    points sit at equal radial spacing along each branch and snap to the
    nearest cell.  After deduplication the sample holds exactly
    ``ceil(fraction * n_cells)`` cells: if snapping saturates the branches the
    remainder is filled farthest-point-first so coverage keeps improving as
    ``fraction`` grows.
    """
    if not 0.0 < fraction <= 1.0:
        raise DomainError(f"fraction must lie in (0, 1], got {fraction}")
    if branches < 1:
        raise DomainError("at least one branch required")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    values = np.asarray(values, dtype=float)
    n = x.size
    if n == 0:
        raise DomainError("empty grid")
    target = min(math.ceil(fraction * n), n)

    pts = np.column_stack([x, y])
    if target == n:
        idx = np.arange(n)
        return SampledField(idx, x[idx], y[idx], values[idx], 1.0)

    tree = cKDTree(pts)
    cx, cy = center
    radius = float(np.hypot(x - cx, y - cy).max())

    chosen: list[int] = []
    seen: set[int] = set()

    def take(i: int) -> None:
        if i not in seen:
            seen.add(i)
            chosen.append(i)

    take(int(tree.query([cx, cy])[1]))

    # distribute the remaining quota as evenly as possible over the branches
    remaining = target - 1
    per_branch = [remaining // branches + (1 if b < remaining % branches else 0)
                  for b in range(branches)]
    # candidates ordered by radius so a truncated prefix stays evenly spaced
    candidates: list[tuple[float, int, float, float]] = []
    for b, k in enumerate(per_branch):
        if k == 0:
            continue
        ang = 2.0 * math.pi * b / branches
        step = radius / k
        for i in range(1, k + 1):
            r = step * i
            candidates.append((r, b, cx + r * math.cos(ang), cy + r * math.sin(ang)))
    candidates.sort()
    for _, _, px, py in candidates:
        take(int(tree.query([px, py])[1]))

    # snapping collisions: densify the branches (still equally spaced)
    densify = 2
    while len(chosen) < target and densify <= 64:
        extra: list[tuple[float, int, float, float]] = []
        for b, k in enumerate(per_branch):
            kk = max(k, 1) * densify
            ang = 2.0 * math.pi * b / branches
            step = radius / kk
            for i in range(1, kk + 1):
                r = step * i
                extra.append((r, b, cx + r * math.cos(ang), cy + r * math.sin(ang)))
        extra.sort()
        for _, _, px, py in extra:
            if len(chosen) >= target:
                break
            take(int(tree.query([px, py])[1]))
        densify *= 2

    # branches saturated: farthest-point fill over the whole grid
    if len(chosen) < target:
        dmin = np.full(n, np.inf)
        for i in chosen:
            dmin = np.minimum(dmin, np.hypot(x - x[i], y - y[i]))
        dmin[np.fromiter(seen, dtype=int)] = -np.inf
        while len(chosen) < target:
            nxt = int(np.argmax(dmin))
            take(nxt)
            dmin = np.minimum(dmin, np.hypot(x - x[nxt], y - y[nxt]))
            dmin[nxt] = -np.inf

    idx = np.array(chosen[:target], dtype=int)
    return SampledField(idx, x[idx], y[idx], values[idx],
                        coverage_fraction=idx.size / n)


def interpolate_field(samples: SampledField, x, y) -> InterpolatedField:
    """Interpolate a sampled field to every cell of a grid.

    Piecewise linear over a triangulation of the samples: exact at sample
    points and reproduces affine functions of (x, y) inside the sample hull.
    Outside the hull the nearest sample's value is used.  With fewer than
    three non-collinear samples the whole field degrades to nearest-sample
    and the result is flagged.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pts = np.column_stack([samples.x, samples.y])
    queries = np.column_stack([x, y])

    nearest = NearestNDInterpolator(pts, samples.values)
    if pts.shape[0] >= 3:
        try:
            linear = LinearNDInterpolator(pts, samples.values)
            out = linear(queries)
            hole = ~np.isfinite(out)
            if hole.any():
                out[hole] = nearest(queries[hole])
            return InterpolatedField(values=out, degraded=False)
        except QhullError:
            pass  # all samples collinear
    return InterpolatedField(values=nearest(queries), degraded=True)


def rush_hour_select(slices) -> object:
    """Label of the slice with the largest mean delay; ties keep the earliest."""
    slices = list(slices)
    if not slices:
        raise DomainError("no time slices given")
    best_label, best_delay = slices[0]
    for label, delay in slices[1:]:
        if delay > best_delay:
            best_label, best_delay = label, delay
    return best_label
