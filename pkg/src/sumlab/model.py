"""Closed forms of the monocentric standard urban model and the closed-city equilibrium.

Households with Cobb-Douglas preferences over a composite good (share ``alpha``)
and floor space (share ``beta``) commute to a single center at a cost ``T`` that
rises with distance; competitive developers build floor space from land (share
``a_land``) and capital (share ``b_capital``).  Spatial equilibrium pins down a
bid-rent curve, a density curve, and an urban fringe where the residential bid
rent meets the farmland rent.  The closed-city equilibrium adjusts the common
utility level until the integrated population matches the exogenous target.

Units are a convention, not a constraint: every equation is scale covariant.
The canonical set used throughout is currency per period for incomes, rents and
transport costs, km for distances, m^2 for floor space, and persons for
populations.  The period itself (annual vs monthly) is the caller's convention.

All functions accept floats or numpy arrays and hold no state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, NoEquilibriumError, QuadratureError

__all__ = [
    "CityParams",
    "Equilibrium",
    "ComparativeStaticsReport",
    "LinearCost",
    "composite_consumption",
    "dwelling_size",
    "bid_rent",
    "central_rent_from_utility",
    "optimal_capital_intensity",
    "housing_supply_per_land",
    "density_from_rent",
    "density",
    "fringe_distance",
    "max_utility",
    "total_population",
    "solve_equilibrium",
    "comparative_statics",
]

#: Relative tolerance on the population-closure residual of the solver.
SOLVER_TOL = 1e-8

#: Relative tolerance requested from the adaptive quadrature.
QUAD_TOL = 1e-10

_SHARE_TOL = 1e-9


def _check_finite(**named) -> None:
    for name, value in named.items():
        if not np.all(np.isfinite(value)):
            raise DomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class CityParams:
    """Structural parameters of one city.

    ``alpha + beta`` and ``a_land + b_capital`` must both equal one; use
    :meth:`make` to build a valid instance from the two free shares.
    ``land_share`` is the constant urbanizable fraction of land per unit area
    (the circular-city assumption uses 1).
    """

    alpha: float
    beta: float
    a_land: float
    b_capital: float
    amenity_tfp: float      # housing productivity A
    capital_price: float    # rho, rental price of capital
    income: float           # Y, per period
    t_per_km: float         # linear transport cost per km per period
    farm_rent: float        # Rbar, currency per m^2 of land per period
    population_target: float  # N*, persons
    land_share: float = 1.0

    def __post_init__(self):
        _check_finite(
            alpha=self.alpha, beta=self.beta, a_land=self.a_land,
            b_capital=self.b_capital, amenity_tfp=self.amenity_tfp,
            capital_price=self.capital_price, income=self.income,
            t_per_km=self.t_per_km, farm_rent=self.farm_rent,
            population_target=self.population_target, land_share=self.land_share,
        )
        for name in ("alpha", "beta", "a_land", "b_capital"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise DomainError(f"{name} must lie strictly in (0, 1), got {v}")
        if abs(self.alpha + self.beta - 1.0) > _SHARE_TOL:
            raise DomainError(f"alpha + beta must equal 1, got {self.alpha + self.beta}")
        if abs(self.a_land + self.b_capital - 1.0) > _SHARE_TOL:
            raise DomainError(
                f"a_land + b_capital must equal 1, got {self.a_land + self.b_capital}"
            )
        for name in ("amenity_tfp", "capital_price", "income", "t_per_km",
                     "population_target"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if self.farm_rent < 0.0:
            raise DomainError(f"farm_rent must be non-negative, got {self.farm_rent}")
        if not 0.0 < self.land_share <= 1.0:
            raise DomainError(f"land_share must lie in (0, 1], got {self.land_share}")

    @classmethod
    def make(cls, *, beta: float, a_land: float, amenity_tfp: float = 1.0,
             capital_price: float = 1.0, income: float, t_per_km: float,
             farm_rent: float, population_target: float,
             land_share: float = 1.0) -> "CityParams":
        """Build parameters from the two free shares; the complements are exact."""
        return cls(
            alpha=1.0 - beta, beta=beta, a_land=a_land, b_capital=1.0 - a_land,
            amenity_tfp=amenity_tfp, capital_price=capital_price, income=income,
            t_per_km=t_per_km, farm_rent=farm_rent,
            population_target=population_target, land_share=land_share,
        )

    def replace(self, **changes) -> "CityParams":
        from dataclasses import replace as _replace
        return _replace(self, **changes)


@dataclass(frozen=True)
class Equilibrium:
    """Solved closed-city equilibrium: utility, fringe and central rent."""

    utility: float
    fringe_km: float
    central_rent: float
    closure_residual: float  # relative population error at the solution


@dataclass(frozen=True)
class ComparativeStaticsReport:
    """Sign of the fringe response to a one-parameter perturbation."""

    parameter: str
    baseline_fringe_km: float
    perturbed_fringe_km: float
    sign: int           # sign of (perturbed - baseline) with a dead band
    expected_sign: int  # +1 for population/income, -1 for transport cost/farm rent

    @property
    def degenerate(self) -> bool:
        """True when the perturbation fell inside the solver dead band."""
        return self.sign == 0


class LinearCost:
    """Transport cost growing linearly with distance, ``T(d) = t * d``."""

    def __init__(self, t_per_km: float):
        if not (np.isfinite(t_per_km) and t_per_km > 0):
            raise DomainError(f"t_per_km must be positive, got {t_per_km}")
        self.t_per_km = float(t_per_km)

    def cost(self, dist_km):
        return self.t_per_km * dist_km

    def inverse(self, cost):
        return cost / self.t_per_km

    def breakpoints(self) -> tuple[float, ...]:
        """Distances where the marginal cost changes (none for a linear cost)."""
        return ()


# ---------------------------------------------------------------------------
# Household closed forms
# ---------------------------------------------------------------------------

def composite_consumption(income, transport_cost, alpha):
    """Composite-good consumption ``alpha * (Y - T)`` of the household optimum."""
    _check_finite(income=income, transport_cost=transport_cost, alpha=alpha)
    if np.any(transport_cost < 0) or np.any(transport_cost > income):
        raise DomainError("transport cost must satisfy 0 <= T <= Y")
    return alpha * (income - transport_cost)


def dwelling_size(income, transport_cost, rent, beta):
    """Floor space demanded at a location, ``beta * (Y - T) / R``."""
    _check_finite(income=income, transport_cost=transport_cost, rent=rent, beta=beta)
    if np.any(rent <= 0):
        raise DomainError("rent must be positive")
    if np.any(transport_cost < 0) or np.any(transport_cost > income):
        raise DomainError("transport cost must satisfy 0 <= T <= Y")
    return beta * (income - transport_cost) / rent


def bid_rent(income, transport_cost, beta, central_rent):
    """Bid rent per m^2 of floor space, ``R0 * ((Y - T) / Y) ** (1 / beta)``.

    Strictly decreasing in ``T``; continuous limit 0 at ``T == Y`` so grids may
    include exactly-marginal cells.
    """
    _check_finite(income=income, transport_cost=transport_cost, beta=beta,
                  central_rent=central_rent)
    if np.any(central_rent <= 0):
        raise DomainError("central rent must be positive")
    if np.any(transport_cost < 0) or np.any(transport_cost > income):
        raise DomainError("transport cost must satisfy 0 <= T <= Y (bid rent is "
                          "undefined beyond affordability)")
    return central_rent * ((income - transport_cost) / income) ** (1.0 / beta)


def central_rent_from_utility(alpha, beta, income, utility):
    """Rent at the center consistent with utility ``u``.

    ``R0 = (alpha**alpha * beta**beta * Y / u) ** (1 / beta)``; strictly
    decreasing in ``u``.
    """
    _check_finite(alpha=alpha, beta=beta, income=income, utility=utility)
    if np.any(utility <= 0):
        raise DomainError("utility must be positive")
    return (alpha ** alpha * beta ** beta * income / utility) ** (1.0 / beta)


# ---------------------------------------------------------------------------
# Developer closed forms
# ---------------------------------------------------------------------------

def optimal_capital_intensity(rent, amenity_tfp, a_land, b_capital, capital_price):
    """Profit-maximizing capital per unit land, ``k* = (A b R / rho) ** (1 / a)``."""
    _check_finite(rent=rent, amenity_tfp=amenity_tfp, a_land=a_land,
                  b_capital=b_capital, capital_price=capital_price)
    if np.any(rent < 0):
        raise DomainError("rent must be non-negative")
    return (amenity_tfp * b_capital * rent / capital_price) ** (1.0 / a_land)


def housing_supply_per_land(rent, amenity_tfp, a_land, b_capital, capital_price):
    """Floor space supplied per unit land, ``A ** (1/a) * (b R / rho) ** (b/a)``.

    Equals ``A * k* ** b`` at the profit-maximizing capital intensity.
    """
    _check_finite(rent=rent, amenity_tfp=amenity_tfp, a_land=a_land,
                  b_capital=b_capital, capital_price=capital_price)
    if np.any(rent < 0):
        raise DomainError("rent must be non-negative")
    return (amenity_tfp ** (1.0 / a_land)
            * (b_capital * rent / capital_price) ** (b_capital / a_land))


def density_from_rent(params: CityParams, transport_cost, rent):
    """Population per unit of urbanizable land at a given rent.

    ``n = A**(1/a) (b/rho)**(b/a) R**(1/a) / (beta (Y - T))`` -- the supply
    side divided by dwelling size.  Composes with :func:`bid_rent` to give
    :func:`density`.
    """
    _check_finite(transport_cost=transport_cost, rent=rent)
    if np.any(transport_cost >= params.income):
        raise DomainError("transport cost must be below income")
    if np.any(rent < 0):
        raise DomainError("rent must be non-negative")
    return (params.amenity_tfp ** (1.0 / params.a_land)
            * (params.b_capital / params.capital_price) ** (params.b_capital / params.a_land)
            * rent ** (1.0 / params.a_land)
            / (params.beta * (params.income - transport_cost)))


def density(params: CityParams, transport_cost, utility):
    """Population density per unit of urbanizable land at transport cost ``T``.

    The closed form after substituting the bid rent:

    ``n = A**(1/a) (b/rho)**(b/a) (alpha**alpha/u)**(1/(beta a)) beta**(b/a)
    (Y - T)**((1 - beta a)/(beta a))``

    Algebraically identical to ``density_from_rent`` evaluated at
    ``bid_rent``; the test suite enforces the identity to 1e-12 relative.
    ``T == Y`` returns the continuous limit 0 so grids may include
    exactly-marginal cells.
    """
    _check_finite(transport_cost=transport_cost, utility=utility)
    if np.any(utility <= 0):
        raise DomainError("utility must be positive")
    if np.any(transport_cost > params.income):
        raise DomainError("transport cost must not exceed income")
    if np.any(transport_cost < 0):
        raise DomainError("transport cost must be non-negative")
    ba = params.beta * params.a_land
    return (params.amenity_tfp ** (1.0 / params.a_land)
            * (params.b_capital / params.capital_price) ** (params.b_capital / params.a_land)
            * (params.alpha ** params.alpha / utility) ** (1.0 / ba)
            * params.beta ** (params.b_capital / params.a_land)
            * (params.income - transport_cost) ** ((1.0 - ba) / ba))


# ---------------------------------------------------------------------------
# Equilibrium conditions
# ---------------------------------------------------------------------------

def fringe_distance(params: CityParams, central_rent):
    """Distance where the bid rent meets the farmland rent (linear cost).

    ``d = (Y / t) * (1 - (Rbar / R0) ** beta)``.
    """
    _check_finite(central_rent=central_rent)
    if np.any(central_rent < params.farm_rent):
        raise DomainError("central rent below farmland rent: the city cannot "
                          "outbid agriculture anywhere")
    return (params.income / params.t_per_km) * (
        1.0 - (params.farm_rent / central_rent) ** params.beta)


def max_utility(params: CityParams) -> float:
    """Utility above which the city cannot outbid the farmland rent anywhere."""
    if params.farm_rent == 0.0:
        return math.inf
    return (params.alpha ** params.alpha * params.beta ** params.beta
            * params.income / params.farm_rent ** params.beta)


def _fringe_cost(params: CityParams, utility: float) -> float:
    """Transport cost at which the bid rent equals the farmland rent."""
    r0 = central_rent_from_utility(params.alpha, params.beta, params.income, utility)
    if r0 < params.farm_rent:
        raise DomainError("no positive-extent city at this utility level")
    return params.income * (1.0 - (params.farm_rent / r0) ** params.beta)


def total_population(params: CityParams, utility: float, cost=None) -> float:
    """Population of a circular city at utility ``u``.

    Integrates ``2 pi x * n(T(x)) * land_share`` from the center to the fringe
    by adaptive quadrature at relative tolerance 1e-10.  ``cost`` is any object
    with ``cost``, ``inverse`` and ``breakpoints`` methods; the default is the
    linear cost ``T = t * d``.  Strictly decreasing in ``u``.
    """
    _check_finite(utility=utility)
    if utility <= 0:
        raise DomainError("utility must be positive")
    if cost is None:
        cost = LinearCost(params.t_per_km)
    tbar = _fringe_cost(params, utility)  # raises if the city has no extent
    dbar = float(cost.inverse(tbar))
    if dbar <= 0.0:
        return 0.0

    def integrand(x):
        return 2.0 * math.pi * x * params.land_share * density(
            params, cost.cost(x), utility)

    points = [p for p in cost.breakpoints() if 0.0 < p < dbar] or None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(
                integrand, 0.0, dbar, epsabs=0.0, epsrel=QUAD_TOL,
                limit=200, points=points)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(
                f"population integral did not converge on [0, {dbar}]: {exc}"
            ) from exc
    if not np.isfinite(value):
        raise QuadratureError(
            f"population integral returned {value} (abserr={abserr}) on [0, {dbar}]")
    return value


def _clamped_population(params: CityParams, utility: float, cost) -> float:
    """Population with the no-city region mapped to 0 (for root bracketing)."""
    if utility >= max_utility(params):
        return 0.0
    return total_population(params, utility, cost)


def _population_slope(params: CityParams, utility: float, cost,
                      population: float) -> float:
    """d(total population)/d(utility), used for the Newton polish.

    The density prefactor scales as ``u ** (-1/(beta a))`` and the fringe cost
    falls linearly in ``u``; both terms are differentiated analytically.
    """
    ba = params.beta * params.a_land
    tbar = _fringe_cost(params, utility)
    dbar = float(cost.inverse(tbar))
    # d(tbar)/du is constant in u for the Cobb-Douglas bid rent:
    dtbar_du = -(params.farm_rent ** params.beta
                 / (params.alpha ** params.alpha * params.beta ** params.beta))
    # marginal distance per unit cost at the fringe (1 / T'(dbar))
    eps = max(dbar * 1e-6, 1e-9)
    slope_T = (cost.cost(dbar) - cost.cost(dbar - eps)) / eps
    ddbar_du = dtbar_du / slope_T
    boundary = (2.0 * math.pi * dbar * params.land_share
                * density(params, tbar, utility) * ddbar_du)
    return -population / (ba * utility) + boundary


def solve_equilibrium(params: CityParams, cost=None,
                      tol: float = SOLVER_TOL) -> Equilibrium:
    """Solve the closed-city equilibrium for ``(u, dbar, R0)``.

    Population is strictly decreasing in utility, so bisection on a
    geometrically expanded bracket is guaranteed to converge; a few Newton
    steps with the analytic derivative polish the root.  The returned
    ``closure_residual`` satisfies ``|N(u)/N* - 1| <= tol``.
    """
    if cost is None:
        cost = LinearCost(params.t_per_km)
    target = params.population_target

    u_max = max_utility(params)
    hi = u_max if math.isfinite(u_max) else 1.0
    lo = hi / 2.0 if math.isfinite(u_max) else 1.0

    # expand upward only when the farmland rent is zero (u_max infinite)
    expansions = 0
    while _clamped_population(params, hi, cost) > target:
        hi *= 2.0
        expansions += 1
        if expansions > 200:
            raise NoEquilibriumError(
                "bracket expansion failed after 200 doublings (upper)")
    expansions = 0
    while _clamped_population(params, lo, cost) < target:
        lo /= 2.0
        expansions += 1
        if expansions > 200:
            raise NoEquilibriumError(
                "bracket expansion failed after 200 halvings: no utility level "
                f"reaches the population target {target!r}")

    u = math.sqrt(lo * hi)
    pop = _clamped_population(params, u, cost)
    for _ in range(200):
        resid = pop / target - 1.0
        if abs(resid) <= tol:
            break
        if pop > target:
            lo = u
        else:
            hi = u
        # Newton polish once the bracket is tight enough to trust the tangent
        if abs(resid) < 1e-2 and pop > 0.0:
            slope = _population_slope(params, u, cost, pop)
            if slope < 0.0:
                u_newton = u - (pop - target) / slope
                if lo < u_newton < hi:
                    u = u_newton
                    pop = _clamped_population(params, u, cost)
                    continue
        u = math.sqrt(lo * hi)
        pop = _clamped_population(params, u, cost)
    else:
        raise NoEquilibriumError(
            f"bisection did not reach tolerance {tol}; last residual "
            f"{pop / target - 1.0:.3e}")

    r0 = central_rent_from_utility(params.alpha, params.beta, params.income, u)
    dbar = float(cost.inverse(_fringe_cost(params, u)))
    return Equilibrium(utility=u, fringe_km=dbar, central_rent=r0,
                       closure_residual=pop / target - 1.0)


_PARAM_ALIASES = {
    "population_target": "population_target", "nstar": "population_target",
    "income": "income", "y": "income",
    "t_per_km": "t_per_km", "t": "t_per_km",
    "farm_rent": "farm_rent", "rbar": "farm_rent",
}

_EXPECTED_SIGNS = {
    "population_target": +1,
    "income": +1,
    "t_per_km": -1,
    "farm_rent": -1,
}


def comparative_statics(params: CityParams, which: str,
                        rel_step: float = 0.05,
                        tol: float = SOLVER_TOL) -> ComparativeStaticsReport:
    """Fringe response to a relative perturbation of one parameter.

    ``which`` is one of ``population_target``/``income``/``t_per_km``/
    ``farm_rent`` (aliases ``Nstar``/``Y``/``t``/``Rbar`` accepted).  Larger
    populations and incomes expand the city; costlier transport and farmland
    shrink it.  Changes smaller than the solver dead band report sign 0.
    """
    key = _PARAM_ALIASES.get(which.lower())
    if key is None:
        raise DomainError(f"unknown parameter {which!r}; expected one of "
                          f"{sorted(set(_PARAM_ALIASES))}")
    if not 0.0 < rel_step <= 0.5:
        raise DomainError(f"rel_step must lie in (0, 0.5], got {rel_step}")
    base = solve_equilibrium(params, tol=tol)
    perturbed_params = params.replace(**{key: getattr(params, key) * (1.0 + rel_step)})
    pert = solve_equilibrium(perturbed_params, tol=tol)
    delta = pert.fringe_km - base.fringe_km
    dead_band = tol * abs(base.fringe_km)
    sign = 0 if abs(delta) <= dead_band else (1 if delta > 0 else -1)
    return ComparativeStaticsReport(
        parameter=key,
        baseline_fringe_km=base.fringe_km,
        perturbed_fringe_km=pert.fringe_km,
        sign=sign,
        expected_sign=_EXPECTED_SIGNS[key],
    )
