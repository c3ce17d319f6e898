"""Synthetic gridded cities generated from the urban model.

Cities live on a square lattice of cells whose centers fall inside a radius.
Inside the fringe, rents, dwelling sizes and densities come from the closed
forms at the cell's transport cost; multiplicative lognormal noise on rents and
densities turns into additive Gaussian errors in the log-linear regressions run
downstream.  Rent observations can additionally be materialized as individual
ads (Poisson counts per cell) so the data-quality metrics see realistic
sparsity.

Everything is deterministic given the grid seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import model
from .errors import DomainError
from .model import CityParams, Equilibrium
from .transport import ModalCost, TransportParams, generalized_cost_arrays

__all__ = [
    "GridSpec",
    "NoiseSpec",
    "AmenityParams",
    "CityGrid",
    "make_grid",
    "simulate_city",
    "simulate_amenity_city",
]

MAX_CELLS = 4_000_000


@dataclass(frozen=True)
class GridSpec:
    """Square-lattice layout: cells whose centers lie within ``radius_km``."""

    cell_size_km: float
    radius_km: float
    center: tuple[float, float] = (0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.cell_size_km) and self.cell_size_km > 0):
            raise DomainError(f"cell_size_km must be positive, got {self.cell_size_km}")
        if not (np.isfinite(self.radius_km) and self.radius_km > 0):
            raise DomainError(f"radius_km must be positive, got {self.radius_km}")
        if (2 * self.radius_km / self.cell_size_km + 1) ** 2 > MAX_CELLS:
            raise DomainError("grid would exceed the cell-count guard; "
                              "increase cell_size_km or reduce radius_km")


@dataclass(frozen=True)
class NoiseSpec:
    """Error-term configuration of the generator.

    ``sigma_rent``/``sigma_density`` are log-scale standard deviations of the
    cell-level shocks.  ``ad_rate`` is the expected number of rent ads per
    1000 residents; zero disables the ad layer entirely, in which case rents
    are observed directly on every populated cell.  ``mask_rate`` turns a
    random fraction of cells non-urbanizable.  ``congestion_sd`` perturbs the
    *measured* travel times (lognormal); ``congestion_corr`` correlates that
    perturbation with the rent shock, making the measured generalized cost
    endogenous so the instrumented estimator has something to correct.
    """

    sigma_rent: float = 0.0
    sigma_density: float = 0.0
    ad_rate: float = 0.0
    mask_rate: float = 0.0
    congestion_sd: float = 0.0
    congestion_corr: float = 0.0
    ad_size_sd: float = 0.25   # lognormal spread of ad sizes around the cell dwelling
    ad_rent_sd: float = 0.10   # per-ad rent noise on top of the cell rent

    def __post_init__(self):
        for name in ("sigma_rent", "sigma_density", "ad_rate", "mask_rate",
                     "congestion_sd", "ad_size_sd", "ad_rent_sd"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be non-negative, got {v}")
        if self.mask_rate >= 1.0:
            raise DomainError(f"mask_rate must be below 1, got {self.mask_rate}")
        if not -1.0 <= self.congestion_corr <= 1.0:
            raise DomainError("congestion_corr must lie in [-1, 1]")


@dataclass(frozen=True)
class AmenityParams:
    """Exponential distance decay ``l(d) = kappa * exp(-theta * d)``."""

    kappa: float
    theta: float

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if not (np.isfinite(self.theta) and self.theta >= 0):
            raise DomainError(f"theta must be non-negative, got {self.theta}")


@dataclass
class CityGrid:
    """Per-cell records of one (synthetic or ingested) city.

    Missing values are NaN.  ``gen_cost`` is the measured generalized
    transport cost actually used by the estimators; under congestion noise it
    deliberately differs from the cost that generated rents and densities.
    """

    city_id: str
    cell_size_km: float
    cell_id: np.ndarray
    x: np.ndarray
    y: np.ndarray
    dist: np.ndarray
    land_share: np.ndarray
    population: np.ndarray
    rent: np.ndarray
    dwelling: np.ndarray
    time_car: np.ndarray
    time_transit: np.ndarray
    dist_car: np.ndarray
    n_ads: np.ndarray
    gen_cost: np.ndarray
    income: float = float("nan")
    params: CityParams | None = None
    transport: TransportParams | None = None
    equilibrium: Equilibrium | None = None
    ads_cell: np.ndarray | None = None   # positions into the cell arrays
    ads_rent: np.ndarray | None = None   # total rent per ad
    ads_size: np.ndarray | None = None   # m^2 per ad

    @property
    def n_cells(self) -> int:
        return int(self.x.size)

    @property
    def cell_area_km2(self) -> float:
        return self.cell_size_km ** 2

    def density_per_km2(self) -> np.ndarray:
        """Population per km^2 of urbanizable land (NaN where no land)."""
        out = np.full(self.n_cells, np.nan)
        ok = self.land_share > 0
        out[ok] = self.population[ok] / (self.land_share[ok] * self.cell_area_km2)
        return out

    def total_population(self) -> float:
        return float(np.nansum(self.population))


def make_grid(spec: GridSpec, city_id: str = "city") -> CityGrid:
    """Geometry-only grid: every cell whose center is within the radius."""
    cs = spec.cell_size_km
    cx, cy = spec.center
    half = int(math.floor(spec.radius_km / cs))
    offsets = np.arange(-half, half + 1, dtype=float) * cs
    gx, gy = np.meshgrid(offsets, offsets, indexing="xy")
    x = (cx + gx).ravel()
    y = (cy + gy).ravel()
    dist = np.hypot(x - cx, y - cy)
    keep = dist <= spec.radius_km + 1e-12
    x, y, dist = x[keep], y[keep], dist[keep]
    order = np.lexsort((x, y))
    x, y, dist = x[order], y[order], dist[order]
    n = x.size
    nan = np.full(n, np.nan)
    return CityGrid(
        city_id=city_id, cell_size_km=cs,
        cell_id=np.arange(n, dtype=int), x=x, y=y, dist=dist,
        land_share=np.ones(n), population=np.zeros(n),
        rent=nan.copy(), dwelling=nan.copy(), time_car=nan.copy(),
        time_transit=nan.copy(), dist_car=nan.copy(),
        n_ads=np.zeros(n, dtype=int), gen_cost=nan.copy(),
    )


def _draw_ads(rng: np.random.Generator, grid: CityGrid, noise: NoiseSpec,
              rent_cell: np.ndarray, observable: np.ndarray) -> None:
    """Materialize per-cell ad counts and per-ad (total rent, size) draws."""
    lam = np.where(observable, noise.ad_rate * grid.population / 1000.0, 0.0)
    counts = rng.poisson(lam)
    grid.n_ads = counts.astype(int)
    total = int(counts.sum())
    if total == 0:
        grid.ads_cell = np.empty(0, dtype=int)
        grid.ads_rent = np.empty(0)
        grid.ads_size = np.empty(0)
        return
    cell_idx = np.repeat(np.arange(grid.n_cells), counts)
    sizes = grid.dwelling[cell_idx] * np.exp(
        noise.ad_size_sd * rng.standard_normal(total))
    rents = rent_cell[cell_idx] * sizes * np.exp(
        noise.ad_rent_sd * rng.standard_normal(total))
    grid.ads_cell = cell_idx
    grid.ads_rent = rents
    grid.ads_size = sizes


def _observed_rents(grid: CityGrid, noise: NoiseSpec, rent_cell: np.ndarray,
                    observable: np.ndarray) -> np.ndarray:
    """Rent-per-m2 column: ad means when ads are modeled, else the cell rent."""
    out = np.full(grid.n_cells, np.nan)
    if noise.ad_rate == 0.0:
        out[observable] = rent_cell[observable]
        return out
    have = grid.n_ads >= 1
    rate_sum = np.zeros(grid.n_cells)
    np.add.at(rate_sum, grid.ads_cell, grid.ads_rent / grid.ads_size)
    out[have] = rate_sum[have] / grid.n_ads[have]
    return out


def simulate_city(params: CityParams, spec: GridSpec, noise: NoiseSpec,
                  transport: TransportParams | None = None,
                  city_id: str = "city") -> CityGrid:
    """Generate one city from the solved equilibrium.

    With ``transport`` given (speeds required), travel times and the cheapest
    mode define the cost surface used both to close the equilibrium and to
    fill the grid; otherwise the linear cost ``t * d`` applies and the time
    columns stay empty.  Cells beyond the fringe keep zero population and no
    rent observations.
    """
    if noise.congestion_sd > 0 and transport is None:
        raise DomainError("congestion noise needs modal transport: measured "
                          "times are what carry the perturbation")
    cost = ModalCost.from_params(transport) if transport is not None \
        else model.LinearCost(params.t_per_km)
    eq = model.solve_equilibrium(params, cost)
    grid = make_grid(spec, city_id=city_id)
    grid.income = params.income
    grid.params = params
    grid.transport = transport
    grid.equilibrium = eq
    n = grid.n_cells
    rng = np.random.default_rng(spec.seed)

    # fixed draw order keeps grids reproducible across option changes
    mask_draw = rng.random(n)
    zeta_rent = rng.standard_normal(n)
    zeta_density = rng.standard_normal(n)
    zeta_congestion = rng.standard_normal(n)

    if noise.mask_rate > 0:
        grid.land_share = np.where(mask_draw < noise.mask_rate, 0.0, params.land_share)
    else:
        grid.land_share = np.full(n, params.land_share)

    t_true = np.asarray(cost.cost(grid.dist), dtype=float)
    in_city = (grid.dist < eq.fringe_km) & (grid.land_share > 0) \
        & (t_true < params.income)

    rent_cell = np.full(n, np.nan)
    rent_true = model.bid_rent(params.income, t_true[in_city], params.beta,
                               eq.central_rent)
    rent_cell[in_city] = rent_true * np.exp(noise.sigma_rent * zeta_rent[in_city])
    grid.dwelling[in_city] = model.dwelling_size(
        params.income, t_true[in_city], rent_true, params.beta)

    # density is persons per km^2 of urbanizable land (distances are km, so
    # the model's land-area unit is the km^2)
    dens = np.zeros(n)
    dens[in_city] = model.density(params, t_true[in_city], eq.utility) \
        * np.exp(noise.sigma_density * zeta_density[in_city])
    grid.population = dens * grid.land_share * grid.cell_area_km2

    if transport is not None:
        rf = transport.route_factor
        grid.dist_car = rf * grid.dist
        time_car = grid.dist_car / transport.speed_car
        time_transit = rf * grid.dist / transport.speed_transit
        if noise.congestion_sd > 0:
            rho = noise.congestion_corr
            delta = rho * zeta_rent + math.sqrt(1.0 - rho * rho) * zeta_congestion
            factor = np.exp(noise.congestion_sd * delta)
            time_car = time_car * factor
            time_transit = time_transit * factor
        grid.time_car = time_car
        grid.time_transit = time_transit
        grid.gen_cost, _ = generalized_cost_arrays(
            transport, grid.dist_car, grid.time_car, grid.time_transit)
    else:
        grid.gen_cost = t_true.copy()

    _draw_ads(rng, grid, noise, rent_cell, in_city)
    grid.rent = _observed_rents(grid, noise, rent_cell, in_city)
    return grid


def simulate_amenity_city(params: CityParams, spec: GridSpec,
                          amenity: AmenityParams, noise: NoiseSpec,
                          city_id: str = "city") -> CityGrid:
    """Generate a city whose structure is driven by a distance-decaying amenity.

    Transport drops out of the budget; rents scale as ``l(d) ** (1/beta)`` and
    densities as ``l(d) ** (1/(a beta))``, so noise-free log rents and log
    densities are exactly affine in distance with slopes ``-theta/beta`` and
    ``-theta/(a beta)``.  The utility level is taken from the baseline
    equilibrium of the same parameters; the fringe is where the amenity rent
    falls to the farmland rent.
    """
    eq = model.solve_equilibrium(params)
    grid = make_grid(spec, city_id=city_id)
    grid.income = params.income
    grid.params = params
    grid.equilibrium = eq
    n = grid.n_cells
    rng = np.random.default_rng(spec.seed)

    mask_draw = rng.random(n)
    zeta_rent = rng.standard_normal(n)
    zeta_density = rng.standard_normal(n)
    rng.standard_normal(n)  # keep the draw order aligned with simulate_city

    if noise.mask_rate > 0:
        grid.land_share = np.where(mask_draw < noise.mask_rate, 0.0, params.land_share)
    else:
        grid.land_share = np.full(n, params.land_share)

    level = amenity.kappa * np.exp(-amenity.theta * grid.dist)
    rent_true = eq.central_rent * level ** (1.0 / params.beta)
    in_city = (rent_true >= params.farm_rent) & (grid.land_share > 0)

    rent_cell = np.full(n, np.nan)
    rent_cell[in_city] = rent_true[in_city] * np.exp(
        noise.sigma_rent * zeta_rent[in_city])
    grid.dwelling[in_city] = params.beta * params.income / rent_true[in_city]

    ba = params.beta * params.a_land
    dens_center = (params.amenity_tfp ** (1.0 / params.a_land)
                   * (params.b_capital / params.capital_price) ** (params.b_capital / params.a_land)
                   * (params.alpha ** params.alpha / eq.utility) ** (1.0 / ba)
                   * params.beta ** (params.b_capital / params.a_land)
                   * params.income ** ((1.0 - ba) / ba))
    dens = np.zeros(n)
    dens[in_city] = dens_center * level[in_city] ** (1.0 / ba) * np.exp(
        noise.sigma_density * zeta_density[in_city])
    grid.population = dens * grid.land_share * grid.cell_area_km2

    _draw_ads(rng, grid, noise, rent_cell, in_city)
    grid.rent = _observed_rents(grid, noise, rent_cell, in_city)
    return grid
