"""Regression engine: OLS, just-identified 2SLS, significance classes, Chow test.

Standard errors are classical (homoskedastic) throughout and p-values use the
t distribution with ``n - k`` degrees of freedom; the 2SLS R-squared is
``1 - SSR/SST`` on the structural residuals and may be negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .errors import DomainError, InsufficientDataError, SingularDesignError, WeakInstrumentError

__all__ = [
    "FitResult",
    "SignClass",
    "ols",
    "tsls",
    "classify_sign",
    "chow_test",
]

INTERCEPT = "intercept"


@dataclass(frozen=True)
class FitResult:
    """One regression fit; the first coefficient is always the intercept."""

    names: tuple[str, ...]
    coefficients: tuple[float, ...]
    std_errors: tuple[float, ...]
    t_stats: tuple[float, ...]
    p_values: tuple[float, ...]
    r_squared: float
    n_obs: int
    method: str                    # "OLS" or "2SLS"
    df_resid: int
    f_stat: float | None = None    # overall F on the slopes (OLS only)
    f_pvalue: float | None = None
    first_stage_f: float | None = None  # 2SLS only

    def _index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DomainError(
                f"unknown regressor {name!r}; fitted names are {self.names}") from None

    def coefficient(self, name: str) -> float:
        return self.coefficients[self._index(name)]

    def std_error(self, name: str) -> float:
        return self.std_errors[self._index(name)]

    def t_stat(self, name: str) -> float:
        return self.t_stats[self._index(name)]

    def p_value(self, name: str) -> float:
        return self.p_values[self._index(name)]

    @property
    def slope(self) -> float:
        """The first non-intercept coefficient (single-regressor convenience)."""
        return self.coefficients[1]


@dataclass(frozen=True)
class SignClass:
    """Two-sided significance class of one slope at a fixed level."""

    label: str  # positive-significant / negative-significant / non-significant
    level: float = 0.10


def _as_design(y, X, names):
    """Validate shapes and prepend the intercept column."""
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DomainError(
            f"regressor matrix shape {X.shape} does not match {y.size} observations")
    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(X)):
        raise DomainError("regression inputs must be finite")
    if names is None:
        names = tuple(f"x{i}" for i in range(X.shape[1]))
    else:
        names = tuple(names)
        if len(names) != X.shape[1]:
            raise DomainError(
                f"{len(names)} names given for {X.shape[1]} regressor columns")
    design = np.column_stack([np.ones(y.size), X])
    return y, design, (INTERCEPT,) + names


def _check_rank(design: np.ndarray, names: tuple[str, ...]) -> None:
    if np.linalg.matrix_rank(design) < design.shape[1]:
        # pivoted QR localizes the (near-)dependent columns
        _, r, piv = linalg.qr(design, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        tol = diag.max() * max(design.shape) * np.finfo(float).eps
        offenders = [names[piv[i]] for i in range(len(diag)) if diag[i] <= tol]
        if not offenders:
            offenders = [names[piv[-1]]]
        raise SingularDesignError(
            "design matrix is rank deficient; offending column(s): "
            + ", ".join(repr(n) for n in offenders))


def _t_and_p(coef: np.ndarray, se: np.ndarray, df: int):
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.divide(coef, se)
    # exact fits give se == 0: a zero coefficient is a zero effect, a nonzero
    # one is unboundedly significant
    t = np.where(se == 0.0, np.where(coef == 0.0, 0.0, np.inf * np.sign(coef)), t)
    p = 2.0 * stats.t.sf(np.abs(t), df)
    return t, p


def ols(y, X, names=None) -> FitResult:
    """Least squares of ``y`` on ``X`` with an intercept.

    ``X`` holds the slope regressors only (1-D or 2-D); the intercept column is
    prepended internally.  Solved by QR, with classical standard errors.
    """
    y, design, all_names = _as_design(y, X, names)
    n, k = design.shape
    if n <= k:
        raise InsufficientDataError(
            "too_few_observations", f"{n} observations for {k} coefficients")
    _check_rank(design, all_names)

    q, r = linalg.qr(design, mode="economic")
    coef = linalg.solve_triangular(r, q.T @ y)
    resid = y - design @ coef
    ssr = float(resid @ resid)
    sst = float(np.sum((y - y.mean()) ** 2))
    df = n - k
    sigma2 = ssr / df
    rinv = linalg.solve_triangular(r, np.eye(k))
    cov = sigma2 * (rinv @ rinv.T)
    se = np.sqrt(np.diag(cov))
    t, p = _t_and_p(coef, se, df)
    r2 = 0.0 if sst == 0.0 else min(max(1.0 - ssr / sst, 0.0), 1.0)

    f_stat = f_pvalue = None
    if k > 1 and sst > 0.0:
        if ssr == 0.0:
            f_stat, f_pvalue = float("inf"), 0.0
        else:
            f_stat = ((sst - ssr) / (k - 1)) / (ssr / df)
            f_pvalue = float(stats.f.sf(f_stat, k - 1, df))
    return FitResult(
        names=all_names,
        coefficients=tuple(float(c) for c in coef),
        std_errors=tuple(float(s) for s in se),
        t_stats=tuple(float(v) for v in t),
        p_values=tuple(float(v) for v in p),
        r_squared=float(r2),
        n_obs=n,
        method="OLS",
        df_resid=df,
        f_stat=f_stat,
        f_pvalue=f_pvalue,
    )


def tsls(y, x_endog, z_instrument, name: str = "x") -> FitResult:
    """Just-identified 2SLS of ``y`` on one endogenous regressor.

    The slope is ``cov(z, y) / cov(z, x)``; standard errors come from the IV
    sandwich under homoskedasticity and the R-squared is computed on the
    structural residuals (so it may be negative).  The first-stage F statistic
    is reported for instrument-strength diagnostics.
    """
    y = np.asarray(y, dtype=float).ravel()
    x = np.asarray(x_endog, dtype=float).ravel()
    z = np.asarray(z_instrument, dtype=float).ravel()
    if not (y.size == x.size == z.size):
        raise DomainError("y, x and z must have equal lengths")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
        raise DomainError("regression inputs must be finite")
    n = y.size
    if n <= 2:
        raise InsufficientDataError(
            "too_few_observations", f"{n} observations for 2 coefficients")

    sx, sz = x.std(), z.std()
    if sx == 0.0 or sz == 0.0 or abs(np.corrcoef(z, x)[0, 1]) < 1e-8:
        raise WeakInstrumentError(
            "instrument is uncorrelated with the endogenous regressor")

    Z = np.column_stack([np.ones(n), z])
    X = np.column_stack([np.ones(n), x])
    zx = Z.T @ X
    coef = np.linalg.solve(zx, Z.T @ y)
    resid = y - X @ coef
    ssr = float(resid @ resid)
    sst = float(np.sum((y - y.mean()) ** 2))
    df = n - 2
    sigma2 = ssr / df
    zx_inv = np.linalg.inv(zx)
    cov = sigma2 * (zx_inv @ (Z.T @ Z) @ zx_inv.T)
    se = np.sqrt(np.diag(cov))
    t, p = _t_and_p(coef, se, df)
    r2 = 0.0 if sst == 0.0 else 1.0 - ssr / sst

    first_stage = ols(x, z, names=("z",))
    fs_t = first_stage.t_stat("z")
    return FitResult(
        names=(INTERCEPT, name),
        coefficients=tuple(float(c) for c in coef),
        std_errors=tuple(float(s) for s in se),
        t_stats=tuple(float(v) for v in t),
        p_values=tuple(float(v) for v in p),
        r_squared=float(r2),
        n_obs=n,
        method="2SLS",
        df_resid=df,
        first_stage_f=float(fs_t ** 2),
    )


def classify_sign(fit: FitResult, regressor: str, level: float = 0.10) -> SignClass:
    """Two-sided significance class of the named slope at the given level."""
    idx = fit._index(regressor)
    coef = fit.coefficients[idx]
    p = fit.p_values[idx]
    if np.isnan(p) or p >= level or coef == 0.0:
        label = "non-significant"
    elif coef > 0:
        label = "positive-significant"
    else:
        label = "negative-significant"
    return SignClass(label=label, level=level)


def _ssr(y: np.ndarray, design: np.ndarray) -> float:
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return float(resid @ resid)


def chow_test(y, X, split) -> tuple[float, float]:
    """Chow F-test for equal coefficients across the two sides of ``split``.

    ``split`` is a boolean mask selecting the first subsample.  With ``k``
    coefficients (including the intercept), the statistic is
    ``F = [(SSR_pooled - SSR1 - SSR2)/k] / [(SSR1 + SSR2)/(n1 + n2 - 2k)]``.
    Returns ``(F, p)``.
    """
    y, design, _ = _as_design(y, X, None)
    split = np.asarray(split, dtype=bool).ravel()
    if split.size != y.size:
        raise DomainError("split mask length does not match the observations")
    k = design.shape[1]
    n1, n2 = int(split.sum()), int((~split).sum())
    if n1 <= k or n2 <= k:
        raise InsufficientDataError(
            "subsample_too_small",
            f"subsamples of {n1} and {n2} observations for {k} coefficients")

    ssr_pooled = _ssr(y, design)
    ssr1 = _ssr(y[split], design[split])
    ssr2 = _ssr(y[~split], design[~split])
    df2 = n1 + n2 - 2 * k
    numer = (ssr_pooled - ssr1 - ssr2) / k
    denom = (ssr1 + ssr2) / df2
    if denom == 0.0:
        # exact fits on both sides: any pooled excess is structural change
        f = 0.0 if numer <= 1e-12 * max(1.0, ssr_pooled) else float("inf")
    else:
        f = max(numer / denom, 0.0)
    p = float(stats.f.sf(f, k, df2))
    return float(f), p
