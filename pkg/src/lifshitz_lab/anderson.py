"""Discrete lattice comparison model with long-range random potential.

The operator acts on functions over the cube {-k..k}^d: a graph Laplacian
whose edge sums stay inside the box (degree-dependent diagonal), an energy
offset, and a diagonal potential v(alpha) = sum_beta omega_beta
(1 + |alpha - beta|)^(-nu).  All lattice distances in this module are
max-norm; hopping connects axis-neighbors.

Alongside Monte Carlo estimates the module evaluates analytic bounds on
small-eigenvalue probabilities: a Chernoff upper bound for the empirical
mean of truncated couplings, and two product-form lower bounds obtained by
forcing every coupling in an explicit lattice window to be small.  Bound
values are returned in log form and never exceed 0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.sparse as sp

from .disorder import (DisorderSpec, Realization, ValidationError, lattice_cube,
                       law_cdf, law_quantile, sample_realization, site_uniforms)
from .spectral import count_sorted_leq
from .curves import IDSCurve

__all__ = [
    "AndersonInstance",
    "BoundEvaluation",
    "LatticeWindow",
    "OptimizerWarning",
    "truncation_radius_for",
    "long_range_potential",
    "potential_on_box",
    "assemble_anderson",
    "sample_anderson",
    "anderson_ids",
    "eigenvalue_below_probability",
    "log_mgf_truncated",
    "chernoff_bound_P1",
    "product_bound_P_eps_alpha_1",
    "product_bound_P_eps_alpha_2",
    "mc_chernoff_event",
    "mc_product_event_1",
    "mc_product_event_2",
]


class OptimizerWarning(UserWarning):
    """Flat or edge-pinned objective in a bound optimization."""


# -- model assembly -----------------------------------------------------------


@dataclass
class AndersonInstance:
    """One realization of the discrete model on the cube {-k..k}^d."""

    d: int
    k: int
    E_plus: float
    v: np.ndarray
    sites: np.ndarray
    matrix: sp.csr_matrix

    def __post_init__(self):
        if np.any(self.v < 0):
            raise ValidationError("potential values must be nonnegative")
        dev = abs(self.matrix - self.matrix.T)
        if dev.nnz and dev.max() > 1e-12:
            raise ValidationError("assembled matrix must be symmetric")

    @property
    def n_sites(self) -> int:
        return self.sites.shape[0]

    @property
    def volume(self) -> float:
        return float((2 * self.k + 1) ** self.d)

    def node_positions(self) -> np.ndarray:
        return self.sites.astype(float)


def assemble_anderson(d: int, k: int, E_plus: float, v) -> AndersonInstance:
    """Box graph Laplacian + E_plus + diag(v), edges truncated at the box."""
    sites = lattice_cube(d, k)
    n = sites.shape[0]
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ValidationError(f"potential must cover all {n} sites")
    side = 2 * k + 1
    # row-major strides of the cube indexing, matching lattice_cube order
    strides = [side ** (d - 1 - j) for j in range(d)]
    rows, cols = [], []
    for axis in range(d):
        has_next = sites[:, axis] < k
        src = np.nonzero(has_next)[0]
        dst = src + strides[axis]
        rows.extend([src, dst])
        cols.extend([dst, src])
    rows = np.concatenate(rows) if rows else np.array([], dtype=int)
    cols = np.concatenate(cols) if cols else np.array([], dtype=int)
    off = sp.coo_matrix((-np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    degree = -np.asarray(off.sum(axis=1)).ravel()
    mat = (off + sp.diags(degree + E_plus + v)).tocsr()
    return AndersonInstance(d=d, k=k, E_plus=E_plus, v=v, sites=sites, matrix=mat)


# -- long-range potential with certified truncation ----------------------------


def truncation_radius_for(d: int, nu: float, tol: float) -> int:
    """Smallest shell radius R with sum_{|r|>R} (1+|r|)^(-nu) <= tol (omega <= 1).

    Uses the shell count (2r+1)^d - (2r-1)^d <= 2d*3^(d-1)*r^(d-1) and an
    integral comparison, so the result is a guaranteed overestimate.
    """
    if not nu > d:
        raise ValidationError("need nu > d for a summable potential")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    lead = 2 * d * 3 ** (d - 1)
    r = lead / ((nu - d) * tol)
    radius = max(0, math.ceil(r ** (1.0 / (nu - d)) - 1.0))
    if (2 * radius + 1) ** d > 2 * 10**7:
        raise ValidationError(
            f"truncation cube ({radius=}) too large for d={d}, nu={nu}, tol={tol}")
    return radius


def _tail_bound(d: int, nu: float, radius: int) -> float:
    lead = 2 * d * 3 ** (d - 1)
    return lead * (1.0 + radius) ** (d - nu) / (nu - d)


def long_range_potential(realization: Realization, site, nu: float,
                         tol: float = 1e-8) -> float:
    """Potential value at one site, truncated with remainder below tol."""
    site = np.asarray(site, dtype=np.int64)
    d = site.shape[0]
    radius = truncation_radius_for(d, nu, tol)
    offsets = lattice_cube(d, radius)
    weights = (1.0 + np.max(np.abs(offsets), axis=1)) ** (-nu)
    values = realization.values_at(site[None, :] + offsets)
    return float(values @ weights)


def potential_on_box(realization: Realization, d: int, k: int, nu: float,
                     tol: float = 1e-8) -> np.ndarray:
    """Potential on every site of {-k..k}^d, same truncation certificate."""
    radius = truncation_radius_for(d, nu, tol)
    window = lattice_cube(d, k + radius)
    values = realization.values_at(window)
    side_w = 2 * (k + radius) + 1
    grid = values.reshape((side_w,) * d)
    offsets = lattice_cube(d, radius)
    weights = (1.0 + np.max(np.abs(offsets), axis=1)) ** (-nu)
    side = 2 * k + 1
    out = np.zeros((side,) * d)
    for off, w in zip(offsets + radius, weights):
        block = grid[tuple(slice(o, o + side) for o in off)]
        out += w * block
    return out.ravel()


def sample_anderson(disorder: DisorderSpec, d: int, k: int, nu: float,
                    E_plus: float, seed: int, index: int,
                    tol: float = 1e-8) -> AndersonInstance:
    """Draw one realization and assemble the instance."""
    radius = truncation_radius_for(d, nu, tol)
    window = lattice_cube(d, k + radius)
    omega = sample_realization(disorder, window, seed, index)
    v = potential_on_box(omega, d, k, nu, tol)
    return assemble_anderson(d, k, E_plus, v)


# -- Monte Carlo spectral statistics -------------------------------------------


def anderson_ids(disorder: DisorderSpec, d: int, k: int, nu: float, energies,
                 n_realizations: int, E_plus: float = 0.0, seed: int = 0,
                 tol: float = 1e-8) -> IDSCurve:
    """Mean normalized eigenvalue counts of the box model."""
    if n_realizations < 1:
        raise ValidationError("need at least one realization")
    energies = np.asarray(energies, dtype=float)
    vol = float((2 * k + 1) ** d)
    samples = np.empty((n_realizations, len(energies)))
    for i in range(n_realizations):
        inst = sample_anderson(disorder, d, k, nu, E_plus, seed, i, tol)
        vals = np.linalg.eigvalsh(inst.matrix.toarray())
        samples[i] = [count_sorted_leq(vals, E) for E in energies]
    samples /= vol
    values = samples.mean(axis=0)
    stderr = (samples.std(axis=0, ddof=1) / math.sqrt(n_realizations)
              if n_realizations > 1 else np.zeros(len(energies)))
    return IDSCurve(energies=energies, values=values, volume=vol,
                    n_realizations=n_realizations, stderr=stderr, bc="box",
                    meta={"counting": "monte_carlo", "model": "anderson",
                          "seed": seed, "nu": nu, "E_plus": E_plus})


def eigenvalue_below_probability(disorder: DisorderSpec, d: int, k: int, nu: float,
                                 E: float, n_trials: int, E_plus: float = 0.0,
                                 seed: int = 0, tol: float = 1e-8):
    """Frequency of {lambda_min <= E} with a 95% Clopper-Pearson interval."""
    from .stats import clopper_pearson
    successes = 0
    for i in range(n_trials):
        inst = sample_anderson(disorder, d, k, nu, E_plus, seed, i, tol)
        lam = scipy.linalg.eigvalsh(inst.matrix.toarray(), subset_by_index=[0, 0])[0]
        if lam <= E:
            successes += 1
    lo, hi = clopper_pearson(successes, n_trials)
    return successes / n_trials, lo, hi, successes


# -- analytic bounds ------------------------------------------------------------


@dataclass
class BoundEvaluation:
    """Log-domain value of an analytic probability bound plus diagnostics."""

    name: str
    log_bound: float
    t_star: float
    params: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.log_bound > 0:
            raise ValidationError("log probability bound cannot exceed 0")

    @property
    def bound(self) -> float:
        return math.exp(self.log_bound)


@dataclass(frozen=True)
class LatticeWindow:
    """Cube of lattice sites {gamma: |gamma_j| <= zeta^(-(1/2+alpha))}."""

    alpha: float
    zeta: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0,1)")
        if not self.zeta > 0:
            raise ValidationError("zeta must be positive")

    @property
    def half_side(self) -> int:
        return int(math.floor(self.zeta ** -(0.5 + self.alpha)))

    def cardinality(self, d: int) -> int:
        return (2 * self.half_side + 1) ** d

    def sites(self, d: int) -> np.ndarray:
        return lattice_cube(d, self.half_side)


def log_mgf_truncated(spec: DisorderSpec, u: float, truncation: float) -> float:
    """log E[exp(-u * min(omega, truncation))], stable for large u.

    Continuous laws use E = exp(-u*t0) + u * int_0^t0 exp(-u x) F(x) dx
    (integration by parts); the integral is evaluated in the scaled variable
    y = u x.  Atomic laws get closed forms.
    """
    if u < 0:
        raise ValidationError("u must be >= 0")
    t0 = min(truncation, 1.0)
    if t0 <= 0:
        raise ValidationError("truncation level must be positive")
    if u == 0.0:
        return 0.0
    if spec.law == "bernoulli":
        jump = min(spec.a, t0)
        return float(np.logaddexp(math.log1p(-spec.p) if spec.p < 1 else -np.inf,
                                  math.log(spec.p) - u * jump) if spec.p > 0
                     else 0.0)
    y_max = min(u * t0, 700.0)

    def integrand(y):
        return math.exp(-y) * law_cdf(spec, min(y / u, 1.0))

    q, _ = scipy.integrate.quad(integrand, 0.0, y_max, limit=200)
    log_tail = -u * t0
    log_int = math.log(q) if q > 0 else -np.inf
    return float(np.logaddexp(log_tail, log_int))


def _golden_minimize(fn, lo: float, hi: float, iters: int = 200):
    """Golden-section minimum of fn over [lo, hi]; returns (x, fn(x))."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d_ = b - phi * (b - a), a + phi * (b - a)
    fc, fd = fn(c), fn(d_)
    for _ in range(iters):
        if fc <= fd:
            b, d_, fd = d_, c, fc
            c = b - phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + phi * (b - a)
            fd = fn(d_)
        if b - a < 1e-12:
            break
    x = c if fc <= fd else d_
    return x, min(fc, fd)


def chernoff_bound_P1(spec: DisorderSpec, k: int, delta: float, K: float = 1.0,
                      C: float = 1.0, d: int = 1, truncation: float = None,
                      t_lo: float = 1e-6, t_hi: float = 1e12) -> BoundEvaluation:
    """Upper bound on P{ (1/(C N)) sum of truncated couplings <= delta/K }.

    N = (2k+1)^d sites; the exponent t*delta/K + N log E[exp(-t w/(C N))] is
    minimized by golden-section search over log t in [t_lo, t_hi].  The bound
    is clipped at probability 1.  A minimizer pinned at the bracket edge or a
    flat objective triggers OptimizerWarning.
    """
    if not 0 < delta <= 1:
        raise ValidationError("delta must lie in (0, 1]")
    if K <= 0 or C <= 0:
        raise ValidationError("K and C must be positive")
    n_sites = (2 * k + 1) ** d
    trunc = delta if truncation is None else truncation

    def objective_log(logt):
        t = math.exp(logt)
        val = t * delta / K + n_sites * log_mgf_truncated(spec, t / (C * n_sites), trunc)
        if not math.isfinite(val) and val > 0:
            raise ValidationError("non-finite bound objective")
        return val

    log_lo, log_hi = math.log(t_lo), math.log(t_hi)
    x, fx = _golden_minimize(objective_log, log_lo, log_hi)
    t_star = math.exp(x)
    edge = x - log_lo < 1e-6 or log_hi - x < 1e-6
    probes = [objective_log(log_lo + f * (log_hi - log_lo)) for f in (0.25, 0.5, 0.75)]
    flat = max(probes) - min(probes) <= 1e-12 * max(1.0, abs(probes[1]))
    if edge or flat:
        warnings.warn("bound objective flat or minimized at bracket edge; "
                      "t* is not interior", OptimizerWarning)
    log_bound = min(fx, 0.0)
    return BoundEvaluation(
        name="chernoff_small_mean", log_bound=log_bound, t_star=t_star,
        params={"k": k, "d": d, "delta": delta, "K": K, "C": C, "truncation": trunc},
        details={"n_sites": n_sites, "edge": edge, "flat": flat,
                 "raw_min": fx})


def _log_cdf_clipped(spec: DisorderSpec, x: float) -> float:
    val = law_cdf(spec, min(x, 1.0))
    return math.log(val) if val > 0 else -np.inf


def product_bound_P_eps_alpha_1(spec: DisorderSpec, eps: float, alpha: float,
                                nu: float, d: int) -> BoundEvaluation:
    """Product lower bound forcing small couplings on a core cube + annulus.

    Core: every site |gamma| <= eps^(-(1-alpha)/2) has coupling below
    eps^(1+alpha).  Annulus: sites out to eps^(-(1+2alpha)/(nu-d)) get the
    relaxed threshold eps^(1+alpha) * (1+dist)^((nu-d)(1-alpha)), dist being
    the max-norm distance to the integer core cube.  Exact lattice
    enumeration; CDF arguments clipped at 1.
    """
    if not 0 < eps < 1:
        raise ValidationError("eps must lie in (0,1)")
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie in (0,1)")
    if not d < nu <= d + 2:
        raise ValidationError("need nu in (d, d+2]")
    core_r = eps ** (-(1.0 - alpha) / 2.0)
    outer_r = eps ** (-(1.0 + 2.0 * alpha) / (nu - d))
    core_half = int(math.floor(core_r))
    outer_half = int(math.floor(outer_r))
    n_core = (2 * core_half + 1) ** d
    threshold = eps ** (1.0 + alpha)
    log_core = n_core * _log_cdf_clipped(spec, threshold)
    annulus_empty = outer_half <= core_half
    log_annulus = 0.0
    n_annulus = 0
    if not annulus_empty:
        sites = lattice_cube(d, outer_half)
        dist = np.max(np.abs(sites), axis=1) - core_half
        dist = dist[dist > 0]
        n_annulus = dist.shape[0]
        grow = (nu - d) * (1.0 - alpha)
        for dv in dist:
            log_annulus += _log_cdf_clipped(spec, threshold * (1.0 + dv) ** grow)
    log_bound = log_core + log_annulus
    return BoundEvaluation(
        name="product_forced_small_all_sites", log_bound=min(log_bound, 0.0),
        t_star=float("nan"),
        params={"eps": eps, "alpha": alpha, "nu": nu, "d": d},
        details={"log_p_core": log_core, "log_p_annulus": log_annulus,
                 "n_core": n_core, "n_annulus": n_annulus,
                 "core_half_side": core_half, "outer_half_side": outer_half,
                 "annulus_empty": annulus_empty, "threshold": threshold})


def product_bound_P_eps_alpha_2(spec: DisorderSpec, eps: float, alpha: float,
                                nu: float, d: int, s: float = 1.0,
                                C: float = 1.0) -> BoundEvaluation:
    """Product lower bound over the window of half-side (eps^s)^(-(1/2+alpha))."""
    if not 0 < eps <= 1:
        raise ValidationError("eps must lie in (0,1]")
    if not 0 < s <= 1:
        raise ValidationError("s must lie in (0,1]")
    if C <= 0:
        raise ValidationError("C must be positive")
    if not d < nu <= d + 2:
        raise ValidationError("need nu in (d, d+2]")
    window = LatticeWindow(alpha=alpha, zeta=eps ** s)
    n_sites = window.cardinality(d)
    arg = eps ** (1.0 + alpha) / C
    log_bound = n_sites * _log_cdf_clipped(spec, arg)
    return BoundEvaluation(
        name="product_forced_small_window", log_bound=min(log_bound, 0.0),
        t_star=float("nan"),
        params={"eps": eps, "alpha": alpha, "nu": nu, "d": d, "s": s, "C": C},
        details={"window_half_side": window.half_side, "n_sites": n_sites,
                 "cdf_argument": min(arg, 1.0)})


# -- Monte Carlo companions of the bounds ----------------------------------------


def mc_chernoff_event(spec: DisorderSpec, k: int, delta: float, K: float = 1.0,
                      C: float = 1.0, d: int = 1, n_trials: int = 10000,
                      seed: int = 0, truncation: float = None):
    """Frequency of the small-empirical-mean event the Chernoff bound majorizes."""
    sites = lattice_cube(d, k)
    n_sites = sites.shape[0]
    trunc = delta if truncation is None else truncation
    thr = delta / K
    successes = 0
    for i in range(n_trials):
        omega = law_quantile(spec, site_uniforms(seed, i, sites))
        if np.minimum(omega, trunc).sum() / (C * n_sites) <= thr:
            successes += 1
    from .stats import clopper_pearson
    lo, hi = clopper_pearson(successes, n_trials)
    return successes / n_trials, lo, hi, successes


def mc_product_event_1(spec: DisorderSpec, eps: float, alpha: float, nu: float,
                       d: int, n_trials: int = 10000, seed: int = 0,
                       pad_radius: int = 200):
    """Certified-from-below frequency of the uniform small-field event.

    Event: for every |beta| <= eps^(-(1+alpha)/2), the weighted coupling sum
    sum_gamma omega_gamma (1+|beta-gamma|)^(-nu) stays below eps^(1+alpha).
    Couplings outside a window of extra radius pad_radius are budgeted at
    their worst case (omega = 1), so a counted hit implies the true event.
    """
    beta_half = int(math.floor(eps ** (-(1.0 + alpha) / 2.0)))
    betas = lattice_cube(d, beta_half)
    window = lattice_cube(d, beta_half + pad_radius)
    # worst-case contribution of all sites beyond the sampled window
    far = _tail_bound(d, nu, pad_radius)
    diff = betas[:, None, :] - window[None, :, :]
    weights = (1.0 + np.max(np.abs(diff), axis=2).astype(float)) ** (-nu)
    threshold = eps ** (1.0 + alpha)
    successes = 0
    for i in range(n_trials):
        omega = law_quantile(spec, site_uniforms(seed, i, window))
        if np.max(weights @ omega) + far <= threshold:
            successes += 1
    from .stats import clopper_pearson
    lo, hi = clopper_pearson(successes, n_trials)
    return successes / n_trials, lo, hi, successes


def mc_product_event_2(spec: DisorderSpec, eps: float, alpha: float, nu: float,
                       d: int, s: float = 1.0, n_trials: int = 10000,
                       seed: int = 0):
    """Frequency of {sum over the window of omega*(1+|gamma|)^(-nu) <= eps^(1+alpha)/2}."""
    window = LatticeWindow(alpha=alpha, zeta=eps ** s)
    sites = window.sites(d)
    weights = (1.0 + np.max(np.abs(sites), axis=1).astype(float)) ** (-nu)
    threshold = eps ** (1.0 + alpha) / 2.0
    successes = 0
    for i in range(n_trials):
        omega = law_quantile(spec, site_uniforms(seed, i, sites))
        if float(weights @ omega) <= threshold:
            successes += 1
    from .stats import clopper_pearson
    lo, hi = clopper_pearson(successes, n_trials)
    return successes / n_trials, lo, hi, successes
