"""Shape-derivative integrands and the interface velocity assembly.

Interface integrals are written for a normal displacement s measured along
n = grad(psi)/|grad(psi)| (from solid into fluid), so that

    d|d omega|(s)   = int_interface H s ds,
    d|omega|(s)     = int_interface s ds,
    d(tr K / d)(s)  = -int_interface g_K s ds,

with H the mean curvature and g_K the (nonnegative, once the adjoint
identity U = -2u is substituted) permeability integrand

    g_K = -(1/d) sum_i [ (du_i/dn)^2 + (du_i/dn).(dU_i/dn) ].

The working Lagrangian maximized by the optimizer is

    L = |d omega| + l1 g1 + l2 g2 - mu1/2 g1^2 - mu2/2 g2^2,
    g1 = C_f |d omega| - |omega|,   g2 = k_min - tr(K)/d,

whose shape derivative is dL(s) = int T s ds with

    T = (1 + a1 C_f) H - a1 - a2 g_K,      a_i = l_i - mu_i g_i.

Under the transport convention of ``advect`` (positive speed erodes the
solid, i.e. the displacement is s = -V dt), the ascent choice is V = -T:
one transport step along it increases L to first order.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError
from .levelset import (
    LevelSetField,
    band_mask,
    central_gradient,
    curvature,
    gradient_norm,
    heaviside_density,
    measure_area,
    measure_perimeter,
    smoothed_delta,
)
from .stokes import (
    interface_normal_derivative,
    permeability,
    solve_all_directions,
    solve_cell_adjoint,
    velocity_at_nodes,
)

BAND_W = 1.5


@dataclass
class BandIntegrand:
    """Per-node samples of an interface integrand (zero off the band)."""

    mask: np.ndarray
    values: np.ndarray


@dataclass
class VelocityField:
    values: np.ndarray
    extension: str
    max_abs: float


def integrate_over_interface(
    psi: LevelSetField, values: np.ndarray, eps_w: float = BAND_W
) -> float:
    """Smoothed line integral: int f ds ~ h^2 sum f delta_eps(psi)|grad psi|."""
    eps = eps_w * psi.grid.h
    weight = smoothed_delta(psi.values, eps) * gradient_norm(psi)
    return float(np.sum(values * weight)) * psi.grid.h**2


def perimeter_gradient(psi: LevelSetField) -> BandIntegrand:
    """Curvature samples on the interface band."""
    mask = band_mask(psi, BAND_W)
    H = curvature(psi)
    return BandIntegrand(mask, np.where(mask, H, 0.0))


def volume_gradient(psi: LevelSetField) -> BandIntegrand:
    """Unit integrand on the interface band."""
    mask = band_mask(psi, BAND_W)
    return BandIntegrand(mask, mask.astype(float))


def _gk_values(psi: LevelSetField, states, adjoints, band_w) -> np.ndarray:
    sols = {s.direction: s for s in states}
    adjs = {a.direction: a for a in adjoints}
    if sorted(sols) != [0, 1] or sorted(adjs) != [0, 1]:
        raise ValueError("need states and adjoints for both directions")
    d = psi.grid.d
    acc = np.zeros((psi.grid.n, psi.grid.n))
    for i in range(d):
        if sols[i].grid != psi.grid or adjs[i].grid != psi.grid:
            raise GridMismatchError("cell solutions live on a different grid")
        du = interface_normal_derivative(velocity_at_nodes(sols[i]), psi, band_w)
        dU = interface_normal_derivative(velocity_at_nodes(adjs[i]), psi, band_w)
        dot_uu = np.sum(du.values * du.values, axis=0)
        dot_uU = np.sum(du.values * dU.values, axis=0)
        acc += dot_uu + dot_uU
    return -acc / d


def permeability_gradient(psi: LevelSetField, states, adjoints) -> BandIntegrand:
    """Interface integrand of -d(tr K / d); nonnegative with fast adjoints."""
    mask = band_mask(psi, BAND_W)
    values = np.where(mask, _gk_values(psi, states, adjoints, BAND_W), 0.0)
    return BandIntegrand(mask, values)


def _screened_smooth(source: np.ndarray, h: float, alpha: float) -> np.ndarray:
    """(I - alpha^2 Lap_periodic)^-1 source, by FFT diagonalization."""
    n = source.shape[0]
    k = np.fft.fftfreq(n, d=1.0 / n)
    lam = (2.0 - 2.0 * np.cos(2.0 * np.pi * k / n)) / h**2
    denom = 1.0 + alpha**2 * (lam[:, None] + lam[None, :])
    return np.real(np.fft.ifft2(np.fft.fft2(source) / denom))


def _check_finite(name: str, arr) -> None:
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in the {name} component")


def assemble_lagrangian_velocity(
    psi: LevelSetField,
    measures,
    tr_k_mean: float,
    states,
    adjoints,
    multipliers,
    penalties,
    c_f: float,
    k_min: float,
    extension: str = "natural",
) -> VelocityField:
    """Ascent velocity of the working Lagrangian for ``advect``.

    Builds T = (1 + a1 C_f) H - a1 - a2 g_K with a_i = l_i - mu_i g_i and
    returns V = -T, extended off the interface either by evaluating each
    term's global field ("natural") or by a screened-Laplacian smoothing of
    the band values ("smoothed").
    """
    l1, l2 = multipliers
    mu1, mu2 = penalties
    _check_finite("measures", [measures.perimeter, measures.area])
    _check_finite("permeability", [tr_k_mean])
    g1 = c_f * measures.perimeter - measures.area
    g2 = k_min - tr_k_mean
    a1 = l1 - mu1 * g1
    a2 = l2 - mu2 * g2

    H = curvature(psi)
    _check_finite("curvature", H)
    gk = _gk_values(psi, states, adjoints, band_w=None)
    _check_finite("permeability-integrand", gk)

    h = psi.grid.h
    if np.max(np.abs(H[band_mask(psi, BAND_W)])) > 1.0 / (5.0 * h) and np.any(
        band_mask(psi, BAND_W)
    ):
        warnings.warn(
            "interface carries features with radius of curvature below 5h",
            RuntimeWarning,
            stacklevel=2,
        )

    V = -(1.0 + a1 * c_f) * H + a1 + a2 * gk
    _check_finite("assembled-velocity", V)

    if extension == "smoothed":
        eps = BAND_W * h
        layer = smoothed_delta(psi.values, eps) * gradient_norm(psi)
        alpha = 2.0 * h
        num = _screened_smooth(V * layer, h, alpha)
        den = _screened_smooth(layer, h, alpha)
        floor = max(float(np.max(np.abs(den))) * 1e-12, 1e-300)
        V = num / np.maximum(den, floor)
        _check_finite("smoothed-extension", V)
    elif extension != "natural":
        raise ValueError(f"unknown extension {extension!r}")

    return VelocityField(V, extension, float(np.max(np.abs(V))))


# ---------------------------------------------------------------------------
# finite-difference validation


@dataclass
class FDReport:
    functional: str
    rows: list  # (eps, quotient, analytic, rel_error)
    analytic: float
    extrapolated: float
    best_rel_error: float
    observed_order: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            f.write("eps,quotient,analytic,rel_error\n")
            for eps, q, a, e in self.rows:
                f.write(f"{eps:.17g},{q:.17g},{a:.17g},{e:.17g}\n")


def _perturbed(psi: LevelSetField, direction: np.ndarray, eps: float) -> LevelSetField:
    return psi.with_values(psi.values - eps * direction)


def validate_shape_derivative(
    functional: str,
    psi: LevelSetField,
    direction=None,
    eps_list=(2.0**-4, 2.0**-5, 2.0**-6, 2.0**-7),
    delta: float = 1e-3,
    tol: float = 1e-8,
    lagrangian_params: dict = None,
) -> FDReport:
    """Central-difference check of an interface-integral shape derivative.

    The level set is perturbed by -eps*direction (displacing the contour by
    +eps*direction along the solid-to-fluid normal on signed-distance
    fields), the functional re-evaluated on both sides, and the quotient
    compared against the analytic band integral.  functional is one of
    "perimeter", "volume", "trace_k", "lagrangian"; the latter two re-solve
    the cell problems per perturbation.

    The dyadic eps sweep keeps the contour displacement at or above one
    cell: below that, the lattice oscillation of the smoothed quadratures
    dominates the quotient and the comparison degenerates.
    """
    if direction is None:
        direction = np.ones_like(psi.values)
    direction = np.asarray(direction, dtype=np.float64)

    def trace_k_of(field: LevelSetField) -> float:
        rho = heaviside_density(field, delta=delta)
        sols = solve_all_directions(rho, tol=tol)
        return permeability(sols, rho).trace_mean

    lp = lagrangian_params or {}

    def lagrangian_of(field: LevelSetField) -> float:
        p = measure_perimeter(field, warn=False)
        a = measure_area(field)
        g1 = lp["c_f"] * p - a
        g2 = lp["k_min"] - trace_k_of(field)
        l1, l2 = lp["multipliers"]
        mu1, mu2 = lp["penalties"]
        return p + l1 * g1 + l2 * g2 - 0.5 * mu1 * g1**2 - 0.5 * mu2 * g2**2

    evaluate = {
        "perimeter": lambda f: measure_perimeter(f, warn=False),
        "volume": measure_area,
        "trace_k": trace_k_of,
        "lagrangian": lagrangian_of,
    }
    if functional not in evaluate:
        raise ValueError(f"unknown functional {functional!r}")
    J = evaluate[functional]

    analytic = _analytic_derivative(functional, psi, direction, delta, tol, lp)

    rows = []
    quotients = []
    for eps in sorted(eps_list, reverse=True):
        plus = J(_perturbed(psi, direction, eps))  # contour moved +eps*s
        minus = J(_perturbed(psi, direction, -eps))
        q = (plus - minus) / (2.0 * eps)
        scale = max(abs(analytic), 1e-300)
        rows.append((eps, q, analytic, abs(q - analytic) / scale))
        quotients.append(q)

    errors = [r[3] for r in rows]
    best = min(errors)
    if len(rows) >= 2 and errors[1] > 0 and errors[0] > 0:
        observed_order = float(
            np.log(errors[0] / errors[1]) / np.log(rows[0][0] / rows[1][0])
        )
    else:
        observed_order = float("nan")
    if len(quotients) >= 2:
        extrapolated = (4.0 * quotients[-1] - quotients[-2]) / 3.0
    else:
        extrapolated = quotients[-1]
    return FDReport(functional, rows, analytic, extrapolated, best, observed_order)


def _analytic_derivative(functional, psi, direction, delta, tol, lp):
    if functional == "perimeter":
        return integrate_over_interface(psi, curvature(psi) * direction)
    if functional == "volume":
        return integrate_over_interface(psi, direction)
    rho = heaviside_density(psi, delta=delta)
    states = solve_all_directions(rho, tol=tol)
    adjoints = [solve_cell_adjoint(rho, s) for s in states]
    gk = _gk_values(psi, states, adjoints, band_w=None)
    d_trk = -integrate_over_interface(psi, gk * direction)
    if functional == "trace_k":
        return d_trk
    # lagrangian: chain rule through the penalty terms
    p = measure_perimeter(psi, warn=False)
    a = measure_area(psi)
    g1 = lp["c_f"] * p - a
    g2 = lp["k_min"] - permeability(states, rho).trace_mean
    l1, l2 = lp["multipliers"]
    mu1, mu2 = lp["penalties"]
    a1 = l1 - mu1 * g1
    a2 = l2 - mu2 * g2
    d_p = integrate_over_interface(psi, curvature(psi) * direction)
    d_a = integrate_over_interface(psi, direction)
    # dL = dP + a1 dg1 + a2 dg2, dg1 = C_f dP - dA, dg2 = -d(trK/d)
    return d_p + a1 * (lp["c_f"] * d_p - d_a) + a2 * (-d_trk)
