"""Bond potential, kernel, two-point strain and material calibration.

The potential is the exponential profile ``g(r) = g_inf (1 - exp(-beta r^2))``
with ``r = sqrt(|y - x|) S``. Calibration maps shear modulus and critical
energy release rate onto ``(g_inf, beta)``; the quadrature helpers invert
that map independently and are used as round-trip checks.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import integrate

from .discretization import influence as default_influence

log = logging.getLogger(__name__)

UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}


@dataclass(frozen=True)
class MaterialConstants:
    youngs_modulus: float
    poisson_ratio: float
    density: float
    fracture_energy: float

    def __post_init__(self):
        for name in ("youngs_modulus", "density", "fracture_energy"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.poisson_ratio < 0.5:
            raise ValueError("poisson_ratio must lie in (0, 0.5)")

    @property
    def shear_modulus(self) -> float:
        return self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))


@dataclass(frozen=True)
class ModelParams:
    g_inf: float
    beta: float
    r_c: float
    r_break: float
    mu: float
    lam: float
    horizon: float
    dim: int = 2
    density: float = 1.0
    fracture_energy: float = 0.0

    @property
    def g2_zero(self) -> float:
        """Curvature ``g''(0)`` of the potential."""
        return 2.0 * self.g_inf * self.beta

    def with_break(self, r_break: float) -> "ModelParams":
        return replace(self, r_break=r_break)


@dataclass(frozen=True)
class BondStrain:
    S: float
    r: float
    S_c: float


def strain(u_i, u_j, x_i, x_j, params: ModelParams | None = None) -> BondStrain:
    """Two-point strain of the bond ``x_i -> x_j``.

    ``S_c`` is reported only when ``params`` is given (``nan`` otherwise).
    """
    d = np.asarray(x_j, dtype=float) - np.asarray(x_i, dtype=float)
    xi = float(np.hypot(d[0], d[1]))
    if xi == 0.0:
        raise ValueError("coincident bond end points")
    e = d / xi
    S = float(np.dot(np.asarray(u_j, dtype=float) - np.asarray(u_i, dtype=float), e) / xi)
    S_c = params.r_c / math.sqrt(xi) if params is not None else math.nan
    return BondStrain(S=S, r=math.sqrt(xi) * S, S_c=S_c)


def bond_strains(u: np.ndarray, bonds) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``(S, r)`` over a bond table for nodal displacements ``u``."""
    du = u[bonds.j] - u[bonds.i]
    S = (du[:, 0] * bonds.unit[:, 0] + du[:, 1] * bonds.unit[:, 1]) / bonds.length
    return S, np.sqrt(bonds.length) * S


def potential(r, params: ModelParams):
    r = np.asarray(r, dtype=float)
    return params.g_inf * -np.expm1(-params.beta * r * r)


def force_profile(r, params: ModelParams):
    """Derivative ``g'(r)``."""
    r = np.asarray(r, dtype=float)
    return 2.0 * params.g_inf * params.beta * r * np.exp(-params.beta * r * r)


def force_profile_slope(r, params: ModelParams):
    """Second derivative ``g''(r)``."""
    r = np.asarray(r, dtype=float)
    br2 = params.beta * r * r
    return 2.0 * params.g_inf * params.beta * np.exp(-br2) * (1.0 - 2.0 * br2)


def max_force_profile(params: ModelParams) -> float:
    """Peak of ``g'``, attained at ``r_c``."""
    return params.g_inf * math.sqrt(2.0 * params.beta / math.e)


def kernel_rho(xi, horizon: float, dim: int = 2, J: Callable = default_influence):
    """Scaled kernel ``J(xi/eps) / (eps * omega_d eps^d)``."""
    if dim not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {dim}")
    xi = np.asarray(xi, dtype=float)
    return J(xi / horizon) / (horizon * UNIT_BALL_VOLUME[dim] * horizon**dim)


def _moment_closed(dim: int) -> float:
    # int_0^1 r^d (1 - r) dr
    return 1.0 / ((dim + 1) * (dim + 2))


def influence_moment(dim: int, J: Callable | None = None) -> float:
    """``int_0^1 r^d J(r) dr``; closed form for the default influence."""
    if J is None:
        return _moment_closed(dim)
    val, _ = integrate.quad(lambda s: s**dim * float(J(s)), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    return val


def _modulus_factor(dim: int) -> float:
    return {2: 1.0 / 8.0, 3: 1.0 / 10.0}[dim]


def calibrate(
    mat: MaterialConstants,
    horizon: float,
    dim: int = 2,
    r_break_factor: float = 3.0,
    profile_slope: float = 1.0,
) -> ModelParams:
    """Model constants from the shear modulus and ``Gc``.

    ``profile_slope`` is ``f'(0)`` for ``g = g_inf f(beta r^2)``; the
    exponential profile has ``f'(0) = 1``.
    """
    if dim not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {dim}")
    mu = mat.shear_modulus
    Gc = mat.fracture_energy
    M = _moment_closed(dim)
    w = UNIT_BALL_VOLUME
    # Gc = g_inf (2 w_{d-1}/w_d) M  and  mu = c_d g''(0) M with g''(0) = 2 beta g_inf f'(0)
    g_inf = Gc / (2.0 * w[dim - 1] / w[dim] * M)
    beta = mu / (_modulus_factor(dim) * 2.0 * g_inf * profile_slope * M)
    r_c = 1.0 / math.sqrt(2.0 * beta)
    # bond-based constraint lambda = mu implies nu = 1/4 in plane strain
    log.info("calibrated: mu=lambda=%.6g Pa (implied Poisson ratio 0.25, table %.3g)", mu, mat.poisson_ratio)
    return ModelParams(
        g_inf=g_inf,
        beta=beta,
        r_c=r_c,
        r_break=r_break_factor * r_c,
        mu=mu,
        lam=mu,
        horizon=horizon,
        dim=dim,
        density=mat.density,
        fracture_energy=Gc,
    )


def fracture_toughness_quadrature(
    params: ModelParams, dim: int | None = None, J: Callable = default_influence, panels: int | None = None
) -> float:
    """``Gc = g_inf (2 w_{d-1}/w_d) int_0^1 r^d J(r) dr`` evaluated numerically.

    Uses adaptive quadrature, or a composite Simpson rule when ``panels``
    is given.
    """
    d = params.dim if dim is None else dim
    if panels is None:
        val, _ = integrate.quad(lambda s: s**d * float(J(s)), 0.0, 1.0, epsabs=1e-15, epsrel=1e-13)
    else:
        s = np.linspace(0.0, 1.0, 2 * panels + 1)
        val = integrate.simpson(s**d * J(s), x=s)
    w = UNIT_BALL_VOLUME
    return params.g_inf * 2.0 * w[d - 1] / w[d] * val


def effective_moduli(params: ModelParams, dim: int | None = None, J: Callable = default_influence) -> tuple[float, float]:
    """Lame pair ``(mu, lambda)`` implied by ``g''(0)``; always equal."""
    d = params.dim if dim is None else dim
    val, _ = integrate.quad(lambda s: s**d * float(J(s)), 0.0, 1.0, epsabs=1e-15, epsrel=1e-13)
    mu = _modulus_factor(d) * params.g2_zero * val
    return mu, mu


def dimensionless_beta(length: float, params: ModelParams, profile_slope: float = 1.0) -> float:
    """``L * 16 mu / (pi f'(0) Gc)``, equal to ``L * beta`` in 2D."""
    if not length > 0:
        raise ValueError("length must be positive")
    return length * 16.0 * params.mu / (math.pi * profile_slope * params.fracture_energy)
