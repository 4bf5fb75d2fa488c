"""Heavy-oil fluid properties, rock properties and well/heater source models.

SI units throughout. The Bennison viscosity correlation is evaluated in degrees
Fahrenheit and centipoise internally; compressibility is given in 1/bar and
stored in 1/Pa.
"""
from dataclasses import dataclass, field

import numpy as np

BAR = 1.0e5
CP = 1.0e-3
MILLIDARCY = 9.869233e-16
GRAVITY = 9.81
WATER_DENSITY = 999.0

BENNISON = (-0.8021, 23.8765, 0.31458, -9.21592)


def api_gravity(gamma_sg):
    if gamma_sg <= 0:
        raise ValueError("specific gravity must be positive")
    return 141.5 / gamma_sg - 131.5


def kelvin_to_fahrenheit(T):
    return (np.asarray(T, dtype=float) - 273.15) * 1.8 + 32.0


@dataclass(frozen=True)
class FluidModel:
    gamma_sg: float = 1.0
    a: tuple = BENNISON
    p0: float = 1.01325 * BAR
    T0: float = 288.7056
    compressibility_bar: float = 5.5e-5
    beta: float = 2.5e-4
    beta_sign: int = -1
    c_v: float = 2093.4
    k_tf: float = 0.15
    rho0: float = None

    def __post_init__(self):
        if self.rho0 is None:
            object.__setattr__(self, "rho0", self.gamma_sg * WATER_DENSITY)
        if self.beta_sign not in (-1, 1):
            raise ValueError("beta_sign must be +1 or -1")
        if self.rho0 <= 0 or self.compressibility_bar < 0 or self.c_v <= 0 or self.k_tf <= 0 or self.gamma_sg <= 0:
            raise ValueError(f"invalid fluid parameters: {self}")

    @property
    def c(self):
        """Compressibility in 1/Pa."""
        return self.compressibility_bar / BAR

    @property
    def thermal_coefficient(self):
        return self.beta_sign * self.beta

    @property
    def api(self):
        return api_gravity(self.gamma_sg)

    def viscosity(self, T):
        mu, _ = self.viscosity_and_dT(T)
        return mu

    def viscosity_dT(self, T):
        _, dmu = self.viscosity_and_dT(T)
        return dmu

    def viscosity_and_dT(self, T):
        a1, a2, a3, a4 = self.a
        g = self.api
        tf = kelvin_to_fahrenheit(T)
        if np.any(tf <= 0):
            raise ValueError("temperature below 0 degF is outside the Bennison correlation")
        expo = a3 * g + a4
        mu = 10.0 ** (a1 * g + a2) * tf ** expo * CP
        return mu, mu * expo / tf * 1.8

    def density(self, p, T):
        return self.rho0 * np.exp(self.c * (np.asarray(p) - self.p0) + self.thermal_coefficient * (np.asarray(T) - self.T0))

    def density_dp(self, p, T):
        return self.c * self.density(p, T)

    def density_dT(self, p, T):
        return self.thermal_coefficient * self.density(p, T)


@dataclass(frozen=True, eq=False)
class RockModel:
    perm: np.ndarray          # (n_cells, ndim) diagonal permeability, m^2
    poro: np.ndarray          # (n_cells,)
    rho_r: float = 2500.0
    c_r: float = 920.0
    k_tr: float = 1.7295772056

    def __post_init__(self):
        perm = np.atleast_2d(np.asarray(self.perm, dtype=float))
        poro = np.asarray(self.poro, dtype=float)
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "poro", poro)
        if np.any(perm <= 0):
            raise ValueError("permeabilities must be positive")
        if np.any(poro <= 0) or np.any(poro >= 1):
            raise ValueError("porosity must lie in (0, 1)")
        if min(self.rho_r, self.c_r, self.k_tr) <= 0:
            raise ValueError("rock density, heat capacity and conductivity must be positive")

    @classmethod
    def uniform(cls, n_cells, perm, poro=0.2, **kw):
        perm = np.broadcast_to(np.atleast_1d(np.asarray(perm, dtype=float)), (n_cells, len(np.atleast_1d(perm))))
        return cls(perm=np.array(perm), poro=np.full(n_cells, float(poro)), **kw)

    def conductivity(self, fluid):
        # porosity-weighted mixing as in the model description: phi*k_rock + (1-phi)*k_fluid
        return self.poro * self.k_tr + (1.0 - self.poro) * fluid.k_tf


def equivalent_radius(kx, ky, dx, dy):
    """Peaceman equivalent radius for an anisotropic cell."""
    if min(kx, ky, dx, dy) <= 0:
        raise ValueError("permeabilities and cell lengths must be positive")
    num = 0.14 * np.sqrt(np.sqrt(ky / kx) * dx**2 + np.sqrt(kx / ky) * dy**2)
    den = 0.5 * ((ky / kx) ** 0.25 + (kx / ky) ** 0.25)
    return num / den


def peaceman_rate(k_e, mu, p_bh, p, h, r_e, r_w):
    """Well rate, positive into the reservoir when ``p_bh > p``."""
    if r_e <= r_w:
        raise ValueError(f"equivalent radius {r_e} must exceed the well radius {r_w}")
    return 2.0 * np.pi * h * k_e / (mu * np.log(r_e / r_w)) * (p_bh - p)


@dataclass
class SourceTerm:
    kind: str                     # injector | producer | heater
    cell: int
    rate_mode: str = "fixed-rate"  # fixed-rate | peaceman
    q_target: float = 0.0
    p_bh: float = 0.0
    T_inj: float = 422.039
    U: float = 5.44409e-6
    T_heater: float = 422.039
    r_w: float = 0.1
    h: float = 5.0
    D_x: float = 5.0
    D_y: float = 5.0
    well_index: float = field(default=None, repr=False)  # 2*pi*h*K_e/ln(r_e/r_w), set by bind()

    def __post_init__(self):
        if self.kind not in ("injector", "producer", "heater"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.rate_mode not in ("fixed-rate", "peaceman"):
            raise ValueError(f"unknown rate mode {self.rate_mode!r}")
        if self.q_target < 0:
            raise ValueError("q_target must be non-negative")
        if self.r_w <= 0:
            raise ValueError("well radius must be positive")

    def bind(self, rock):
        """Precompute the Peaceman well index from the host cell's permeability."""
        if self.kind != "heater" and self.rate_mode == "peaceman":
            kx, ky = rock.perm[self.cell, 0], rock.perm[self.cell, 1]
            r_e = equivalent_radius(kx, ky, self.D_x, self.D_y)
            if r_e <= self.r_w:
                raise ValueError(f"equivalent radius {r_e} must exceed the well radius {self.r_w}")
            self.well_index = 2.0 * np.pi * self.h * np.sqrt(kx * ky) / np.log(r_e / self.r_w)
        return self

    def rate(self, p, T, fluid):
        """Volumetric well rate magnitude and its (p, T) derivatives."""
        if self.rate_mode == "fixed-rate":
            return self.q_target, 0.0, 0.0
        if self.well_index is None:
            raise RuntimeError("Peaceman source used before bind(rock)")
        mu, dmu = fluid.viscosity_and_dT(T)
        drive = self.p_bh - p if self.kind == "injector" else p - self.p_bh
        q = self.well_index / mu * drive
        if q <= 0.0:
            return 0.0, 0.0, 0.0
        if q >= self.q_target:
            return self.q_target, 0.0, 0.0
        dq_dp = self.well_index / mu * (-1.0 if self.kind == "injector" else 1.0)
        dq_dT = -q * dmu / mu
        return q, dq_dp, dq_dT


def source_contributions(src, p, T, fluid, cell_volume):
    """Source densities (per unit volume) and their derivatives for one host cell.

    Returns ``(f, f_T, df_dp, df_dT, dfT_dp, dfT_dT)``.
    """
    if src.kind == "heater":
        return 0.0, src.U * (src.T_heater - T) / cell_volume, 0.0, 0.0, 0.0, -src.U / cell_volume
    q, dq_dp, dq_dT = src.rate(p, T, fluid)
    cv = fluid.c_v
    if src.kind == "injector":
        rho = fluid.density(p, src.T_inj)
        rho_p = fluid.c * rho
        m = q * rho
        dm_dp = dq_dp * rho + q * rho_p
        dm_dT = dq_dT * rho
        h = cv * src.T_inj
        return (m / cell_volume, m * h / cell_volume, dm_dp / cell_volume, dm_dT / cell_volume,
                dm_dp * h / cell_volume, dm_dT * h / cell_volume)
    rho = fluid.density(p, T)
    rho_p = fluid.density_dp(p, T)
    rho_T = fluid.density_dT(p, T)
    m = q * rho
    dm_dp = dq_dp * rho + q * rho_p
    dm_dT = dq_dT * rho + q * rho_T
    return (-m / cell_volume, -m * cv * T / cell_volume, -dm_dp / cell_volume, -dm_dT / cell_volume,
            -dm_dp * cv * T / cell_volume, -(dm_dT * T + m) * cv / cell_volume)
