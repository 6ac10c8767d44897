"""Scalar constants shared by the channel model and the solver."""
from dataclasses import dataclass, fields, replace
import math


@dataclass(frozen=True)
class SystemParams:
    """Physical constants, circuit power model and solver settings.

    Powers are in watts, distances in metres, rates in bit/s.
    ``noise_density`` is a thermal density in dBm/Hz.
    """

    M: int = 100
    K: int = 5
    B: float = 1e4
    noise_density: float = -174.0
    sigma_sh_db: float = 8.0
    p_max: float = 1.0
    p_ant: float = 1.0
    p_fix: float = 20.0
    p_ue: float = 0.1
    r_min: float = 14e3
    ber_target: float = 1e-3
    cell_radius: float = 500.0
    d0: float = 50.0
    v: float = 3.0

    # solver settings
    eps: float = 1e-4
    tol_p: float = 1e-4
    tol_sca: float = 1e-4
    tol_d: float = 1e-4
    gamma_phi: float = 0.01
    gamma_lambda: float = 5e-5
    extrapolation: float = 0.5
    step_schedule: str = "constant"
    newton: str = "auto"
    max_t1: int = 30
    max_t2: int = 50
    max_t3: int = 2000
    p_floor: float = 1e-12
    s_min: float = 1e-10
    lambda_cap: float = 1e6

    def __post_init__(self):
        for name in ("M", "K", "max_t1", "max_t2", "max_t3"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        for name in ("B", "p_max", "p_ant", "p_fix", "p_ue", "cell_radius", "d0", "v",
                     "eps", "tol_p", "tol_sca", "tol_d", "gamma_phi", "gamma_lambda",
                     "p_floor", "s_min", "lambda_cap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.sigma_sh_db < 0:
            raise ValueError("sigma_sh_db must be non-negative")
        if self.r_min < 0:
            raise ValueError("r_min must be non-negative")
        if not self.d0 < self.cell_radius:
            raise ValueError("d0 must be smaller than cell_radius")
        if not 0 < self.ber_target < 0.2:
            raise ValueError("ber_target must lie in (0, 0.2)")
        if self.step_schedule not in ("constant", "diminishing"):
            raise ValueError("step_schedule must be 'constant' or 'diminishing'")
        if self.newton not in ("auto", "on", "off"):
            raise ValueError("newton must be 'auto', 'on' or 'off'")
        if not 0 <= self.extrapolation <= 1:
            raise ValueError("extrapolation must lie in [0, 1]")

    @property
    def sigma2(self) -> float:
        """Noise power in watts over the band."""
        return 10 ** ((self.noise_density + 10 * math.log10(self.B) - 30) / 10)

    @property
    def gap(self) -> float:
        """SNR gap for the target bit error rate."""
        return -2.0 / (3.0 * math.log(5.0 * self.ber_target))

    @property
    def p_circuit(self) -> float:
        return self.M * self.p_ant + self.p_fix + self.K * self.p_ue

    def with_(self, **kw) -> "SystemParams":
        return replace(self, **kw)


FIELD_TYPES = {f.name: f.type for f in fields(SystemParams)}
