from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from openrabi.errors import ConfigError


@dataclass(frozen=True)
class ModelParams:
    """Parameter point of the model.

    ``g_tilde`` is g/sqrt(omega*Delta), ``kappa`` is D/(g^2/Delta) and
    ``gamma_tilde`` is gamma/omega. ``omega`` and ``delta`` only matter for
    the finite-ratio solver and for converting rates to physical units; the
    mean-field and Gaussian layers work in units of omega.
    """

    tau: float
    g_tilde: float
    kappa: float = 0.0
    gamma_tilde: float = 0.5
    omega: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        if not self.omega > 0 or not self.delta > 0:
            raise ConfigError("omega and delta must be positive")
        if self.kappa < 0:
            raise ConfigError("kappa must be >= 0")
        if self.gamma_tilde < 0:
            raise ConfigError("gamma_tilde must be >= 0")
        if self.g_tilde < 0:
            raise ConfigError("g_tilde must be >= 0 (negative couplings are a phase redefinition)")

    @property
    def ratio(self) -> float:
        return self.delta / self.omega

    @property
    def gamma(self) -> float:
        return self.gamma_tilde * self.omega

    def with_(self, **kw) -> "ModelParams":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return asdict(self)
