class OpenRabiError(Exception):
    pass


class DegenerateAnisotropy(OpenRabiError):
    """|tau| = 1, where the (1 - tau^2)^2 prefactor of the s_z quadratic vanishes."""


class NegativeRadicand(OpenRabiError):
    pass


class EtaZero(OpenRabiError):
    """eta = (tau-1)^2 ((1+tau)^2 - 4 kappa) vanishes: asymptote of the critical lines."""


class NoRootInWindow(OpenRabiError):
    pass


class NotSuperradiant(OpenRabiError):
    pass


class SingularK(OpenRabiError):
    """Second-moment system is singular (exact criticality or unstable phase)."""


class InsufficientDecades(OpenRabiError):
    pass


class DegenerateNullSpace(OpenRabiError):
    def __init__(self, msg, basis=None):
        super().__init__(msg)
        self.basis = basis


class ConfigError(OpenRabiError):
    pass
