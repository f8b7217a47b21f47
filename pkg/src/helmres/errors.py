"""Exception hierarchy shared across the library."""


class HelmresError(Exception):
    """Base class for all library errors."""


class ConfigurationError(HelmresError):
    """Invalid or inconsistent configuration / contract violation."""


class UnsupportedOperationError(HelmresError):
    """Operation not available for this obstacle (e.g. missing boundary parametrization)."""


class AccuracyEnvelopeError(HelmresError):
    """Special-function evaluation requested outside the supported accuracy envelope."""


class SingularityError(HelmresError):
    """Evaluation at a singular point (e.g. Hankel function at z = 0)."""


class PoleError(HelmresError):
    """Diagonal DtN entry evaluated at a pole (J_n(kR) = 0)."""

    def __init__(self, message, order=None):
        super().__init__(message)
        self.order = order


class MeshError(HelmresError):
    """Mesh construction failure (e.g. lattice empty at the given resolution)."""


class SnapError(HelmresError):
    """Boundary snapping produced a mesh that could not be repaired."""


class AssemblyError(HelmresError):
    """Finite element assembly failure (degenerate triangle)."""


class NearEigenvalueError(HelmresError):
    """Helmholtz factorization is (numerically) singular: k^2 is too close to
    an interior Dirichlet eigenvalue."""

    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class RefineFailureError(HelmresError):
    """Descent refinement did not reach the requested tolerance."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
