"""Chart-local curvature computations, bump deformations and non-vanishing certificates."""

from .errors import CapabilityError, CurvCertError, DomainError, GeometryError, PreconditionError, UsageError

__version__ = "0.1.0"

__all__ = ["CapabilityError", "CurvCertError", "DomainError", "GeometryError", "PreconditionError",
           "UsageError", "__version__"]
