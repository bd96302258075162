"""Exception types shared across the package."""


class AnisphereError(Exception):
    """Base class for all package errors."""


class MeshMismatchError(AnisphereError):
    """Fields defined on different meshes were combined."""


class PositivityError(AnisphereError):
    """A speed profile tau is non-positive somewhere on the sphere."""


class ConvexityError(AnisphereError):
    """D^2 tau + tau I fails to be positive definite at some vertex."""


class SingularCurvatureError(AnisphereError):
    """D^2 q + q I is singular at some vertices (curvature degenerates)."""

    def __init__(self, message, vertices=None):
        super().__init__(message)
        self.vertices = list(vertices) if vertices is not None else []


class DegenerateError(AnisphereError):
    """The patch differential dX is singular at some sample."""


class InfiniteRadiusError(AnisphereError):
    """Some anisotropic principal curvature vanishes (infinite radius)."""


class NotSpacelikeError(AnisphereError):
    """A sphere curve fails the spacelike condition L(alpha') > 0."""


class EmptyLevelSetError(AnisphereError):
    """A canal level curve extraction found no zero crossing."""


class NonConvexInputError(AnisphereError):
    """An input mesh expected to be convex has inconsistent dihedrals."""


class GridTooSmallError(AnisphereError):
    """A level-set grid does not contain the surface with enough margin."""


class CFLViolationError(AnisphereError):
    """A Hamilton-Jacobi step was requested with an unstable time step."""


class SolverError(AnisphereError):
    """A linear solve failed to reach the requested residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ValidationError(AnisphereError):
    """A JSON config failed schema validation."""
