"""Exception types shared across the package."""


class TembedError(Exception):
    """Base class for all package errors."""


class StructureError(TembedError):
    """The combinatorial input is not a valid planar bipartite dimer graph."""


class InputError(TembedError):
    """Arguments violate a documented precondition."""


class EnumerationCapError(TembedError):
    """Brute-force enumeration refused: the instance exceeds the configured cap."""


class NoPerfectMatchingError(TembedError):
    """Kasteleyn matrix is singular: the graph carries no dimer cover."""


class NotATEmbeddingError(TembedError):
    """Vertex positions do not define a t-embedding (angle/closure failure)."""


class NotPerfectError(TembedError):
    """The embedding is a t-embedding but its boundary is not on the hyperboloid."""


class DegenerateEmbeddingError(TembedError):
    """An edge or face of the embedding degenerates to zero size."""


class DegenerateAlphaError(TembedError):
    """The chosen direction alpha degenerates a T-graph face; perturb alpha."""


class NoGaugeError(TembedError):
    """A Coulomb-gauge nullspace is zero-dimensional."""


class SolveFailedError(TembedError):
    """The gauge solver did not reach the requested residual."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class DegenerateGaugeError(TembedError):
    """The solver converged to a gauge with vanishing entries."""


class OutOfDomainError(TembedError):
    """A requested point lies outside the parametrized domain."""
