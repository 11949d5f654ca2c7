"""Exception types shared across the package.

The CLI maps these onto exit codes, so solver code should raise the most
specific class that applies instead of bare ValueError/RuntimeError.
"""


class InputError(ValueError):
    """Rejected input: malformed files, bad parameters, out-of-range sizes."""


class SizeLimitError(InputError):
    """A reference-grade routine was asked for more than it is gated to handle."""


class SolverError(RuntimeError):
    """A solve failed for numerical reasons (not because the input was malformed)."""


class SingularMatrixError(SolverError):
    """Cholesky hit a non-positive pivot; ``index`` names the failing row/column."""

    def __init__(self, index: int, pivot: float):
        self.index = index
        self.pivot = pivot
        super().__init__(
            f"matrix is not positive definite: pivot {pivot:.6g} at index {index}"
        )


class UnseededComponentError(InputError):
    """A connected component holds no seed, so its harmonic labels are undetermined."""

    def __init__(self, component: int, nodes):
        self.component = component
        self.nodes = list(nodes)
        shown = ", ".join(str(v) for v in self.nodes[:8])
        more = "" if len(self.nodes) <= 8 else f", ... ({len(self.nodes)} nodes)"
        super().__init__(
            f"connected component {component} has no seed (nodes {shown}{more})"
        )
