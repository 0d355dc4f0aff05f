"""Error hierarchy shared by every engine module and the CLI."""


class QmodError(Exception):
    """Base class for all engine failures."""
    def __init__(self, detail: str = "qmod failure"):
        self.detail = detail
        super().__init__(self.detail)

# --- Usage / schema errors ---

class ConfigError(QmodError):
    """Raised when a config document cannot be read or does not fit its quiver."""
    def __init__(self, detail: str = "Invalid configuration"):
        super().__init__(detail)

class DimensionMismatchError(QmodError):
    """Raised when a dimension vector is over the wrong vertex set."""
    def __init__(self, detail: str = "Dimension vector does not match the quiver's vertices"):
        super().__init__(detail)

class ZeroDimensionError(QmodError):
    """Raised when the zero dimension type is used where it is meaningless."""
    def __init__(self, detail: str = "The zero dimension vector is not allowed here"):
        super().__init__(detail)

class InvalidHNTypeError(QmodError):
    """Raised when a step sequence violates the HN-type invariants."""
    def __init__(self, detail: str = "Steps do not form a Harder-Narasimhan type"):
        super().__init__(detail)

class MotiveArithmeticError(QmodError):
    """Raised on division by the zero motive or a malformed motive expression."""
    def __init__(self, detail: str = "Invalid motive arithmetic"):
        super().__init__(detail)

class PoleError(MotiveArithmeticError):
    """Raised when a motive is evaluated at a root of its denominator."""
    def __init__(self, detail: str = "Motive has a pole at this point"):
        super().__init__(detail)

class ShapeMismatchError(QmodError):
    """Raised when matrices or block layouts have inconsistent shapes."""
    def __init__(self, detail: str = "Matrix shapes are inconsistent"):
        super().__init__(detail)

# --- Violated assumptions ---

class ExplicitModuleRequiredError(QmodError):
    """Raised when an operation needs the matrices of T but only dim T is known."""
    def __init__(self, detail: str = "explicit T required"):
        super().__init__(detail)

class RigidityNotAssertedError(QmodError):
    """Raised when an operation needs Ext(T,T)=0 and it is neither asserted nor verified."""
    def __init__(self, detail: str = "T must be rigid: set assume_rigid or verify rigidity"):
        super().__init__(detail)

class GammaOracleError(QmodError):
    """Raised when a gamma oracle cannot (or will not) answer."""
    def __init__(self, detail: str = "Gamma oracle failed to answer"):
        super().__init__(detail)

class NotSemistableError(QmodError):
    """Raised when an operation requires a semistable dimension type."""
    def __init__(self, detail: str = "Dimension type is not semistable"):
        super().__init__(detail)

class HypothesisViolationError(QmodError):
    """Raised when the hypotheses of the Poincare polynomial formula fail."""
    def __init__(self, detail: str = "Semistability and stability do not coincide"):
        super().__init__(detail)

class NonPolynomialResultError(QmodError):
    """Raised when a quotient that must be a polynomial is not one."""
    def __init__(self, detail: str = "Result does not reduce to a polynomial"):
        super().__init__(detail)

class InterpolationError(QmodError):
    """Raised when sampled point counts do not determine or confirm a polynomial."""
    def __init__(self, detail: str = "Point-count interpolation failed"):
        super().__init__(detail)

class WeightFitError(QmodError):
    """Raised when no determinant character fits the sampled semi-invariant values."""
    def __init__(self, detail: str = "No consistent weight vector fits the samples"):
        super().__init__(detail)

class DegenerateSemiInvariantError(WeightFitError):
    """Raised when a semi-invariant vanishes on every sample, so every weight fits."""
    def __init__(self, detail: str = "Semi-invariant vanished on all samples"):
        super().__init__(detail)

class DegenerateQuotientError(QmodError):
    """Raised when all quotient coordinates vanish on a point claimed to be stable."""
    def __init__(self, detail: str = "All quotient coordinates vanish"):
        super().__init__(detail)

class InvariantCheckFailed(QmodError):
    """Raised when the invariant suite finds a failing property."""
    def __init__(self, detail: str = "Invariant check failed"):
        super().__init__(detail)

# --- Engine availability and budgets ---

class UnsupportedEngineError(QmodError):
    """Raised when no engine can handle the requested quiver shape."""
    def __init__(self, detail: str = "No engine supports this quiver; supply a user table or interpolation"):
        super().__init__(detail)

class BudgetExceededError(QmodError):
    """Raised when an enumeration would visit more candidates than the budget allows."""
    def __init__(self, detail: str = "Enumeration budget exceeded"):
        super().__init__(detail)
