"""
Custom exceptions for the UVDS toolkit.

These exceptions provide specific error types so callers (and the CLI
dispatcher) can tell bad input apart from numerical failure.
"""

from typing import Optional, Dict, Any, Sequence


class UVDSError(Exception):
    """Base exception for all UVDS-specific errors"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    @property
    def error_type(self) -> str:
        return self.details.get("error_type", "uvds_error")


class InputValidationError(UVDSError):
    """Raised when inputs, files or configuration are invalid (CLI exit code 2)"""


class NumericalError(UVDSError):
    """Raised when a numerical routine fails (CLI exit code 3)"""


class ShapeMismatchError(InputValidationError):
    """Raised when matrix or vector shapes are inconsistent"""

    def __init__(self, operation: str, expected: Any, got: Any):
        super().__init__(
            f"Shape mismatch in {operation}: expected {expected}, got {got}",
            {
                "operation": operation,
                "expected": str(expected),
                "got": str(got),
                "error_type": "shape_mismatch",
            },
        )
        self.operation = operation


class DatasetIOError(InputValidationError):
    """Raised when dataset or model files cannot be read or written"""

    def __init__(self, path: str, reason: str):
        super().__init__(
            f"I/O error on {path}: {reason}",
            {"path": path, "reason": reason, "error_type": "io_error"},
        )
        self.path = path


class UnknownClassError(InputValidationError):
    """Raised when a split references class ids absent from the labels"""

    def __init__(self, missing: Sequence[int]):
        missing = sorted(int(c) for c in missing)
        super().__init__(
            f"Split references unknown classes: {missing}",
            {"missing_classes": missing, "error_type": "unknown_class"},
        )
        self.missing = missing


class InvalidSplitError(InputValidationError):
    """Raised when the seen/unseen split is malformed (overlap, empty lists)"""

    def __init__(self, reason: str, overlap: Optional[Sequence[int]] = None):
        super().__init__(
            f"Invalid seen/unseen split: {reason}",
            {
                "reason": reason,
                "overlap": sorted(int(c) for c in overlap) if overlap else [],
                "error_type": "invalid_split",
            },
        )


class EmptySideError(InputValidationError):
    """Raised when one side of a split ends up with no rows"""

    def __init__(self, side: str):
        super().__init__(
            f"The {side} side of the split has no rows",
            {"side": side, "error_type": "empty_side"},
        )
        self.side = side


class ClassTooSmallError(InputValidationError):
    """Raised when a class cannot be split into train and validation rows"""

    def __init__(self, class_id: int, size: int, required: int = 2):
        super().__init__(
            f"Class {class_id} has {size} rows, at least {required} are required",
            {
                "class_id": int(class_id),
                "size": int(size),
                "required": required,
                "error_type": "class_too_small",
            },
        )
        self.class_id = class_id


class BadKError(InputValidationError):
    """Raised when a k-nn neighbourhood size is outside [1, N-1]"""

    def __init__(self, k: int, n_points: int):
        super().__init__(
            f"k={k} is invalid for {n_points} points (need 1 <= k <= {n_points - 1})",
            {"k": k, "n_points": n_points, "error_type": "bad_k"},
        )


class EmptyAnchorsError(InputValidationError):
    """Raised when nearest-neighbour classification has nothing to match against"""

    def __init__(self):
        super().__init__("No anchors supplied for nearest-neighbour classification",
                         {"error_type": "empty_anchors"})


class SingleClassError(InputValidationError):
    """Raised when a classifier is trained on fewer than two classes"""

    def __init__(self, n_classes: int):
        super().__init__(
            f"Classifier training needs at least 2 classes, got {n_classes}",
            {"n_classes": n_classes, "error_type": "single_class"},
        )


class LengthMismatchError(InputValidationError):
    """Raised when prediction and truth vectors differ in length"""

    def __init__(self, n_pred: int, n_truth: int):
        super().__init__(
            f"Predictions ({n_pred}) and truth ({n_truth}) differ in length",
            {"n_pred": n_pred, "n_truth": n_truth, "error_type": "length_mismatch"},
        )


class ConfigError(InputValidationError):
    """Raised when a configuration record fails validation"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            f"Configuration error: {message}",
            {"config_error": message, "error_type": "config_error", **(details or {})},
        )


class NonFiniteError(NumericalError):
    """Raised when an input or intermediate matrix holds NaN or Inf"""

    def __init__(self, operation: str):
        super().__init__(
            f"Non-finite values encountered in {operation}",
            {"operation": operation, "error_type": "non_finite"},
        )
        self.operation = operation


class NoConvergenceError(NumericalError):
    """Raised when an eigen-solver fails to converge"""

    def __init__(self, operation: str, original_error: Optional[Exception] = None):
        super().__init__(
            f"Eigen-solver did not converge during {operation}",
            {
                "operation": operation,
                "original_error": str(original_error) if original_error else None,
                "error_type": "no_convergence",
            },
        )


class SingularPencilError(NumericalError):
    """Raised when a Sylvester eigenvalue sum falls below the singularity guard"""

    def __init__(self, min_denominator: float, guard: float):
        super().__init__(
            f"Sylvester pencil is singular: |lambda_L + lambda_R| = {min_denominator:.3e} "
            f"< guard {guard:.3e} (reduce beta)",
            {
                "min_denominator": float(min_denominator),
                "guard": float(guard),
                "error_type": "singular_pencil",
            },
        )


class RankDeficientError(NumericalError):
    """Raised when a least-squares design matrix is (numerically) rank deficient"""

    def __init__(self, smallest: float, largest: float):
        super().__init__(
            f"Design matrix is rank deficient: eigenvalue ratio {smallest:.3e}/{largest:.3e}",
            {
                "smallest_eigenvalue": float(smallest),
                "largest_eigenvalue": float(largest),
                "error_type": "rank_deficient",
            },
        )


class DivergedError(NumericalError):
    """Raised when the alternating optimizer produces a non-finite loss"""

    def __init__(self, iteration: int):
        super().__init__(
            f"Optimization diverged at outer iteration {iteration}",
            {"iteration": iteration, "error_type": "diverged"},
        )
        self.iteration = iteration
