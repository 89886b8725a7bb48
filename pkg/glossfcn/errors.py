"""
Error types raised across the recognizer.
"""

from typing import Optional


class GlossFCNError(Exception):
    """Base class for every error raised by glossfcn"""


class DimensionError(GlossFCNError, ValueError):
    """Tensor shapes do not fit the operation"""


class ConfigError(GlossFCNError, ValueError):
    """Invalid model, training or scenario configuration"""


class UsageError(GlossFCNError, RuntimeError):
    """API called in a state that does not allow it"""


class NonFiniteError(GlossFCNError, FloatingPointError):
    """A forward op produced NaN or Inf"""


class SequenceTooShortError(GlossFCNError, ValueError):
    """Input has fewer frames than the first level window"""

    def __init__(self, length: int, minimum: int):
        self.length = length
        self.minimum = minimum
        super().__init__(
            f"Sequence of {length} frames is too short, at least {minimum} frames are required"
        )


class InfeasibleTargetError(GlossFCNError, ValueError):
    """No alignment path of the given length collapses to the target"""

    def __init__(self, steps: int, required: int):
        self.steps = steps
        self.required = required
        super().__init__(
            f"Target needs at least {required} decoding steps but only {steps} are available"
        )


class FormatError(GlossFCNError, ValueError):
    """Malformed binary or text file"""

    def __init__(self, message: str, path: Optional[str] = None, offset: Optional[int] = None):
        self.path = path
        self.offset = offset
        location = ""
        if path is not None:
            location = f" ({path}"
            location += f" at byte {offset})" if offset is not None else ")"
        super().__init__(f"{message}{location}")


class UnsupportedVocabularyError(GlossFCNError, ValueError):
    """Vocabulary larger than the procedural glyph bank"""


class UndefinedMetricError(GlossFCNError, ValueError):
    """Metric has no value for the given inputs"""


class LabelError(GlossFCNError, ValueError):
    """Label id outside [0, v) or a blank inside a target sequence"""
