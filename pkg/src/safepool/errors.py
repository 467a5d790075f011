"""Exception types shared across the package."""


class SafepoolError(Exception):
    """Base class for all package errors."""


class ValidationError(SafepoolError):
    """A raw record failed schema validation."""


class UnknownCategoryError(ValidationError):
    def __init__(self, field: str, label: str):
        super().__init__(f"unknown category {label!r} for {field!r}")
        self.field = field
        self.label = label


class BadAttributeValueError(ValidationError):
    def __init__(self, index: int, value=None):
        super().__init__(f"attribute {index} has non-binary value {value!r}")
        self.index = index
        self.value = value


class MissingFieldError(ValidationError):
    def __init__(self, name: str):
        super().__init__(f"missing field {name!r}")
        self.name = name


class EmptyInputError(SafepoolError):
    pass


class MixedOutcomeError(SafepoolError):
    pass


class ZeroCountError(SafepoolError):
    def __init__(self, category: str):
        super().__init__(f"category {category!r} has zero count")
        self.category = category


class EmptyTrainingSetError(SafepoolError):
    pass


class SingleCategoryError(SafepoolError):
    pass


class LabelOnlyModelError(SafepoolError):
    """Raised when a probability distribution is requested from a label-only model."""


class CategoryNotInTargetError(SafepoolError):
    def __init__(self, category: str):
        super().__init__(f"category {category!r} not present in target category list")
        self.category = category


class LengthMismatchError(SafepoolError):
    pass


class SvmNotStackableError(SafepoolError):
    """Raised when a label-only base model is passed to the stacker."""


class EmptyValidationError(SafepoolError):
    pass


class UnknownLabelError(SafepoolError):
    def __init__(self, label: str):
        super().__init__(f"label {label!r} not in the scoring category list")
        self.label = label


class InconsistentRulesError(SafepoolError):
    pass


class ConfigError(SafepoolError):
    """Invalid experiment configuration; maps to CLI exit code 2."""


class ReportIoError(SafepoolError):
    pass
