"""Exception hierarchy shared by all pipeline stages."""


class SpineLigError(Exception):
    """Base class for data errors raised by the library."""


class ParseError(SpineLigError):
    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)


class DegenerateMesh(SpineLigError):
    pass


class EmptyMesh(SpineLigError):
    pass


class NonPositiveRadius(SpineLigError, ValueError):
    pass


class DegenerateGeometry(SpineLigError):
    pass


class EmptyIntersection(SpineLigError):
    pass


class SchemeMismatch(SpineLigError):
    pass


class MissingLabel(SpineLigError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"missing PoI label {name!r}")

    def __str__(self):
        return self.args[0]


class TooFewPairs(SpineLigError):
    pass


class DegenerateConfiguration(SpineLigError):
    pass


class MissingRule(SpineLigError, KeyError):
    def __init__(self, group):
        self.group = group
        super().__init__(f"no projection rule for group {group!r}")

    def __str__(self):
        return self.args[0]


class EmptySet(SpineLigError):
    pass


class KeyMismatch(SpineLigError):
    def __init__(self, missing_detected, missing_truth):
        self.missing_detected = sorted(missing_detected)
        self.missing_truth = sorted(missing_truth)
        super().__init__(
            f"landmark keys differ: only in truth {self.missing_detected}, "
            f"only in detected {self.missing_truth}"
        )


class InvalidSpec(SpineLigError, ValueError):
    pass


class StageError(SpineLigError):
    """Wraps an upstream error with the name of the pipeline stage that failed."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
