"""Exception hierarchy. ValidationError maps to CLI exit code 1, every other
RiskSceneError (and unexpected exceptions) to exit code 2."""


class RiskSceneError(Exception):
    pass


class ValidationError(RiskSceneError):
    """Bad user input: malformed files, invalid config, impossible requests."""


class ParseError(ValidationError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class ConfigError(ValidationError):
    pass


class NumericError(RiskSceneError):
    """Runtime numeric failure: non-finite values, shape mismatches."""


class ShapeMismatchError(NumericError):
    def __init__(self, op, shape_a, shape_b):
        super().__init__(f"{op}: incompatible shapes {tuple(shape_a)} and {tuple(shape_b)}")
        self.shapes = (tuple(shape_a), tuple(shape_b))
