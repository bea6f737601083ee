"""Exception hierarchy. ValidationError maps to CLI exit code 1, everything
else (including TrainingDiverged) to exit code 2."""


class GoasError(Exception):
    pass


class ValidationError(GoasError):
    pass


class SchemaError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class TrainingDiverged(GoasError):
    def __init__(self, message: str, checkpoint_path=None):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path
