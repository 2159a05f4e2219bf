from typing import Optional


class RxNeuralError(Exception):
    """Base exception for all rxneural errors."""


class InvalidArgumentError(RxNeuralError, ValueError):
    """Raised when an operation receives an argument outside its domain."""


class ProfileTooLargeError(InvalidArgumentError):
    """Raised when a joint wrong key response table would be too large to build."""


class ConfigurationError(RxNeuralError):
    """Raised when an experiment configuration fails schema validation."""


class AttackError(InvalidArgumentError):
    """Raised when distinguishers, profiles and the attack configuration disagree."""


class ArtifactError(RxNeuralError, OSError):
    """
    Base exception for artifact files (datasets, models, profiles) that are
    missing, corrupt or written by an incompatible version.
    """

    def __init__(self, *args, path: Optional[str] = None) -> None:
        """
        Initializes the ArtifactError.

        Args:
            *args: Arguments to pass to the base Exception class.
            path: The file the error relates to.
        """
        super().__init__(*args)
        self.path = path

    def __str__(self) -> str:
        message = super().__str__()
        if self.path and self.path not in message:
            return f"{message} ({self.path})"
        return message


class DatasetFileError(ArtifactError):
    """Raised when a dataset file cannot be read back."""


class ModelFileError(ArtifactError):
    """Raised when a model file cannot be read back."""


class ProfileFileError(ArtifactError):
    """Raised when a profile file cannot be read back."""
