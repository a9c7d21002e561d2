"""Exception hierarchy shared by every logicerr module."""

from __future__ import annotations


class LogicErrError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(LogicErrError, ValueError):
    pass


class ConfigurationError(LogicErrError):
    pass


class TaxonomyError(ConfigurationError):
    """The taxonomy data file is malformed or violates a structural invariant."""


class CredentialError(LogicErrError):
    pass


class TransportError(LogicErrError):
    pass


class FixtureError(LogicErrError):
    """A mock transport was asked for a prompt it has no recorded response for."""

    def __init__(self, prompt_hash: str):
        super().__init__(f"no fixture for prompt hash {prompt_hash}")
        self.prompt_hash = prompt_hash


class AugmentationParseError(LogicErrError, ValueError):
    """No JSON object could be found in a model response."""


class AugmentationSchemaError(AugmentationParseError):
    """A JSON object was found but it carries no code field."""


class JudgeEnvironmentError(LogicErrError):
    """The toolchain or scratch sandbox could not be set up.

    Distinct from a compile error: nothing is known about the submitted code.
    """


class DatasetError(LogicErrError):
    pass


class PipelineError(LogicErrError):
    pass


class PreconditionError(LogicErrError):
    pass


class EvaluationError(LogicErrError):
    pass
