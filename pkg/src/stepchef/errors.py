"""Exception types shared across the package."""

from __future__ import annotations


class StepchefError(Exception):
    """Base class for all package errors."""


class MalformedGuidelines(StepchefError):
    """A guideline document does not follow the expected grammar."""

    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnknownDomain(StepchefError):
    """Requested task domain is not one of the supported ones."""


class PreconditionFailed(StepchefError):
    """A skill's precondition does not hold in the current world state."""

    def __init__(self, skill: str, reason: str) -> None:
        super().__init__(f"{skill}: {reason}")
        self.skill = skill
        self.reason = reason


class DegenerateConfiguration(StepchefError):
    """Point correspondences are rank-deficient; no homography exists."""


class DuplicateSkillName(StepchefError):
    """Two skills in one domain registry share a name."""


class UnknownSkill(StepchefError):
    """A tool invocation names a skill absent from the registry."""


class ArgumentValidation(StepchefError):
    """A tool invocation's arguments do not conform to the skill schema."""

    def __init__(self, param: str, reason: str) -> None:
        super().__init__(f"{param}: {reason}")
        self.param = param
        self.reason = reason


class ProviderUnavailable(StepchefError):
    """The remote chat-completion endpoint could not be reached or refused us."""


class MalformedProviderReply(StepchefError):
    """The provider returned a payload we cannot interpret."""


class UnmappableStep(StepchefError):
    """The oracle has no skill mapping for the given step text."""


class UnparseablePlan(StepchefError):
    """Provider output contains neither plan steps nor a refusal."""


class RestartRequired(StepchefError):
    """Already-applied effects contradict the new request.

    Providers that signal contradictions out of band may raise this; the
    built-in oracle instead emits discard-and-restart steps inside the
    replanned text.
    """


class SessionTerminal(StepchefError):
    """An operation was attempted on a session in a terminal state."""


class IllegalTransition(StepchefError):
    """A session operation was attempted from a state that does not allow it."""


class StepFailed(StepchefError):
    """A plan step could not be completed by the executor."""


class TurnLimitExceeded(StepchefError):
    """The executor loop hit its per-step turn budget."""
