"""Exception types raised across the package."""


class LinlabError(Exception):
    """Base class for every error raised by this package."""


class InvalidParam(LinlabError, ValueError):
    """A constructor or function parameter is outside its accepted range."""


class BudgetExceeded(LinlabError):
    """An exploration hit its node, state or operation budget."""


class AlphabetClash(LinlabError):
    """Two LTSs composed in parallel share internal label tags."""


class NotAtPick(LinlabError):
    """pick_choices was asked about a state where no read is choosing."""


class NotSubsequence(LinlabError, ValueError):
    """obs_between was given sequences that are not in subsequence order."""


class NotWsrExecution(LinlabError):
    """The execution does not come from the write-snapshot register."""


class NotDrExecution(LinlabError):
    """The execution does not come from the rollback register."""


class PreconditionFailed(LinlabError):
    """A check was called on a mapping that lacks its prerequisites."""


class MatcherStuck(LinlabError):
    """A certificate matcher proposed an abstract step that is not enabled."""


class ScriptStuck(LinlabError):
    """An adversary script selector matched no enabled transition."""


class TargetMalformed(LinlabError):
    """A trace-set target is not well formed."""


class ParseError(LinlabError, ValueError):
    """Text notation could not be parsed."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position
