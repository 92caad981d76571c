"""Exception hierarchy shared by every pipeline stage.

Each error carries a short machine-readable ``code``; the CLI prints it as
``ERROR <code>: <message>``.
"""


class MJError(Exception):
    code = "MJError"


class SourceError(MJError):
    """An error tied to a position in MJ source."""

    def __init__(self, message, line=0, col=0, filename=None):
        self.message = message
        self.line = line
        self.col = col
        self.filename = filename
        super().__init__(self.render())

    def render(self):
        where = f"{self.filename or '<source>'}:{self.line}:{self.col}"
        return f"{where}: {self.message}"


class EmptySource(SourceError):
    code = "EmptySource"


class MJSyntaxError(SourceError):
    code = "SyntaxError"

    def __init__(self, message, line=0, col=0, expected=(), filename=None):
        self.expected = tuple(sorted(set(expected)))
        super().__init__(message, line, col, filename)


class MJTypeError(SourceError):
    code = "TypeError"

    def __init__(self, message, line=0, col=0, found=None, expected=None, filename=None):
        self.found = found
        self.expected = expected
        super().__init__(message, line, col, filename)


class UnresolvedName(SourceError):
    code = "UnresolvedName"


class UnknownLibraryFunction(SourceError):
    code = "UnknownLibraryFunction"


class UncataloguedConstruct(MJError):
    code = "UncataloguedConstruct"


class RuntimeFault(SourceError):
    code = "RuntimeFault"


class StepBudgetExceeded(MJError):
    code = "StepBudgetExceeded"


class CoverageImpossible(MJError):
    code = "CoverageImpossible"


class InvalidCase(MJError):
    code = "InvalidCase"


class UnknownOpId(MJError):
    code = "UnknownOpId"


class EmptyTrace(MJError):
    code = "EmptyTrace"


class MalformedTrace(MJError):
    code = "MalformedTrace"


class NonMonotoneTime(MJError):
    code = "NonMonotoneTime"


class LengthMismatch(MJError):
    code = "LengthMismatch"


class NegativeEnergyAfterIdleSubtraction(MJError):
    code = "NegativeEnergyAfterIdleSubtraction"


class TooFewCases(MJError):
    code = "TooFewCases"


class RankDeficient(MJError):
    code = "RankDeficient"

    def __init__(self, message, groups=()):
        self.groups = [list(g) for g in groups]
        super().__init__(message)


class StaleSuggestion(MJError):
    code = "StaleSuggestion"


class TransformTypeError(MJError):
    code = "TransformTypeError"


class CaseMappingFailure(MJError):
    code = "CaseMappingFailure"


class MalformedCounts(MJError):
    code = "MalformedCounts"
