"""Exception hierarchy.

Every error maps onto one CLI exit code through its ``exit_code`` attribute:
1 for bad input, 2 for numerical failure, 3 for bad configuration.
"""


class AccentEmaError(Exception):
    exit_code = 2


class InputError(AccentEmaError):
    exit_code = 1


class NumericalError(AccentEmaError):
    exit_code = 2


class ConfigError(AccentEmaError):
    exit_code = 3


# -- input ------------------------------------------------------------------

class UnknownPhoneme(InputError, KeyError):
    def __init__(self, label):
        super().__init__(label)
        self.label = label

    def __str__(self):
        return f"phoneme {self.label!r} is not in the weight table inventory"


class SchemaMismatch(InputError):
    pass


class MissingFile(InputError):
    def __init__(self, path, referenced_by=None):
        self.path = str(path)
        self.referenced_by = referenced_by
        msg = f"missing file: {self.path}"
        if referenced_by:
            msg += f" (referenced by {referenced_by})"
        super().__init__(msg)


class MalformedRow(InputError):
    def __init__(self, path, line, reason):
        self.path = str(path)
        self.line = line
        self.reason = reason
        super().__init__(f"{self.path}:{line}: {reason}")


# -- numerical --------------------------------------------------------------

class DegenerateReference(NumericalError):
    pass


class EmptyCounts(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class EmptySegment(NumericalError):
    pass


class EmptyWindow(NumericalError):
    pass


class TooFewSamples(NumericalError):
    pass


class NonFinite(NumericalError):
    pass


class ConstantPredictor(NumericalError):
    pass


class DegenerateN(NumericalError):
    pass


class PipelineError(AccentEmaError):
    """Wraps a module error with the (speaker, utterance, segment) it hit."""

    def __init__(self, cause, speaker=None, utterance=None, segment=None):
        self.cause = cause
        self.speaker = speaker
        self.utterance = utterance
        self.segment = segment
        self.exit_code = getattr(cause, "exit_code", 2)
        where = ", ".join(
            f"{k}={v}" for k, v in
            (("speaker", speaker), ("utterance", utterance), ("segment", segment))
            if v is not None
        )
        super().__init__(f"{cause} [{where}]" if where else str(cause))


# -- warnings ---------------------------------------------------------------

class DegenerateRange(UserWarning):
    """PMI values span no range; unit weights are used instead."""


class NonConvergence(UserWarning):
    """Weight training hit max_iters before the convergence criterion fired."""


class WidenedSegment(UserWarning):
    """A segment held no frame and was widened to the nearest one."""
