"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit status 2); numerical
alarms derive from :class:`NumericsAlarm` (CLI exit status 3).
"""


class NcShilovError(Exception):
    pass


class InputError(NcShilovError):
    pass


class NumericsAlarm(NcShilovError):
    pass


class InvalidInput(InputError, ValueError):
    pass


class NotHermitian(InputError, ValueError):
    pass


class NotAMultiplier(InputError, ValueError):
    pass


class NotIsometric(InputError, ValueError):
    pass


class StructureViolation(InputError, ValueError):
    pass


class NotApplicable(InputError, ValueError):
    """A hypothesis of a characterization theorem fails; ``diagnostics`` says where."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NumericalDegeneracy(NumericsAlarm):
    pass


class InconsistentNumerics(NumericsAlarm):
    pass


class InconclusiveVerdict(NumericsAlarm):
    pass


class ThmViolationAlarm(NumericsAlarm):
    """A computed object contradicts a guaranteed structural fact."""


class SampledOnlyWarning(UserWarning):
    pass


class GreedyBoundaryWarning(UserWarning):
    pass
