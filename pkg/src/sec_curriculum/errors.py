"""Exception types raised across the package."""


class CurriculumError(Exception):
    """Base class for every deliberate error in this package."""


# Problem pool / registry construction.

class EmptyPool(CurriculumError):
    pass


class DuplicateId(CurriculumError):
    pass


class MissingRate(CurriculumError):
    pass


class BadK(CurriculumError):
    pass


# Bandit state.

class EmptyCategories(CurriculumError):
    pass


class MissingAdvantage(CurriculumError):
    pass


class UnknownCategory(CurriculumError):
    pass


# Advantage estimation.

class GroupTooSmall(CurriculumError):
    pass


# Harness.

class BadConfig(CurriculumError):
    pass


class UnknownScenario(CurriculumError):
    pass


class NonNumericAxis(CurriculumError):
    pass


# Checkpoint files.

class VersionMismatch(CurriculumError):
    pass


class CorruptFile(CurriculumError):
    pass


class ProtocolError(CurriculumError):
    """A wire-protocol violation.  `code` is the machine-readable reason."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
