"""
Custom Exceptions
"""


class KinonavError(Exception):
    """
    Base class for every error raised by kinonav
    """


class ModelError(KinonavError):
    """
    A motion model was given values it cannot integrate
    """


class InvalidStateError(ModelError):
    """
    A motion state or velocity command contained a non-finite component
    """


class InvalidParamsError(ModelError):
    """
    A parameter document could not be turned into a valid parameter set
    """


class IdentificationError(KinonavError):
    """
    System identification could not produce a model from the given logs
    """


class UnidentifiableRegimeError(IdentificationError):
    """
    One of the four regime fits had no samples or a rank deficient design matrix
    """

    def __init__(self, regime: str, message: str) -> None:
        super().__init__(f"{regime}: {message}")
        self.regime = regime


class UnstableFitError(IdentificationError):
    """
    A regime fit produced a non-positive squared natural frequency, the data is not second order explicable
    """

    def __init__(self, regime: str, message: str) -> None:
        super().__init__(f"{regime}: {message}")
        self.regime = regime


class DataError(KinonavError):
    """
    Input data was malformed or inconsistent
    """


class ParseError(DataError):
    """
    A file could not be parsed. Carries the path and the 1-based line number when known
    """

    def __init__(self, path: str, line: int | None, message: str) -> None:
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line = line


class UnsortedTimestampsError(DataError):
    """
    Timestamps were expected to be strictly increasing
    """


class WorldError(KinonavError):
    """
    World specific error
    """


class InfeasibleWorldError(WorldError):
    """
    World generation parameters cannot produce a valid world
    """


class BlockedPositionError(WorldError):
    """
    A position that must be free lies inside an (inflated) obstacle or outside the grid
    """


class UnreachableGoalError(WorldError):
    """
    No path exists between two free positions
    """


class SimulationError(KinonavError):
    """
    The simulator was driven in a way its episode state does not allow
    """


class EpisodeDoneError(SimulationError):
    """
    Step was called on an episode that already terminated
    """


class MissingPolicyError(KinonavError):
    """
    No policy is registered under the requested name
    """


class UsageError(KinonavError):
    """
    Command line arguments or configuration overrides were invalid
    """


class InvalidActionError(SimulationError):
    """
    An action index outside the discrete action space, or a command that is not one of its entries
    """
