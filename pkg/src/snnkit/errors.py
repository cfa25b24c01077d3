"""Exception hierarchy shared across the toolkit."""


class SnnError(Exception):
    """Base class for all toolkit errors."""


class DataError(SnnError):
    """Problems with input data files or dataset windows."""


class BadMagic(DataError):
    pass


class Truncated(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class BadLabel(DataError):
    pass


class OutOfRange(DataError):
    pass


class NonFiniteState(SnnError):
    """NaN/inf appeared in neuron state; usually bad hyperparameters."""

    def __init__(self, msg, stimulus_index=None):
        super().__init__(msg)
        self.stimulus_index = stimulus_index


class BadSpec(SnnError):
    pass


class IncompatibleStates(SnnError):
    pass


class InsufficientData(SnnError):
    pass


class PoolTooSmall(SnnError):
    pass


class BadRange(SnnError):
    pass


class IoFailure(SnnError):
    pass


class VersionMismatch(IoFailure):
    pass


class ChecksumMismatch(IoFailure):
    pass
