"""Exception types raised across the package."""


class SonoscopeError(Exception):
    """Base class for all package errors."""


class FormatError(SonoscopeError):
    """A persisted file is malformed: bad magic, wrong version, truncation."""


class DuplicateDayError(SonoscopeError):
    """A sensor-day was ingested twice without the overwrite flag."""


class MissingDayError(SonoscopeError):
    """Requested sensor-day has not been ingested."""


class UnknownSensorError(SonoscopeError):
    pass


class UnknownFrameError(SonoscopeError):
    pass


class NoPositivesError(SonoscopeError):
    """Training-set assembly found no effective positive labels."""


class DegenerateTrainingError(SonoscopeError):
    """Training data carries no usable signal (e.g. all embeddings identical)."""


class UnknownConceptError(SonoscopeError):
    pass


class UnindexedScopeError(SonoscopeError):
    """A query targeted a scope no built index covers."""


class UnknownSessionError(SonoscopeError):
    pass


class UnknownNodeError(SonoscopeError):
    """A cluster-tree node id absent from the session's current day tree."""


class UnknownJobError(SonoscopeError):
    pass


class UnknownQueryError(SonoscopeError):
    pass


class TrainingInProgressError(SonoscopeError):
    """The concept already has an active training job."""


class NoAudioError(SonoscopeError):
    """The clip has no stored waveform."""
