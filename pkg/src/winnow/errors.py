"""Exception taxonomy; the CLI maps these onto exit-code categories."""


class WinnowError(Exception):
    """Base class for package-specific failures."""


class FormatError(WinnowError):
    """A file's bytes do not parse as the format they claim to be."""


class WavFormatError(FormatError):
    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class SampleRateError(WavFormatError):
    """Audio sample rate differs from 16 kHz; resampling is not supported."""


class CheckpointMagicError(FormatError):
    """Checkpoint file does not start with the THLN magic."""


class CheckpointVersionError(FormatError):
    """Checkpoint format version is not one this build reads."""


class CheckpointTruncatedError(FormatError):
    """Checkpoint ended before its declared payload."""


class ConfigError(WinnowError):
    """Configuration schema violation or checkpoint/config mismatch."""
