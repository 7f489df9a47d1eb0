"""Exception hierarchy shared by all storytopics modules.

Three branches map onto the CLI exit codes: configuration problems (exit 2),
data/file problems (exit 3), and numeric failures (exit 4).
"""


class StorytopicsError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(StorytopicsError):
    """Invalid configuration: bad parameter values, missing files named in a config."""


class DataError(StorytopicsError):
    """Malformed or unusable input data."""


class NumericError(StorytopicsError):
    """A numeric stage received input it cannot process or failed to converge."""


# --- corpus ---------------------------------------------------------------

class MissingColumnError(DataError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"required column {column!r} not found in header")


class MalformedRowError(DataError):
    def __init__(self, line_no, reason):
        self.line_no = line_no
        super().__init__(f"malformed row at line {line_no}: {reason}")


class DuplicateIdError(DataError):
    def __init__(self, story_id):
        self.story_id = story_id
        super().__init__(f"duplicate story id {story_id}")


# --- lda / embed ----------------------------------------------------------

class EmptyCorpusError(DataError):
    """The corpus contains no stories (or no tokens at all)."""


class AllEmptyDocumentsError(DataError):
    """Every document lost all of its tokens during preprocessing."""


class NoTokenMeetsMinCountError(DataError):
    """No token occurs often enough to enter the embedding vocabulary."""


class MalformedHeaderError(DataError):
    """The word2vec binary header is not '<count> <dim>\\n'."""


class TruncatedFileError(DataError):
    """A binary file ended before the declared number of records."""


# --- docgeom --------------------------------------------------------------

class AllEmptyError(DataError):
    """Every story matrix is empty; no shortest length exists."""


class ShapeMismatchError(DataError):
    """Reduced story matrices do not share a common shape."""


# --- wmd ------------------------------------------------------------------

class EmptyDocumentError(DataError):
    """A document has no embeddable token, so it has no nBOW distribution."""


# --- project --------------------------------------------------------------

class PerplexityTooLargeError(NumericError):
    """Perplexity must satisfy 1 <= perplexity < (n - 1) / 3."""


class NonFiniteInputError(NumericError):
    """The projection input contains NaN or infinite entries."""


# --- evalcluster ----------------------------------------------------------

class KTooLargeError(ConfigError):
    """Requested more clusters than there are points."""


class UnknownStoryError(DataError):
    def __init__(self, story_id):
        self.story_id = story_id
        super().__init__(f"unknown story id {story_id}")


# --- pipeline -------------------------------------------------------------

class StageError(StorytopicsError):
    """Wraps an error raised inside a pipeline stage with the stage name."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


class OutputDirLockedError(ConfigError):
    """Another run currently owns the output directory."""
