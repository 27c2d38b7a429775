"""Exception taxonomy shared across the engine, gateway, store, and service.

Every failure the engine can signal deliberately is an ``EngineError``
subclass with a stable ``code`` so the HTTP layer and the CLI can map
errors without string matching.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all deliberate engine failures."""

    code = "engine_error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__doc__ or self.code)


# -- lookups -----------------------------------------------------------

class UnknownSession(EngineError):
    code = "unknown_session"


class UnknownNode(EngineError):
    code = "unknown_node"


class UnknownDimension(EngineError):
    code = "unknown_dimension"


class UnknownValue(EngineError):
    code = "unknown_value"


class UnknownCell(EngineError):
    code = "unknown_cell"


class UnknownJob(EngineError):
    code = "unknown_job"


class IndexOutOfRange(EngineError):
    code = "index_out_of_range"


# -- node lifecycle ----------------------------------------------------

class ForkFromDraft(EngineError):
    """Forking an uncommitted input node is rejected."""

    code = "fork_from_draft"


class EmptyPrompt(EngineError):
    code = "empty_prompt"


class NotInputForm(EngineError):
    code = "not_input_form"


class NotCommitted(EngineError):
    """Operation requires a node whose prompt has been committed."""

    code = "not_committed"


class WrongImageCount(EngineError):
    code = "wrong_image_count"


class NotPending(EngineError):
    code = "not_pending"


class SourceIncomplete(EngineError):
    code = "source_incomplete"


class NonFinitePosition(EngineError):
    code = "non_finite_position"


class InvalidParams(EngineError):
    code = "invalid_params"


# -- subspace machinery ------------------------------------------------

class EmptySpan(EngineError):
    code = "empty_span"


class OverlappingSpan(EngineError):
    code = "overlapping_span"


class DuplicateValue(EngineError):
    code = "duplicate_value"


class EmptyValue(EngineError):
    code = "empty_value"


class LastValueRemoval(EngineError):
    """A dimension must keep at least one value."""

    code = "last_value_removal"


class NoDimensions(EngineError):
    code = "no_dimensions"


class NotSingleDimension(EngineError):
    """Grouped prompts do not reduce to a single varying segment."""

    code = "not_single_dimension"


class TooFewPrompts(EngineError):
    code = "too_few_prompts"


# -- gateway -----------------------------------------------------------

class QueueFull(EngineError):
    code = "queue_full"


# -- persistence -------------------------------------------------------

class VersionTooNew(EngineError):
    code = "version_too_new"


class CorruptDocument(EngineError):
    code = "corrupt_document"


class IoError(EngineError):
    code = "io_error"


class EmptyLog(EngineError):
    code = "empty_log"


# -- service -----------------------------------------------------------

class PortInUse(EngineError):
    code = "port_in_use"


class DataDirUnwritable(EngineError):
    code = "data_dir_unwritable"


class StaleSequence(EngineError):
    """Client mutated against an out-of-date session sequence."""

    code = "stale_sequence"
