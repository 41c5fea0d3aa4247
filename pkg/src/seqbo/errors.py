"""Exception taxonomy shared by the library, CLI, and HTTP service."""


class SeqboError(Exception):
    """Base class; `code` drives the API error taxonomy."""

    code = "internal"


class InvalidInputError(SeqboError, ValueError):
    """Malformed or infeasible user input (spaces, points, parameters)."""

    code = "invalid_input"


class NumericalError(SeqboError, RuntimeError):
    """Linear-algebra failure that survived all recovery attempts."""

    code = "internal"


class NotFoundError(SeqboError, KeyError):
    code = "not_found"


class ConflictError(SeqboError):
    code = "conflict"


class StateError(SeqboError):
    """Operation not valid in the study's current lifecycle state."""

    code = "state_error"
