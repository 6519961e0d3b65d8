"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""


class QnrError(Exception):
    exit_code = 1


class DomainError(QnrError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""

    exit_code = 2


class OutOfRangeError(QnrError, IndexError):
    """A query reaches past what a prime table covers."""

    exit_code = 2


class ContractError(QnrError, TypeError):
    """A caller-supplied certificate or callable is missing or malformed."""

    exit_code = 2


class ResourceLimitError(QnrError, RuntimeError):
    """A configured size, memory or search budget would be exceeded."""

    exit_code = 4
