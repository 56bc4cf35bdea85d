"""Exception types shared across the package.

The CLI maps these onto exit codes: FormatError -> 3, ContractError -> 4.
"""


class FormatError(ValueError):
    """A file is malformed or uses an unsupported variant of its format."""


class ContractError(ValueError):
    """An operation was called with arguments violating its contract."""
