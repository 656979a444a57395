"""Exception types shared across the package."""


class LedgerError(Exception):
    """Base class for all ledger and metric errors."""


class ParseError(LedgerError):
    """A malformed or invalid record in a ledger stream."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class BalanceError(LedgerError):
    """A debit drove an address balance negative; the ledger is corrupt."""

    def __init__(self, txid: str, day: int, address: str):
        super().__init__(
            f"transaction {txid!r} (day {day}) drives the balance of "
            f"{address!r} negative"
        )
        self.txid = txid
        self.day = day
        self.address = address


class ConvergenceError(LedgerError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class StoreError(LedgerError):
    """A store directory is missing, corrupt, or has an unsupported version."""
