from typing import Any, Dict, Optional


class ProtocolViolation(ValueError):
    """Raised when a bit stream breaks the serial streaming protocol

    Args:
        detail (str):
            what went wrong
        cycle (int | None):
            clock cycle at which the violation was observed, if known
    """

    def __init__(self, detail: str, cycle: Optional[int] = None):
        self.detail = detail
        self.cycle = cycle
        where = f' at cycle {cycle}' if cycle is not None else ''
        super().__init__(f'protocol violation{where}: {detail}')


class CapacityError(ValueError):
    """Raised when a dot product could overflow the accumulator guard bits"""


class VerificationFailure(AssertionError):
    """A simulated result disagreed with the integer oracle

    Args:
        reproducer (dict):
            minimal description of the failing case (inputs, width, variant, seed, expected, got)
    """

    def __init__(self, reproducer: Dict[str, Any]):
        self.reproducer = reproducer
        super().__init__(
            'mismatch: ' + ', '.join(f'{key}={value}' for key, value in reproducer.items())
        )
