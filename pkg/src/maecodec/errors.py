"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Array shapes are inconsistent with an operation's contract."""


class NumericError(ValueError):
    """Non-finite values where finite ones are required."""


class ContractError(ValueError):
    """A precondition other than shape/finiteness was violated."""


class BitstreamError(ValueError):
    """A codec bitstream is truncated or corrupt.

    ``offset`` is the byte position at which parsing failed.
    """

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ContainerError(ValueError):
    """A compressed container is malformed or internally inconsistent."""


class CheckpointError(ValueError):
    """A model checkpoint file is malformed or does not match its config."""


class InfeasibleBudgetError(ValueError):
    """No calibrated operating point fits the requested bit budget.

    ``min_bits`` is the smallest budget any calibration point would satisfy.
    """

    def __init__(self, message: str, min_bits: int):
        super().__init__(message)
        self.min_bits = min_bits
