"""Exception hierarchy. Every error carries its class name as a stable,
machine-parsable identifier (the CLI prints it verbatim)."""


class ConformalError(ValueError):
    """Base class for all library errors."""


class MissingColumn(ConformalError):
    pass


class NonNumericCell(ConformalError):
    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column {column!r}: cannot parse {value!r} as a number")


class EmptyDataset(ConformalError):
    pass


class ArityMismatch(ConformalError):
    pass


class BadFractions(ConformalError):
    pass


class ReservedColumn(ConformalError):
    pass


class EmptyReference(ConformalError):
    pass


class MissingResiduals(ConformalError):
    pass


class MissingPredictions(ConformalError):
    pass


class InsufficientCalibration(ConformalError):
    def __init__(self, bin, needed, got):
        self.bin = bin
        self.needed = needed
        self.got = got
        where = "calibration set" if bin is None else f"bin {bin}"
        super().__init__(f"{where}: needs at least {needed} points, got {got}")


class MissingBin(ConformalError):
    pass


class BinOutOfRange(ConformalError):
    pass


class VersionMismatch(ConformalError):
    pass


class CorruptModel(ConformalError):
    pass


class LengthMismatch(ConformalError):
    pass


class EmptyInput(ConformalError):
    pass


class EmptyResults(ConformalError):
    pass


class ConfigError(ConformalError):
    pass
