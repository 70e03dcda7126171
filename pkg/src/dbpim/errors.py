class DbPimError(Exception):
    """
    Base class of all errors raised by dbpim.

    Every error class carries the process exit code the CLI uses for it.
    """

    exit_code: int = 1


class ArgumentError(DbPimError, ValueError):
    """
    Exception raised when an operation receives an argument outside its domain.
    """

    exit_code = 1


class VerificationError(DbPimError):
    """
    Exception raised when the simulator diverges from the reference results.
    """

    exit_code = 1


class ParseError(DbPimError, ValueError):
    """
    Exception raised when a tensor, config or artifact file cannot be read.
    """

    exit_code = 2


class RangeError(ParseError):
    """
    Exception raised when an integer lies outside its admissible range.
    """

    exit_code = 2


class ShapeError(DbPimError, ValueError):
    """
    Exception raised when tensor dimensions do not fit the requested operation.
    """

    exit_code = 3


class CapacityError(DbPimError):
    """
    Exception raised when a layer does not fit the modeled macro or its buffers.
    """

    exit_code = 4


class AccumulatorOverflowError(CapacityError):
    """
    Exception raised when a partial sum leaves the declared accumulator range.
    """

    exit_code = 4
