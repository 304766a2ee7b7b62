"""Exception hierarchy; the CLI maps the two branches to exit codes 2 and 3."""


class NetLowRankError(Exception):
    pass


class DataError(NetLowRankError, ValueError):
    """Bad input data: unreadable files, malformed lines, invalid parameters."""


class GraphFormatError(DataError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class CapacityError(DataError):
    pass


class UndefinedStatisticError(DataError):
    pass


class NumericalError(NetLowRankError, ArithmeticError):
    """An iterative numerical method failed to meet its accuracy contract."""


class EigenSolverError(NumericalError):
    def __init__(self, message, best_residual=None):
        self.best_residual = best_residual
        super().__init__(message)


class DegenerateSpectrumError(DataError):
    pass


class PipelineError(NetLowRankError):
    pass
