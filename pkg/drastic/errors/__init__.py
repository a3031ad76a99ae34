"""Exceptions raised by the controller modules"""

__all__ = ['DrasticError', 'OutOfRangeError', 'InvalidRequest', 'InvalidSchedule',
           'UnknownConfiguration', 'AdapterFailure', 'FixtureMiss', 'ParseError',
           'DuplicateId', 'Infeasible', 'MissingFront', 'DuplicateKey',
           'DanglingReference', 'SchemaMismatch', 'NoRows']


class DrasticError(Exception):
    """Base class for every error the controller raises on purpose

    Attributes:
    ----------
        message -- The error message

        module -- Name of the module that raised it.  The command line
            prefixes printed errors with it.
    """
    module = 'drastic'

    def __init__(self, message, module=None):
        super().__init__(message)
        self.message = message
        if module is not None:
            self.module = module

    def __str__(self):
        return self.message


class OutOfRangeError(DrasticError):
    """Exception raised when a parameter or value is out of range
    (QP outside 0-51, non-positive measurement, non-finite objective)
    """


class InvalidRequest(DrasticError):
    """Exception raised when a mode request is missing a bound or carries bad weights"""
    module = 'mode_solver'


class InvalidSchedule(DrasticError):
    """Exception raised when schedule segments overlap or leave gaps"""
    module = 'switch_planner'


class UnknownConfiguration(DrasticError):
    """Exception raised when a configuration id is not in the catalog"""
    module = 'config_space'


class AdapterFailure(DrasticError):
    """Exception raised when the external encoder fails

    Attributes:
    ----------
        output -- Everything the child process wrote (stdout and stderr),
            kept so the caller can show why the run failed.

        returncode -- Exit status of the child, or None if it never ran.
    """
    module = 'encoder_backend'

    def __init__(self, message, output='', returncode=None):
        super().__init__(message)
        self.output = output
        self.returncode = returncode


class FixtureMiss(DrasticError):
    """Exception raised when the fixture has no row for a (configuration, video) pair"""
    module = 'encoder_backend'


class ParseError(DrasticError):
    """Exception raised for a malformed row in a columnar file

    Attributes:
    ----------
        row -- 1-based line number in the file (the header is line 1)
    """
    module = 'encoder_backend'

    def __init__(self, message, row=None, module=None):
        if row is not None:
            message = 'row {}: {}'.format(row, message)
        super().__init__(message, module=module)
        self.row = row


class DuplicateId(DrasticError):
    """Exception raised when two objective points share a configuration id"""
    module = 'pareto_core'


class Infeasible(DrasticError):
    """Exception raised when no point satisfies a request's constraints

    Attributes:
    ----------
        relaxations -- Nearest-miss diagnostics: for each active bound that could
            admit a point on its own, a Relaxation(bound, current, needed).
    """
    module = 'mode_solver'

    def __init__(self, message, relaxations=()):
        super().__init__(message)
        self.relaxations = tuple(relaxations)


class MissingFront(DrasticError):
    """Exception raised when a scheduled segment has no Pareto front"""
    module = 'switch_planner'


class DuplicateKey(DrasticError):
    """Exception raised when an insert would repeat a primary or unique key"""
    module = 'rvd_store'


class DanglingReference(DrasticError):
    """Exception raised when a foreign key does not resolve"""
    module = 'rvd_store'


class SchemaMismatch(DrasticError):
    """Exception raised when a record or file does not match the table schema"""
    module = 'rvd_store'


class NoRows(DrasticError):
    """Exception raised when a query returns nothing

    Attributes:
    ----------
        stage -- Which step came back empty: 'profile' for the user profile
            lookup, 'query' for the Paretofront query.
    """
    module = 'rvd_store'

    def __init__(self, message, stage='query'):
        super().__init__(message)
        self.stage = stage
