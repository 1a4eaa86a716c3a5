"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class CorefGapError(Exception):
    exit_code = 3


class ConfigError(CorefGapError):
    exit_code = 1


class ParseError(CorefGapError):
    exit_code = 2

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class AlignmentError(CorefGapError):
    exit_code = 2


class InvariantError(CorefGapError):
    exit_code = 3
