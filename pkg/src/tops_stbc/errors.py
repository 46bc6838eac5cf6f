"""Exception hierarchy shared by all modules."""


class TopsError(Exception):
    """Base class for every error raised by tops_stbc."""


class InvalidArgument(TopsError, ValueError):
    pass


class DimensionMismatch(InvalidArgument):
    pass


class UnknownGroup(InvalidArgument, KeyError):
    pass


class InvalidMerge(InvalidArgument):
    pass


class InvalidParams(InvalidArgument):
    pass


class CodebookTooLarge(TopsError):
    """The exhaustive search would exceed the configured candidate cap."""


class GridMismatch(InvalidArgument):
    pass


class GroupCountMismatch(InvalidArgument):
    pass


class PartitionMismatch(InvalidArgument):
    pass


class StructureMismatch(InvalidArgument):
    pass


class NotSeparable(TopsError):
    """A decoding strategy does not apply to this code/constellation pair.

    This signals inapplicability, not a fault.
    """


class NumericFailure(TopsError):
    pass


class UnstableOrder(NumericFailure):
    pass


class DegenerateFamily(NumericFailure):
    pass


class CodeFileParseError(TopsError):
    def __init__(self, message, line=None, block=None):
        where = []
        if block is not None:
            where.append(f"block {block}")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.block = block


class ConfigInvalid(TopsError):
    def __init__(self, message, field=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line
