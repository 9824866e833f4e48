# -*- coding: utf-8 -*-


class HINetError(Exception):
    pass


class ConfigurationError(HINetError):
    pass


class IllegalArgumentError(HINetError):
    pass


class ShapeError(HINetError):
    pass


class StaleCacheError(HINetError):
    pass


class FormatError(HINetError):
    pass


class HeaderError(FormatError):
    pass


class TruncatedDataError(FormatError):
    pass


class ChecksumError(FormatError):
    pass


class NumericalError(HINetError):
    def __init__(self, msg, step=None):
        super(NumericalError, self).__init__(msg)
        self.step = step
