"""Exception types raised by the library."""


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class MalformedDesignError(ValueError):
    """A design or code description violates a structural requirement."""


class UnsupportedParametersError(ValueError):
    """No construction is available for the requested parameters."""


class NotSingleSymbolDecodableError(ValueError):
    """A per-symbol decoder was asked to decode a code whose metric does not separate."""


class SpecFormatError(ValueError):
    """A serialized code description could not be parsed."""
