class OEBIError(Exception):
    pass


class ValidationError(OEBIError, ValueError):
    pass


class ParseError(ValidationError):
    pass


class GraphTooLargeError(ValidationError):
    pass


class DegenerateProfileError(ValidationError):
    pass
