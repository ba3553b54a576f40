"""Exception hierarchy.

Every error raised for malformed input derives from OracleLogError so the
CLI can turn it into a one-line diagnostic instead of a traceback.
"""


class OracleLogError(Exception):
    """Base class for all engine errors."""


# --- parsing -----------------------------------------------------------------

class ParseError(OracleLogError):
    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        super().__init__(message + where)


class ExternalInHead(ParseError):
    pass


class ClassicallyNegatedExternal(ParseError):
    pass


class ImportAfterRule(ParseError):
    pass


class ArityMismatch(ParseError):
    pass


# --- registry / imports ------------------------------------------------------

class RegistryError(OracleLogError):
    pass


class ReservedName(RegistryError):
    pass


class MissingBaseOracle(RegistryError):
    pass


class DuplicatePattern(RegistryError):
    pass


class DuplicatePackagePath(RegistryError):
    pass


class ImportResolutionError(OracleLogError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message)


class PackageNotFound(ImportResolutionError):
    def __init__(self, path, searched, line=None):
        self.path = path
        self.searched = list(searched)
        dirs = ", ".join(self.searched) or "<empty search path>"
        super().__init__(f"package {path} not found (searched: {dirs})", line)


class ManifestError(ImportResolutionError):
    pass


# --- oracles -----------------------------------------------------------------

class OracleFailure(OracleLogError):
    """The external evaluation itself failed (not the same as an empty answer)."""

    def __init__(self, message, predicate=None, context=None, rule=None):
        self.predicate = predicate
        self.context = context
        self.rule = rule
        super().__init__(message)


# --- safety ------------------------------------------------------------------

class SafetyError(OracleLogError):
    """Raised by analyze_program; carries the full report."""

    def __init__(self, message, report=None, errors=()):
        self.report = report
        self.errors = list(errors)
        super().__init__(message)


class RuleSafetyError(OracleLogError):
    def __init__(self, message, variables=(), rule=None):
        self.variables = tuple(variables)
        self.rule = rule
        super().__init__(message)


class WeaklyUnsafe(RuleSafetyError):
    pass


class StronglyUnsafe(RuleSafetyError):
    pass


class UnknownExternalPredicate(RuleSafetyError):
    pass


# --- evaluation --------------------------------------------------------------

class EvalError(OracleLogError):
    pass


class NotStratifiable(EvalError):
    def __init__(self, predicates):
        self.predicates = tuple(predicates)
        super().__init__(
            "program is not stratifiable: cycle through negation involving "
            + ", ".join(self.predicates))


class ConstraintViolation(EvalError):
    def __init__(self, constraint, rule=None):
        self.constraint = constraint
        self.rule = rule
        super().__init__(f"constraint violated: {constraint}")


class LimitExceeded(EvalError):
    def __init__(self, which, limit):
        self.which = which
        self.limit = limit
        super().__init__(f"grounding limit exceeded: {which} > {limit}")
