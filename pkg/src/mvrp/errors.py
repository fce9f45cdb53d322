"""Exception types shared across the toolkit."""


class MvrpError(Exception):
    """Base class for all toolkit errors."""


class ParseError(MvrpError):
    """An input file does not conform to its format."""


class MissingKeyword(ParseError):
    pass


class UnknownKeyword(ParseError):
    pass


class DuplicateNodeId(ParseError):
    pass


class DemandExceedsCapacity(ParseError):
    pass


class BadEta(MvrpError):
    """Cost-saving rate incompatible with the platoon size limit (eta*(L-1) >= 1)."""


class InvariantViolation(MvrpError):
    pass


class UnknownCustomer(MvrpError):
    pass


class PlatoonTooLarge(MvrpError):
    pass


class MoveRejected(MvrpError):
    """A candidate move cannot be applied to the given solution."""


class Infeasible(MoveRejected):
    pass


class NoFeasiblePath(MoveRejected):
    pass


class TabuRejected(MoveRejected):
    pass


class NoAdmissibleMove(MvrpError):
    pass


class InfeasibleSparse(MvrpError):
    pass


class NothingToShake(MvrpError):
    pass


class InstanceTooLarge(MvrpError):
    pass


class InfeasibleInstance(MvrpError):
    """No assignment of customers to vehicles satisfies the capacity limits."""
