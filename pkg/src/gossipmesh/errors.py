"""Exception hierarchy shared by every gossipmesh module."""


class GossipMeshError(Exception):
    """Base class for all errors raised by this package."""


class InvalidGraph(GossipMeshError, ValueError):
    pass


class DisconnectedGraph(GossipMeshError):
    pass


class NonPositiveInput(GossipMeshError, ValueError):
    pass


class InvalidParams(GossipMeshError, ValueError):
    pass


class EmptyMembership(GossipMeshError):
    pass


class InconsistentReports(GossipMeshError):
    pass


class MissingVotes(GossipMeshError):
    pass


class ProtocolError(GossipMeshError):
    pass


class InconsistentState(GossipMeshError):
    pass


class NonTermination(GossipMeshError):
    """Raised when a gossip round exceeds its slot budget."""


class CapacityMisconfig(GossipMeshError, ValueError):
    pass


class UnknownModel(GossipMeshError, KeyError):
    pass
