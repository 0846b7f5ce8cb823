"""Exception types raised across the package."""


class BlockdecError(Exception):
    """Base class for all package-specific errors."""


class GraphError(BlockdecError):
    """Invalid decoding-graph structure or incompatible graphs in a merge."""


class CircuitError(BlockdecError):
    """Logical-circuit parse or validation failure."""


class CompileError(BlockdecError):
    """Block generation failed (boundary inconsistency, path explosion, ...)."""


class UnsupportedOperationError(CompileError):
    """Operation kind not supported for the patch's code family."""


class DecodeError(BlockdecError):
    """Decoder cannot handle the given graph or syndrome."""


class InfeasibleSyndromeError(DecodeError):
    """No edge subset annihilates the syndrome."""


class FusionError(BlockdecError):
    """Fusion integrity violation (boundary mismatch, premature finalize)."""


class ProtocolError(BlockdecError):
    """Malformed or out-of-order runtime event stream."""


class CapabilityError(BlockdecError):
    """No worker in the pool can execute a task."""


class StateError(BlockdecError):
    """Operation requires a completed or differently-shaped run state."""
