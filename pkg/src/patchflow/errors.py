"""Exception hierarchy shared by the solver modules."""


class PatchflowError(Exception):
    """Base class for all solver errors."""


class NonPositiveState(PatchflowError, ValueError):
    pass


class NonPositiveDensity(NonPositiveState):
    pass


class NonPositivePressure(NonPositiveState):
    pass


class MeshError(PatchflowError):
    pass


class CapacityExceeded(MeshError):
    pass


class NotALeaf(MeshError):
    pass


class InactivePatch(MeshError):
    pass


class NoChildren(MeshError):
    pass


class MissingNeighbor(MeshError):
    pass


class InsufficientStencil(PatchflowError, ValueError):
    pass


class NonFiniteInput(PatchflowError, ValueError):
    pass


class ConflictDetected(PatchflowError):
    """Two tasks of one phase touch the same region and at least one writes it."""


class SolverBlowup(PatchflowError):
    """Positivity failure during time integration.

    Carries the step, stage, patch and node where the failure was detected.
    """

    def __init__(self, message, *, step=None, stage=None, patch=None, node=None):
        super().__init__(message)
        self.step = step
        self.stage = stage
        self.patch = patch
        self.node = node


class ConfigError(PatchflowError, ValueError):
    pass
