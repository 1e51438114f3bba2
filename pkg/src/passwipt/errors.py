"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A system configuration violates one of its invariants."""


class LayoutError(ValueError):
    """A pinching-antenna layout violates box or spacing constraints.

    Carries the offending constraints in ``violations`` (list of
    :class:`passwipt.model.LayoutViolation`).
    """

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid layout: {msg}")


class DegenerateChannelError(RuntimeError):
    """An MSE matrix is singular beyond repair (rank-deficient channel)."""


class InfeasibleSubproblemError(RuntimeError):
    """The beamforming subproblem has no feasible point.

    Can only happen when the anchor itself is infeasible, which signals a
    driver bug upstream.
    """


class MaxIterationsError(RuntimeError):
    """An iterative solve hit its iteration cap before reaching tolerance.

    The best iterate found is attached as ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InfeasibleScenarioError(RuntimeError):
    """No beamformer can meet the energy floor even at full power."""


class ConvergenceError(RuntimeError):
    """The alternating solve hit its outer cap without meeting tolerance.

    The best result found is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InternalSolverError(RuntimeError):
    """A guaranteed-monotone quantity decreased beyond slack (solver bug)."""
