"""scikit-learn style facade over the repair pipeline."""
from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_kernel_input, check_positive_int, check_strategy
from .engine import RepairConfig, Repaired, outcome_name, repair
from .instrument import WeightConfig, instrument
from .lang import Kernel, LaunchConfig
from .oracle import DEFAULT_STEP_BUDGET


class NotRepairedError(RuntimeError):
    def __init__(self, outcome):
        super().__init__(f"kernel was not repaired: {outcome_name(outcome)}")
        self.outcome = outcome


class BarrierRepair(TransformerMixin, BaseEstimator):
    """Find a minimum-weight barrier placement free of races and divergence.

    ``fit`` runs the repair loop on one kernel; ``transform`` returns the
    repaired kernel.

    Parameters
    ----------
    strategy : {'mhs', 'maxsat'}
        Greedy minimal hitting set with MaxSAT fallback, or exact MaxSAT on
        every iteration.
    gw, lw : int
        Grid-barrier penalty and loop-nesting base of the barrier weights.
    grid : bool
        Consider grid-level barriers.
    inspect_existing : bool
        Allow removing barriers already present in the source.
    max_iter : int
        Iteration budget of the repair loop.
    blocks, threads, unroll : int or None
        Overrides of the kernel's launch configuration and loop unrolling.

    Attributes
    ----------
    outcome_ : Repaired, CannotRepair or Timeout
    instrumented_ : InstrumentedKernel
    solution_ : Solution or None
    changes_ : list of Change
    n_iter_ : int
    status_ : str
    """

    def __init__(self, strategy="mhs", gw=12, lw=10, grid=True, inspect_existing=True,
                 max_iter=1000, blocks=None, threads=None, unroll=None,
                 step_budget=DEFAULT_STEP_BUDGET, time_limit=None):
        self.strategy = strategy
        self.gw = gw
        self.lw = lw
        self.grid = grid
        self.inspect_existing = inspect_existing
        self.max_iter = max_iter
        self.blocks = blocks
        self.threads = threads
        self.unroll = unroll
        self.step_budget = step_budget
        self.time_limit = time_limit

    def _config(self, kernel: Kernel) -> RepairConfig:
        weights = WeightConfig(
            check_positive_int(self.gw, "gw"),
            check_positive_int(self.lw, "lw"),
            bool(self.grid),
            bool(self.inspect_existing),
        )
        blocks = check_positive_int(self.blocks, "blocks", allow_none=True)
        threads = check_positive_int(self.threads, "threads", allow_none=True)
        if self.unroll is not None and (isinstance(self.unroll, bool) or self.unroll < 0):
            raise ValueError(f"unroll must be a non-negative integer, got {self.unroll!r}")
        launch = LaunchConfig(blocks or kernel.launch.blocks, threads or kernel.launch.threads)
        return RepairConfig(
            strategy=check_strategy(self.strategy),
            weights=weights,
            max_iterations=check_positive_int(self.max_iter, "max_iter"),
            launch=launch,
            unroll=self.unroll,
            step_budget=check_positive_int(self.step_budget, "step_budget"),
            time_limit=self.time_limit,
        )

    def fit(self, X, y=None):
        kernel = check_kernel_input(X)
        cfg = self._config(kernel)
        self.kernel_ = kernel
        self.instrumented_ = instrument(kernel, cfg.weights)
        self.outcome_ = repair(self.instrumented_, cfg)
        repaired = isinstance(self.outcome_, Repaired)
        self.solution_ = self.outcome_.solution if repaired else None
        self.changes_ = list(self.outcome_.changes) if repaired else []
        self.n_iter_ = self.outcome_.stats.iterations
        self.constraint_ = self.outcome_.constraint
        self.status_ = outcome_name(self.outcome_)
        return self

    def transform(self, X):
        check_is_fitted(self, "outcome_")
        kernel = check_kernel_input(X)
        if kernel != self.kernel_:
            raise ValueError("transform expects the kernel this estimator was fitted on")
        if not isinstance(self.outcome_, Repaired):
            raise NotRepairedError(self.outcome_)
        return self.outcome_.kernel

    def predict(self, X):
        """Outcome label for ``X``: 'repaired', 'already_safe', 'cannot_repair' or 'timeout'."""
        check_is_fitted(self, "outcome_")
        if check_kernel_input(X) != self.kernel_:
            raise ValueError("predict expects the kernel this estimator was fitted on")
        return self.status_
