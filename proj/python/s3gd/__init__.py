"""Semi-stochastic gradient descent with anchor-based gradient approximation,
plus SGD, SSGD, Prox-SVRG and SCV baselines."""

from ._core import (
    AnchorModel,
    Certificate,
    Dataset,
    Error,
    ParseError,
    StaleStateError,
    Trace,
    ValidationError,
    atomic_derivative,
    atomic_value,
    build_anchor_model,
    certificate,
    class_weights,
    full_gradient,
    identity_anchor_model,
    kmeans,
    load_libsvm,
    pearson_correlation,
    prox,
    reg_value,
    run,
    run_experiment,
    select_stable_stepsize,
    smooth_objective,
    solve_reference,
    summarize,
    synth_gaussian,
    write_libsvm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
