"""Two-layer network posteriors, mean-field ARD and NNGP baselines on sparse parity."""

from ._core import (
    ConfigError,
    IllConditionedError,
    NumericalDivergence,
    ResourceError,
    a_star,
    brute_constants,
    canonical_csv,
    gen_dataset,
    hermite_he,
    kappa_c,
    krr_predict,
    load_config,
    mc_kernel,
    mf_solve,
    nngp_run,
    parity_constants,
    preset_names,
    run_cell,
    run_sweep,
    scaling_table,
    small_noise_fp,
    solve_scalar_fp,
    test_error,
    train_sgld,
    walsh_column,
)

__all__ = [
    "ConfigError",
    "IllConditionedError",
    "NumericalDivergence",
    "ResourceError",
    "a_star",
    "brute_constants",
    "canonical_csv",
    "gen_dataset",
    "hermite_he",
    "kappa_c",
    "krr_predict",
    "load_config",
    "mc_kernel",
    "mf_solve",
    "nngp_run",
    "parity_constants",
    "preset_names",
    "run_cell",
    "run_sweep",
    "scaling_table",
    "small_noise_fp",
    "solve_scalar_fp",
    "test_error",
    "train_sgld",
    "walsh_column",
]
