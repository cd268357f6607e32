"""Latent-index instrumental-variable models with Dirichlet process mixture errors."""

import json

from . import _core
from ._core import (
    ConfigError,
    Dataset,
    EffectEstimate,
    Error,
    IngestionError,
    InvalidArgument,
    IoError,
    NumericalError,
    PosteriorDraws,
    RankError,
    TslsResult,
    coefficient_rhats,
    complier_proportion,
    complier_proportion_from_rates,
    design_names,
    falsification_check,
    gelman_rubin,
    instrument_f_stat,
    load_csv,
    read_draws,
    simulate,
    simulate_pci,
    sensitivity_grid,
    tsls_effect,
    two_stage_least_squares,
    write_csv,
    write_draws,
)

__version__ = _core.__version__


def _config_text(config):
    if config is None:
        return ""
    if isinstance(config, str):
        return config
    return json.dumps(config)


def default_config():
    """Default sampler configuration as a dict."""
    return json.loads(_core.default_config())


def config_hash(config=None):
    return _core.config_hash(_config_text(config))


def fit(data, config=None, variant="dpm", keep_latent=False, workers=0):
    """Runs the Gibbs sampler; returns one PosteriorDraws per chain."""
    return _core.fit(data, _config_text(config), variant, keep_latent, workers)


def estimate(chains, data, estimand="ate", condition="", threshold=0.0,
             direction="treated_minus_control", full_mixture=False, z_value=None):
    if isinstance(chains, PosteriorDraws):
        chains = [chains]
    return _core.estimate(list(chains), data, estimand, condition, threshold, direction, full_mixture, z_value)


def replicate(design, n, reps, methods=("dpm", "normal", "2sls"), config=None, seed=1, workers=0):
    return _core.replicate(design, n, reps, list(methods), _config_text(config), seed, workers)


def hyperprior_sweep(data, cells, config=None, tolerance=1.0):
    """cells: iterable of (a, b, psi_inv, nu)."""
    return _core.hyperprior_sweep(data, [tuple(c) for c in cells], _config_text(config), tolerance)

