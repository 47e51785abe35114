"""Monte Carlo laboratory for rank-n radial martingales.

Thin wrapper over the compiled `_mlab` core: curvature profiles and warp
functions, single-path simulation, closed-form regime bounds, and the
experiment presets with their detector suites.
"""

import json as _json

try:
    from . import _mlab as _core
except ImportError:  # editable / build-tree layout: _mlab sits next to the package
    import _mlab as _core

CurvatureProfile = _core.CurvatureProfile
Warp = _core.Warp
PathRecord = _core.PathRecord
ConfigError = _core.ConfigError
NumericError = _core.NumericError

solve_jacobi = _core.solve_jacobi
simulate_path = _core.simulate_path
bessel_return_bound = _core.bessel_return_bound
log_regime_return_bound = _core.log_regime_return_bound
radial_hit_probability = _core.radial_hit_probability
preset_names = _core.preset_names
preset_summary = _core.preset_summary
preset_config = _core.preset_config
load_config_file = _core.load_config_file
validate_config = _core.validate_config
canonical_config = _core.canonical_config
config_hash = _core.config_hash

__version__ = _core.__version__


def run_experiment(config, seed=12345, threads=1, out_dir=".", dump_paths=False, quiet=True):
    """Run one experiment config; returns (passed, verdict, report_dict)."""
    passed, verdict, report = _core.run_experiment_json(
        dict(config), seed, threads, out_dir, dump_paths, quiet
    )
    return passed, verdict, _json.loads(report)


__all__ = [
    "CurvatureProfile",
    "Warp",
    "PathRecord",
    "ConfigError",
    "NumericError",
    "solve_jacobi",
    "simulate_path",
    "bessel_return_bound",
    "log_regime_return_bound",
    "radial_hit_probability",
    "preset_names",
    "preset_summary",
    "preset_config",
    "load_config_file",
    "validate_config",
    "canonical_config",
    "config_hash",
    "run_experiment",
    "__version__",
]
