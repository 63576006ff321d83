import numpy as np
import pytest

from slicetuner.harness import ExperimentConfig, SliceSpec, SyntheticOracleSpec


def hetero_config(
    n=10,
    size=200,
    budget=3000.0,
    lam=1.0,
    noise_sigma=0.02,
    trials=10,
    seed=20240601,
    methods=("uniform", "water_filling", "moderate"),
    kappa=None,
    num_repeats=5,
    min_slice_size=10,
):
    """Ten-slice scenario with heterogeneous ground-truth curves."""
    a = tuple(np.round(np.linspace(0.45, 1.1, n), 3))
    b = tuple(np.round(np.linspace(1.5, 8.0, n)[::-1], 3))
    return ExperimentConfig(
        name="hetero",
        slices=tuple(SliceSpec(f"s{i}", size, 1.0) for i in range(n)),
        oracle=SyntheticOracleSpec(
            a=a, b=b, c=(0.0,) * n, kappa=kappa,
            noise_sigma=noise_sigma, kappa_max=0.2, pools=None,
        ),
        methods=tuple(methods),
        budget=budget,
        lam=lam,
        num_trials=trials,
        seed=seed,
        min_slice_size=min_slice_size,
        curve_num_repeats=num_repeats,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
