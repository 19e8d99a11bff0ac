import math

import pytest

from modent.canonical_subspace import build_P12, build_sigma, sigma_spectrum
from modent.fourier_core import ModeGrid

HALF_PI = math.pi / 2


@pytest.fixture(scope="session")
def bundles():
    """Cache of canonical projections keyed by (phi, N)."""
    cache = {}

    def get(phi, N):
        key = (phi, N)
        if key not in cache:
            cache[key] = build_P12(phi, ModeGrid(N))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def spectra(bundles):
    cache = {}

    def get(phi, N):
        key = (phi, N)
        if key not in cache:
            cache[key] = sigma_spectrum(build_sigma(bundles(phi, N)))
        return cache[key]

    return get
