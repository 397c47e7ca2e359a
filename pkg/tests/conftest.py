import time

import numpy as np
import pytest

from polyspec.model import dimer_preset
from polyspec.transfer import find_critical_energies, expansion_coeffs
from polyspec.statistics import (EmpiricalIDS, pool_spectra, dos_at_critical,
                                 les_ensemble, clock_spacing_statistic)

ACCEPT_SEED = 20240801


@pytest.fixture(scope="session")
def dimer06():
    model = dimer_preset(0.6, 0.5)
    report = find_critical_energies(model)[-1]   # E_c = +0.6
    coeffs = expansion_coeffs(model, report)
    n_Ec = dos_at_critical(coeffs, model)
    return {"model": model, "report": report, "coeffs": coeffs, "n_Ec": n_Ec}


@pytest.fixture(scope="session")
def ids06(dimer06):
    """Pooled IDS for the V=0.6 dimer, box-size matched to the LES ensembles."""
    model = dimer06["model"]
    pooled = np.sort(pool_spectra(model, 4000, ACCEPT_SEED,
                                  range(10 ** 6, 10 ** 6 + 1200)))
    return EmpiricalIDS(pooled=pooled, total_count=pooled.size)


@pytest.fixture(scope="session")
def poisson_samples(dimer06, ids06):
    """Unfolded LES ensemble at the noncritical energy E0 = 1.2."""
    return les_ensemble(dimer06["model"], 1.2, 4000, 1000, ACCEPT_SEED,
                        window_atoms=12, ids=ids06)


@pytest.fixture(scope="session")
def clock_runs(dimer06):
    """Strong-clock spacing statistics at three box sizes, with wall time."""
    t0 = time.perf_counter()
    out = {}
    for L in (5000, 10000, 20000):
        sample, summary = clock_spacing_statistic(
            dimer06["model"], dimer06["report"], L, realizations=200,
            j_max=20, seed=ACCEPT_SEED)
        out[L] = {"sample": sample, "summary": summary}
    return {"runs": out, "wall": time.perf_counter() - t0}
