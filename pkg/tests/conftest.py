import numpy as np
import pytest

from outlier_explorer.data import CorpusSpec, DataMatrix
from outlier_explorer.meta import (COST_MONOMIALS, FEATURE_STAT_NAMES,
                                   ModelBundle, RegressionModel)
from outlier_explorer.subspaces import ALGORITHMS


def make_matrix(values, names=None) -> DataMatrix:
    values = np.asarray(values, dtype=float)
    if names is None:
        names = tuple(f"c{j}" for j in range(values.shape[1]))
    return DataMatrix(values, names)


def toy_bundle(cost=0.01, utility=0.5) -> ModelBundle:
    """Intercept-only models: every candidate costs `cost` seconds and has
    utility `utility`. Lets pipeline tests run without real training."""
    models = []
    for algorithm in ALGORITHMS:
        models.append(RegressionModel(algorithm, "cost",
                                      np.zeros(len(COST_MONOMIALS)), cost, 1.0))
        models.append(RegressionModel(algorithm, "utility",
                                      np.zeros(6 * len(FEATURE_STAT_NAMES)),
                                      utility, 1.0))
    return ModelBundle(models)


@pytest.fixture
def small_labeled(tmp_path):
    """A small labeled dataset CSV on disk plus its path."""
    from outlier_explorer.data import generate_synthetic_corpus, save_csv
    spec = CorpusSpec(n_range=(60, 60), m_range=(5, 5))
    dataset = generate_synthetic_corpus(1, rng_seed=3, spec=spec)[0]
    path = tmp_path / "small.csv"
    save_csv(dataset, path)
    return dataset, path
