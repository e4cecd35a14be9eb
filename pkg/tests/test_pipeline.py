import numpy as np
import pytest

from diglacian.data import SynthConfig, generate_synthetic
from diglacian.pipeline import VARIANTS, preprocess, propagation_for


@pytest.fixture(scope="module")
def ds():
    return generate_synthetic(SynthConfig(n=150, classes=3, dim=6, seed=0))


@pytest.mark.parametrize("variant", VARIANTS)
def test_variants_produce_valid_chains(ds, variant):
    pre = preprocess(ds.graph, 2, 0, variant=variant)
    chain = pre.chain
    assert chain.pi.min() > 0 and abs(chain.pi.sum() - 1) < 1e-12
    assert np.abs(chain.transition.T @ chain.pi - chain.pi).sum() < 1e-8
    T_hat = pre.propagation
    assert abs(T_hat - T_hat.T).max() < 1e-12
    rows = np.asarray(pre.undirected.sum(axis=1)).ravel()
    assert np.abs(rows - 1).max() < 1e-12


def test_without_features_uses_raw_degrees(ds):
    pre = preprocess(ds.graph, variant="wo-feat")
    assert pre.combinatorial is None
    assert np.array_equal(pre.chain.degrees, np.diff(ds.graph.adjacency.indptr) + 1)


def test_unknown_variant(ds):
    with pytest.raises(ValueError):
        preprocess(ds.graph, variant="magic")


def test_propagation_for(ds):
    pre = preprocess(ds.graph, 2, 0, commute=True, mu=0.9)
    assert propagation_for("mlp", ds.graph).undirected is None
    assert propagation_for("gcn", ds.graph).directed is None
    assert propagation_for("diglacian-ct", ds.graph, pre).directed is pre.commute.propagation
    assert propagation_for("diglacian", ds.graph, pre).directed is pre.propagation
    with pytest.raises(ValueError):
        propagation_for("diglacian", ds.graph)
    with pytest.raises(ValueError):
        propagation_for("diglacian-ct", ds.graph, preprocess(ds.graph, 2, 0))
