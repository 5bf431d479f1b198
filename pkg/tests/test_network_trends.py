"""Trend checks on generated networks (slower; one shared growth per model)."""

import numpy as np
import pytest

from dtvcn import correlation, generator, graph, metrics


@pytest.fixture(scope="module")
def dtvcn_net():
    p = generator.GrowthParams(n0=5, steps=4995, m=3, beta=0.6, gamma=0.6,
                               model="dtvcn", rng_seed=10)
    snap = graph.replay(generator.grow(p))
    return p, snap


@pytest.fixture(scope="module")
def dtvcn_bc(dtvcn_net):
    _, snap = dtvcn_net
    return metrics.betweenness(snap)


def test_ba_exponent_near_three():
    p = generator.GrowthParams(n0=5, steps=4995, m=3, model="ba", rng_seed=1)
    snap = graph.replay(generator.grow(p))
    fit = metrics.fit_power_law(snap.degree_array(), p.f_add)
    assert 2.5 <= fit.alpha <= 3.2
    r = correlation.pearson_r(snap.degree_array(), snap)
    assert r < 0  # finite-size preferential attachment is disassortative


def test_dtvcn_exponent_and_disassortativity(dtvcn_net):
    p, snap = dtvcn_net
    fit = metrics.fit_power_law(snap.degree_array(), p.f_add)
    assert 1.9 <= fit.alpha <= 2.6
    r = correlation.pearson_r(snap.degree_array(), snap)
    assert -0.15 < r < 0.0


def test_dtvcn_andn_decreasing(dtvcn_net):
    _, snap = dtvcn_net
    knn = correlation.andn(snap)
    ks = np.array(sorted(knn))
    ys = np.array([knn[k] for k in ks])
    slope = np.polyfit(np.log(ks), np.log(ys), 1)[0]
    assert slope < 0.0  # disassortative: neighbors of hubs are small


def test_dtvcn_bc_scales_up_with_degree(dtvcn_net, dtvcn_bc):
    p, snap = dtvcn_net
    fit = metrics.fit_power_law(snap.degree_array(), p.f_add)
    scaling = metrics.bc_degree_exponent(snap.degree_array(), dtvcn_bc, fit.alpha)
    assert scaling.slope > 0.0
    assert scaling.delta > 1.0


def test_dtvcn_zeta_well_formed_at_scale(dtvcn_net):
    _, snap = dtvcn_net
    deg = snap.degree_array()
    eu, ev = snap.edge_arrays()
    zeta, _ = correlation.zeta_and_min_contribution(deg.astype(float), eu, ev, deg)
    live = deg > 0
    assert np.all((zeta[live] >= 0.0) & (zeta[live] <= 1.0 + 1e-12))
    # degree-1 nodes always score 1
    ones = deg == 1
    if ones.any():
        assert np.allclose(zeta[ones], 1.0)
