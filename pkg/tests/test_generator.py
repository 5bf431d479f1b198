import logging

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from dtvcn import generator, graph
from dtvcn.correlation import node_scores
from dtvcn.exceptions import InvalidParamsError, NotApplicableError
from dtvcn.generator import (
    BA,
    DTVCN,
    TVCN,
    GrowthParams,
    _weighted_index,
    antipref_probability,
    attach_probability,
    degree_trajectory,
    grow,
    theory_constants,
)
from dtvcn.graph import ADD, GraphSnapshot, replay


# -- parameters and derived counts ----------------------------------------

def test_derived_counts_default():
    p = GrowthParams(beta=0.6, gamma=0.6, m=3, model=DTVCN)
    assert (p.f_add, p.f_rewire, p.f_delete) == (2, 1, 0)


def test_rounding_is_half_up():
    # gamma*(1-beta)*m = 2.5 and (1-gamma)*(1-beta)*m = 1.5: banker's rounding
    # would give 2 and 2, nearest-integer half-up gives 3 and 2
    p = GrowthParams(beta=0.6, gamma=0.625, m=10, model=TVCN)
    assert p.f_rewire == 3
    assert p.f_delete == 2


def test_f_add_at_least_one():
    p = GrowthParams(beta=0.1, gamma=0.6, m=1, model=TVCN)
    assert p.f_add == 1


def test_ba_schedule_override():
    p = GrowthParams(beta=0.6, gamma=0.6, m=3, model=BA)
    assert (p.f_add, p.f_rewire, p.f_delete) == (3, 0, 0)


def test_params_validation():
    with pytest.raises(InvalidParamsError):
        GrowthParams(gamma=0.4).validate()
    with pytest.raises(InvalidParamsError):
        GrowthParams(beta=1.0).validate()
    with pytest.raises(InvalidParamsError):
        GrowthParams(n0=1).validate()
    with pytest.raises(InvalidParamsError):
        GrowthParams(model="erdos").validate()


# -- closed forms ----------------------------------------------------------

def test_theory_constants_reference_rows():
    for (beta, gamma, zeta), want in [
        ((0.51, 0.51, 0.01), 2.3545),
        ((0.60, 0.60, 0.3333), 2.2143),
        ((0.75, 0.75, 0.5), 2.2444),
    ]:
        tc = theory_constants(beta, gamma, zeta, 3)
        assert tc.alpha == pytest.approx(want, abs=1e-3)
        assert tc.k1_in_range


def test_theory_constants_c_identity():
    tc = theory_constants(0.6, 0.6, 0.5, 3)
    assert tc.c == pytest.approx(0.6 + 0.4 * 0.2)


def test_theory_constants_domain():
    with pytest.raises(InvalidParamsError):
        theory_constants(0.6, 0.4, 0.5, 3)
    with pytest.raises(InvalidParamsError):
        theory_constants(0.6, 0.6, 0.0, 3)


def test_degree_trajectory_initial_condition():
    assert degree_trajectory(0.8, -0.5, 3, 100, 100) == pytest.approx(3.0)


def test_degree_trajectory_pure_power_law():
    assert degree_trajectory(0.5, 0.0, 3, 100, 400) == pytest.approx(3.0 * 2.0)


def test_degree_trajectory_k1_zero():
    with pytest.raises(NotApplicableError):
        degree_trajectory(0.0, 1.0, 3, 1, 2)


def test_degree_trajectory_matches_ode_integration():
    # independent oracle: numerically integrate dk/dt = K1*k/t + K2/t
    tc = theory_constants(0.6, 0.6, 1.0 / 3.0, 3)
    assert tc.k1 == pytest.approx(0.8235, abs=1e-4)
    t_i, t_end, m = 100.0, 10000.0, 3.0
    sol = solve_ivp(lambda s, y: (tc.k1 * y + tc.k2) / s, (t_i, t_end), [m],
                    rtol=1e-10, atol=1e-12)
    want = sol.y[0, -1]
    got = degree_trajectory(tc.k1, tc.k2, m, t_i, t_end)
    assert abs(got - want) / abs(want) < 1e-6


# -- attachment probabilities ----------------------------------------------

def test_attach_probability_two_nodes():
    snap = GraphSnapshot.from_edges(2, [(0, 1)])
    sc = node_scores(snap)
    assert attach_probability(snap, sc, 0, BA) == pytest.approx(0.5)
    assert attach_probability(snap, sc, 1, BA) == pytest.approx(0.5)


def test_attach_probability_star_degree_ratio():
    snap = GraphSnapshot.from_edges(5, [(0, i) for i in range(1, 5)])
    sc = node_scores(snap)
    assert attach_probability(snap, sc, 0, BA) == pytest.approx(0.5)
    assert attach_probability(snap, sc, 1, BA) == pytest.approx(1.0 / 8.0)


def test_attach_probability_dtvcn_equal_zeta_matches_ba():
    snap = GraphSnapshot.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    sc = node_scores(snap)  # regular: all zeta fall back to 1/deg, equal
    for node in range(4):
        assert attach_probability(snap, sc, node, DTVCN) == pytest.approx(
            attach_probability(snap, sc, node, BA))


def test_antipref_probability_values():
    snap = GraphSnapshot.from_edges(2, [(0, 1)])
    sc = node_scores(snap)
    assert antipref_probability(snap, sc, 0, TVCN) == pytest.approx(0.5)
    star = GraphSnapshot.from_edges(5, [(0, i) for i in range(1, 5)])
    sc = node_scores(star)
    leaf = antipref_probability(star, sc, 1, TVCN)
    center = antipref_probability(star, sc, 0, TVCN)
    assert leaf == pytest.approx((1 - 1 / 8) / 4)
    assert leaf > center
    for other in range(2, 5):
        assert antipref_probability(star, sc, other, TVCN) == pytest.approx(leaf)
    # dtvcn: a node with zeta=1 gets weight 0 (star leaves have zeta=1)
    assert antipref_probability(star, sc, 1, DTVCN) == pytest.approx(0.0)


def test_weighted_sampling_scale_invariance():
    w = np.array([0.5, 1.5, 3.0, 0.0, 2.0])
    draws1 = [_weighted_index(np.random.default_rng(9), w) for _ in range(1)]
    seq1 = []
    rng = np.random.default_rng(9)
    for _ in range(200):
        seq1.append(_weighted_index(rng, w))
    rng = np.random.default_rng(9)
    seq2 = [_weighted_index(rng, 7.3 * w) for _ in range(200)]
    assert seq1 == seq2
    assert 3 not in seq1  # zero weight never drawn


# -- grow -------------------------------------------------------------------

def test_grow_seed_only():
    log = grow(GrowthParams(n0=5, steps=0, model=DTVCN, rng_seed=1))
    snap = replay(log)
    assert snap.node_count == 5
    assert snap.edge_count == 10


@pytest.mark.parametrize("model", [BA, TVCN, DTVCN])
def test_grow_invariants(model):
    p = GrowthParams(n0=5, steps=80, m=3, beta=0.6, gamma=0.6, model=model, rng_seed=4)
    trace = []
    log = grow(p, trace=trace)
    # every prefix replays into a valid simple graph with the right node count
    for t in (0, 1, 7, 40, 80):
        snap = replay(log, t)
        assert snap.node_count == p.n0 + t
        assert sum(snap.degree) == 2 * snap.edge_count
    assert len(trace) == 80
    times = [e.time for e in log.events]
    assert times == sorted(times)


def test_grow_determinism():
    p = GrowthParams(n0=5, steps=50, m=3, model=DTVCN, rng_seed=11)
    assert grow(p) == grow(p)
    other = grow(GrowthParams(n0=5, steps=50, m=3, model=DTVCN, rng_seed=12))
    assert other != grow(p)


def test_grow_ba_is_pure_attachment():
    p = GrowthParams(n0=5, steps=40, m=3, model=BA, rng_seed=2)
    log = grow(p)
    assert all(e.kind == ADD for e in log.events)
    assert len(log.events) == 40 * 3
    # new node at step t is n0+t-1 and attaches to distinct older targets
    for t in range(1, 41):
        evs = [e for e in log.events if e.time == t]
        assert all(e.u == p.n0 + t - 1 for e in evs)
        targets = [e.v for e in evs]
        assert len(set(targets)) == 3
        assert all(v < p.n0 + t - 1 for v in targets)


def test_grow_with_deletions_keeps_connectivity():
    # beta=0.51, gamma=0.51, m=8 -> f_add=4, f_rewire=2, f_delete=2
    p = GrowthParams(n0=5, steps=60, m=8, beta=0.51, gamma=0.51, model=DTVCN,
                     rng_seed=7)
    assert p.f_delete == 2
    trace = []
    log = grow(p, trace=trace)
    kinds = {e.kind for e in log.events}
    assert "delete" in kinds
    snap = replay(log)
    assert sum(snap.degree) == 2 * snap.edge_count
    # deletions only ever remove edges whose removal keeps one component,
    # so no step may strand more nodes than rewires can
    deletes = [e for e in log.events if e.kind == "delete"]
    assert deletes, "expected deletions to occur"


def test_grow_exhausted_candidates_warns(caplog):
    p = GrowthParams(n0=2, steps=3, m=8, beta=0.9, gamma=0.6, model=TVCN, rng_seed=0)
    assert p.f_add > 2
    with caplog.at_level(logging.WARNING, logger="dtvcn.generator"):
        log = grow(p)
    assert any("eligible attachment targets" in r.message for r in caplog.records)
    snap = replay(log, 1)
    assert snap.degree[2] == 2  # connected to everything available


def test_grow_trace_schema():
    p = GrowthParams(n0=5, steps=10, m=3, model=DTVCN, rng_seed=3)
    trace = []
    grow(p, trace=trace)
    t, nodes, edges, added, rewired, deleted, skipped = trace[-1]
    assert t == 10
    assert nodes == 15
    assert added <= p.f_add and rewired <= p.f_rewire and deleted <= p.f_delete
    assert skipped >= 0
