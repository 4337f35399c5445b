from fractions import Fraction as F
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _helpers import brute_tours, is_tour
from pareto_tsp.core import DomainError, Instance, StructureError, complete_to_tour, validate, weight_of
from pareto_tsp.generators import random_instance
from pareto_tsp.maxtsp import (
    beta_grid,
    beta_truncate,
    check_eps,
    contract_directed,
    enumerate_k_sets,
    f_bound,
    g_bound,
    h_bound,
    max_atsp,
    max_stsp,
    zero_out,
)
from pareto_tsp.oracle import exact_tour_pareto
from pareto_tsp.pareto import MAX, verify_approx_pareto
from pareto_tsp.solver import optimal_cycle_cover


# bounds

def test_bounds_frozen():
    assert f_bound(2, F(1, 4)) == 20
    assert g_bound(2, F(1, 4)) == 60
    assert h_bound(2, F(1, 4)) == 115200
    assert f_bound(2, F(3, 20)) == 68


def test_bounds_are_plain_ints():
    assert type(f_bound(2, F(1, 4))) is int
    assert type(h_bound(2, F(1, 4))) is int


def test_f_increases_as_eps_shrinks():
    vals = [f_bound(2, F(1, d)) for d in (4, 5, 6, 8, 10)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_eps_guard():
    with pytest.raises(DomainError):
        check_eps(3, F(1, 2))  # 1/(2 ln 3) ~ 0.455
    check_eps(3, F(2, 5))
    with pytest.raises(DomainError):
        check_eps(2, F(1))


# truncation

def test_beta_identity_and_zero():
    inst = random_instance(5, 2, 0)
    W = inst.weights
    assert np.array_equal(beta_truncate(W, W.max(axis=(0, 1))), W)
    Z = beta_truncate(W, [0, 0])
    assert not Z[(W > 0).any(axis=2)].any()


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 7), st.integers(0, 10**6), st.randoms(use_true_random=False))
def test_beta_of_tour_is_exact(n, seed, rnd):
    inst = random_instance(n, 2, seed)
    order = list(range(n))
    rnd.shuffle(order)
    H = [(order[j], order[(j + 1) % n]) for j in range(n)]
    beta = [max(int(inst.weights[u, v, i]) for u, v in H) for i in range(2)]
    Wb = beta_truncate(inst.weights, beta)
    red = Instance(Wb)
    assert weight_of(red, H) == weight_of(inst, H)
    C = optimal_cycle_cover(inst, 0)
    assert all(a <= b for a, b in zip(weight_of(red, C), weight_of(inst, C)))


def test_beta_grid_cap():
    W = np.arange(2 * 7 * 7).reshape(7, 7, 2) % 40
    grid, trunc = beta_grid(W, cap=5)
    assert trunc
    firsts = sorted({g[0] for g in grid})
    assert len(firsts) == 5 and firsts[0] == 0 and firsts[-1] == int(W[:, :, 0][~np.eye(7, dtype=bool)].max())
    _, trunc = beta_grid(np.ones((3, 3, 1), dtype=np.int64), cap=5)
    assert not trunc


# K sets

def test_k_sets_on_k3():
    inst = random_instance(3, 1, 0)
    ks = list(enumerate_k_sets(inst, 1, 1))
    assert ks[0] == ()
    assert len(ks) == 7


def test_k_sets_valid_and_acyclic():
    inst = random_instance(4, 1, 0)
    ks = enumerate_k_sets(inst, None, 3)
    assert ks.truncated
    sizes = []
    for K in ks:
        assert validate(K, "path_collection", inst)
        sizes.append(len(K))
        for (a, b), (c, d) in combinations(K, 2):
            assert not (a == d and b == c)
    assert sizes == sorted(sizes)


def test_k_sets_untruncated_when_cap_covers_bound():
    assert not enumerate_k_sets(random_instance(4, 1, 0), 2, 5).truncated


# contraction

def test_contract_empty_is_identity():
    inst = random_instance(5, 2, 1)
    red, cmap = contract_directed(inst, [])
    assert red == inst
    tour = [(0, 2), (2, 1), (1, 4), (4, 3), (3, 0)]
    assert sorted(cmap.lift(tour)) == sorted(tour)


def test_contract_three_vertex():
    inst = random_instance(3, 2, 4)
    red, cmap = contract_directed(inst, [(0, 1)])
    assert red.n == 2
    lifted = cmap.lift([(0, 1), (1, 0)])
    assert is_tour(lifted, 3, True)
    assert weight_of(inst, lifted) == tuple(
        a + b for a, b in zip(weight_of(inst, [(0, 1)]), weight_of(red, [(0, 1), (1, 0)])))


def test_contract_hamiltonian_path():
    inst = random_instance(4, 1, 0)
    red, cmap = contract_directed(inst, [(0, 1), (1, 2), (2, 3)])
    assert red is None
    assert cmap.chains == ((0, 1, 2, 3),)


def test_contract_rejects_cycle():
    with pytest.raises(StructureError):
        contract_directed(random_instance(4, 1, 0), [(0, 1), (1, 0)])


# zeroing

def test_zero_out():
    inst = random_instance(6, 2, 3, directed=False)
    W = inst.weights
    assert np.array_equal(zero_out(W, []), W)
    assert not zero_out(W, range(6)).any()
    L = {1, 4}
    WL = Instance(zero_out(W, L), directed=False)
    H = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)]
    touching = [e for e in H if set(e) & L]
    assert weight_of(WL, H) == tuple(a - b for a, b in zip(weight_of(inst, H), weight_of(inst, touching)))


# completion

def test_complete_hamiltonian_path():
    inst = random_instance(5, 1, 0)
    path = [(0, 1), (1, 2), (2, 3), (3, 4)]
    assert sorted(complete_to_tour(path, inst)) == sorted(path + [(4, 0)])


def test_complete_empty_and_monotone():
    for seed in range(10):
        inst = random_instance(6, 2, seed, directed=seed % 2 == 0)
        assert is_tour(complete_to_tour([], inst), 6, inst.directed)


def test_complete_rejects_non_paths():
    with pytest.raises(StructureError):
        complete_to_tour([(0, 1), (1, 0)], random_instance(4, 1, 0))


# algorithms

def test_max_atsp_k1_half():
    for seed in range(5):
        inst = random_instance(6, 1, seed)
        ps = max_atsp(inst, F(1, 4))
        best = max(w[0] for _, w in brute_tours(inst))
        assert len(ps) == 1 and 2 * ps.weights()[0][0] >= best


def test_max_stsp_k1_two_thirds():
    inst = random_instance(7, 1, 2, directed=False)
    ps = max_stsp(inst, F(1, 4))
    cc = weight_of(inst, optimal_cycle_cover(inst, 0))[0]
    assert 3 * ps.weights()[0][0] >= 2 * cc


@pytest.mark.parametrize("directed", [True, False])
def test_small_instances_against_oracle(directed):
    eps = F(3, 10)
    alpha = (F(1, 2) if directed else F(2, 3)) - eps
    fn = max_atsp if directed else max_stsp
    for seed in range(4):
        inst = random_instance(5, 2, 100 + seed, directed=directed)
        ps = fn(inst, eps)
        for edges, w in ps.items:
            assert validate(edges, "tour", inst) and weight_of(inst, edges) == w
        assert verify_approx_pareto(ps, exact_tour_pareto(inst, MAX), alpha)
        assert ps.meta["truncated"]["k_sets"]


def test_reproducible_output():
    inst = random_instance(5, 2, 8)
    a, b = max_atsp(inst, F(3, 10), seed=4), max_atsp(inst, F(3, 10), seed=4)
    assert a.items == b.items and a.meta == b.meta


def test_single_edge_carrying_second_criterion():
    W = np.zeros((5, 5, 2), dtype=np.int64)
    rng = np.random.default_rng(0)
    W[:, :, 0] = rng.integers(1, 10, size=(5, 5))
    W[2, 3, 1] = 100
    inst = Instance(W)
    ps = max_atsp(inst, F(3, 10))
    assert any((2, 3) in edges for edges, _ in ps.items)


def test_equal_weights_trivially_covered():
    inst = Instance(np.full((6, 6, 2), 3, dtype=np.int64), directed=False)
    ps = max_stsp(inst, F(3, 10))
    assert ps.weights() == [(18, 18)]


def test_orientation_checks():
    with pytest.raises(StructureError):
        max_atsp(random_instance(4, 2, 0, directed=False), F(1, 4))
    with pytest.raises(StructureError):
        max_stsp(random_instance(4, 2, 0), F(1, 4))


def test_heavy_edge_pigeonhole():
    # among l tour edges some edge is at most (k/l) w(H) in every criterion
    for seed in range(30):
        inst = random_instance(6, 2, seed, directed=seed % 2 == 0)
        order = list(np.random.default_rng(seed).permutation(6))
        H = [(int(order[j]), int(order[(j + 1) % 6])) for j in range(6)]
        if not inst.directed:
            H = [tuple(sorted(e)) for e in H]
        wH = weight_of(inst, H)
        for l in range(1, 7):
            for chosen in combinations(H, l):
                assert any(all(l * int(inst.weights[u, v, i]) <= 2 * wH[i] for i in range(2))
                           for u, v in chosen)
