"""Acceptance gate: the ten primary criteria at their stated tolerances.

Every criterion records a PASS/FAIL line (shown in the terminal summary) and
then asserts, so a red criterion fails the suite.
"""

import random
import time
from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _helpers import brute_matching_value, brute_tours, is_tour, m_feasible, random_cover
from pareto_tsp.bicriteria import (
    m_feasible_extract,
    matching_union_decompose,
    pentagon_fixture,
    two_alg,
)
from pareto_tsp.core import weight_of
from pareto_tsp.decompose import (
    best_decomposition_bruteforce,
    decompose_deterministic,
    decompose_randomized,
    eta,
    is_light,
    tournament_fixture,
)
from pareto_tsp.generators import gamma_instance, metric_instance, random_instance
from pareto_tsp.maxtsp import beta_truncate, contract_directed, max_atsp, max_stsp
from pareto_tsp.minatsp import min_atsp
from pareto_tsp.oracle import enumerate_cycle_covers, exact_tour_pareto, tour_extrema
from pareto_tsp.pareto import MAX, MIN, verify_approx_pareto
from pareto_tsp.solver import max_weight_matching, mono_tsp_approx, optimal_cycle_cover


def _kept_ok(C, dec, alpha):
    """Independent check: one edge gone per cycle, kept weight >= alpha * total."""
    kept = set(dec.edges)
    for cyc in C.cycles:
        if sum(e not in kept for e in cyc) != 1:
            return False
    if not kept <= set(C.edges()):
        return False
    w = [0] * C.k
    for e in kept:
        w = [a + b for a, b in zip(w, C.weights[e])]
    tot = [0] * C.k
    for e in C.edges():
        tot = [a + b for a, b in zip(tot, C.weights[e])]
    return tuple(w) == tuple(dec.weight) and all(F(a) >= alpha * b for a, b in zip(w, tot))


# 1

def test_criterion_1_decomposition_guarantee(record_acceptance):
    eps = F(1, 5)
    t0 = time.perf_counter()
    failures, used = [], {True: 0, False: 0}
    for directed in (True, False):
        alpha = (F(1, 2) if directed else F(2, 3)) - eps
        for seed in range(100):
            rng = random.Random(seed)
            k = (2, 3, 4)[seed % 3]
            C = random_cover(seed, rng.randint(150, 300), k, directed)
            if not is_light(C, 1 / eta(k, eps)):
                continue
            used[directed] += 1
            for dec in (decompose_randomized(C, eps, rng_seed=seed), decompose_deterministic(C, eps)):
                if not _kept_ok(C, dec, alpha):
                    failures.append((directed, seed, dec.method))
    dt = time.perf_counter() - t0
    ok = not failures and used[True] == 100 and used[False] == 100 and dt < 30
    record_acceptance(1, ok, f"light covers directed={used[True]} undirected={used[False]}, "
                             f"failures={len(failures)}, {dt:.1f}s")
    assert not failures
    assert used[True] == used[False] == 100
    assert dt < 30


# 2

def test_criterion_2_tournament_tightness(record_acceptance):
    t0 = time.perf_counter()
    eps = F(1, 8)
    C = tournament_fixture(4, eps)
    scale = eps.denominator
    totals_ok = C.total() == tuple([4 * (scale - eps.numerator)] * 4)
    cycles = C.cycles
    every_bad = True
    count = 0
    for removed in product(*cycles):
        count += 1
        kept = [e for e in C.edges() if e not in removed]
        w = C.weight_of(kept)
        if not any(F(x, scale) <= 1 - eps for x in w):
            every_bad = False
    _, best = best_decomposition_bruteforce(C)
    dt = time.perf_counter() - t0
    ok = totals_ok and every_bad and count == 32 and best == F(1, 4) and dt < 1
    record_acceptance(2, ok, f"{count} decompositions, all weak somewhere={every_bad}, "
                             f"best min-ratio={best}, {dt:.3f}s")
    assert totals_ok and every_bad and count == 32 and dt < 1


# 3

def test_criterion_3_pentagon(record_acceptance):
    t0 = time.perf_counter()
    inst = pentagon_fixture()
    tours = brute_tours(inst)
    ws = {w for _, w in tours}
    both = [w for w in ws if w[0] >= 2 and w[1] >= 2]
    ref = exact_tour_pareto(inst, MAX).weights()
    dt = time.perf_counter() - t0
    ok = len(tours) == 12 and (3, 0) in ws and (0, 3) in ws and not both and dt < 1
    ok = ok and (3, 0) in ref and (0, 3) in ref
    record_acceptance(3, ok, f"{len(tours)} tours, (3,0) and (0,3) present, none >= (2,2), {dt:.3f}s")
    assert ok


# 4

def _random_pair(rng):
    n = rng.randint(3, 10)
    order = list(range(n))
    rng.shuffle(order)
    H = [tuple(sorted((order[j], order[(j + 1) % n]))) for j in range(n)]
    if rng.random() < 0.5:  # path collection variant
        H = [e for e in H if rng.random() < 0.7]
    H = sorted(set(H))
    verts = list(range(n))
    rng.shuffle(verts)
    M = [tuple(sorted(verts[j:j + 2])) for j in range(0, n - 1, 2) if rng.random() < 0.8]
    w = {(u, v): rng.randint(0, 20) for u in range(n) for v in range(u + 1, n)}
    return n, M, H, w


def test_criterion_4_extraction(record_acceptance):
    t0 = time.perf_counter()
    failures = 0
    for seed in range(1000):
        rng = random.Random(seed)
        n, M, H, w = _random_pair(rng)
        P = m_feasible_extract(M, H, w, n)
        ok = (set(P) <= set(H) and m_feasible(n, P, M)
              and 3 * sum(w[e] for e in P) >= sum(w[e] for e in H))
        failures += not ok
    dt = time.perf_counter() - t0
    record_acceptance(4, failures == 0 and dt < 30, f"1000 pairs, failures={failures}, {dt:.1f}s")
    assert failures == 0 and dt < 30


# 5

def test_criterion_5_two_alg(record_acceptance):
    t0 = time.perf_counter()
    failures = 0
    for seed in range(100):
        n = 4 + seed % 5
        inst = random_instance(n, 2, seed, directed=False)
        res = two_alg(inst, mono_solver=lambda I, c: mono_tsp_approx(I, c, exact_threshold=10))
        opt = tour_extrema(inst, MAX)
        good = (is_tour(res.tour, n, False) and tuple(res.weight) == tuple(weight_of(inst, res.tour))
                and all(3 * res.weight[i] >= opt[i] for i in range(2))
                and verify_approx_pareto([res.weight], exact_tour_pareto(inst, MAX), F(1, 3)).ok)
        failures += not good
    dt = time.perf_counter() - t0
    record_acceptance(5, failures == 0 and dt < 120, f"100 instances, failures={failures}, {dt:.1f}s")
    assert failures == 0 and dt < 120


# 6

def test_criterion_6_max_tsp(record_acceptance):
    t0 = time.perf_counter()
    eps = F(3, 10)
    failures, truncated = [], 0
    for directed in (True, False):
        alpha = (F(1, 2) if directed else F(2, 3)) - eps
        for seed in range(30):
            n = 4 + seed % 4
            inst = random_instance(n, 2, seed, directed=directed)
            ps = (max_atsp if directed else max_stsp)(inst, eps, seed=seed)
            truncated += any(ps.meta["truncated"].values())
            ref = exact_tour_pareto(inst, MAX)
            v = verify_approx_pareto(ps, ref, alpha, MAX)
            tours_ok = all(is_tour(t, n, directed) for t, _ in ps.items)
            if not (v.ok and tours_ok):
                failures.append((directed, seed))
    dt = time.perf_counter() - t0
    ok = not failures and dt < 600
    record_acceptance(6, ok, f"60 runs, failures={len(failures)}, truncated runs={truncated}, {dt:.1f}s")
    assert ok


# 7 and 8 share the Min-ATSP runs

@pytest.fixture(scope="module")
def min_atsp_runs():
    t0 = time.perf_counter()
    runs = []
    for kind, gamma in (("metric", F(1)), ("gamma", F(3, 5))):
        for seed in range(30):
            inst = metric_instance(8, 2, seed) if kind == "metric" else gamma_instance(8, 2, seed, gamma)
            ps = min_atsp(inst, F(1, 2), gamma)
            runs.append((kind, gamma, inst, ps))
    return runs, time.perf_counter() - t0


def test_criterion_7_min_atsp(min_atsp_runs, record_acceptance):
    runs, build = min_atsp_runs
    t0 = time.perf_counter()
    failures = []
    for kind, gamma, inst, ps in runs:
        alpha = F(7, 2) if kind == "metric" else F(5, 2) + F(1, 2)
        ref = exact_tour_pareto(inst, MIN)
        ok = verify_approx_pareto(ps, ref, alpha, MIN).ok
        for cert in ps.meta["certificates"]:
            ok &= is_tour(cert["tour"], inst.n, True)
            ok &= tuple(cert["weight"]) == tuple(weight_of(inst, cert["tour"]))
            ok &= all(F(a) <= b for a, b in zip(cert["weight"], cert["accumulated"]))
            ok &= max(cert["depths"]) < 3
        ok &= len(ps.meta["layer_sizes"]) <= 3
        if not ok:
            failures.append((kind, inst.digest()[:8]))
    dt = build + time.perf_counter() - t0
    record_acceptance(7, not failures and dt < 600,
                      f"30 metric at 7/2 + 30 gamma=3/5 at 3, failures={len(failures)}, {dt:.1f}s")
    assert not failures and dt < 600


# 8

_STRUCT = {"beta": 0, "contract": 0, "beta_bad": 0, "contract_bad": 0}


@settings(max_examples=200, deadline=None, database=None)
@given(st.integers(2, 6), st.integers(1, 3), st.integers(0, 2**32 - 1), st.data())
def _beta_sandwich(n, k, seed, data):
    W = np.random.default_rng(seed).integers(0, 15, size=(n, n, k))
    beta = data.draw(st.lists(st.integers(0, 15), min_size=k, max_size=k))
    Wb = beta_truncate(W, beta)
    _STRUCT["beta"] += 1
    off = ~np.eye(n, dtype=bool)
    below = (Wb <= W).all()
    untouched = (W <= np.array(beta)).all(axis=2)
    equal_where_kept = (Wb[untouched & off] == W[untouched & off]).all()
    zero_where_cut = (Wb[~untouched & off] == 0).all()
    if not (below and equal_where_kept and zero_where_cut):
        _STRUCT["beta_bad"] += 1


@settings(max_examples=200, deadline=None, database=None)
@given(st.integers(3, 8), st.integers(0, 2**32 - 1))
def _contraction_round_trip(n, seed):
    rng = random.Random(seed)
    inst = random_instance(n, 2, seed, directed=True)
    order = list(range(n))
    rng.shuffle(order)
    # K: a random subset of the edges of a random Hamiltonian path
    K = [(order[j], order[j + 1]) for j in range(n - 1) if rng.random() < 0.5]
    red, cmap = contract_directed(inst, K)
    _STRUCT["contract"] += 1
    if red is None:
        good = len(K) == n - 1
    else:
        m = red.n
        perm = list(range(1, m))
        rng.shuffle(perm)
        seq = [0] + perm
        Hr = [(seq[j], seq[(j + 1) % m]) for j in range(m)]
        lifted = cmap.lift(Hr)
        wk = weight_of(inst, K) if K else (0, 0)
        good = (is_tour(lifted, n, True) and set(K) <= set(lifted)
                and tuple(weight_of(inst, lifted))
                == tuple(a + b for a, b in zip(wk, weight_of(red, Hr))))
    if not good:
        _STRUCT["contract_bad"] += 1


def test_criterion_8_structural_invariants(min_atsp_runs, record_acceptance):
    runs, _ = min_atsp_runs
    t0 = time.perf_counter()
    depth_bad = q_bad = 0
    for _, _, inst, ps in runs:
        m = ps.meta
        depth_bad += any(v * 2**j > inst.n for j, v in enumerate(m["max_vertices"]))
        depth_bad += len(m["layer_sizes"]) > m["depth_limit"]
        q_bad += any(s > m["Q"] for s in m["layer_sizes"])
    _beta_sandwich()
    _contraction_round_trip()
    dt = time.perf_counter() - t0
    ok = (depth_bad == 0 and q_bad == 0 and _STRUCT["beta_bad"] == 0 and _STRUCT["contract_bad"] == 0
          and _STRUCT["beta"] >= 200 and _STRUCT["contract"] >= 200 and dt < 60)
    record_acceptance(8, ok, f"depth/Q violations={depth_bad + q_bad} over {len(runs)} runs, "
                             f"beta cases={_STRUCT['beta']} bad={_STRUCT['beta_bad']}, "
                             f"contraction cases={_STRUCT['contract']} bad={_STRUCT['contract_bad']}, "
                             f"{dt:.1f}s")
    assert ok


# 9

def test_criterion_9_solver_ground_truth(record_acceptance):
    t0 = time.perf_counter()
    cc_bad = mw_bad = mono_bad = 0
    for seed in range(200):
        directed = seed % 2 == 0
        n = (2 if directed else 3) + seed % (6 if directed else 5)
        sense = MAX if seed % 4 < 2 else MIN
        inst = random_instance(n, 1, seed, directed=directed)
        cover = optimal_cycle_cover(inst, 0, sense)
        _, vals = enumerate_cycle_covers(inst)
        target = (max if sense == MAX else min)(v[0] for v in vals)
        cc_bad += weight_of(inst, cover)[0] != target
    for seed in range(200):
        inst = random_instance(3 + seed % 5, 1, 1000 + seed, directed=False)
        M = max_weight_matching(inst, 0)
        verts = [x for e in M for x in e]
        valid = len(verts) == len(set(verts))
        mw_bad += not valid or sum(int(inst.weights[u, v, 0]) for u, v in M) != brute_matching_value(inst)
    for seed in range(200):
        directed = seed % 2 == 0
        n = 3 + seed % 10
        inst = random_instance(n, 1, 2000 + seed, directed=directed)
        T = mono_tsp_approx(inst, 0, exact_threshold=0)
        bound = weight_of(inst, optimal_cycle_cover(inst, 0, MAX))[0]
        ratio = F(1, 2) if directed else F(2, 3)
        mono_bad += not is_tour(T, n, directed) or weight_of(inst, T)[0] < ratio * bound
    dt = time.perf_counter() - t0
    ok = cc_bad == mw_bad == mono_bad == 0 and dt < 120
    record_acceptance(9, ok, f"cycle cover mismatches={cc_bad}/200, matching={mw_bad}/200, "
                             f"mono ratio={mono_bad}/200, {dt:.1f}s")
    assert ok


# 10

def _spread_pair(seed):
    n = 200
    inst = random_instance(n, 2, seed, directed=False, low=50, high=100)
    rng = random.Random(seed)
    tours = []
    for _ in range(2):
        order = list(range(n))
        rng.shuffle(order)
        tours.append([tuple(sorted((order[j], order[(j + 1) % n]))) for j in range(n)])
    return inst, tours[0], tours[1]


def test_criterion_10_matching_union(record_acceptance):
    from pareto_tsp._numeric import ln_bounds
    from pareto_tsp.bicriteria import spread

    t0 = time.perf_counter()
    successes = bound_bad = 0
    max_c = F(0)
    _, ln2_hi = ln_bounds(2)
    for seed in range(50):
        inst, H1, H2 = _spread_pair(seed)
        c = spread(inst, H1, H2)
        max_c = max(max_c, c)
        # delta = 3c/8 + sqrt(c ln2 / 4) + 0.01, with the root rounded up
        root = F(float(np.sqrt(float(c * ln2_hi / 4)))).limit_denominator(10**9) + F(1, 10**6)
        assert root * root >= c * ln2_hi / 4
        delta = F(3, 8) * c + root + F(1, 100)
        res = matching_union_decompose(H1, H2, inst, delta, rng_seed=seed)
        if not res.success:
            continue
        successes += 1
        P = res.edges
        t1 = sum(int(inst.weights[u, v, 0]) for u, v in H1)
        t2 = sum(int(inst.weights[u, v, 1]) for u, v in H2)
        a = sum(int(inst.weights[u, v, 0]) for u, v in P)
        b = sum(int(inst.weights[u, v, 1]) for u, v in P)
        alpha = F(3, 8) - delta
        paths = m_feasible(inst.n, P, [])
        if not (paths and a >= alpha * t1 and b >= alpha * t2 and set(P) <= set(H1) | set(H2)):
            bound_bad += 1
    dt = time.perf_counter() - t0
    ok = successes >= 45 and bound_bad == 0 and max_c <= F(1, 100) and dt < 60
    record_acceptance(10, ok, f"successes={successes}/50, bound violations={bound_bad}, "
                              f"max spread={float(max_c):.4f}, {dt:.1f}s")
    assert ok
