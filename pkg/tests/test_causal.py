import itertools
from fractions import Fraction

import numpy as np
import pytest

from vbcswitch.behavior import Behavior
from vbcswitch.causal import (
    DeterministicStrategy,
    classical_bound,
    count_strategies,
    enumerate_strategies,
    membership,
    strategy_behavior,
    vertex_outcomes,
)
from vbcswitch.inequality import LinearFunctional, Term, check_no_signaling, evaluate_functional, evaluate_vbc, vbc_functional
from vbcswitch.switch import IDEAL, NoiseModel, compute_behavior

BITS = (0, 1)


def brute_force_vbc_max(first_depends_on_input=True):
    """Max of 8 * VBC over every response-function assignment, integer arithmetic.

    Written from the causal model directly: loop over the order, the tables of
    each response function, and count winning settings.
    """
    firsts = list(itertools.product(BITS, repeat=2)) if first_depends_on_input else [(0, 0), (1, 1)]
    seconds = list(itertools.product(BITS, repeat=4))
    best = -1
    # Charlie's table only enters term 3 through c at x1=x2=0, so maximize it
    # separately for each Bob table: 2 * (number of z with c chosen well).
    for h in itertools.product(BITS, repeat=2):
        chsh = max(
            sum((h[y] ^ c[z]) == (y & z) for y in BITS for z in BITS) for c in itertools.product(BITS, repeat=2)
        )
        for order in (0, 1):
            for f1 in firsts:
                for f2 in seconds:
                    wins12 = 0
                    for x1, x2, z in itertools.product(BITS, repeat=3):
                        xf, xs = (x1, x2) if order == 0 else (x2, x1)
                        a_first, a_second = f1[xf], f2[2 * xf + xs]
                        a1, a2 = (a_first, a_second) if order == 0 else (a_second, a_first)
                        b = h[0]
                        wins12 += (a2 == x1 and b == 0) + (a1 == x2 and b == 1)
                    # term1 + term2 = wins12 / 8, term3 = chsh / 4
                    best = max(best, wins12 + 2 * chsh)
    return Fraction(best, 8)


# -------------------------------------------------------------- enumeration

def test_count_is_product_of_response_tables():
    assert count_strategies() == 2 * 4 * 16 * 256 * 4 == 131072
    assert count_strategies(False) == 2 * 2 * 16 * 256 * 4


def test_enumeration_yields_each_index_once():
    seen = [s.index for s in enumerate_strategies()]
    assert len(seen) == 131072
    assert seen == list(range(131072))


def test_first_strategy_is_all_zero():
    s = next(enumerate_strategies())
    assert (s.order, s.f1, s.f2, s.g, s.h) == (0, 0, 0, 0, 0)
    assert strategy_behavior(s).table[..., 0, 0, 0, 0].min() == 1.0


def test_from_index_roundtrip():
    for i in [0, 1, 4095, 65535, 65536, 131071]:
        assert DeterministicStrategy.from_index(i).index == i
    with pytest.raises(IndexError):
        DeterministicStrategy.from_index(131072)


def test_first_alice_depends_only_on_own_input():
    rng = np.random.default_rng(0)
    for i in rng.integers(0, 131072, size=200):
        s = DeterministicStrategy.from_index(int(i))
        for x1, x2, y, z in itertools.product(BITS, repeat=4):
            a1, a2, _, _ = s.outputs(x1, x2, y, z)
            if s.order == 0:
                assert a1 == s.outputs(x1, 1 - x2, 1 - y, 1 - z)[0]
            else:
                assert a2 == s.outputs(1 - x1, x2, 1 - y, 1 - z)[1]
            assert (a1, a2) == s.outputs(x1, x2, 1 - y, 1 - z)[:2]  # no dependence on y or z


def test_vectorized_outcomes_match_scalar():
    outs = vertex_outcomes()
    rng = np.random.default_rng(1)
    for i in rng.integers(0, 131072, size=300):
        s = DeterministicStrategy.from_index(int(i))
        assert np.array_equal(strategy_behavior(s).by_setting.argmax(axis=1), outs[i])


def test_term1_contribution_of_copying_strategy():
    # A1 first, f2(x1, x2) = x1 -> table bits 0,0,1,1 -> index 12; h(0) = 0
    s = DeterministicStrategy(0, 0, 12, 0, 0)
    rep = evaluate_vbc(strategy_behavior(s))
    assert rep.term1 == 1.0
    assert rep.term2 == 0.0
    # averaged over y: Bob answers b=0 only half of the time per y=0 rounds... term1 is conditioned on y=0
    assert rep.term1 / 2 == 0.5


def test_all_vertices_no_signaling():
    outs = vertex_outcomes()
    tables = np.zeros((outs.shape[0], 16, 16), dtype=np.int8)
    np.put_along_axis(tables, outs[:, :, None].astype(np.int64), 1, axis=2)
    t = tables.reshape(-1, *(2,) * 8)
    # i: (a1 a2 c) marginal independent of y
    m = t.sum(axis=7)
    assert np.array_equal(m[:, :, :, 0], m[:, :, :, 1])
    # ii: b marginal independent of x1, x2, z
    mb = t.sum(axis=(5, 6, 8))  # strategy x1 x2 y z b
    assert np.all(mb == mb[:, :1, :1, :, :1, :])
    # iii: (a1 a2) independent of z
    ma = t.sum(axis=(7, 8))
    assert np.array_equal(ma[:, :, :, :, 0], ma[:, :, :, :, 1])


def test_single_vertex_no_signaling_report():
    rep = check_no_signaling(strategy_behavior(DeterministicStrategy.from_index(99999)))
    assert rep.ok and max(rep.deviations.values()) == 0.0


# ---------------------------------------------------------------- bound

def test_vbc_bound_equals_brute_force():
    value, arg = classical_bound(vbc_functional())
    oracle = brute_force_vbc_max()
    assert oracle == Fraction(7, 4)
    assert value == 1.75
    # exact re-evaluation of the argmax with rationals
    beh = strategy_behavior(arg)
    t = beh.table
    exact = Fraction(0)
    for x1, x2, z in itertools.product(BITS, repeat=3):
        exact += Fraction(int(t[x1, x2, 0, z][:, x1, 0, :].sum() + t[x1, x2, 0, z][x2, :, 1, :].sum()), 8)
    for y, z in itertools.product(BITS, repeat=2):
        exact += Fraction(int(sum(t[0, 0, y, z, :, :, b, b ^ (y * z)].sum() for b in BITS)), 4)
    assert exact == Fraction(7, 4)


def test_bound_unchanged_without_first_input_dependence():
    value, _ = classical_bound(vbc_functional(), first_depends_on_input=False)
    assert value == 1.75
    assert brute_force_vbc_max(False) == Fraction(7, 4)


def test_bound_trivial_functionals():
    assert classical_bound(LinearFunctional())[0] == 0.0
    value, arg = classical_bound(LinearFunctional((Term(1.0, "b == 0", {"y": 0}),)))
    assert value == 1.0
    assert arg.h & 1 == 0


@pytest.mark.parametrize("chunks", [1, 3, 7, 64])
def test_bound_independent_of_partitioning(chunks):
    f = vbc_functional()
    ref = classical_bound(f)
    assert classical_bound(f, chunks=chunks) == ref


def test_bound_dominates_random_strategies():
    f = vbc_functional()
    value, _ = classical_bound(f)
    rng = np.random.default_rng(5)
    for i in rng.integers(0, 131072, size=100):
        assert evaluate_functional(strategy_behavior(DeterministicStrategy.from_index(int(i))), f) <= value


# ------------------------------------------------------------- membership

def test_vertex_membership_lookup():
    s = DeterministicStrategy.from_index(4242)
    res = membership(strategy_behavior(s))
    assert res.feasible
    (idx, w), = res.weights.items()
    assert w == 1.0
    assert np.array_equal(strategy_behavior(DeterministicStrategy.from_index(idx)).table, strategy_behavior(s).table)


@pytest.mark.slow
def test_vertex_membership_through_lp():
    s = DeterministicStrategy.from_index(77777)
    res = membership(strategy_behavior(s), use_lp=True)
    assert res.feasible and res.residual <= 1e-9


@pytest.mark.slow
def test_ideal_switch_not_member(ideal_behavior):
    res = membership(ideal_behavior)
    assert not res.feasible
    assert res.max_violation > 1e-3
    # the dual functional separates: value on the behavior exceeds every vertex
    sep_value = float(res.separating @ ideal_behavior.flat)
    assert sep_value - classical_bound(res.separating)[0] == pytest.approx(res.separation)
    assert res.separation > 1e-9


@pytest.mark.slow
def test_unentangled_switch_is_member():
    beh = compute_behavior(NoiseModel(1.0, 0.0))
    assert evaluate_vbc(beh).total <= 1.75
    res = membership(beh)
    assert res.feasible
    w = np.zeros(256)
    for idx, wt in res.weights.items():
        w += wt * strategy_behavior(DeterministicStrategy.from_index(idx)).flat
    assert np.max(np.abs(w - beh.flat)) <= 1e-9
    assert all(v >= 0 for v in res.weights.values())
    assert sum(res.weights.values()) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.slow
def test_mixture_of_two_vertices_is_member():
    rng = np.random.default_rng(9)
    i, j = (int(k) for k in rng.choice(131072, size=2, replace=False))
    wt = float(rng.random())
    a = strategy_behavior(DeterministicStrategy.from_index(i))
    b = strategy_behavior(DeterministicStrategy.from_index(j))
    mix = a.mix(b, wt)
    res = membership(mix)
    assert res.feasible
    recon = sum(v * strategy_behavior(DeterministicStrategy.from_index(k)).flat for k, v in res.weights.items())
    assert np.max(np.abs(recon - mix.flat)) <= 1e-9


def test_non_vertex_deterministic_behavior_rejected():
    # Bob's outcome depends on x1: deterministic but outside the model
    t = np.zeros((16, 16))
    for k, (x1, x2, y, z) in enumerate(itertools.product(BITS, repeat=4)):
        t[k, 2 * x1] = 1.0
    res = membership(Behavior.from_flat(t))
    assert not res.feasible
    assert res.separation > 0
