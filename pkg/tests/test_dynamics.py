from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

import torica
from torica import (
    FrozenTrajectoryError,
    RatesConfig,
    build_geometry,
    make_trajectory,
    run_until,
    step,
    total_rate,
)
from torica.dynamics import run_traced


def test_rates_config_rejects_negative():
    with pytest.raises(ValueError):
        RatesConfig(gamma1=-0.5)


def test_total_rate_ground_state(geo4):
    state = make_trajectory(geo4, RatesConfig(0.01, 1.0, 10.0), master_seed=0)
    assert total_rate(state) == pytest.approx(0.01 * 32 + 10.0)


def test_total_rate_counts_anyons(geo4):
    state = make_trajectory(geo4, RatesConfig(0.0, 1.0, 0.0), master_seed=0)
    state.frame.apply_flip(3)
    assert total_rate(state) == pytest.approx(2.0)


def test_total_rate_async_mode(geo4):
    state = make_trajectory(geo4, RatesConfig(0.0, 0.0, 0.5), master_seed=0, sync=False)
    assert total_rate(state) == pytest.approx(0.5 * 16)


def test_dark_state_never_changes(geo4):
    state = make_trajectory(geo4, RatesConfig(0.0, 1.0, 10.0), master_seed=5)
    run_until(state, 1000.0)
    assert state.t == 1000.0
    assert not state.frame.flips.any()
    assert not state.field.values.any()
    counts = state.event_counts
    assert counts["create"] == 0 and counts["hop"] == 0 and counts["field"] > 0


def test_waiting_times_are_exponential(geo4):
    # with gamma2 = 0 the total rate is an invariant of the run, so the
    # inter-event times must be iid exponential at that rate
    rates = RatesConfig(0.05, 0.0, 10.0)
    state = make_trajectory(geo4, rates, master_seed=17)
    R = total_rate(state)
    times = [state.t]
    for _ in range(100_000):
        step(state)
        times.append(state.t)
    waits = np.diff(times)
    result = stats.kstest(waits, "expon", args=(0, 1 / R))
    assert result.pvalue > 0.01


def test_event_shares_match_rates(geo4):
    rates = RatesConfig(0.05, 0.0, 10.0)
    state = make_trajectory(geo4, rates, master_seed=23)
    counts = {"create": 0, "field": 0, "hop": 0}
    n = 100_000
    for _ in range(n):
        counts[step(state).kind] += 1
    assert counts["hop"] == 0
    create_rate = 0.05 * geo4.edge_count
    expected = np.array([create_rate, 10.0]) / (create_rate + 10.0) * n
    chi2, pvalue = stats.chisquare([counts["create"], counts["field"]], expected)
    assert pvalue > 0.01


def test_created_edges_are_uniform(geo4):
    state = make_trajectory(geo4, RatesConfig(0.2, 0.0, 0.0), master_seed=31)
    hits = np.zeros(geo4.edge_count)
    for _ in range(100_000):
        ev = step(state)
        assert ev.kind == "create"
        hits[ev.location] += 1
    chi2, pvalue = stats.chisquare(hits)
    assert pvalue > 0.01


def test_adjacent_pair_annihilates_in_one_hop(geo4):
    state = make_trajectory(geo4, RatesConfig(0.0, 1.0, 0.0), master_seed=2)
    shared = 7
    state.frame.apply_flip(shared)
    p, q = geo4.plaquettes_of_edge(shared)
    state.field.values[p] = 10.0
    state.field.values[q] = 10.0
    assert state.frame.anyon_count == 2
    ev = step(state)
    assert ev.kind == "hop" and ev.location == shared
    assert state.frame.anyon_count == 0


def test_frozen_signalling(geo4):
    state = make_trajectory(geo4, RatesConfig(0.0, 1.0, 0.0), master_seed=3)
    with pytest.raises(FrozenTrajectoryError):
        step(state)
    run_until(state, 77.0)
    assert state.t == 77.0 and state.frozen


def test_poisson_event_count(geo4):
    # creation-only runs: the event count is Poisson with known mean
    lam = 0.1 * geo4.edge_count * 100.0
    counts = []
    for seed in range(1000):
        state = make_trajectory(geo4, RatesConfig(0.1, 0.0, 0.0), master_seed=seed)
        run_until(state, 100.0)
        counts.append(state.event_counts["create"])
    mean = np.mean(counts)
    sigma = np.sqrt(lam / len(counts))
    assert abs(mean - lam) < 3 * sigma


def test_determinism_bitwise(geo8):
    rates = RatesConfig(0.02, 1.0, 10.0)
    runs = []
    for _ in range(2):
        state = make_trajectory(geo8, rates, master_seed=1234, init_mode="mixed")
        run_until(state, 300.0)
        runs.append(state)
    a, b = runs
    assert np.array_equal(a.frame.flips, b.frame.flips)
    assert np.array_equal(a.field.values, b.field.values)
    assert a.t == b.t and a.event_counts == b.event_counts


def test_bernoulli_flip_law_without_motion():
    # with motion and field updates off, each edge is an independent
    # two-state chain: P(flip at t) = (1 - exp(-2 gamma1 t)) / 2
    geo = build_geometry(4)
    gamma1, t = 0.05, 10.0
    runs = 3000
    total = 0
    for seed in range(runs):
        state = make_trajectory(geo, RatesConfig(gamma1, 0.0, 0.0), master_seed=seed)
        run_until(state, t)
        total += int(state.frame.flips.sum())
    p = (1 - np.exp(-2 * gamma1 * t)) / 2
    n = runs * geo.edge_count
    sigma = np.sqrt(p * (1 - p) / n)
    assert abs(total / n - p) < 3 * sigma


def test_run_until_validates_and_hits_grid(geo4):
    state = make_trajectory(geo4, RatesConfig(0.05, 1.0, 5.0), master_seed=8)
    seen = []
    run_until(state, 50.0, observers=(lambda t, s: seen.append((t, s.t)),), times=(10.0, 30.0, 50.0))
    assert [t for t, _ in seen] == [10.0, 30.0, 50.0]
    assert all(t == st for t, st in seen)
    assert state.t == 50.0
    with pytest.raises(ValueError):
        run_until(state, 10.0)


def test_run_traced_matches_statistics(geo4):
    state = make_trajectory(geo4, RatesConfig(0.05, 1.0, 5.0), master_seed=8)
    rows = []
    run_traced(state, 25.0, lambda t, kind, loc: rows.append((t, kind, loc)))
    assert state.t == 25.0
    assert len(rows) == sum(state.event_counts.values())
    assert all(rows[i][0] <= rows[i + 1][0] for i in range(len(rows) - 1))
    kinds = {kind for _, kind, _ in rows}
    assert kinds <= {"create", "hop", "field"}


def test_async_mode_runs_and_updates_sites(geo4):
    state = make_trajectory(geo4, RatesConfig(0.05, 1.0, 2.0), master_seed=9, sync=False)
    run_until(state, 20.0)
    assert state.event_counts["field"] > 0
    assert state.t == 20.0
