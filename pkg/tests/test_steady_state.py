"""Reduced-scale physics checks that run in minutes.

These validate the phenomenology end to end (steering beats diffusion,
phase-sided trends of density and depth, ensemble reproducibility) at
sizes and horizons a laptop core can afford.  The full-scale
statistical reproductions live in test_acceptance.py behind the
``slow`` marker.
"""

from __future__ import annotations

import numpy as np
import pytest

from torica import (
    ExperimentPlan,
    RatesConfig,
    build_geometry,
    make_trajectory,
    run_ensemble,
    run_until,
)
from torica.decoder import _shortest_path_edges


def _fuse_stats(L, gamma3, dist, n_runs=150, t_cap=400.0):
    geo = build_geometry(L)
    fused_by = []
    wraps = 0
    for seed in range(n_runs):
        state = make_trajectory(geo, RatesConfig(0.0, 1.0, gamma3), master_seed=seed)
        a = geo.plaquette_id(2, 1)
        b = geo.plaquette_id(2, 1 + dist)
        for e in _shortest_path_edges(a, b, geo):
            state.frame.apply_flip(e)
        t = 0.0
        while state.frame.anyon_count and t < t_cap:
            t = min(t + 2.0, t_cap)
            run_until(state, t)
        fused_by.append(t)
        wraps += state.frame.winding != (0, 0)
    return float(np.mean(fused_by)), wraps / n_runs


def test_steering_beats_diffusion_and_suppresses_wraps():
    # a separated pair with the field on fuses an order of magnitude
    # faster than by diffusion, and almost always the short way round
    diff_time, diff_wrap = _fuse_stats(8, 0.0, dist=3)
    steer_time, steer_wrap = _fuse_stats(8, 10.0, dist=3)
    assert steer_time < diff_time / 5
    assert steer_wrap < 0.1
    assert diff_wrap > 0.3


def test_density_grows_smoothly_with_injection():
    dens = {}
    for g1 in (1e-3, 1e-2, 1e-1):
        plan = ExperimentPlan(
            sizes=(6,), gamma1_grid=(g1,), gamma3=10.0, trajectories=60,
            master_seed=11, grid_points=6, steady_const=0.05,
        )
        dens[g1] = run_ensemble(plan, 6, g1).stats.final.density_mean
    assert dens[1e-3] < dens[1e-2] < dens[1e-1]
    assert dens[1e-3] < 0.02
    assert dens[1e-1] > 0.1


def test_depth_diagnostic_tracks_the_phase():
    # normalized depth is at the percent level in the sparse regime and
    # an order of magnitude larger deep in the noisy regime
    rows = {}
    for g1 in (1e-3, 1e-1):
        plan = ExperimentPlan(
            sizes=(6,), gamma1_grid=(g1,), gamma3=10.0, trajectories=60,
            master_seed=12, grid_points=6, steady_const=0.05,
        )
        rows[g1] = run_ensemble(plan, 6, g1).stats.final
    assert rows[1e-3].depth_mean < 0.02
    assert rows[1e-1].depth_mean > 5 * rows[1e-3].depth_mean


def test_density_variance_falls_with_system_size():
    var = {}
    for L in (6, 12):
        plan = ExperimentPlan(
            sizes=(L,), gamma1_grid=(3e-2,), gamma3=10.0, trajectories=80,
            master_seed=13, grid_points=4, steady_const=0.02,
        )
        var[L] = run_ensemble(plan, L, 3e-2).stats.final.density_var
    assert var[12] < var[6]


def test_mixed_and_ground_inits_converge_in_depth():
    # same sparse regime, short horizon: depth statistics agree between
    # initial states once the decoder has cleaned the transient
    rows = {}
    for init in ("ground", "mixed"):
        plan = ExperimentPlan(
            sizes=(6,), gamma1_grid=(2e-3,), gamma3=10.0, trajectories=80,
            master_seed=14, grid_points=6, steady_const=0.05, init_mode=init,
        )
        rows[init] = run_ensemble(plan, 6, 2e-3).stats.final
    g, m = rows["ground"], rows["mixed"]
    hw = (g.depth_ci[1] - g.depth_ci[0]) / 2 + (m.depth_ci[1] - m.depth_ci[0]) / 2
    assert abs(g.depth_mean - m.depth_mean) <= max(2 * hw, 0.01)
