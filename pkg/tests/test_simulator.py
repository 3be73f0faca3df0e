import numpy as np
import pytest
from scipy import stats

from tame_levy.errors import AlphaTooSmall, Censored, ConfigError, InvalidLevels, LevelMismatch
from tame_levy.levy import Q_exact, levy_table, total_mass, transition_probs
from tame_levy.simulator import (
    JumpSampler,
    Q_mc,
    exit_stats,
    exit_times_superposition,
    first_exit_time,
    limsup_statistic,
    occupation_tau,
    path_rng,
    sample_jump,
    sample_jumps,
    simulate_ensemble,
    simulate_path,
    wilson_interval,
)
from tame_levy.support import level_group


def test_level_one_jump_is_the_nonzero_coset(t1):
    rng = path_rng(1, 0)
    for _ in range(20):
        assert sample_jump(t1, 1, rng).coords == (1,)


def test_shell_frequencies(t1):
    grp = level_group(t1, 2)
    draws = sample_jumps(t1, 2, path_rng(2, 0), 100_000)
    shells = grp.coset_shell(draws)
    assert shells.max() < grp.num_digits
    observed = np.bincount(shells, minlength=2)
    expected = np.array([1.5, 1.875]) / 3.375 * len(draws)
    assert stats.chisquare(observed, expected).pvalue > 0.01


@pytest.mark.parametrize("name,n", [("t1", 2), ("t2", 2), ("t3", 1)])
def test_uniform_within_shells(name, n, request):
    spec = request.getfixturevalue(name)
    grp = level_group(spec, n)
    draws = sample_jumps(spec, n, path_rng(3, 0), 100_000)
    index = grp.coords_to_digits(draws) @ (grp.q ** np.arange(grp.num_digits))
    shells = grp.coset_shell(draws)
    for j0 in range(grp.num_digits):
        counts = np.unique(index[shells == j0], return_counts=True)[1]
        assert len(counts) == levy_table(spec, n).counts[j0]
        assert stats.chisquare(counts).pvalue > 0.001


def test_sampler_beyond_enumeration(t2):
    grp = level_group(t2, 4)
    draws = JumpSampler(t2, 4).sample(path_rng(4, 0), 1000)
    assert draws.shape == (1000, grp.m)
    assert np.all(np.any(draws, axis=1))


def test_streams_are_reproducible(t1):
    a = simulate_path(t1, 3, 7, 5, horizon=2.0)
    b = simulate_path(t1, 3, 7, 5, horizon=2.0)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.states, b.states)
    assert a.to_lines(t1) == b.to_lines(t1)
    c = simulate_path(t1, 3, 7, 6, horizon=2.0)
    assert not np.array_equal(a.times, c.times)
    # streams do not depend on how many paths run before them
    ens = simulate_ensemble(t1, 3, 3, 7, horizon=2.0, first_stream=4)
    assert np.array_equal(ens[1].states, a.states)


def test_path_structure(t1):
    path = simulate_path(t1, 2, 8, 0, horizon=5.0)
    assert np.all(np.diff(path.times) > 0) and path.times[-1] <= 5.0
    grp = level_group(t1, 2)
    incs = np.diff(np.vstack([np.zeros(grp.m, int), path.states]), axis=0) % grp.modulus
    assert np.all(np.any(incs, axis=1))
    lines = path.to_lines(t1).splitlines()
    assert lines[0].startswith("# level=2 seed=8 stream=0")
    assert len(lines) == path.num_jumps + 2


def test_jump_count_mean(t1):
    paths = simulate_ensemble(t1, 2, 10_000, 9, horizon=1.0)
    counts = np.array([p.num_jumps for p in paths])
    lam = total_mass(t1, 2)
    assert abs(counts.mean() - lam) <= 3 * np.sqrt(lam / len(counts))


def test_projection_consistency(t1):
    t = 0.5
    fine = simulate_ensemble(t1, 3, 4000, 10, horizon=t)
    coarse = simulate_ensemble(t1, 2, 4000, 11, horizon=t)
    g3, g2 = level_group(t1, 3), level_group(t1, 2)

    def final(path, grp):
        return path.states[-1] if path.num_jumps else np.zeros(grp.m, int)

    a = g3.project(np.array([final(p, g3) for p in fine]), 2)
    b = np.array([final(p, g2) for p in coarse])
    weights = 4 ** np.arange(g2.m)
    ka, kb = a @ weights, b @ weights
    keys = np.union1d(ka, kb)
    table = np.array([[np.sum(ka == k) for k in keys], [np.sum(kb == k) for k in keys]])
    assert stats.chi2_contingency(table).pvalue > 0.01
    # jumps visible at level 2: Poisson(t Lambda_2) in both
    seen_fine = [int(np.sum(np.any(np.diff(np.vstack([np.zeros((1, g2.m), int), g3.project(p.states, 2)]), axis=0) % 4, axis=1))) for p in fine]
    seen_coarse = [p.num_jumps for p in coarse]
    assert stats.mannwhitneyu(seen_fine, seen_coarse).pvalue > 0.01


def test_marginal_matches_transition_probs(t1):
    t = 0.3
    paths = simulate_ensemble(t1, 2, 20_000, 12, horizon=t)
    grp = level_group(t1, 2)
    finals = np.array([p.states[-1] if p.num_jumps else np.zeros(grp.m, int) for p in paths])
    idx = grp.coords_to_digits(finals) @ (grp.q ** np.arange(grp.num_digits))
    freq = np.bincount(idx, minlength=grp.order) / len(paths)
    coords = grp.enumerate_coords()
    order = grp.coords_to_digits(coords) @ (grp.q ** np.arange(grp.num_digits))
    P = np.empty(grp.order)
    P[order] = transition_probs(t1, 2, t)
    assert 0.5 * np.abs(freq - P).sum() < 0.03


def test_exit_time_and_tau(t1):
    paths = simulate_ensemble(t1, 3, 10_000, 13, exit_level=1)
    pis = np.array([first_exit_time(t1, p, 1) for p in paths])
    assert abs(pis.mean() - 1.0) <= 3 / np.sqrt(len(pis))
    assert stats.kstest(pis, "expon", args=(0, 1.0)).pvalue > 0.01
    for p in paths[:500]:
        assert occupation_tau(t1, p, 3, 1) <= first_exit_time(t1, p, 1) + 1e-15


def test_exit_path_stops_at_exit(t1):
    path = simulate_path(t1, 3, 14, 0, exit_level=2)
    assert path.exited
    grp = level_group(t1, 3)
    assert grp.delta_levels(path.states[-1:])[0] < 2
    assert np.all(grp.delta_levels(path.states[:-1]) >= 2)


def test_exit_errors(t1):
    path = simulate_path(t1, 2, 15, 0, horizon=1e-6)
    with pytest.raises(Censored):
        first_exit_time(t1, path, 1)
    with pytest.raises(LevelMismatch):
        first_exit_time(t1, path, 3)
    with pytest.raises(InvalidLevels):
        simulate_path(t1, 2, 0, 0, exit_level=3)
    with pytest.raises(ConfigError):
        simulate_path(t1, 2, 0, 0)
    with pytest.raises(ConfigError):
        simulate_ensemble(t1, 2, 0, 0, horizon=1.0)


def test_censored_paths_are_counted(t1):
    st = exit_stats(t1, 2, 1, 200, 16, horizon=0.2)
    assert st.censored > 0
    assert st.censored + st.samples == 200


def test_q_mc_agrees_with_exact(t1):
    est, lo, hi = Q_mc(t1, 2, 1, 10_000, t1.seed)
    assert 0 <= lo <= est <= hi <= 1
    assert lo <= Q_exact(t1, 2, 1) <= hi
    with pytest.raises(InvalidLevels):
        Q_mc(t1, 2, 2, 10, 0)


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and isinstance(lo, float)
    assert wilson_interval(0, 0) == (0.0, 1.0)
    lo, hi = wilson_interval(100, 100)
    assert hi == pytest.approx(1.0) and lo > 0.9


def test_superposition_matches_simulation(t1):
    sup = exit_times_superposition(t1, 3, 10_000, 17)
    assert np.all(np.diff(sup, axis=1) <= 0)
    for N in (1, 2, 3):
        assert stats.kstest(sup[:, N - 1], "expon", args=(0, 1 / total_mass(t1, N))).pvalue > 0.01
    paths = simulate_ensemble(t1, 3, 5000, 18, exit_level=2)
    direct = [first_exit_time(t1, p, 2) for p in paths]
    assert stats.ks_2samp(sup[:, 1], direct).pvalue > 0.01


def test_limsup_statistic(t1):
    spec = t1.with_alpha(2)
    r = limsup_statistic(spec, range(2, 9), 200, 11)
    assert np.all(r >= 0)
    assert 0.2 <= np.median(r) <= 5
    assert np.all(limsup_statistic(spec, range(2, 9), 200, 11, scale=100) < 1)
    with pytest.raises(InvalidLevels):
        limsup_statistic(spec, range(1, 5), 10, 0)
    with pytest.raises(AlphaTooSmall):
        limsup_statistic(t1, range(2, 5), 10, 0, use_B=True)


def test_sampler_with_huge_residue_field(t1):
    # q_7 = 2^64 does not fit in int64
    grp = level_group(t1, 7)
    draws = JumpSampler(t1, 7).sample(path_rng(5, 0), 2000)
    assert np.all(np.any(draws, axis=1))
    assert np.array_equal(grp.digits_to_coords(grp.coords_to_digits(draws)), draws)
    shells = np.bincount(grp.coset_shell(draws), minlength=grp.num_digits + 1)
    assert shells[-1] == 0
    path = simulate_path(t1, 7, 1, 0, horizon=0.01)
    assert path.to_lines(t1).startswith("# level=7")
