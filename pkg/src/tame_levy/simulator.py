"""Monte Carlo for X_S(t) seen on G_n: a compound Poisson chain with rate
Lambda_n and jump law proportional to the coset masses.

Every path owns a Philox stream keyed by (seed, stream id), so ensembles
are reproducible whatever order or process the paths run in.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import Censored, ConfigError, InvalidLevels, LevelMismatch
from .levy import bn_sequence, levy_table, total_mass
from .support import CosetIndex, level_group
from .tower import TowerSpec

EXIT_BLOCK = 32
HORIZON_BLOCK = 4096
MAX_JUMPS = 1_000_000


def path_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


class JumpSampler:
    """Draws nonzero cosets of G_n from the normalized Levy measure without enumeration."""

    def __init__(self, spec: TowerSpec, n: int):
        self.spec = spec
        self.n = n
        self.group = level_group(spec, n)
        self.table = levy_table(spec, n)
        self.rate = self.table.total
        self.probs = self.table.shell_probabilities()
        self.cdf = np.cumsum(self.probs)
        self.cdf[-1] = 1.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        # digits are drawn as f base-p components each, so q_n may exceed int64
        grp = self.group
        nd, p, e, f, n = grp.num_digits, grp.p, grp.e, grp.f, grp.n
        j0 = np.minimum(np.searchsorted(self.cdf, rng.random(size), side="right"), nd - 1)
        parts = rng.integers(0, p, size=(size, nd, f))
        lead = rng.integers(0, p, size=(size, f))
        redo = ~np.any(lead, axis=1)
        while np.any(redo):
            lead[redo] = rng.integers(0, p, size=(int(redo.sum()), f))
            redo = ~np.any(lead, axis=1)
        parts[np.arange(nd)[None, :] < j0[:, None]] = 0
        parts[np.arange(size), j0] = lead
        # digit j = b + e t carries base-p digit t of coordinates b f + i
        scale = p ** np.arange(n, dtype=np.int64)
        return np.einsum("stbi,t->sbi", parts.reshape(size, n, e, f), scale).reshape(size, grp.m)


def sample_jump(spec: TowerSpec, n: int, rng: np.random.Generator) -> CosetIndex:
    row = JumpSampler(spec, n).sample(rng, 1)[0]
    return CosetIndex(spec, n, tuple(row.tolist()))


def sample_jumps(spec: TowerSpec, n: int, rng: np.random.Generator, size: int) -> np.ndarray:
    return JumpSampler(spec, n).sample(rng, size)


@dataclass
class PathRecord:
    """Jump times and post-jump states (coordinates) of one path started at 0."""

    level: int
    times: np.ndarray
    states: np.ndarray
    seed: int
    stream: int
    horizon: float | None
    exit_level: int | None
    spec_digest: str
    exited: bool = False
    params: dict = field(default_factory=dict)

    @property
    def num_jumps(self):
        return len(self.times)

    @property
    def end_time(self):
        if self.horizon is not None:
            return self.horizon
        return float(self.times[-1]) if len(self.times) else 0.0

    def to_lines(self, spec: TowerSpec) -> str:
        """Line format: a header, then 'time<TAB>d0 d1 ...' per jump (digits of the state)."""
        grp = level_group(spec, self.level)
        buf = io.StringIO()
        buf.write(
            f"# level={self.level} seed={self.seed} stream={self.stream} horizon={self.horizon} "
            f"exit_level={self.exit_level} tower={self.spec_digest}\n"
        )
        digits = grp.coords_to_digits(self.states) if len(self.states) else np.zeros((0, grp.num_digits), int)
        buf.write(f"{0.0!r}\t{' '.join('0' for _ in range(grp.num_digits))}\n")
        for t, row in zip(self.times.tolist(), digits.tolist()):
            buf.write(f"{t!r}\t{' '.join(str(v) for v in row)}\n")
        return buf.getvalue()


def simulate_path(
    spec: TowerSpec,
    n: int,
    seed: int,
    stream: int,
    horizon: float | None = None,
    exit_level: int | None = None,
    sampler: JumpSampler | None = None,
    max_jumps: int = MAX_JUMPS,
) -> PathRecord:
    """Simulate on G_n until the horizon or until the first exit from S_exit_level.

    With both set, whichever comes first stops the path.
    """
    if horizon is None and exit_level is None:
        raise ConfigError("need a horizon or an exit level")
    if horizon is not None and horizon <= 0:
        raise ConfigError("horizon must be positive")
    if exit_level is not None and not 1 <= exit_level <= n:
        raise InvalidLevels(f"exit level {exit_level} outside 1..{n}")
    sampler = sampler or JumpSampler(spec, n)
    grp = sampler.group
    rng = path_rng(seed, stream)
    block = EXIT_BLOCK
    if horizon is not None:
        block = int(min(HORIZON_BLOCK, max(4, math.ceil(1.5 * sampler.rate * horizon) + 4)))
    t = 0.0
    state = np.zeros(grp.m, dtype=np.int64)
    times, states = [], []
    exited = False
    count = 0
    while True:
        holds = rng.exponential(1.0 / sampler.rate, size=block)
        jumps = sampler.sample(rng, block)
        at = t + np.cumsum(holds)
        stop = block
        if horizon is not None:
            stop = int(np.searchsorted(at, horizon, side="right"))
        if exit_level is not None:
            leaving = np.any(grp.project(jumps[:stop], exit_level), axis=-1) if exit_level < n else np.ones(stop, bool)
            hit = np.flatnonzero(leaving)
            if hit.size:
                stop = int(hit[0]) + 1
                exited = True
        stop = min(stop, max_jumps - count)
        path = (state + np.cumsum(jumps[:stop], axis=0)) % grp.modulus
        times.append(at[:stop])
        states.append(path)
        count += stop
        if stop < block or exited or count >= max_jumps:
            break
        t = float(at[-1])
        state = path[-1]
    return PathRecord(
        level=n,
        times=np.concatenate(times),
        states=np.concatenate(states).reshape(-1, grp.m),
        seed=seed,
        stream=stream,
        horizon=horizon,
        exit_level=exit_level,
        spec_digest=spec.digest(),
        exited=exited,
    )


def simulate_ensemble(spec, n, samples, seed, horizon=None, exit_level=None, first_stream=0):
    if samples < 1:
        raise ConfigError("samples must be at least 1")
    sampler = JumpSampler(spec, n)
    return [
        simulate_path(spec, n, seed, first_stream + i, horizon, exit_level, sampler)
        for i in range(samples)
    ]


# -- exit times -------------------------------------------------------------


def _projected(spec, path, n):
    grp = level_group(spec, path.level)
    if n > path.level:
        raise LevelMismatch(f"path at level {path.level} cannot resolve level {n}")
    return grp.project(path.states, n) if len(path.states) else np.zeros((0, spec.m(n)), int)


def first_exit_time(spec: TowerSpec, path: PathRecord, N: int) -> float:
    """pi(N): first jump time whose post-state lies outside S_N."""
    if N > path.level:
        raise LevelMismatch(f"path at level {path.level} cannot resolve level {N}")
    grp = level_group(spec, path.level)
    if len(path.states):
        out = grp.delta_levels(path.states) < N
        hit = np.flatnonzero(out)
        if hit.size:
            return float(path.times[hit[0]])
    raise Censored(f"path (stream {path.stream}) stopped before leaving S_{N}")


def occupation_tau(spec: TowerSpec, path: PathRecord, n: int, N: int) -> float:
    """tau(n,N): time spent in S_n up to pi(N)."""
    if not N < n <= path.level:
        raise InvalidLevels(f"need N < n <= path level, got N={N}, n={n}")
    exit_t = first_exit_time(spec, path, N)
    inside = ~np.any(_projected(spec, path, n), axis=-1)
    starts = np.concatenate([[0.0], path.times])
    in_sn = np.concatenate([[True], inside])
    total = 0.0
    for k in range(len(starts) - 1):
        if starts[k] >= exit_t:
            break
        if in_sn[k]:
            total += min(starts[k + 1], exit_t) - starts[k]
    return total


def q_event(spec: TowerSpec, path: PathRecord, n: int, N: int) -> bool:
    """X outside S_n at all times in [pi(n), pi(N))."""
    exit_t = first_exit_time(spec, path, N)
    inside = ~np.any(_projected(spec, path, n), axis=-1)
    # pi(n) is the first post-jump state outside S_n; it exists since pi(n) <= pi(N)
    pi_n = path.times[np.flatnonzero(~inside)[0]]
    window = (path.times > pi_n) & (path.times < exit_t)
    return not np.any(inside & window)


def wilson_interval(successes: int, total: int, level=0.99):
    if total == 0:
        return (0.0, 1.0)
    z = stats.norm.ppf(0.5 + level / 2)
    phat = successes / total
    den = 1 + z**2 / total
    centre = (phat + z**2 / (2 * total)) / den
    half = z * math.sqrt(phat * (1 - phat) / total + z**2 / (4 * total**2)) / den
    return (float(centre - half), float(centre + half))


@dataclass
class ExitStats:
    n: int
    N: int
    pi_N: np.ndarray
    tau: np.ndarray
    q_events: np.ndarray
    censored: int

    @property
    def samples(self):
        return len(self.q_events)

    def q_estimate(self, level=0.99):
        k = int(self.q_events.sum())
        lo, hi = wilson_interval(k, self.samples, level)
        return k / self.samples if self.samples else float("nan"), lo, hi

    def summary(self):
        est, lo, hi = self.q_estimate()
        return {
            "n": self.n,
            "N": self.N,
            "samples": self.samples,
            "censored": self.censored,
            "mean_pi_N": float(np.mean(self.pi_N)) if self.samples else float("nan"),
            "mean_tau": float(np.mean(self.tau)) if self.samples else float("nan"),
            "Q_mc": est,
            "Q_lo": lo,
            "Q_hi": hi,
        }


def exit_stats(spec, n, N, samples, seed, horizon=None) -> ExitStats:
    if not 1 <= N < n:
        raise InvalidLevels(f"need 1 <= N < n, got n={n}, N={N}")
    paths = simulate_ensemble(spec, n, samples, seed, horizon=horizon, exit_level=N)
    pis, taus, events = [], [], []
    censored = 0
    for path in paths:
        try:
            pis.append(first_exit_time(spec, path, N))
        except Censored:
            censored += 1
            continue
        taus.append(occupation_tau(spec, path, n, N))
        events.append(q_event(spec, path, n, N))
    return ExitStats(n, N, np.array(pis), np.array(taus), np.array(events, dtype=bool), censored)


def Q_mc(spec: TowerSpec, n: int, N: int, samples: int, seed: int):
    """(estimate, lo, hi) of Q(n,N) with a Wilson 99% interval."""
    if samples < 1:
        raise ConfigError("samples must be at least 1")
    return exit_stats(spec, n, N, samples, seed).q_estimate()


# -- exit levels by superposition ----------------------------------------------------------


def exit_times_superposition(spec: TowerSpec, n_max: int, samples: int, seed: int, stream=0) -> np.ndarray:
    """Joint samples of (pi(1), .., pi(n_max)), shape (samples, n_max).

    Jumps whose increment lies in S_k but not in S_(k+1) form independent
    Poisson streams of rate Lambda_(k+1) - Lambda_k (Lambda_0 = 0), so
    pi(n) is the minimum of the first arrivals of the streams k < n.
    """
    rates = np.diff([0.0] + [total_mass(spec, k) for k in range(1, n_max + 1)])
    if np.any(rates <= 0):
        raise ArithmeticError("Levy masses of the subgroup shells must be positive")
    rng = path_rng(seed, stream)
    arrivals = rng.exponential(1.0 / rates, size=(samples, n_max))
    return np.minimum.accumulate(arrivals, axis=1)


def limsup_statistic(spec: TowerSpec, levels, samples: int, seed: int, scale=1.0, use_B=False):
    """Per-path max over n in ``levels`` of pi(n) / (scale * b_n) (or B_n)."""
    levels = list(levels)
    seq = bn_sequence(spec, max(levels), with_B=use_B)
    norm = np.array([(seq.B if use_B else seq.b)[n - 1] for n in levels]) * scale
    if np.any(norm <= 0):
        raise InvalidLevels("b_n vanishes on the requested range; start at n(2)")
    pis = exit_times_superposition(spec, max(levels), samples, seed)
    ratios = pis[:, [n - 1 for n in levels]] / norm
    return ratios.max(axis=1)
