"""Levy measure of S-cosets, the Levy-Khinchin identity, transition
probabilities on G_n and the exact quantities behind Q(n, N).

Masses are evaluated with mpmath at ``MP_DPS`` decimal digits and handed
to numpy as doubles.  Character values stay exact (rational angles) until
the aggregation step, where they become complex doubles.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .errors import (
    AlphaTooSmall,
    InvalidLevels,
    NonPositiveTime,
    NumericalFailure,
    ShellOutOfRange,
    ZeroCoset,
)
from .finite_field import rank_mod_p
from .support import CosetIndex, DualIndex, level_group
from .tower import TowerSpec

MP_DPS = 50
CLAMP = 1e-12


def _mp(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


# -- per-shell masses -------------------------------------------------------


@dataclass(frozen=True)
class LevyTable:
    """Per-shell coset counts and masses at level n, plus the closed-form total."""

    spec: TowerSpec
    n: int
    counts: tuple[int, ...]
    masses: tuple[float, ...]
    total: float
    masses_mp: tuple = ()
    total_mp: object = None

    @property
    def shells(self):
        return len(self.counts)

    def shell_weights(self):
        """count_j0 * mass_j0 for each shell."""
        return np.array([c * m for c, m in zip(self.counts, self.masses)])

    def shell_probabilities(self):
        w = self.shell_weights()
        return w / w.sum()

    def mass_array(self):
        # index ne (the zero coset) carries no mass
        return np.array(list(self.masses) + [0.0])

    def coset_sum(self) -> float:
        return math.fsum(c * m for c, m in zip(self.counts, self.masses))

    def corrupted(self, shell=0, factor=1.5) -> "LevyTable":
        """Copy with one shell mass rescaled; used as a negative control."""
        masses = list(self.masses)
        masses[shell] *= factor
        return LevyTable(self.spec, self.n, self.counts, tuple(masses), self.total)


def _mass_params(spec, n):
    q = mpmath.mpf(spec.q(n))
    a = _mp(spec.alpha) / spec.m(n)
    d = spec.d(n)
    amp = q ** (d * a) * (q**a - 1) / (1 - q ** (-1 - a))
    c = ((1 - 1 / q) / (q**a - 1)) * q ** (-d * (1 + a))
    return q, a, d, amp, c


@functools.cache
def levy_table(spec: TowerSpec, n: int) -> LevyTable:
    with mpmath.workdps(MP_DPS):
        q, a, d, amp, c = _mass_params(spec, n)
        ne = n * spec.e(n)
        qi = spec.q(n)
        counts = tuple((qi - 1) * qi ** (ne - 1 - j0) for j0 in range(ne))
        masses = tuple(amp * q ** (d - ne) * (q ** (-(d - j0) * (1 + a)) + c) for j0 in range(ne))
        total = total_mass_mp(spec, n)
        return LevyTable(
            spec, n, counts, tuple(float(m) for m in masses), float(total), masses, total
        )


def total_mass_mp(spec: TowerSpec, n: int):
    """Pi(S minus S_n) in closed form, as an mpmath number."""
    with mpmath.workdps(MP_DPS):
        q = mpmath.mpf(spec.q(n))
        s = _mp(spec.alpha) / spec.m(n) + 1
        ne = n * spec.e(n)
        return (1 - 1 / q) * q ** (-ne) * (q ** ((ne + 1) * s) - q**s) / (q**s - 1)


def total_mass(spec: TowerSpec, n: int) -> float:
    return float(total_mass_mp(spec, n))


def asymptotic_ratio(spec: TowerSpec, n: int) -> float:
    """Lambda_n / q_1^(alpha n)."""
    with mpmath.workdps(MP_DPS):
        return float(total_mass_mp(spec, n) / mpmath.mpf(spec.p) ** (_mp(spec.alpha) * n))


def asymptotic_distance(spec: TowerSpec, n: int):
    """|Lambda_n / q_1^(alpha n) - 1| as an mpmath number.

    Since q_n^(n e alpha / m) = q_1^(alpha n), the difference reduces to
    (q^(alpha/m) - 1 + (1 - 1/q) q^(s (1 - n e))) / (q^s - 1) with s = 1 + alpha/m,
    a sum of positive terms.  Floats round the plain difference to 0 after a
    few levels; this form keeps full relative precision.
    """
    with mpmath.workdps(MP_DPS):
        q = mpmath.mpf(spec.q(n))
        r = _mp(spec.alpha) / spec.m(n)
        s = r + 1
        ne = n * spec.e(n)
        return (q**r - 1 + (1 - 1 / q) * q ** (s * (1 - ne))) / (q**s - 1)


def coset_mass(g: CosetIndex) -> float:
    if g.is_zero():
        raise ZeroCoset("the identity coset has infinite Levy measure")
    return levy_table(g.spec, g.level).masses[g.shell]


def coset_masses(spec: TowerSpec, n: int, coords) -> np.ndarray:
    """Vectorized coset_mass; the zero coset gets 0."""
    grp = level_group(spec, n)
    return levy_table(spec, n).mass_array()[grp.coset_shell(coords)]


def shell_counts(spec: TowerSpec, n: int, enumerate_all=None) -> np.ndarray:
    """Number of cosets per shell j0 (index ne is the zero coset).

    Within the enumeration cap the cosets are counted one by one; beyond it
    the counts come from the subgroup orders |P^j / p^n O|.
    """
    grp = level_group(spec, n)
    ne = grp.num_digits
    if enumerate_all is None:
        enumerate_all = spec.enumerable(n)
    if enumerate_all:
        hist = np.zeros(ne + 1, dtype=np.int64)
        for chunk in grp.iter_coord_chunks():
            hist += np.bincount(grp.coset_shell(chunk), minlength=ne + 1)
        return hist
    sizes = [p_subgroup_order(grp, j) for j in range(ne + 1)]
    return np.array([sizes[j] - sizes[j + 1] for j in range(ne)] + [1], dtype=object)


def p_subgroup_order(grp, j) -> int:
    """|P_n^j / p^n O_n| = prod_k p^(n - s_k)."""
    return math.prod(grp.p ** (grp.n - int(s)) for s in grp.subgroup_exponents(j))


def coset_sum(spec: TowerSpec, n: int, table: LevyTable | None = None, enumerate_all=None) -> float:
    """Sum of coset masses over G_n minus {0}."""
    table = table or levy_table(spec, n)
    grp = level_group(spec, n)
    if enumerate_all is None:
        enumerate_all = spec.enumerable(n)
    if enumerate_all:
        marr = table.mass_array()
        parts = [math.fsum(marr[grp.coset_shell(c)]) for c in grp.iter_coord_chunks()]
        return math.fsum(parts)
    counts = shell_counts(spec, n, enumerate_all=False)
    return math.fsum(float(counts[j]) * table.masses[j] for j in range(grp.num_digits))


def check_coset_sum(spec, n, table=None, rtol=1e-10):
    """Raise NumericalFailure unless the coset-mass sum matches the closed form."""
    table = table or levy_table(spec, n)
    s = coset_sum(spec, n, table)
    rel = abs(s - table.total) / table.total
    if rel > rtol:
        raise NumericalFailure("Theorem 1 coset-sum", f"level {n}: sum {s!r} vs closed form {table.total!r}")
    return rel


# -- Levy-Khinchin --------------------------------------------------------------


def xi_norm_power(spec, n, shell):
    """||xi||^alpha = p^(j alpha / e_n) for a class of shell j."""
    with mpmath.workdps(MP_DPS):
        return float(mpmath.mpf(spec.p) ** (_mp(spec.alpha) * shell / spec.e(n)))


def lk_rhs(spec, n, shell):
    return -xi_norm_power(spec, n, shell) if shell > 0 else 0.0


def levy_khinchin_check(xi: DualIndex):
    """(lhs, rhs) of the Levy-Khinchin identity for one dual class, by enumeration."""
    spec, n = xi.spec, xi.level
    grp = level_group(spec, n)
    coords = grp.enumerate_coords()
    mass = coset_masses(spec, n, coords)
    num = grp.pairing_numerators(coords, np.array(xi.coords))
    z = np.exp(2j * np.pi * num / grp.modulus) - 1
    lhs = complex(math.fsum((mass * z.real).tolist()), math.fsum((mass * z.imag).tolist()))
    return lhs, lk_rhs(spec, n, xi.shell)


def levy_khinchin_table(spec: TowerSpec, n: int, chunk=512):
    """lhs and rhs for every xi in Xi_n (enumeration order), by a full character sum."""
    grp = level_group(spec, n)
    coords = grp.enumerate_coords()
    mass = coset_masses(spec, n, coords)
    gd = (coords @ grp.gram.T) % grp.modulus
    lhs = np.empty(grp.order, dtype=complex)
    for start in range(0, grp.order, chunk):
        num = (gd[start:start + chunk] @ coords.T) % grp.modulus
        ang = 2 * np.pi * num / grp.modulus
        lhs[start:start + chunk] = (np.cos(ang) - 1) @ mass + 1j * (np.sin(ang) @ mass)
    shells = grp.dual_shell(coords)
    rhs = np.array([lk_rhs(spec, n, j) for j in range(grp.num_digits + 1)])[shells]
    return lhs, rhs, shells


def annihilator_depth_structure(spec: TowerSpec, n: int):
    """Check that the annihilator of P^j / p^n O is the dual ball of shell <= j, for all j.

    Inclusion is checked on generators of the dual ball; equality then follows
    from the orders, since the Gram matrix is invertible mod p.
    Returns the list of booleans per j.
    """
    grp = level_group(spec, n)
    ne = grp.num_digits
    G = grp.gram
    if rank_mod_p(G.tolist(), grp.p) != grp.m:
        return [False] * (ne + 1)
    out = []
    for j in range(ne + 1):
        sub = grp.subgroup_exponents(j)           # generators p^{s_k} e_k of P^j
        dual = grp.subgroup_exponents(ne - j)     # generators of D with v(D) >= ne - j
        gens_p = np.diag([grp.p ** int(s) for s in sub]) % grp.modulus
        gens_d = np.diag([grp.p ** int(s) for s in dual]) % grp.modulus
        contained = not np.any(grp.pairing_table(gens_p, gens_d))
        sizes_ok = p_subgroup_order(grp, ne - j) * p_subgroup_order(grp, j) == grp.order
        out.append(bool(contained and sizes_ok))
    return out


def levy_khinchin_by_shell(spec: TowerSpec, n: int):
    """lhs of the identity for each dual shell j via character sums over the P^j.

    Valid for every class once annihilator_depth_structure holds: then xi
    kills P^j exactly when shell(xi) <= j, so the sum over a coset shell is
    |P^j0| [j0 >= k] - |P^(j0+1)| [j0 + 1 >= k].
    """
    grp = level_group(spec, n)
    ne = grp.num_digits
    table = levy_table(spec, n)
    sizes = [p_subgroup_order(grp, j) for j in range(ne + 1)]
    lhs, rhs = [], []
    for k in range(ne + 1):
        terms = []
        for j0 in range(ne):
            s0 = sizes[j0] if j0 >= k else 0
            s1 = sizes[j0 + 1] if j0 + 1 >= k else 0
            terms.append(table.masses[j0] * float(s0 - s1 - table.counts[j0]))
        lhs.append(math.fsum(terms))
        rhs.append(lk_rhs(spec, n, k))
    return np.array(lhs), np.array(rhs)


# -- transition probabilities ---------------------------------------------------------


def rho(spec, n, shells, t):
    with mpmath.workdps(MP_DPS):
        vals = [1.0] + [float(mpmath.exp(-t * xi_norm_power(spec, n, j))) for j in range(1, n * spec.e(n) + 1)]
    return np.array(vals)[shells]


def _grid_shape(grp):
    return (grp.modulus,) * grp.m


def transition_grid(spec: TowerSpec, n: int, t: float) -> np.ndarray:
    """p_t on G_n as an m-dimensional array indexed by coordinates (FFT route)."""
    if t <= 0:
        raise NonPositiveTime(f"t must be positive, got {t}")
    grp = level_group(spec, n)
    if grp.order > spec.enum_cap:
        from .errors import EnumerationCapExceeded

        raise EnumerationCapExceeded(f"M({n}) = {grp.order} exceeds cap {spec.enum_cap}")
    # p(c) = M^-1 sum_u F(G^-1 u) exp(-2 pi i c.u / p^n) with F = rho(shell)
    u = np.indices(_grid_shape(grp)).reshape(grp.m, -1).T
    from .finite_field import inverse_mod

    ginv = np.array(inverse_mod(grp.gram.tolist(), grp.p, n), dtype=np.int64)
    d = (u @ ginv.T) % grp.modulus
    F = rho(spec, n, grp.dual_shell(d), t).reshape(_grid_shape(grp))
    P = np.fft.fftn(F).real / grp.order
    return _clean(P)


def _clean(P):
    low = P.min()
    if low < -CLAMP:
        raise NumericalFailure("transition probabilities", f"negative entry {low!r}")
    P = np.where(P < 0, 0.0, P)
    return P / P.sum()


def grid_to_vector(spec, n, grid):
    grp = level_group(spec, n)
    coords = grp.enumerate_coords()
    return grid[tuple(coords.T)]


def transition_probs(spec: TowerSpec, n: int, t: float) -> np.ndarray:
    """Probability vector on G_n in enumeration order."""
    return grid_to_vector(spec, n, transition_grid(spec, n, t))


def transition_probs_direct(spec: TowerSpec, n: int, t: float) -> np.ndarray:
    """Literal Fourier inversion sum over Xi_n (slow oracle)."""
    if t <= 0:
        raise NonPositiveTime(f"t must be positive, got {t}")
    grp = level_group(spec, n)
    coords = grp.enumerate_coords()
    r = rho(spec, n, grp.dual_shell(coords), t)
    num = grp.pairing_table(coords, coords)
    P = (np.cos(2 * np.pi * num / grp.modulus) @ r) / grp.order
    return _clean(P)


def convolve(a_grid, b_grid):
    """Group convolution on (Z/p^n)^m of two arrays of the grid shape."""
    return np.fft.ifftn(np.fft.fftn(a_grid) * np.fft.fftn(b_grid)).real


# -- exact Q(n, N) ------------------------------------------------------------------


def _check_levels(spec, n, N):
    if not 1 <= N < n:
        raise InvalidLevels(f"need 1 <= N < n, got n={n}, N={N}")


def _sub_cosets(spec, n, N):
    grp = level_group(spec, n)
    coords = grp.enumerate_coords()
    inside = grp.delta_levels(coords) >= N
    inside &= np.any(coords, axis=-1)
    return coords[inside]


def I_N_table(spec: TowerSpec, n: int, N: int, chunk=1024):
    """I_N(xi) for every xi in Xi_n (enumeration order) and the max imaginary part."""
    _check_levels(spec, n, N)
    grp = level_group(spec, n)
    h = _sub_cosets(spec, n, N)
    mass = coset_masses(spec, n, h)
    xi = grp.enumerate_coords()
    gh = (h @ grp.gram) % grp.modulus      # row h -> h^T G
    out = np.empty(grp.order)
    imag = 0.0
    for start in range(0, grp.order, chunk):
        num = (xi[start:start + chunk] @ gh.T) % grp.modulus
        ang = 2 * np.pi * num / grp.modulus
        out[start:start + chunk] = (1 - np.cos(ang)) @ mass
        imag = max(imag, float(np.max(np.abs(np.sin(ang) @ mass), initial=0.0)))
    return out, imag


def I_N(xi: DualIndex, N: int) -> float:
    spec, n = xi.spec, xi.level
    _check_levels(spec, n, N)
    grp = level_group(spec, n)
    h = _sub_cosets(spec, n, N)
    mass = coset_masses(spec, n, h)
    num = grp.pairing_numerators(h, np.array(xi.coords))
    z = 1 - np.exp(2j * np.pi * num / grp.modulus)
    val = complex(math.fsum((mass * z.real).tolist()), math.fsum((mass * z.imag).tolist()))
    if abs(val.imag) > 1e-10:
        raise NumericalFailure("I_N realness", f"imaginary part {val.imag!r}")
    return val.real


def lambda_n(xi: DualIndex, N: int, I_value=None) -> float:
    I_value = I_N(xi, N) if I_value is None else I_value
    return 1.0 / (total_mass(xi.spec, N) + I_value)


@dataclass(frozen=True)
class ExactQ:
    n: int
    N: int
    expected_tau: float
    total_n: float
    Q: float
    max_imag: float


@functools.cache
def exact_q(spec: TowerSpec, n: int, N: int) -> ExactQ:
    """E[tau(n,N)] from the xi-sum and Q(n,N) = 1 / (E[tau] Lambda_n)."""
    table, imag = I_N_table(spec, n, N)
    lam = 1.0 / (total_mass(spec, N) + table)
    tau = math.fsum(lam.tolist()) / spec.group_order(n)
    tot = total_mass(spec, n)
    return ExactQ(n, N, tau, tot, 1.0 / (tau * tot), imag)


def expected_tau(spec: TowerSpec, n: int, N: int) -> float:
    return exact_q(spec, n, N).expected_tau


def Q_exact(spec: TowerSpec, n: int, N: int) -> float:
    return exact_q(spec, n, N).Q


def expected_tau_green(spec: TowerSpec, n: int, N: int) -> float:
    """E[tau(n,N)] from the killed chain on S_N / S_n by a dense linear solve."""
    _check_levels(spec, n, N)
    grp = level_group(spec, n)
    coords = grp.enumerate_coords()
    sub = coords[grp.delta_levels(coords) >= N]
    index = {tuple(row): i for i, row in enumerate(sub.tolist())}
    k = len(sub)
    gen = np.zeros((k, k))
    for i, x in enumerate(sub.tolist()):
        diffs = (sub - np.array(x)) % grp.modulus
        gen[i] = coset_masses(spec, n, diffs)
    gen[np.diag_indices(k)] = -total_mass(spec, n)
    rhs = np.zeros(k)
    zero = index[(0,) * grp.m]
    rhs[zero] = 1.0
    # time at zero starting from zero = G[0, 0] with G = (-L)^-1
    green = np.linalg.solve(-gen.T, rhs)
    return float(green[zero])


def lemma2_bound_check(xi: DualIndex, N: int, I_value=None, slack=1e-9) -> bool:
    """I_N(xi) >= (1 - q_N^(-N e_N)) |xi|_n^(alpha/m_n) - Lambda_N - slack."""
    spec, n = xi.spec, xi.level
    j = xi.shell
    if not N * spec.e(n) + 1 <= j <= n * spec.e(n):
        raise ShellOutOfRange(f"shell {j} outside [{N * spec.e(n) + 1}, {n * spec.e(n)}]")
    I_value = I_N(xi, N) if I_value is None else I_value
    return I_value >= lemma2_bound(spec, n, N, j) - slack


def lemma2_bound(spec, n, N, j) -> float:
    with mpmath.workdps(MP_DPS):
        qN = mpmath.mpf(spec.q(N))
        lead = (1 - qN ** (-N * spec.e(N))) * xi_norm_power(spec, n, j)
        return float(lead - total_mass_mp(spec, N))


# -- the sequences n(j), b_n, B_n ----------------------------------------------------------


@dataclass(frozen=True)
class BnSequence:
    levels: tuple[int, ...]
    n_of_j: tuple[int, ...]
    b: tuple[float, ...]
    B: tuple[float, ...] | None
    totals: tuple[float, ...]

    def b_at(self, n):
        return self.b[n - 1]


def bn_sequence(spec: TowerSpec, n_max: int, with_B=True) -> BnSequence:
    if n_max < 1:
        raise InvalidLevels("n_max must be at least 1")
    with mpmath.workdps(MP_DPS):
        totals = [total_mass_mp(spec, n) for n in range(1, n_max + 1)]
        n_of_j = [1]
        for n in range(2, n_max + 1):
            if totals[n - 1] / totals[n_of_j[-1] - 1] >= 2:
                n_of_j.append(n)
        b = []
        j = 0
        for n in range(1, n_max + 1):
            while j + 1 < len(n_of_j) and n_of_j[j + 1] <= n:
                j += 1
            b.append(float(mpmath.log(j + 1) / totals[n_of_j[j] - 1]))
        levels = tuple(range(1, n_max + 1))
        partial = BnSequence(levels, tuple(n_of_j), tuple(b), None, tuple(float(t) for t in totals))
        if not with_B:
            return partial
        p = mpmath.mpf(spec.p)
        alpha = _mp(spec.alpha)
        if p**alpha <= 2:
            raise AlphaTooSmall(f"B_n needs alpha > log_{spec.p} 2", partial=partial)
        B = tuple(float(p ** (-alpha * n) * mpmath.log(n)) for n in levels)
    return BnSequence(levels, tuple(n_of_j), tuple(b), B, partial.totals)
