"""The support subgroup S, its chain S_n and the finite quotients G_n = S/S_n.

T_n identifies G_n with Sigma_{n,0} / Sigma_{n,n}, i.e. with
m_n pi_n^{-d_n} O_n / m_n pi_n^{-d_n} p^n O_n.  A coset is therefore an
element C of O_n / p^n O_n = (Z/p^n)^{m_n}; its coordinates are the
coefficients of C in the basis X^a Y^b (index b * f + a), and its digit
vector (a_0, .., a_{n e - 1}) in GF(q_n) is the base-p expansion of those
coordinates.  The representative is rep(g) = m_n pi_n^{-d_n} C.

The dual side is handled the same way: a class xi + O in Xi_n is
xi = p^{-n} D with D in O_n / p^n O_n.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import EnumerationCapExceeded, LevelMismatch, OutOfBall, PrecisionLoss, Unresolvable
from .field import (
    CharacterValue,
    FieldElement,
    T_map,
    abs_level,
    char_chi,
    norm_exponent,
    trace_rel,
    valuation,
)
from .finite_field import rank_mod_p
from .tower import TowerSpec


def _vp_array(a, p, cap):
    """Elementwise p-adic valuation of integers in [0, p^cap); zero maps to cap."""
    a = np.asarray(a, dtype=np.int64)
    v = np.zeros(a.shape, dtype=np.int64)
    for t in range(1, cap + 1):
        v += (a % p**t == 0)
    return v


class LevelGroup:
    """Coordinates, enumeration and linear maps of G_n for one level."""

    def __init__(self, spec: TowerSpec, n: int):
        if not spec.has_level(n):
            raise LevelMismatch(f"tower has no level {n}")
        self.spec = spec
        self.n = n
        self.p = spec.p
        self.e, self.f = spec.ef(n)
        self.m = self.e * self.f
        self.q = spec.q(n)
        self.d = spec.d(n)
        self.modulus = self.p**n
        self.order = spec.group_order(n)
        self.num_digits = n * self.e
        # Y-power of each coordinate's basis element
        self.ypow = np.repeat(np.arange(self.e), self.f)

    def __repr__(self):
        return f"LevelGroup(p={self.p}, n={self.n}, e={self.e}, f={self.f})"

    # -- digits <-> coordinates ---------------------------------------

    @property
    def digit_dtype(self):
        # residue-field digits of huge fields do not fit in int64
        return object if self.q >= 2**62 else np.int64

    def digits_to_coords(self, digits):
        digits = np.asarray(digits, dtype=self.digit_dtype)
        out = np.zeros(digits.shape[:-1] + (self.m,), dtype=np.int64)
        p, e, f = self.p, self.e, self.f
        for j in range(self.num_digits):
            t, b = divmod(j, e)
            for i in range(f):
                out[..., b * f + i] += (((digits[..., j] // p**i) % p) * p**t).astype(np.int64)
        return out

    def coords_to_digits(self, coords):
        coords = np.asarray(coords, dtype=np.int64)
        dtype = self.digit_dtype
        if dtype is object:
            coords = coords.astype(object)
        out = np.zeros(coords.shape[:-1] + (self.num_digits,), dtype=dtype)
        p, e, f = self.p, self.e, self.f
        for b in range(e):
            for i in range(f):
                c = coords[..., b * f + i]
                for t in range(self.n):
                    out[..., b + e * t] += ((c // p**t) % p) * p**i
        return out

    def index_to_digits(self, idx):
        """Digit vectors of enumeration indices (a_0 is the most significant digit)."""
        idx = np.asarray(idx, dtype=np.int64)
        nd = self.num_digits
        return np.stack([(idx // self.q ** (nd - 1 - j)) % self.q for j in range(nd)], axis=-1)

    def enumerate_coords(self):
        """All M(n) coordinate vectors in lexicographic digit order."""
        if self.order > self.spec.enum_cap:
            raise EnumerationCapExceeded(f"M({self.n}) = {self.order} exceeds cap {self.spec.enum_cap}")
        return self.digits_to_coords(self.index_to_digits(np.arange(self.order)))

    def iter_coord_chunks(self, chunk=1 << 18):
        """Yield consecutive blocks of the full enumeration; ignores the cap."""
        for start in range(0, self.order, chunk):
            idx = np.arange(start, min(start + chunk, self.order), dtype=np.int64)
            yield self.digits_to_coords(self.index_to_digits(idx))

    # -- valuations and shells ----------------------------------------

    def valuation(self, coords):
        """Valuation (in powers of pi_n) of C; n*e for the zero class."""
        coords = np.asarray(coords, dtype=np.int64)
        v = _vp_array(coords, self.p, self.n)
        per = np.where(v >= self.n, self.num_digits, self.e * v + self.ypow)
        return np.minimum(per.min(axis=-1), self.num_digits)

    def coset_shell(self, coords):
        """Index j0 of the lowest nonzero digit of a coset (n*e for zero)."""
        return self.valuation(coords)

    def dual_shell(self, coords):
        """j with |xi|_n = q_n^j for xi = p^-n D (0 for the trivial class)."""
        return self.num_digits - self.valuation(coords)

    def subgroup_exponents(self, j):
        """s_k with P^j / p^n O = prod_k p^{s_k} Z / p^n Z in coordinates."""
        s = -((self.ypow - j) // self.e)  # ceil((j - b) / e)
        return np.clip(s, 0, self.n)

    # -- linear data ----------------------------------------------------

    @functools.cached_property
    def gram(self):
        """G with pairing angle (c^T G d mod p^n) / p^n; G_kl = Tr(pi^-d beta_k beta_l)."""
        return np.array(_gram(self.spec, self.n), dtype=np.int64)

    def projection_matrix(self, N):
        """Integer matrix of G_n -> G_N (entries mod p^N)."""
        return np.array(_projection(self.spec, self.n, N), dtype=np.int64)

    def project(self, coords, N):
        if N > self.n:
            raise LevelMismatch("projection goes to a lower level")
        if N == self.n:
            return np.asarray(coords, dtype=np.int64) % self.modulus
        if N == 0:
            return np.zeros(np.shape(coords)[:-1] + (0,), dtype=np.int64)
        return (np.asarray(coords, dtype=np.int64) @ self.projection_matrix(N).T) % self.spec.p**N

    def delta_levels(self, coords):
        """Largest N <= n with the coset inside S_N / S_n (n for the zero coset)."""
        coords = np.asarray(coords, dtype=np.int64) % self.modulus
        out = np.zeros(coords.shape[:-1], dtype=np.int64)
        alive = np.ones(coords.shape[:-1], dtype=bool)
        for N in range(1, self.n):
            alive &= ~np.any(self.project(coords, N), axis=-1)
            out[alive] = N
        zero = ~np.any(coords, axis=-1)
        out[zero] = self.n
        return out

    def pairing_numerators(self, c, d):
        """Numerators (mod p^n) of pairing angles; broadcasts c (.., m) against d (.., m)."""
        g = (np.asarray(d, dtype=np.int64) @ self.gram.T) % self.modulus
        return np.sum(np.asarray(c, dtype=np.int64) * g, axis=-1) % self.modulus

    def pairing_table(self, c, d):
        """Matrix of numerators for every row of c against every row of d."""
        gd = (np.asarray(d, dtype=np.int64) @ self.gram.T) % self.modulus
        return (np.asarray(c, dtype=np.int64) @ gd.T) % self.modulus


@functools.cache
def level_group(spec: TowerSpec, n: int) -> LevelGroup:
    return LevelGroup(spec, n)


def _basis_scale(spec, n):
    # m_n pi_n^{-d_n}
    return FieldElement.uniformizer(spec, n, -spec.d(n)) * FieldElement.from_rational(spec, n, spec.m(n))


@functools.cache
def _gram(spec, n):
    e, f = spec.ef(n)
    mod = spec.p**n
    scale = FieldElement.uniformizer(spec, n, -spec.d(n))
    traces = {}
    for a in range(2 * f - 1):
        for b in range(2 * e - 1):
            x = scale * _power_x(spec, n, a) * FieldElement.uniformizer(spec, n, b)
            tr = trace_rel(x, 1)
            if tr.prec < n:
                raise PrecisionLoss(f"Gram entry needs {n} digits, {tr.prec} known")
            t = tr.coeffs[0]
            if t.denominator != 1:
                raise ArithmeticError("trace form on the inverse different is not integral")
            traces[a, b] = int(t) % mod
    m = e * f
    return tuple(
        tuple(traces[k % f + l % f, k // f + l // f] for l in range(m)) for k in range(m)
    )


def _power_x(spec, n, a):
    # X^a, reduced by Phi_n when a >= f
    x = FieldElement.unramified_generator(spec, n) if spec.f(n) > 1 else FieldElement.zero(spec, n)
    out = FieldElement.from_rational(spec, n, 1)
    for _ in range(a):
        out = out * x
    return out


@functools.cache
def _projection(spec, n, N):
    m = spec.m(n)
    cols = []
    for k in range(m):
        unit = [0] * m
        unit[k] = 1
        g = CosetIndex(spec, n, tuple(unit))
        cols.append(project_by_trace(g, N).coords)
    return tuple(tuple(cols[k][r] for k in range(m)) for r in range(spec.m(N)))


# -- cosets ---------------------------------------------------------------


@dataclass(frozen=True)
class CosetIndex:
    """A coset of S_n in S, addressed by coordinates in (Z/p^n)^{m_n}."""

    spec: TowerSpec
    level: int
    coords: tuple

    def __post_init__(self):
        mod = self.spec.p**self.level
        object.__setattr__(self, "coords", tuple(int(c) % mod for c in self.coords))

    @classmethod
    def zero(cls, spec, n):
        return cls(spec, n, (0,) * spec.m(n))

    @classmethod
    def from_digits(cls, spec, n, digits):
        grp = level_group(spec, n)
        if len(digits) != grp.num_digits:
            raise ValueError(f"expected {grp.num_digits} digits")
        return cls(spec, n, tuple(grp.digits_to_coords(list(digits)).tolist()))

    @property
    def group(self):
        return level_group(self.spec, self.level)

    @property
    def digits(self):
        return tuple(self.group.coords_to_digits(list(self.coords)).tolist())

    @property
    def shell(self):
        return int(self.group.coset_shell(list(self.coords)))

    def is_zero(self):
        return not any(self.coords)

    def _check(self, other):
        if other.level != self.level or other.spec != self.spec:
            raise LevelMismatch("cosets live at different levels")

    def __add__(self, other):
        self._check(other)
        return CosetIndex(self.spec, self.level, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __neg__(self):
        return CosetIndex(self.spec, self.level, tuple(-a for a in self.coords))

    def __sub__(self, other):
        return self + (-other)


def group_order(spec: TowerSpec, n: int) -> int:
    return spec.group_order(n)


def haar_cylinder(spec: TowerSpec, n: int, cosets) -> Fraction:
    """Normalized Haar measure of a union of S_n-cosets."""
    distinct = {c.coords for c in cosets}
    return Fraction(len(distinct), spec.group_order(n))


def coset_rep(g: CosetIndex) -> FieldElement:
    spec, n = g.spec, g.level
    c = FieldElement.make(spec, n, g.coords)
    return _basis_scale(spec, n) * c


def coset_of(z: FieldElement) -> CosetIndex:
    """The coset whose representative ball contains z (z must satisfy the S^(n) bound)."""
    spec, n = z.spec, z.level
    w = (z * FieldElement.uniformizer(spec, n, spec.d(n))).scaled(Fraction(1, spec.m(n)))
    if valuation(w) < 0:
        raise OutOfBall(f"|z|_{n} = {abs_level(z)} exceeds q^d |m|")
    if w.prec < n:
        raise PrecisionLoss(f"coset at level {n} needs {n} digits, {w.prec} known")
    mod = spec.p**n
    return CosetIndex(spec, n, tuple(int(c) % mod for c in w.coeffs))


def coset_add(g: CosetIndex, h: CosetIndex) -> CosetIndex:
    return g + h


def coset_negate(g: CosetIndex) -> CosetIndex:
    return -g


def project_by_trace(g: CosetIndex, N: int) -> CosetIndex:
    """coset_of(T_N(rep(g))), computed with field arithmetic."""
    if N > g.level:
        raise LevelMismatch("projection goes to a lower level")
    if N == g.level:
        return g
    return coset_of(T_map(coset_rep(g), N))


def project(g: CosetIndex, N: int) -> CosetIndex:
    if N > g.level or N < 1:
        raise LevelMismatch(f"cannot project level {g.level} to level {N}")
    out = g.group.project(np.array(g.coords), N)
    return CosetIndex(g.spec, N, tuple(out.tolist()))


def delta_level(g: CosetIndex) -> int:
    return int(g.group.delta_levels(np.array(g.coords)))


def delta_level_by_trace(g: CosetIndex) -> int:
    """max N <= n with |T_N(rep g)|_N <= q_N^(d_N - N e_N) |m_N|_N, by field arithmetic."""
    spec, n = g.spec, g.level
    rep = coset_rep(g)
    best = 0
    for N in range(1, n + 1):
        tn = T_map(rep, N)
        bound = Fraction(spec.q(N)) ** (spec.d(N) - N * spec.e(N)) * abs_level(
            FieldElement.from_rational(spec, N, spec.m(N))
        )
        if abs_level(tn) <= bound:
            best = N
    return best


def ultrametric(g: CosetIndex, strict=False) -> Fraction:
    """|g| for the coset g: 1 outside S_1, M(N)^-1 on S_N minus S_(N+1).

    The zero coset at level n only says |x| <= M(n)^-1; it reports 0 (the
    distance of its representative) unless ``strict`` asks for an error.
    """
    if g.is_zero():
        if strict:
            raise Unresolvable(f"distance below M({g.level})^-1 is not resolved at level {g.level}")
        return Fraction(0)
    N = delta_level(g)
    if N == 0:
        return Fraction(1)
    return Fraction(1, g.spec.group_order(N))


# -- the dual ---------------------------------------------------------------


@dataclass(frozen=True)
class DualIndex:
    """Class xi + O of Xi_n with xi = p^-n D, D in (Z/p^n)^{m_n}."""

    spec: TowerSpec
    level: int
    coords: tuple

    def __post_init__(self):
        mod = self.spec.p**self.level
        object.__setattr__(self, "coords", tuple(int(c) % mod for c in self.coords))

    @classmethod
    def from_shell_digits(cls, spec, n, digits):
        """xi = pi^-j (lift(xi_0) + lift(xi_1) pi + ...), j = len(digits)."""
        grp = level_group(spec, n)
        j = len(digits)
        if j > grp.num_digits:
            raise ValueError("shell exceeds n*e_n")
        if j and digits[0] == 0:
            raise ValueError("leading digit must be nonzero")
        full = [0] * (grp.num_digits - j) + list(digits)
        return cls(spec, n, tuple(grp.digits_to_coords(full).tolist()))

    @property
    def group(self):
        return level_group(self.spec, self.level)

    @property
    def shell(self):
        return int(self.group.dual_shell(list(self.coords)))

    @property
    def digits(self):
        j = self.shell
        all_digits = self.group.coords_to_digits(list(self.coords)).tolist()
        return tuple(all_digits[len(all_digits) - j:])

    def representative(self) -> FieldElement:
        spec, n = self.spec, self.level
        return FieldElement.make(spec, n, [Fraction(c, spec.p**n) for c in self.coords])

    def norm(self) -> float:
        """||xi|| = q_n^(j/m_n) = p^(j/e_n)."""
        return float(self.spec.p) ** (self.shell / self.spec.e(self.level))

    def norm_exponent(self) -> Fraction:
        return Fraction(self.shell, self.spec.e(self.level))


def dual_enumerate(spec: TowerSpec, n: int) -> list[DualIndex]:
    grp = level_group(spec, n)
    coords = grp.enumerate_coords()
    return [DualIndex(spec, n, tuple(row)) for row in coords.tolist()]


def pairing(g: CosetIndex, xi: DualIndex) -> CharacterValue:
    """chi(T(xi * rep(g))) by field arithmetic."""
    if g.level != xi.level:
        raise LevelMismatch("coset and dual class at different levels")
    return char_chi(T_map(xi.representative() * coset_rep(g), 1))


def pairing_fast(g: CosetIndex, xi: DualIndex) -> CharacterValue:
    num = int(g.group.pairing_numerators(np.array(g.coords), np.array(xi.coords)))
    return CharacterValue(Fraction(num, g.spec.p**g.level))


def pairing_general(g: CosetIndex, xi: FieldElement) -> CharacterValue:
    """chi(T(xi * rep(g))) for any xi in K_n (need not lie in Xi_n)."""
    if xi.level != g.level:
        raise LevelMismatch("embed xi to the coset's level first")
    return char_chi(T_map(xi * coset_rep(g), 1))


def lemma1_surjectivity_check(spec: TowerSpec, nu: int, n: int, N: int, details=False):
    """T_n maps Sigma_{nu,N} onto Sigma_{n,N}.

    Sigma_{k,N} = m_k pi_k^{-d_k} p^N O_k has the Z_p-basis scale_k * p^N * beta.
    Images of the level-nu basis are written in the level-n basis; they must
    be integral (containment) and span modulo p (onto, by Nakayama).
    """
    if not nu > n >= 1 or N < 0:
        raise LevelMismatch(f"need nu > n >= 1 and N >= 0, got ({nu}, {n}, {N})")
    src_scale = _basis_scale(spec, nu) * FieldElement.from_rational(spec, nu, spec.p**N)
    dst = _basis_scale(spec, n) * FieldElement.from_rational(spec, n, spec.p**N)
    dst_inv = FieldElement.uniformizer(spec, n, spec.d(n))
    inv_const = Fraction(1, spec.m(n) * spec.p**N)
    e, f = spec.ef(nu)
    cols = []
    contained = True
    for k in range(e * f):
        b, a = divmod(k, f)
        y = src_scale * FieldElement.monomial(spec, nu, a, b)
        z = (T_map(y, n) * dst_inv).scaled(inv_const)
        if z.prec < 1:
            raise PrecisionLoss("surjectivity matrix entries are not determined mod p")
        coeffs = z.coeffs
        if any(Fraction(c).denominator % spec.p == 0 for c in coeffs):
            contained = False
        cols.append([int(Fraction(c).numerator * pow(Fraction(c).denominator, -1, spec.p)) % spec.p
                     if Fraction(c).denominator % spec.p else 0 for c in coeffs])
    del dst
    mat = [[cols[k][r] for k in range(len(cols))] for r in range(spec.m(n))]
    rank = rank_mod_p(mat, spec.p)
    ok = contained and rank == spec.m(n)
    if details:
        return {"contained": contained, "rank": rank, "target_dim": spec.m(n), "ok": ok}
    return ok


def trivial_on_subgroup(spec, n, xi_coords, sub_coords) -> bool:
    grp = level_group(spec, n)
    return not np.any(grp.pairing_numerators(sub_coords, np.asarray(xi_coords)))


def norm_of_class(xi: DualIndex) -> Fraction:
    return xi.norm_exponent()


__all__ = [
    "CosetIndex",
    "DualIndex",
    "LevelGroup",
    "coset_add",
    "coset_negate",
    "coset_of",
    "coset_rep",
    "delta_level",
    "delta_level_by_trace",
    "dual_enumerate",
    "group_order",
    "haar_cylinder",
    "lemma1_surjectivity_check",
    "level_group",
    "norm_exponent",
    "pairing",
    "pairing_fast",
    "pairing_general",
    "project",
    "project_by_trace",
    "ultrametric",
]
