"""Arithmetic in the fields K_n of a tame tower.

K_n is modelled as Q_p[X, Y] / (Phi_n(X), Y^e_n - p): X generates the
unramified part (Phi_n is the least irreducible polynomial of degree f_n
over GF(p), read as a monic integer polynomial) and Y is the uniformizer
pi_n.  Along the tower pi_n = pi_nu^(e_nu/e_n), and X_n is sent to the
Hensel lift of the least residue root of Phi_n inside the unramified part
of K_nu.

The embeddings X_n -> K_nu are Hensel lifts, i.e. p-adic and not
rational, so elements carry an absolute precision ``prec``: every
coefficient is known modulo p^prec Z_p and is stored as its canonical
representative a / p^k with 0 <= a < p^(prec+k).  Fresh elements start
at P + GUARD_DIGITS digits (P is the tower's ``precision``); products,
embeddings and traces lower ``prec`` by the valuation bounds that govern
their error terms, so every digit that survives is correct.  Equality
compares at the smaller of the two precisions, and read-outs (characters,
cosets) raise PrecisionLoss instead of returning digits that are not known.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction

from .errors import LevelMismatch, PrecisionLoss, TamenessViolated
from .finite_field import GaloisRing, ResidueField, inverse_mod, least_irreducible
from .tower import TowerSpec

GUARD_DIGITS = 16


def vp(x, p):
    """p-adic valuation of a nonzero rational."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def reduce_coeff(c, p, prec):
    """Canonical representative of a rational modulo p^prec."""
    c = Fraction(c)
    num, den = c.numerator, c.denominator
    k = 0
    while den % p == 0:
        den //= p
        k += 1
    mod = p ** (prec + k)
    if den != 1:
        num = num * pow(den, -1, mod)
    return Fraction(num % mod, p**k)


def _rem_phi(coeffs, phi):
    # exact remainder modulo a monic integer polynomial
    deg = len(phi) - 1
    r = list(coeffs)
    for top in range(len(r) - 1, deg - 1, -1):
        c = r[top]
        if c:
            shift = top - deg
            for i in range(deg + 1):
                r[shift + i] -= c * phi[i]
    r = r[:deg]
    return r + [Fraction(0)] * (deg - len(r))


def _umul(a, b, phi):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return _rem_phi(out, phi)


@functools.cache
def phi_poly(spec: TowerSpec, n: int) -> tuple[int, ...]:
    return least_irreducible(spec.p, spec.f(n))


def start_precision(spec):
    return spec.precision + GUARD_DIGITS


def _work_digits(spec):
    # Hensel lifts and decomposition matrices carry extra guard digits
    return spec.precision + 2 * GUARD_DIGITS


def _vmin(coeffs, p, prec):
    """Smallest p-adic valuation among the coefficients (prec when all vanish)."""
    vals = [vp(c, p) for c in coeffs if c]
    return min(vals) if vals else prec


@functools.cache
def _step_embedding(spec: TowerSpec, n: int) -> tuple[tuple[int, ...], ...]:
    """Matrix (f_{n+1} x f_n, entries mod p^W) of U_n -> U_{n+1}; column a = image of X_n^a."""
    p = spec.p
    fn, fn1 = spec.f(n), spec.f(n + 1)
    if fn == fn1:
        return tuple(tuple(int(i == j) for j in range(fn)) for i in range(fn1))
    ring = GaloisRing(p, phi_poly(spec, n + 1), _work_digits(spec))
    residue = ResidueField(p, phi_poly(spec, n + 1))
    root = ring.hensel_root(phi_poly(spec, n), residue.least_root(phi_poly(spec, n), fn))
    cols = []
    power = [1] + [0] * (fn1 - 1)
    for _ in range(fn):
        cols.append(power)
        power = ring.mul(power, root)
    return tuple(tuple(cols[a][i] for a in range(fn)) for i in range(fn1))


@functools.cache
def embedding_matrix(spec: TowerSpec, n: int, nu: int) -> tuple[tuple[int, ...], ...]:
    """Matrix of the unramified embedding U_n -> U_nu in the X-power bases."""
    if nu < n:
        raise LevelMismatch("cannot embed into a lower level")
    mod = spec.p ** _work_digits(spec)
    mat = [[int(i == j) for j in range(spec.f(n))] for i in range(spec.f(n))]
    for k in range(n, nu):
        step = _step_embedding(spec, k)
        mat = [
            [sum(step[i][t] * mat[t][j] for t in range(len(mat))) % mod for j in range(len(mat[0]))]
            for i in range(len(step))
        ]
    return tuple(tuple(row) for row in mat)


@functools.cache
def decomposition_matrix(spec: TowerSpec, nu: int, n: int):
    """Inverse of (u_0, .., u_{k-1}) -> sum_i emb(u_i) X_nu^i, as a matrix mod p^W.

    Output coordinates are ordered block-wise: index i * f_n + a.
    """
    p = spec.p
    fn, fnu = spec.f(n), spec.f(nu)
    k = fnu // fn
    w = _work_digits(spec)
    ring = GaloisRing(p, phi_poly(spec, nu), w)
    emb = embedding_matrix(spec, n, nu)
    cols = []
    xpow = [1] + [0] * (fnu - 1)
    for _ in range(k):
        for a in range(fn):
            image = [emb[r][a] for r in range(fnu)]
            cols.append(ring.mul(xpow, image))
        xpow = ring.mul(xpow, [0, 1] + [0] * (fnu - 2)) if fnu > 1 else xpow
    mat = [[cols[c][r] for c in range(fnu)] for r in range(fnu)]
    return tuple(tuple(row) for row in inverse_mod(mat, p, w))


@dataclass(frozen=True, eq=False)
class FieldElement:
    """Element of K_level; coefficient index b * f + a stands for X^a Y^b.

    ``prec`` is the absolute precision: coefficients are known mod p^prec.
    """

    spec: TowerSpec
    level: int
    coeffs: tuple
    prec: int

    @classmethod
    def make(cls, spec, level, coeffs, prec=None):
        prec = start_precision(spec) if prec is None else prec
        p = spec.p
        coeffs = tuple(reduce_coeff(c, p, prec) for c in coeffs)
        if len(coeffs) != spec.m(level):
            raise ValueError("coefficient vector has the wrong length")
        return cls(spec, level, coeffs, prec)

    @classmethod
    def zero(cls, spec, level):
        return cls(spec, level, (Fraction(0),) * spec.m(level), start_precision(spec))

    @classmethod
    def from_rational(cls, spec, level, value):
        c = [Fraction(0)] * spec.m(level)
        c[0] = Fraction(value)
        return cls.make(spec, level, c)

    @classmethod
    def from_blocks(cls, spec, level, blocks, prec=None):
        """Build from e_level blocks of unramified coefficients (one per Y power)."""
        return cls.make(spec, level, [c for block in blocks for c in block], prec)

    @classmethod
    def monomial(cls, spec, level, a, b, scale=1):
        """scale * X^a * Y^b for any integer b (negative powers use Y^-1 = Y^(e-1) / p)."""
        e, f = spec.e(level), spec.f(level)
        t, r = divmod(b, e)
        c = [Fraction(0)] * (e * f)
        c[r * f + a] = Fraction(scale) * Fraction(spec.p) ** t
        return cls.make(spec, level, c)

    @classmethod
    def uniformizer(cls, spec, level, power=1):
        return cls.monomial(spec, level, 0, power)

    @classmethod
    def unramified_generator(cls, spec, level):
        if spec.f(level) == 1:
            return cls.zero(spec, level)
        return cls.monomial(spec, level, 1, 0)

    @classmethod
    def lift_residue(cls, spec, level, digit, power=0):
        """Digit-set lift of a packed residue ``digit`` times pi^power."""
        p, e, f = spec.p, spec.e(level), spec.f(level)
        t, r = divmod(power, e)
        c = [Fraction(0)] * (e * f)
        scale = Fraction(p) ** t
        for a in range(f):
            c[r * f + a] = scale * ((digit // p**a) % p)
        return cls.make(spec, level, c)

    def with_precision(self, prec):
        """The same element known to min(prec, self.prec) digits."""
        return FieldElement.make(self.spec, self.level, self.coeffs, min(prec, self.prec))

    def scaled(self, r):
        """r * self for a rational r, with the precision shifted by v_p(r)."""
        r = Fraction(r)
        if r == 0:
            return FieldElement.zero(self.spec, self.level)
        return FieldElement.make(
            self.spec, self.level, [r * c for c in self.coeffs], self.prec + vp(r, self.spec.p)
        )

    def vmin(self):
        return _vmin(self.coeffs, self.spec.p, self.prec)

    def __eq__(self, other):
        if not isinstance(other, FieldElement):
            return NotImplemented
        if other.level != self.level or other.spec != self.spec:
            return False
        prec = min(self.prec, other.prec)
        p = self.spec.p
        return all(reduce_coeff(a - b, p, prec) == 0 for a, b in zip(self.coeffs, other.coeffs))

    __hash__ = None

    # -- structure -----------------------------------------------------

    @property
    def e(self):
        return self.spec.e(self.level)

    @property
    def f(self):
        return self.spec.f(self.level)

    def blocks(self):
        f = self.f
        return [list(self.coeffs[b * f:(b + 1) * f]) for b in range(self.e)]

    def is_zero(self):
        """Zero to the known precision."""
        return not any(self.coeffs)

    def _check(self, other):
        if not isinstance(other, FieldElement):
            other = FieldElement.from_rational(self.spec, self.level, other)
        if other.level != self.level or other.spec != self.spec:
            raise LevelMismatch(f"levels {self.level} and {other.level} differ; embed first")
        return other

    # -- ring operations -----------------------------------------------

    def __add__(self, other):
        other = self._check(other)
        prec = min(self.prec, other.prec)
        return FieldElement.make(self.spec, self.level, [x + y for x, y in zip(self.coeffs, other.coeffs)], prec)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement.make(self.spec, self.level, [-x for x in self.coeffs], self.prec)

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        other = self._check(other)
        spec, e, f = self.spec, self.e, self.f
        phi = phi_poly(spec, self.level)
        out = [[Fraction(0)] * f for _ in range(e)]
        for b1, u in enumerate(self.blocks()):
            if not any(u):
                continue
            for b2, w in enumerate(other.blocks()):
                if not any(w):
                    continue
                prod = _umul(u, w, phi)
                b = b1 + b2
                scale = 1
                if b >= e:
                    b -= e
                    scale = spec.p
                for a in range(f):
                    out[b][a] += scale * prod[a]
        # error terms: dx * y + x * dy, with integral structure constants
        prec = min(self.prec + other.vmin(), other.prec + self.vmin())
        return FieldElement.from_blocks(spec, self.level, out, prec)

    __rmul__ = __mul__

    def __repr__(self):
        terms = []
        f = self.f
        for k, c in enumerate(self.coeffs):
            if c:
                b, a = divmod(k, f)
                terms.append(f"{c}*X^{a}*Y^{b}")
        return f"K{self.level}<{' + '.join(terms) or '0'} + O(p^{self.prec})>"


def valuation(x: FieldElement):
    """Normalized valuation v_n(x) (in powers of pi_n); +inf for zero."""
    p, e = x.spec.p, x.e
    best = float("inf")
    for b, block in enumerate(x.blocks()):
        vals = [vp(c, p) for c in block if c]
        if vals:
            best = min(best, e * min(vals) + b)
    return best


def abs_level(x: FieldElement) -> Fraction:
    """|x|_n = q_n^(-v(x))."""
    v = valuation(x)
    if v == float("inf"):
        return Fraction(0)
    return Fraction(x.spec.q(x.level)) ** (-v)


def abs_norm(x: FieldElement) -> float:
    """||x|| = |x|_n^(1/m_n) = p^(-v/e_n); independent of the level x is viewed at."""
    v = valuation(x)
    if v == float("inf"):
        return 0.0
    exponent = Fraction(-v, x.e)
    if exponent.denominator == 1:
        return float(Fraction(x.spec.p) ** exponent.numerator)
    return float(x.spec.p) ** float(exponent)


def norm_exponent(x: FieldElement) -> Fraction:
    """Exact log_p ||x||, i.e. -v(x)/e_n (raises for zero)."""
    v = valuation(x)
    if v == float("inf"):
        raise ValueError("zero has no norm exponent")
    return Fraction(-v, x.e)


def embed(x: FieldElement, nu: int) -> FieldElement:
    """Image of x under K_n -> K_nu."""
    n, spec = x.level, x.spec
    if nu < n:
        raise LevelMismatch(f"cannot embed level {n} into level {nu}")
    if nu == n:
        return x
    r = spec.e(nu) // spec.e(n)
    emb = embedding_matrix(spec, n, nu)
    fnu = spec.f(nu)
    out = [[Fraction(0)] * fnu for _ in range(spec.e(nu))]
    for s, block in enumerate(x.blocks()):
        if any(block):
            out[r * s] = [sum(row[a] * block[a] for a in range(len(block))) for row in emb]
    prec = min(x.prec, _work_digits(spec) + x.vmin())
    return FieldElement.from_blocks(spec, nu, out, prec)


def _decompose_unramified(spec, nu, n, c):
    # c in U_nu -> list of k elements of U_n with c = sum_i emb(u_i) X_nu^i
    dec = decomposition_matrix(spec, nu, n)
    fn = spec.f(n)
    vec = [sum(row[j] * c[j] for j in range(len(c))) for row in dec]
    return [vec[i * fn:(i + 1) * fn] for i in range(len(vec) // fn)]


def trace_rel(x: FieldElement, n: int) -> FieldElement:
    """Tr_{K_nu/K_n}(x) as the trace of multiplication by x over K_n.

    The K_n-basis of K_nu is X_nu^i Y_nu^b (i < f_nu/f_n, b < e_nu/e_n);
    each product x * X^i Y^b is written in that basis and the diagonal
    coefficients are summed.
    """
    nu, spec = x.level, x.spec
    if n > nu:
        raise LevelMismatch(f"trace from level {nu} to higher level {n}")
    if n == nu:
        return x
    k = spec.f(nu) // spec.f(n)
    r = spec.e(nu) // spec.e(n)
    en, fn = spec.e(n), spec.f(n)
    total = [[Fraction(0)] * fn for _ in range(en)]
    prec = x.prec
    for i in range(k):
        for b in range(r):
            z = x * FieldElement.monomial(spec, nu, i, b)
            prec = min(prec, z.prec, _work_digits(spec) + z.vmin())
            zb = z.blocks()
            for s in range(en):
                parts = _decompose_unramified(spec, nu, n, zb[b + r * s])
                for a in range(fn):
                    total[s][a] += parts[i][a]
    return FieldElement.from_blocks(spec, n, total, prec)


def T_map(x: FieldElement, n: int) -> FieldElement:
    """T_n(x) = (m_n / m_nu) Tr_{K_nu/K_n}(x)."""
    spec = x.spec
    return trace_rel(x, n).scaled(Fraction(spec.m(n), spec.m(x.level)))


def multiplication_matrix(x: FieldElement):
    """Matrix over Q_p of y -> x*y in the monomial basis of K_n."""
    spec, n = x.spec, x.level
    m, f = spec.m(n), spec.f(n)
    cols = []
    for k in range(m):
        b, a = divmod(k, f)
        cols.append((x * FieldElement.monomial(spec, n, a, b)).coeffs)
    return [[cols[j][i] for j in range(m)] for i in range(m)]


def absolute_trace(x: FieldElement) -> Fraction:
    """Tr_{K_n/Q_p}(x) straight from the multiplication matrix, without tower maps."""
    spec, n = x.spec, x.level
    m, f = spec.m(n), spec.f(n)
    total, prec = Fraction(0), x.prec
    for k in range(m):
        b, a = divmod(k, f)
        y = x * FieldElement.monomial(spec, n, a, b)
        total += y.coeffs[k]
        prec = min(prec, y.prec)
    return reduce_coeff(total, spec.p, prec)


def is_integral_rational(c) -> bool:
    c = Fraction(c)
    return c.denominator == 1


def different_exponent_scan(spec: TowerSpec, n: int, max_shell=None) -> int:
    """Largest d with Tr_{K_n/Q_p}(pi_n^-d O_n) inside Z_p, found by scanning basis elements."""
    e, f = spec.e(n), spec.f(n)
    max_shell = max_shell if max_shell is not None else 4 * e + 4
    for b in range(e):
        for a in range(f):
            if not is_integral_rational(trace_rel(FieldElement.monomial(spec, n, a, b), 1).coeffs[0]):
                raise ArithmeticError("trace of an integral element is not integral")
    d = 0
    while d <= max_shell:
        shell = d + 1
        witness = any(
            not is_integral_rational(trace_rel(FieldElement.monomial(spec, n, a, -shell), 1).coeffs[0])
            for a in range(f)
        )
        if witness:
            break
        d += 1
    if d != e - 1:
        raise TamenessViolated(f"level {n}: different exponent {d} != e - 1 = {e - 1}")
    return d


# -- the additive character of Q_p ------------------------------------------


@dataclass(frozen=True)
class CharacterValue:
    """exp(2 pi i * angle) with an exact rational angle in [0, 1)."""

    angle: Fraction

    def __post_init__(self):
        a = Fraction(self.angle)
        object.__setattr__(self, "angle", a - (a.numerator // a.denominator))

    def __mul__(self, other):
        return CharacterValue(self.angle + other.angle)

    def conjugate(self):
        return CharacterValue(-self.angle)

    def is_one(self):
        return self.angle == 0

    def value(self) -> complex:
        import cmath

        return cmath.exp(2j * cmath.pi * float(self.angle))


def fractional_part(u) -> Fraction:
    """p-adic fractional part {u} of an element of Q_p (FieldElement at level 1)."""
    if isinstance(u, FieldElement):
        if u.level != 1:
            raise LevelMismatch("fractional part is defined on level 1; apply T_map first")
        if u.prec < 1:
            raise PrecisionLoss(f"only {u.prec} digits known; the fractional part is not determined")
        c = u.coeffs[0]
    else:
        raise TypeError("expected a level-1 FieldElement")
    return c - (c.numerator // c.denominator)


def char_chi(u: FieldElement) -> CharacterValue:
    """Rank zero character chi(u) = exp(2 pi i {u})."""
    return CharacterValue(fractional_part(u))
