"""Polynomials over GF(p) and over the Galois rings Z/p^k.

Polynomials are coefficient lists, lowest degree first, with no trailing
zeros (the zero polynomial is ``[]``).  Elements of GF(p^f) = GF(p)[x]/(phi)
are coefficient lists of length f, and are packed into a single integer
``sum(c_i * p**i)`` when they are used as digits.
"""

from __future__ import annotations

import functools
from itertools import product

import sympy


def trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def poly_mod_p(a, p):
    return trim(c % p for c in a)


def poly_sub(a, b, mod):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return trim((x - y) % mod for x, y in zip(a, b))


def poly_mul(a, b, mod):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return trim(c % mod for c in out)


def poly_divmod(a, b, p):
    """Division with remainder over GF(p)."""
    a = poly_mod_p(a, p)
    b = poly_mod_p(b, p)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv = pow(b[-1], -1, p)
    q = [0] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    while len(r) >= len(b):
        c = r[-1] * inv % p
        shift = len(r) - len(b)
        q[shift] = c
        for i, y in enumerate(b):
            r[shift + i] = (r[shift + i] - c * y) % p
        r = trim(r)
    return trim(q), r


def poly_rem_monic(a, phi, mod):
    """Remainder of ``a`` modulo the monic integer polynomial ``phi`` (coefficients mod ``mod``)."""
    deg = len(phi) - 1
    r = [c % mod for c in a]
    for top in range(len(r) - 1, deg - 1, -1):
        c = r[top]
        if c:
            shift = top - deg
            for i in range(deg + 1):
                r[shift + i] = (r[shift + i] - c * phi[i]) % mod
    return r[:deg] + [0] * (deg - len(r[:deg]))


def poly_gcd(a, b, p):
    a = poly_mod_p(a, p)
    b = poly_mod_p(b, p)
    while b:
        a, b = b, poly_divmod(a, b, p)[1]
    if a:
        inv = pow(a[-1], -1, p)
        a = [c * inv % p for c in a]
    return a


def _powmod_x(e, phi, p):
    # x^e mod phi over GF(p)
    result = [1]
    base = poly_rem_monic([0, 1], phi, p)
    while e:
        if e & 1:
            result = poly_rem_monic(poly_mul(result, base, p), phi, p)
        base = poly_rem_monic(poly_mul(base, base, p), phi, p)
        e >>= 1
    return trim(result)


def is_irreducible(phi, p):
    """Rabin's test for a monic polynomial over GF(p)."""
    phi = poly_mod_p(phi, p)
    n = len(phi) - 1
    if n < 1:
        return False
    if n == 1:
        return True
    if trim(_powmod_x(p**n, phi, p)) != [0, 1]:
        return False
    for r in sympy.primefactors(n):
        h = poly_sub(_powmod_x(p ** (n // r), phi, p), [0, 1], p)
        if len(poly_gcd(phi, h, p)) > 1:
            return False
    return True


@functools.cache
def least_irreducible(p, degree):
    """Least monic irreducible polynomial of the given degree over GF(p).

    Candidates are ordered by the integer ``sum(c_i p^i)`` built from the
    low coefficients c_0..c_{degree-1}; degree 1 therefore gives ``x``.
    """
    for code in range(p**degree):
        low = [(code // p**i) % p for i in range(degree)]
        phi = low + [1]
        if is_irreducible(phi, p):
            return tuple(phi)
    raise ValueError(f"no irreducible polynomial of degree {degree} over GF({p})")


class ResidueField:
    """GF(p^f) as GF(p)[x]/(phi) with elements packed as integers."""

    def __init__(self, p, phi):
        self.p = p
        self.phi = tuple(phi)
        self.f = len(phi) - 1
        self.q = p**self.f

    def unpack(self, a):
        return [(a // self.p**i) % self.p for i in range(self.f)]

    def pack(self, coeffs):
        coeffs = list(coeffs) + [0] * (self.f - len(coeffs))
        return sum((c % self.p) * self.p**i for i, c in enumerate(coeffs))

    def mul(self, a, b):
        return poly_rem_monic(poly_mul(a, b, self.p), self.phi, self.p)

    def pow(self, a, e):
        result = [1] + [0] * (self.f - 1)
        while e:
            if e & 1:
                result = self.mul(result, a)
            a = self.mul(a, a)
            e >>= 1
        return result

    def eval_poly(self, g, z):
        """Evaluate the GF(p)-polynomial ``g`` at the field element ``z``."""
        acc = [0] * self.f
        for c in reversed(list(g)):
            acc = self.mul(acc, z)
            acc[0] = (acc[0] + c) % self.p
        return acc

    def frobenius_matrix(self, power):
        """Matrix (columns = images of x^i) of z -> z^(p^power) over GF(p)."""
        cols = []
        for i in range(self.f):
            e = [0] * self.f
            e[i] = 1
            cols.append(self.pow(e, self.p**power))
        return [[cols[j][i] for j in range(self.f)] for i in range(self.f)]

    def subfield_elements(self, degree):
        """All elements of the subfield GF(p^degree), as coefficient lists."""
        if self.f % degree:
            raise ValueError("subfield degree must divide the field degree")
        frob = self.frobenius_matrix(degree)
        for i in range(self.f):
            frob[i][i] -= 1
        basis = nullspace_mod_p(frob, self.p)
        for coeffs in product(range(self.p), repeat=len(basis)):
            yield [sum(c * v[i] for c, v in zip(coeffs, basis)) % self.p for i in range(self.f)]

    def least_root(self, g, degree):
        """Least root (by packed value) of an irreducible ``g`` of the given degree."""
        roots = [z for z in self.subfield_elements(degree) if not any(self.eval_poly(g, z))]
        if not roots:
            raise ValueError("polynomial has no root in this field")
        return min(roots, key=self.pack)


def nullspace_mod_p(matrix, p):
    """Basis of the right nullspace of an integer matrix over GF(p)."""
    rows = [[x % p for x in row] for row in matrix]
    ncols = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = pow(rows[r][c], -1, p)
        rows[r] = [x * inv % p for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                k = rows[i][c]
                rows[i] = [(x - k * y) % p for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * ncols
        v[fc] = 1
        for i, pc in enumerate(pivots):
            v[pc] = -rows[i][fc] % p
        basis.append(v)
    return basis


def rank_mod_p(matrix, p):
    if not matrix:
        return 0
    return len(matrix[0]) - len(nullspace_mod_p(matrix, p))


def inverse_mod(matrix, p, k):
    """Inverse of a square integer matrix over Z/p^k; the matrix must be invertible mod p."""
    mod = p**k
    n = len(matrix)
    a = [[x % mod for x in row] + [int(i == j) for j in range(n)] for i, row in enumerate(matrix)]
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] % p), None)
        if piv is None:
            raise ValueError("matrix is singular modulo p")
        a[c], a[piv] = a[piv], a[c]
        inv = pow(a[c][c], -1, mod)
        a[c] = [x * inv % mod for x in a[c]]
        for i in range(n):
            if i != c and a[i][c]:
                t = a[i][c]
                a[i] = [(x - t * y) % mod for x, y in zip(a[i], a[c])]
    return [row[n:] for row in a]


class GaloisRing:
    """Z/p^k [x]/(phi) for a monic integer ``phi`` that is irreducible mod p."""

    def __init__(self, p, phi, k):
        self.p = p
        self.phi = tuple(phi)
        self.f = len(phi) - 1
        self.k = k
        self.mod = p**k
        self.residue = ResidueField(p, phi)

    def reduce(self, a):
        return poly_rem_monic(list(a), self.phi, self.mod)

    def mul(self, a, b):
        return self.reduce(poly_mul(a, b, self.mod))

    def add(self, a, b):
        return [(x + y) % self.mod for x, y in zip(a, b)]

    def eval_poly(self, g, z):
        acc = [0] * self.f
        for c in reversed(list(g)):
            acc = self.mul(acc, z)
            acc[0] = (acc[0] + c) % self.mod
        return acc

    def inverse(self, u):
        """Inverse of a unit by inversion in the residue field and Newton lifting."""
        low = [c % self.p for c in u]
        if not any(low):
            raise ZeroDivisionError("not a unit")
        y = self.residue.pow(low, self.residue.q - 2)
        prec = 1
        while prec < self.k:
            uy = self.mul(u, y)
            two_minus = [(-c) % self.mod for c in uy]
            two_minus[0] = (two_minus[0] + 2) % self.mod
            y = self.mul(y, two_minus)
            prec *= 2
        return y

    def hensel_root(self, g, start):
        """Lift a simple residue root ``start`` of the integer polynomial ``g``."""
        dg = [i * c for i, c in enumerate(g)][1:]
        z = list(start) + [0] * (self.f - len(start))
        prec = 1
        while prec < self.k:
            z = [
                (a - b) % self.mod
                for a, b in zip(z, self.mul(self.eval_poly(g, z), self.inverse(self.eval_poly(dg, z))))
            ]
            prec *= 2
        if any(self.eval_poly(g, z)):
            raise ArithmeticError("Hensel lifting did not converge")
        return z
