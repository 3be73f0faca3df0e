"""The exact verification suites behind ``tame-levy --command verify``."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalFailure
from .field import different_exponent_scan
from .finite_field import rank_mod_p
from .levy import (
    I_N_table,
    annihilator_depth_structure,
    check_coset_sum,
    exact_q,
    lemma2_bound,
    levy_khinchin_by_shell,
    levy_khinchin_table,
    levy_table,
)
from .support import lemma1_surjectivity_check, level_group
from .tower import TowerSpec

FULL_TABLE_MAX = 1024


@dataclass
class CheckResult:
    name: str
    level: str
    passed: bool
    value: float | None = None
    tolerance: float | None = None
    detail: str = ""
    seconds: float = 0.0

    def row(self):
        return {
            "check": self.name,
            "level": self.level,
            "passed": self.passed,
            "value": "" if self.value is None else repr(float(self.value)),
            "tolerance": "" if self.tolerance is None else repr(self.tolerance),
            "detail": self.detail,
        }


def orthogonality_error(spec: TowerSpec, n: int) -> float:
    """max |sum_g chi(g,xi) conj chi(g,xi') - M [xi = xi']| / M over all pairs.

    Small groups use the full character table.  For larger ones the pairing
    is an integer bilinear form, so the pair sums equal the row sums
    sum_g chi(g, xi - xi'), which are computed for every xi instead.
    """
    grp = level_group(spec, n)
    coords = grp.enumerate_coords()
    M = grp.order
    if M <= FULL_TABLE_MAX:
        E = np.exp(2j * np.pi * grp.pairing_table(coords, coords) / grp.modulus)
        return float(np.max(np.abs(E.conj().T @ E - M * np.eye(M))) / M)
    worst = 0.0
    gd_all = (coords @ grp.gram.T) % grp.modulus
    for start in range(0, M, 512):
        num = (gd_all[start:start + 512] @ coords.T) % grp.modulus
        sums = np.exp(2j * np.pi * num / grp.modulus).sum(axis=1)
        target = np.where(np.any(coords[start:start + 512], axis=1), 0.0, M)
        worst = max(worst, float(np.max(np.abs(sums - target))) / M)
    return worst


def gram_unimodular(spec: TowerSpec, n: int) -> bool:
    grp = level_group(spec, n)
    return rank_mod_p(grp.gram.tolist(), grp.p) == grp.m


@dataclass
class VerifyOptions:
    max_level: int = 3
    lk_tol: float = 1e-8
    sum_rtol: float = 1e-10
    orth_tol: float = 1e-10
    q_floor: float = 0.01
    lemma2_slack: float = 1e-9
    mc_samples: int = 0
    seed: int = 0
    tables: dict = field(default_factory=dict)   # level -> LevyTable override


def _levels(spec, opts):
    return [n for n in range(1, opts.max_level + 1) if spec.has_level(n)]


def run_verify(spec: TowerSpec, opts: VerifyOptions | None = None, strict=False):
    """Run every suite; returns CheckResults.  With ``strict`` the first
    tolerance breach raises NumericalFailure."""
    opts = opts or VerifyOptions()
    results = []

    def record(name, level, fn):
        t0 = time.perf_counter()
        try:
            passed, value, tol, detail = fn()
        except NumericalFailure as exc:
            if strict:
                raise
            passed, value, tol, detail = False, None, None, str(exc)
        res = CheckResult(name, str(level), bool(passed), value, tol, detail, time.perf_counter() - t0)
        results.append(res)
        if strict and not res.passed:
            raise NumericalFailure(name, f"level {level}: {detail or value}")
        return res

    levels = _levels(spec, opts)

    for n in levels:
        def scan(n=n):
            d = different_exponent_scan(spec, n)
            return d == spec.e(n) - 1, d, 0, f"d={d}, e-1={spec.e(n) - 1}"
        record("different exponent", n, scan)

    for nu in levels:
        for n in range(1, nu):
            for N in range(0, nu + 1):
                def lem1(nu=nu, n=n, N=N):
                    r = lemma1_surjectivity_check(spec, nu, n, N, details=True)
                    return r["ok"], r["rank"], r["target_dim"], f"contained={r['contained']}"
                record("trace surjectivity", f"{nu}->{n},N={N}", lem1)

    for n in levels:
        def thm1(n=n):
            table = opts.tables.get(n) or levy_table(spec, n)
            rel = check_coset_sum(spec, n, table, opts.sum_rtol)
            return True, rel, opts.sum_rtol, "enumerated" if spec.enumerable(n) else "by shell counts"
        record("Theorem 1 coset-sum", n, thm1)

    for n in levels:
        def lk(n=n):
            if spec.enumerable(n):
                lhs, rhs, _ = levy_khinchin_table(spec, n)
                how = "all xi, enumerated"
            else:
                if not all(annihilator_depth_structure(spec, n)):
                    return False, None, opts.lk_tol, "annihilator structure fails"
                lhs, rhs = levy_khinchin_by_shell(spec, n)
                how = "all xi, by annihilator shells"
            err = float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))))
            return err <= opts.lk_tol, err, opts.lk_tol, how
        record("Levy-Khinchin", n, lk)

    for n in levels:
        def dual(n=n):
            grp = level_group(spec, n)
            if spec.enumerable(n):
                card = len(grp.enumerate_coords())
                err = orthogonality_error(spec, n)
                ok = card == spec.group_order(n) == spec.p ** (n * spec.m(n)) and err <= opts.orth_tol
                return ok, err, opts.orth_tol, f"card={card}"
            ok = gram_unimodular(spec, n) and all(annihilator_depth_structure(spec, n))
            return ok, None, None, "Gram matrix invertible mod p; annihilators match dual balls"
        record("duality/orthogonality", n, dual)

    pairs = [(n, N) for n in levels for N in range(1, n) if spec.enumerable(n)]
    for n, N in pairs:
        def lem2(n=n, N=N):
            grp = level_group(spec, n)
            table, _ = I_N_table(spec, n, N)
            shells = grp.dual_shell(grp.enumerate_coords())
            eligible = (shells >= N * spec.e(n) + 1) & (shells <= n * spec.e(n))
            bounds = np.array([lemma2_bound(spec, n, N, j) if j else 0.0 for j in range(grp.num_digits + 1)])
            slack = table[eligible] - bounds[shells[eligible]]
            worst = float(slack.min()) if slack.size else float("inf")
            return worst >= -opts.lemma2_slack, worst, -opts.lemma2_slack, f"{int(eligible.sum())} classes"
        record("I_N lower bound", f"{n},{N}", lem2)

        def qpos(n=n, N=N):
            res = exact_q(spec, n, N)
            ok = opts.q_floor <= res.Q <= 1.0 and res.max_imag <= 1e-10
            return ok, res.Q, opts.q_floor, f"E[tau]={res.expected_tau!r}"
        record("Q_exact positivity", f"{n},{N}", qpos)

    if opts.mc_samples:
        from .simulator import Q_mc

        for n, N in pairs:
            def mc(n=n, N=N):
                est, lo, hi = Q_mc(spec, n, N, opts.mc_samples, opts.seed)
                q = exact_q(spec, n, N).Q
                return lo <= q <= hi, est, None, f"Q_exact={q!r} in [{lo!r}, {hi!r}] (Wilson 99%, seed {opts.seed})"
            record("Q_exact vs Q_mc", f"{n},{N}", mc)
    return results


def all_passed(results) -> bool:
    return all(r.passed for r in results)


def format_table(results) -> str:
    lines = [f"{'check':<24} {'level':<16} {'result':<6} {'value':<24} detail"]
    for r in results:
        val = "" if r.value is None else f"{float(r.value):.6g}"
        lines.append(f"{r.name:<24} {r.level:<16} {'PASS' if r.passed else 'FAIL':<6} {val:<24} {r.detail}")
    return "\n".join(lines)
