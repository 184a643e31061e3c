"""Arithmetic in Z[zeta_e] and a heuristic Euclidean GCD for ideal generators.

Elements are 1-D numpy integer arrays of length d = phi(e) holding the
coefficients of 1, zeta, ..., zeta^(d-1).  dtype ``object`` carries exact
arbitrary-precision coordinates; dtype ``int64`` is the fast path used inside
``cyclo_gcd``, where overflow wraps silently and the final answer is
re-verified exactly.  The public ring operations always return exact results
and promote int64 inputs when a product could overflow.
"""

from __future__ import annotations

from functools import cached_property, lru_cache
from math import gcd, log
from typing import Sequence

import numpy as np

from . import _fastgcd
from . import primes as _primes

# e with Q(zeta_e) of class number one (even representatives).
CLASS_NUMBER_ONE = (
    2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30,
    32, 34, 36, 38, 40, 42, 44, 48, 50, 54, 60, 66, 70, 84, 90,
)

UNBALANCED_RATIO = 10.0
NORM_TIE = 1e-9
INT64_SAFE = (1 << 62)

_LN2 = log(2.0)


class HeuristicFailure(RuntimeError):
    """cyclo_gcd gave up after exhausting its restarts."""


def totient(n: int) -> int:
    return sum(1 for k in range(1, n + 1) if gcd(k, n) == 1)


def _poly_divexact(a: list[int], b: list[int]) -> list[int]:
    a = list(a)
    q = [0] * (len(a) - len(b) + 1)
    for k in range(len(q) - 1, -1, -1):
        c = a[k + len(b) - 1] // b[-1]
        q[k] = c
        for t, bt in enumerate(b):
            a[k + t] -= c * bt
    if any(a):
        raise ArithmeticError("inexact polynomial division")
    return q


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Coefficients of Phi_n, constant term first."""
    num = [-1] + [0] * (n - 1) + [1]
    for k in range(1, n):
        if n % k == 0:
            num = _poly_divexact(num, list(cyclotomic_poly(k)))
    return tuple(num)


def _prime_factors(n: int) -> list[int]:
    out, q = [], 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        out.append(n)
    return out


def _is_prime_power(n: int) -> bool:
    return n > 1 and len(_prime_factors(n)) == 1


def _lll(basis: np.ndarray, delta: float = 0.75) -> tuple[np.ndarray, np.ndarray]:
    """LLL on the rows of a real matrix; returns (reduced rows, integer transform)."""
    b = basis.astype(float).copy()
    n = b.shape[0]
    t = np.eye(n, dtype=np.int64)

    def gso(b):
        bs = np.zeros_like(b)
        mu = np.zeros((n, n))
        for i in range(n):
            v = b[i].copy()
            for j in range(i):
                mu[i, j] = b[i] @ bs[j] / (bs[j] @ bs[j])
                v -= mu[i, j] * bs[j]
            bs[i] = v
        return bs, mu

    bs, mu = gso(b)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                b[k] -= q * b[j]
                t[k] -= q * t[j]
                bs, mu = gso(b)
        if bs[k] @ bs[k] >= (delta - mu[k, k - 1] ** 2) * (bs[k - 1] @ bs[k - 1]):
            k += 1
        else:
            b[[k, k - 1]] = b[[k - 1, k]]
            t[[k, k - 1]] = t[[k - 1, k]]
            bs, mu = gso(b)
            k = max(k - 1, 1)
    return b, t


class CycloField:
    """Q(zeta_e) for an even e, with its ring of integers Z[zeta_e]."""

    def __init__(self, e: int):
        if e < 2 or e % 2:
            raise ValueError(f"e must be even, got {e}")
        self.e = e
        self.phi = cyclotomic_poly(e)
        self.d = d = len(self.phi) - 1
        self.units_mod_e = tuple(c for c in range(1, e) if gcd(c, e) == 1)

        # rows: x^k reduced modulo Phi_e, for 0 <= k < max(2d - 1, e)
        nrows = max(2 * d - 1, e)
        red = np.zeros((nrows, d), dtype=object)
        row = [1] + [0] * (d - 1)
        for k in range(nrows):
            red[k] = row
            top = row[-1]
            row = [0] + row[:-1]
            if top:
                row = [r - top * c for r, c in zip(row, self.phi[:d])]
        self._red_obj = red
        self._red64 = red.astype(np.int64)
        self._mul_growth = int(np.abs(self._red64[: 2 * d - 1]).sum(axis=0).max())

        self._sigma = {}
        for c in self.units_mod_e:
            self._sigma[c] = red[[(c * k) % e for k in range(d)]]
        self._sigma64 = {c: m.astype(np.int64) for c, m in self._sigma.items()}

        # complex embeddings zeta -> exp(2 pi i c / e) with c < e/2
        self.embedding_exponents = tuple(c for c in self.units_mod_e if 2 * c < e) or (1,)
        ks = np.arange(d)
        self._emb = np.exp(
            2j * np.pi * np.outer(self.embedding_exponents, ks) / e
        )
        if d == 1:
            real = self._emb.real
        else:
            real = np.vstack([self._emb.real, self._emb.imag])
        self._emb_inv = np.linalg.inv(real)
        shifts = [np.zeros(len(self.embedding_exponents), dtype=complex)]
        for k in range(d):
            shifts += [self._emb[:, k], -self._emb[:, k]]
        self._candidate_shifts = np.array(shifts)

    # -- construction ------------------------------------------------------

    def __repr__(self) -> str:
        return f"CycloField({self.e})"

    def element(self, coords: Sequence[int], fast: bool = False) -> np.ndarray:
        coords = list(coords) + [0] * (self.d - len(coords))
        if len(coords) != self.d:
            raise ValueError(f"expected {self.d} coordinates, got {len(coords)}")
        if fast:
            return np.array(coords, dtype=np.int64)
        return np.array([int(c) for c in coords], dtype=object)

    def one(self, fast: bool = False) -> np.ndarray:
        return self.element([1], fast)

    def zeta_power(self, k: int, fast: bool = False) -> np.ndarray:
        row = self._red_obj[k % self.e]
        return row.astype(np.int64) if fast else row.copy()

    def rational(self, n: int, fast: bool = False) -> np.ndarray:
        return self.element([n], fast)

    # -- exact ring operations ---------------------------------------------

    @staticmethod
    def exact(a: np.ndarray) -> np.ndarray:
        if a.dtype == object:
            return a
        return np.array([int(x) for x in a], dtype=object)

    def _fits(self, a: np.ndarray, b: np.ndarray) -> bool:
        ma = int(np.abs(a).max()) if a.size else 0
        mb = int(np.abs(b).max()) if b.size else 0
        return ma * mb * self.d * self._mul_growth < INT64_SAFE

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.dtype == np.int64 and b.dtype == np.int64 and self._fits(a, b):
            return np.convolve(a, b) @ self._red64[: 2 * self.d - 1]
        return self._mul_exact(self.exact(a), self.exact(b))

    def _mul_exact(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.convolve(a, b).dot(self._red_obj[: 2 * self.d - 1])

    def automorphism(self, a: np.ndarray, c: int) -> np.ndarray:
        """sigma_c: zeta -> zeta^c."""
        c %= self.e
        if gcd(c, self.e) != 1:
            raise ValueError(f"{c} is not a unit mod {self.e}")
        if a.dtype == np.int64 and int(np.abs(a).max()) * self.d * self._mul_growth < INT64_SAFE:
            return a @ self._sigma64[c]
        return self.exact(a).dot(self._sigma[c])

    def conjugate_product(self, a: np.ndarray) -> np.ndarray:
        """Product of sigma_c(a) over c != 1."""
        a = self.exact(a)
        out = self.one()
        for c in self.units_mod_e[1:]:
            out = self._mul_exact(out, a.dot(self._sigma[c]))
        return out

    def norm(self, a: np.ndarray) -> int:
        a = self.exact(a)
        return int(self._mul_exact(a, self.conjugate_product(a))[0])

    def exact_div(self, a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
        """a / b if b divides a in Z[zeta_e], else None."""
        a, b = self.exact(a), self.exact(b)
        if not any(b):
            raise ZeroDivisionError("division by zero element")
        cp = self.conjugate_product(b)
        n = int(self._mul_exact(b, cp)[0])
        num = self._mul_exact(a, cp)
        if any(int(x) % n for x in num):
            return None
        return np.array([int(x) // n for x in num], dtype=object)

    @cached_property
    def _norm_prime(self) -> tuple[int, list[list[int]]]:
        """A prime l = 1 (mod e) near 2^62 and the powers of Phi_e's roots mod l."""
        ell = ((1 << 62) // self.e) * self.e + 1
        while not _primes.is_prime_64(ell):
            ell += self.e
        rho = primitive_root_of_unity(ell, self.e)
        table = []
        for c in self.units_mod_e:
            r = pow(rho, c, ell)
            table.append([pow(r, k, ell) for k in range(self.d)])
        return ell, table

    def norm_mod(self, a: np.ndarray) -> tuple[int, int]:
        """(N(a) mod l, l) for the field's auxiliary prime l."""
        ell, table = self._norm_prime
        coords = [int(x) for x in a]
        n = 1
        for row in table:
            n = n * (sum(c * r for c, r in zip(coords, row)) % ell) % ell
        return n, ell

    def is_prime_generator(self, a: np.ndarray, p: int, w: int) -> bool:
        """True iff (a) = (p, zeta - w), for a prime p with w of order e mod p.

        a lies in that ideal iff a(w) = 0 mod p, and then equality of ideals
        is equivalent to N(a) = p.  The norm is pinned down exactly by its
        residue mod l together with a floating-point estimate.
        """
        coords = [int(x) for x in a]
        acc = 0
        for c in reversed(coords):
            acc = (acc * w + c) % p
        if acc:
            return False
        if self.d == 1:
            return abs(coords[0]) == p
        n, ell = self.norm_mod(a)
        if n != p % ell:
            return False
        est = self.log_norm(a)
        return abs(est - log(p)) < 1e-6

    def divides(self, b: np.ndarray, a: np.ndarray) -> bool:
        return self.exact_div(a, b) is not None

    def is_zero(self, a: np.ndarray) -> bool:
        return not np.any(a)

    # -- embeddings --------------------------------------------------------

    def _floats(self, a: np.ndarray) -> tuple[np.ndarray, float]:
        """Float coordinates scaled by 2^-shift, and shift * log 2."""
        if a.dtype != object:
            return a.astype(float), 0.0
        top = max(abs(int(x)) for x in a).bit_length()
        if top <= 900:
            return np.array([float(x) for x in a]), 0.0
        shift = top - 900
        return np.array([float(int(x) >> shift) for x in a]), shift * _LN2

    def embed(self, a: np.ndarray) -> np.ndarray:
        """(tau_1(a), ..., tau_{d/2}(a)) as complex doubles."""
        x, off = self._floats(a)
        v = self._emb @ x
        return v * np.exp(off) if off else v

    def log_embedding(self, a: np.ndarray) -> np.ndarray:
        """(log |tau_i(a)|)_i; -inf where the embedding vanishes."""
        x, off = self._floats(a)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self._emb @ x)) + off

    def log_norm(self, a: np.ndarray) -> float:
        """Approximate log |N(a)|."""
        la = self.log_embedding(a)
        return float(la.sum()) * (1 if self.d == 1 else 2)

    def from_embedding(self, v: np.ndarray) -> np.ndarray:
        """Real coordinates of the element of K (x) R with embeddings v."""
        if self.d == 1:
            return self._emb_inv @ v.real
        return self._emb_inv @ np.concatenate([v.real, v.imag])

    # -- units and balancing ------------------------------------------------

    @cached_property
    def unit_rank(self) -> int:
        return max(self.d // 2 - 1, 0)

    @cached_property
    def _unit_basis(self) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
        """Cyclotomic units (u_k, u_k^-1) with an LLL-reduced log lattice."""
        if self.unit_rank == 0:
            return [], [], np.zeros((0, len(self.embedding_exponents)))
        e = self.e
        cands = []
        for n in range(3, e + 1):
            if e % n:
                continue
            step = e // n
            exps = [step * b for b in range(1, n) if gcd(b, n) == 1]
            one_minus = [self.one() - self.zeta_power(a) for a in exps]
            if _is_prime_power(n):
                for num in one_minus[1:]:
                    q = self.exact_div(num, one_minus[0])
                    if q is not None:
                        cands.append(q)
            else:
                cands.extend(one_minus)
        logs = [self.log_embedding(u) for u in cands]
        order = sorted(range(len(cands)), key=lambda k: float(np.linalg.norm(logs[k])))
        chosen: list[int] = []
        for k in order:
            trial = np.array([logs[j] for j in chosen + [k]])
            if np.linalg.matrix_rank(trial, tol=1e-8) == len(chosen) + 1:
                chosen.append(k)
            if len(chosen) == self.unit_rank:
                break
        if len(chosen) != self.unit_rank:
            raise ArithmeticError(f"cyclotomic units of rank {len(chosen)} for e={e}")
        base = [cands[k] for k in chosen]
        inv = [self._unit_inverse(u) for u in base]
        reduced, transform = _lll(np.array([logs[k] for k in chosen]))
        units, inverses = [], []
        for row in transform:
            u, ui = self.one(), self.one()
            for k, t in enumerate(row.tolist()):
                fwd, back = (base[k], inv[k]) if t > 0 else (inv[k], base[k])
                for _ in range(abs(t)):
                    u = self._mul_exact(u, fwd)
                    ui = self._mul_exact(ui, back)
            units.append(u)
            inverses.append(ui)
        return units, inverses, reduced

    def _unit_inverse(self, u: np.ndarray) -> np.ndarray:
        cp = self.conjugate_product(u)
        n = int(self._mul_exact(u, cp)[0])
        if n not in (1, -1):
            raise ArithmeticError("not a unit")
        return cp * n

    @cached_property
    def _unit_solver(self) -> np.ndarray:
        _, _, logs = self._unit_basis
        return np.linalg.pinv(logs.T)

    def mean_abs_coeff(self, a: np.ndarray) -> float:
        if a.dtype == object:
            return float(sum(abs(int(x)) for x in a)) / self.d
        return float(np.abs(a.astype(float)).mean())

    def is_balanced(self, a: np.ndarray, log_norm: float | None = None) -> bool:
        if log_norm is None:
            log_norm = self.log_norm(a)
        mean = self.mean_abs_coeff(a)
        if mean == 0:
            return True
        return log(mean) <= log(UNBALANCED_RATIO) + log_norm / self.d

    def balance(self, a: np.ndarray, rounds: int = 6) -> np.ndarray:
        """An associate u^-1 a with coefficients near |N(a)|^(1/d)."""
        if self.unit_rank == 0 or self.is_zero(a):
            return a
        a = self.exact(a)
        units, inverses, _ = self._unit_basis
        for _ in range(rounds):
            la = self.log_embedding(a)
            ln = 2 * float(la.sum())
            if not np.isfinite(ln) or self.is_balanced(a, ln):
                return a
            x = np.rint(self._unit_solver @ (la - ln / self.d)).astype(np.int64)
            if not x.any():
                return a
            for k, t in enumerate(x.tolist()):
                f = inverses[k] if t > 0 else units[k]
                for _ in range(abs(t)):
                    a = self._mul_exact(a, f)
        return a

    @cached_property
    def _kernel_data(self):
        """Arrays consumed by the compiled fast path."""
        units, inverses, _ = self._unit_basis
        stack = lambda us: np.array(us, dtype=np.int64).reshape(-1, self.d)
        solver = self._unit_solver if units else np.zeros((0, len(self.embedding_exponents)))
        return (
            np.ascontiguousarray(self._red64[: 2 * self.d - 1]),
            np.ascontiguousarray(self._emb.real),
            np.ascontiguousarray(self._emb.imag),
            np.ascontiguousarray(self._emb_inv),
            stack(units),
            stack(inverses),
            np.ascontiguousarray(solver, dtype=float),
        )

    # -- perturbation set ----------------------------------------------------

    @cached_property
    def perturbation_prime(self) -> int:
        q = self.e + 1
        while not _primes.is_prime_64(q):
            q += self.e
        return q

    @cached_property
    def bootstrap_perturbations(self) -> list[np.ndarray]:
        """Conjugates of 1 - zeta^a of prime-power order: small norm, prime to p."""
        out = []
        for a in range(1, self.e):
            n = self.e // gcd(a, self.e)
            if _is_prime_power(n):
                out.append(self.one() - self.zeta_power(a))
        return out

    @cached_property
    def perturbations(self) -> list[np.ndarray]:
        """All conjugates of a generator of a prime above the least q = 1 mod e."""
        q = self.perturbation_prime
        w = primitive_root_of_unity(q, self.e)
        pi = cyclo_gcd(
            self,
            self.rational(q),
            self.zeta_power(1) - self.rational(w),
            seed=0,
            perturbations=self.bootstrap_perturbations,
        )
        return [self.automorphism(pi, c) for c in self.units_mod_e]

    @cached_property
    def _perturbations_fit(self) -> bool:
        return _fit_int64(self.perturbations)


def primitive_root_of_unity(p: int, e: int) -> int:
    """Smallest x^((p-1)/e) of exact order e modulo p."""
    f, _ = divmod(p - 1, e)
    qs = _prime_factors(e)
    for x in range(2, p):
        w = pow(x, f, p)
        if all(pow(w, e // q, p) != 1 for q in qs):
            return w
    raise ValueError(f"no element of order {e} mod {p}")


@lru_cache(maxsize=None)
def get_field(e: int) -> CycloField:
    return CycloField(e)


# ---------------------------------------------------------------------------
# Heuristic Euclidean GCD


def _first_reducing_quotient(field: CycloField, ratio: np.ndarray) -> np.ndarray | None:
    """Rounded X/Y, then single +-1 coordinate moves; first with N(X - QY) < N(Y)."""
    q = np.rint(field.from_embedding(ratio))
    base = ratio - field._emb @ q
    resid = base[None, :] - field._candidate_shifts
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(resid)).sum(axis=1)
    ok = np.flatnonzero(logs < -NORM_TIE)
    if not ok.size:
        return None
    k = int(ok[0])
    if k:
        q[(k - 1) >> 1] += 1.0 if k & 1 else -1.0
    return q


def _euclid_exact(
    field: CycloField,
    x: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    perturbations: list[np.ndarray],
    max_iter: int,
) -> np.ndarray | None:
    """Algorithm loop with arbitrary-precision coordinates."""
    mul = field._mul_exact
    pert = [field.exact(u) for u in perturbations]
    pert_emb = [field.embed(u) for u in pert]
    X = field.balance(field.exact(x))
    Y = field.balance(field.exact(y))
    for _ in range(max_iter):
        if field.is_zero(X):
            return Y
        if field.is_zero(Y):
            return X
        if field.log_norm(X) < field.log_norm(Y) - NORM_TIE:
            X, Y = Y, X
        ty = field.embed(Y)
        if not np.all(np.isfinite(ty)) or np.any(ty == 0):
            return None
        ratio = field.embed(X) / ty
        if not np.all(np.isfinite(ratio)):
            return None
        q = _first_reducing_quotient(field, ratio)
        if q is not None:
            qi = np.array([int(v) for v in q], dtype=object)
            X = field.balance(X - mul(qi, Y))
            continue
        if not pert:
            return None
        k = int(rng.integers(len(pert)))
        u, tu = pert[k], pert_emb[k]
        approx = np.rint(field.from_embedding(ty / tu))
        if np.all(np.abs(approx) < 2.0 ** 52):
            quo = np.array([int(v) for v in approx], dtype=object)
            if np.array_equal(mul(quo, u), Y):
                Y = field.balance(quo)
                continue
        X = field.balance(mul(X, u))
    return None


def _euclid_fast(
    field: CycloField,
    x: np.ndarray,
    y: np.ndarray,
    seed: int,
    perturbations: list[np.ndarray],
    max_iter: int,
) -> np.ndarray | None:
    """Algorithm loop in compiled, wrapping int64 arithmetic."""
    red, cre, cim, inv, units, inverses, solver = field._kernel_data
    perts = np.array([u for u in perturbations], dtype=np.int64).reshape(-1, field.d)
    status, out = _fastgcd.euclid(
        np.array(x, dtype=np.int64), np.array(y, dtype=np.int64),
        red, cre, cim, inv, units, inverses, solver, perts, seed, max_iter,
    )
    return out if status else None


def _fit_int64(elements: list[np.ndarray]) -> bool:
    return all(max(abs(int(v)) for v in u) < INT64_SAFE for u in elements)


def _prime_ideal_shape(x: np.ndarray, y: np.ndarray) -> int | None:
    """w if x is a rational prime p and y = zeta - w with 0 < w < p."""
    if any(x[1:]) or y[1] != 1 or any(y[2:]):
        return None
    p, w = int(x[0]), -int(y[0])
    if not (0 < w < p and _primes.is_prime_64(p)):
        return None
    return w


def cyclo_gcd(
    field: CycloField,
    x: np.ndarray,
    y: np.ndarray,
    seed: int = 0,
    *,
    perturbations: list[np.ndarray] | None = None,
    attempts: int = 8,
    max_iter: int | None = None,
) -> np.ndarray:
    """A generator of the ideal (x, y), by a randomised Euclidean algorithm.

    Meant for x = p and y = zeta - w0 with (p, zeta - w0) prime of degree one.
    Runs up to ``attempts`` restarts of a compiled loop on wrapping int64
    coordinates, then up to ``attempts`` more with exact coordinates; every candidate is checked to
    divide both inputs before it is returned.
    """
    x, y = field.exact(x), field.exact(y)
    fits = None
    if field.d == 1:
        g = gcd(int(x[0]), int(y[0]))
        return field.rational(g)
    if perturbations is None:
        nx = abs(field.norm(x)) if np.any(x[1:]) else abs(int(x[0]))
        if gcd(nx, field.perturbation_prime) == 1:
            perturbations = field.perturbations
            fits = field._perturbations_fit
        else:
            perturbations = field.bootstrap_perturbations
    max_iter = max_iter or 64 * field.d
    w = _prime_ideal_shape(x, y)
    if w is not None:
        def check(t):
            return field.is_prime_generator(t, int(x[0]), w)
    else:
        def check(t):
            return field.divides(t, x) and field.divides(t, y)
    if fits is None:
        fits = _fit_int64(perturbations)
    fits = fits and _fit_int64([x, y])
    plans = ([True] * attempts if fits else []) + [False] * attempts
    for attempt, fast in enumerate(plans):
        ss = np.random.SeedSequence([seed, attempt])
        if fast:
            kseed = int(ss.generate_state(1)[0])
            out = _euclid_fast(field, x, y, kseed, perturbations, max_iter)
        else:
            rng = np.random.default_rng(ss)
            out = _euclid_exact(field, x, y, rng, perturbations, max_iter)
        if out is None or field.is_zero(out):
            continue
        out = field.balance(field.exact(out))
        if check(out):
            return out
    raise HeuristicFailure(f"no generator found for e={field.e} after {len(plans)} attempts")
