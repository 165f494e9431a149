"""Number-theoretic transforms modulo word-size primes.

Dense power-series squarings are done by cyclic convolution modulo several
NTT-friendly primes (p = c * 2^k + 1, p < 2^31, so int64 holds a product of
two residues).  Exact integers are recovered afterwards by Chinese-remainder
recombination; callers are responsible for choosing enough primes to cover
the magnitude of the coefficients they need.
"""

from __future__ import annotations

import numpy as np

# All primes have 2-adic valuation of p-1 at least 25, so one plan layout
# serves every transform length up to 2**25.
NTT_PRIMES = (2013265921, 1811939329, 2113929217, 1711276033, 469762049)

MAX_TRANSFORM_LOG2 = 25

_rev_cache: dict[int, np.ndarray] = {}


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def primitive_root(p: int) -> int:
    """Smallest primitive root modulo the prime p."""
    fac = _prime_factors(p - 1)
    g = 2
    while True:
        if all(pow(g, (p - 1) // f, p) != 1 for f in fac):
            return g
        g += 1


def _bit_reverse_indices(n: int) -> np.ndarray:
    rev = _rev_cache.get(n)
    if rev is None:
        bits = n.bit_length() - 1
        idx = np.arange(n, dtype=np.int64)
        rev = np.zeros(n, dtype=np.int64)
        for b in range(bits):
            rev |= ((idx >> b) & 1) << (bits - 1 - b)
        _rev_cache[n] = rev
    return rev


def _power_table(w: int, count: int, p: int) -> np.ndarray:
    """[w^0, w^1, ..., w^(count-1)] mod p by block doubling."""
    t = np.ones(count, dtype=np.int64)
    if count > 1:
        t[1] = w % p
    filled = min(2, count)
    while filled < count:
        step = min(filled, count - filled)
        t[filled : filled + step] = (t[:step] * pow(w, filled, p)) % p
        filled += step
    return t


class TransformPlan:
    """Precomputed butterfly roots for one modulus and transform length."""

    def __init__(self, p: int, n: int):
        if n < 2 or n & (n - 1):
            raise ValueError("transform length must be a power of two >= 2")
        if (p - 1) % n:
            raise ValueError(f"{n} does not divide {p}-1")
        self.p = p
        self.n = n
        self.rev = _bit_reverse_indices(n)
        g = primitive_root(p)
        w = pow(g, (p - 1) // n, p)
        self._fwd = _power_table(w, n // 2, p)
        self._inv = _power_table(pow(w, p - 2, p), n // 2, p)
        self.n_inv = pow(n, p - 2, p)

    def _stage_roots(self, size: int, inverse: bool) -> np.ndarray:
        # The size-stage needs powers of the primitive size-th root, which
        # stride through the full table.
        full = self._inv if inverse else self._fwd
        return full[:: self.n // size][: size // 2]

    def transform(self, x: np.ndarray, inverse: bool = False) -> np.ndarray:
        """Cyclic NTT of an int64 array of residues in [0, p)."""
        p = self.p
        a = x[self.rev]
        size = 2
        while size <= self.n:
            w = self._stage_roots(size, inverse)
            a = a.reshape(-1, size)
            half = size // 2
            lo = a[:, :half]
            hi = (a[:, half:] * w) % p
            diff = (lo - hi) % p
            a[:, :half] = (lo + hi) % p
            a[:, half:] = diff
            a = a.reshape(-1)
            size *= 2
        if inverse:
            a = (a * self.n_inv) % p
        return a

    def cyclic_square(self, x: np.ndarray) -> np.ndarray:
        f = self.transform(x)
        f = (f * f) % self.p
        return self.transform(f, inverse=True)


def series_square_mod(coeffs: np.ndarray, out_len: int, plan: TransformPlan) -> np.ndarray:
    """Truncated square of a power series modulo plan.p.

    `coeffs` holds residues of a series of length <= out_len; the result is
    the square truncated to out_len terms.  The plan length must be at least
    2*out_len - 1 so cyclic wraparound cannot reach the retained prefix.
    """
    if plan.n < 2 * out_len - 1:
        raise ValueError("transform length too short for requested truncation")
    buf = np.zeros(plan.n, dtype=np.int64)
    buf[: coeffs.shape[0]] = coeffs
    return plan.cyclic_square(buf)[:out_len]


def crt_basis(primes: tuple[int, ...]) -> tuple[int, list[int]]:
    """Modulus product and CRT recombination basis for a set of coprime primes.

    Returns (P, basis) with basis[i] = (P/p_i) * ((P/p_i)^-1 mod p_i), so that
    an integer with residues r_i equals sum(r_i * basis[i]) mod P.
    """
    P = 1
    for p in primes:
        P *= p
    basis = []
    for p in primes:
        y = P // p
        basis.append(y * pow(y % p, p - 2, p))
    return P, basis
