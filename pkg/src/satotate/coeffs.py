"""Exact Fourier coefficients of the discriminant form and derived quantities.

The tau table is built from Jacobi's theta identity: the generating series of
tau is q times the 8th power of sum_k (-1)^k (2k+1) q^(k(k+1)/2), obtained by
three dense squarings.  Squarings run modulo five NTT primes and the exact
integers are recovered by residue recombination; d(n) n^(11/2) <= 2 n^6
bounds the magnitude, so the prime product covers every table size we allow.

Everything here is pure after table construction; tables are immutable and
safe to share between threads.
"""

from __future__ import annotations

import math
import os
import struct
import zlib
from dataclasses import dataclass

import mpmath
import numpy as np
from sympy import isprime

from .errors import CacheFormatError, ResourceLimitError
from .ntt import NTT_PRIMES, TransformPlan, crt_basis, series_square_mod

# Largest table the default memory budget admits (transform length 2**25).
DEFAULT_X_LIMIT = 16_000_000

CACHE_MAGIC = b"STCT"
CACHE_VERSION = 1

# Escalate arccos to extended precision this close to the endpoints.
_GUARD = 1.0e-8
_MP_DPS = 40


def _squarefree(n: int) -> bool:
    d = 2
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        if n % d == 0:
            n //= d
        d += 1
    return True


@dataclass(frozen=True)
class FormParams:
    """Weight/level data of a newform; only the discriminant form ships an engine."""

    N: int
    k: int
    label: str = ""

    def __post_init__(self):
        if self.N < 1 or not _squarefree(self.N):
            raise ValueError("level must be a squarefree positive integer")
        if self.k < 2 or self.k % 2:
            raise ValueError("weight must be an even integer >= 2")


DELTA = FormParams(N=1, k=12, label="delta")


@dataclass(frozen=True)
class AngleRecord:
    """A prime with its normalized eigenvalue angle in [0, pi]."""

    p: int
    theta: float
    precision: float


class CoefficientTable:
    """Coefficients a_f(n) for 1 <= n <= X, exact integers on demand.

    For the built-in discriminant form the table keeps residues modulo the
    NTT primes and reconstructs integers lazily; imported tables keep exact
    integers directly.  The residue layout is an implementation detail and is
    not part of the public surface.
    """

    def __init__(self, X: int, form: FormParams, residues=None, primes=None, exact=None):
        if X < 1:
            raise ValueError("X must be positive")
        self.X = int(X)
        self.form = form
        self._residues = residues
        self._primes = tuple(primes) if primes else None
        self._exact = exact
        if residues is not None:
            self._P, self._basis = crt_basis(self._primes)
            self._half = self._P >> 1
        self._theta_cache: dict[int, float] = {}

    # -- exact values ----------------------------------------------------

    def value(self, n: int) -> int:
        """a_f(n) as an exact integer."""
        if not 1 <= n <= self.X:
            raise ValueError(f"n={n} outside table range [1, {self.X}]")
        if self._exact is not None:
            return self._exact[n - 1]
        acc = 0
        i = n - 1
        for arr, b in zip(self._residues, self._basis):
            acc += int(arr[i]) * b
        acc %= self._P
        if acc > self._half:
            acc -= self._P
        return acc

    def tau(self, n: int) -> int:
        return self.value(n)

    def values_nonzero_mask(self, ns: np.ndarray) -> np.ndarray:
        """Vectorized a_f(n) != 0 test (all residues zero iff the value is zero)."""
        idx = np.asarray(ns, dtype=np.int64) - 1
        if idx.min() < 0 or idx.max() >= self.X:
            raise ValueError("index outside table range")
        if self._exact is not None:
            return np.array([self._exact[i] != 0 for i in idx])
        nz = np.zeros(idx.shape, dtype=bool)
        for arr in self._residues:
            nz |= arr[idx] != 0
        return nz

    # -- angles ----------------------------------------------------------

    def theta(self, p: int, eps: float = 1.0e-12) -> float:
        """Cached angle for a prime from this table (no primality re-check)."""
        th = self._theta_cache.get(p)
        if th is None:
            th = _theta_from_tau(self.value(p), p, eps)
            self._theta_cache[p] = th
        return th

    def cos_theta_array(self, primes: np.ndarray) -> np.ndarray:
        """Float cosines tau(p) / (2 p^((k-1)/2)) for an array of primes."""
        half_power = (self.form.k - 1) / 2.0
        out = np.empty(len(primes), dtype=np.float64)
        for i, p in enumerate(np.asarray(primes, dtype=np.int64)):
            out[i] = float(self.value(int(p))) / (2.0 * float(p) ** half_power)
        return out

    def theta_array(self, primes: np.ndarray, eps: float = 1.0e-12) -> np.ndarray:
        """Angles for an array of primes; matches the scalar path bit for bit."""
        ratios = self.cos_theta_array(primes)
        thetas = np.arccos(np.clip(ratios, -1.0, 1.0))
        guard = max(_GUARD, 2.0 * eps)
        for i in np.nonzero(np.abs(ratios) > 1.0 - guard)[0]:
            thetas[i] = _theta_from_tau(self.value(int(primes[i])), int(primes[i]), eps)
        return thetas

    # -- persistence -----------------------------------------------------

    def save(self, path: str) -> None:
        if self._residues is None:
            raise CacheFormatError("only residue-backed tables can be cached")
        header = CACHE_MAGIC + struct.pack("<IQB", CACHE_VERSION, self.X, len(self._primes))
        header += struct.pack(f"<{len(self._primes)}I", *self._primes)
        payload = b"".join(arr.astype("<u4").tobytes() for arr in self._residues)
        crc = zlib.crc32(header + payload) & 0xFFFFFFFF
        tmp = path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(header)
            fh.write(payload)
            fh.write(struct.pack("<I", crc))
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str, form: FormParams = DELTA) -> "CoefficientTable":
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < 21 or blob[:4] != CACHE_MAGIC:
            raise CacheFormatError("bad magic bytes")
        version, X, nprimes = struct.unpack("<IQB", blob[4:17])
        if version != CACHE_VERSION:
            raise CacheFormatError(f"unsupported cache version {version}")
        off = 17 + 4 * nprimes
        primes = struct.unpack(f"<{nprimes}I", blob[17:off])
        crc_stored = struct.unpack("<I", blob[-4:])[0]
        if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != crc_stored:
            raise CacheFormatError("checksum mismatch")
        body = blob[off:-4]
        if len(body) != 4 * nprimes * X:
            raise CacheFormatError("payload length mismatch")
        residues = []
        for i in range(nprimes):
            seg = body[i * 4 * X : (i + 1) * 4 * X]
            residues.append(np.frombuffer(seg, dtype="<u4").copy())
        return cls(X, form, residues=residues, primes=primes)


def _theta_from_tau(tau: int, p: int, eps: float) -> float:
    r = float(tau) / (2.0 * float(p) ** 5.5)
    guard = max(_GUARD, 2.0 * eps)
    if abs(r) > 1.0 - guard:
        # arccos loses precision quadratically at the endpoints; redo the
        # ratio and the inverse cosine in extended precision.
        with mpmath.workdps(_MP_DPS):
            rr = mpmath.mpf(tau) / (2 * mpmath.mpf(p) ** mpmath.mpf("5.5"))
            return float(mpmath.acos(rr))
    return math.acos(r)


def angle(p: int, table: CoefficientTable, eps: float = 1.0e-12) -> AngleRecord:
    """Angle theta_p with a_f(p) = 2 p^((k-1)/2) cos(theta_p), |error| <= eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    if p > table.X:
        raise ValueError(f"prime {p} exceeds table limit {table.X}")
    if table.form.k != 12 and table._exact is None:
        raise ValueError("angle needs the form weight to normalize")
    if table.form.k == 12:
        theta = _theta_from_tau(table.value(p), p, eps)
    else:
        half_power = (table.form.k - 1) / 2.0
        r = float(table.value(p)) / (2.0 * float(p) ** half_power)
        theta = math.acos(min(1.0, max(-1.0, r)))
    return AngleRecord(p=p, theta=theta, precision=eps)


# -- tau table construction ------------------------------------------------


def _theta_series(length: int) -> np.ndarray:
    """Coefficients of sum_k (-1)^k (2k+1) q^(k(k+1)/2) up to q^(length-1)."""
    out = np.zeros(length, dtype=np.int64)
    k = 0
    while k * (k + 1) // 2 < length:
        out[k * (k + 1) // 2] = (2 * k + 1) * (1 if k % 2 == 0 else -1)
        k += 1
    return out


def delta_coefficients(
    X: int,
    cache_dir: str | None = None,
    max_x: int = DEFAULT_X_LIMIT,
    primes: tuple[int, ...] = NTT_PRIMES,
) -> CoefficientTable:
    """Exact tau(n) for n <= X, deterministic; cached on disk when cache_dir is set."""
    if X < 1:
        raise ValueError("X must be positive")
    if X > max_x:
        raise ResourceLimitError(f"X={X} exceeds the configured budget {max_x}")

    cache_path = None
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        cache_path = os.path.join(cache_dir, f"delta_{X}.stct")
        if os.path.exists(cache_path):
            table = CoefficientTable.load(cache_path)
            if table.X == X and table._primes == tuple(primes):
                return table

    prod = 1
    for p in primes:
        prod *= p
    if 4 * X**6 >= prod:
        raise ResourceLimitError("prime set too small for the coefficient magnitude at this X")

    if X == 1:
        residues = [np.array([1], dtype=np.uint32) for _ in primes]
        table = CoefficientTable(1, DELTA, residues=residues, primes=primes)
        if cache_path:
            table.save(cache_path)
        return table

    length = 1
    while length < 2 * X - 1:
        length *= 2
    base = _theta_series(X)
    residues = []
    for p in primes:
        plan = TransformPlan(p, length)
        cur = np.mod(base, p)
        for _ in range(3):
            cur = series_square_mod(cur, X, plan)
        residues.append(cur.astype(np.uint32))
        del plan
    table = CoefficientTable(X, DELTA, residues=residues, primes=primes)
    if cache_path:
        table.save(cache_path)
    return table


def tau_prime_power(p: int, m: int, table: CoefficientTable) -> int:
    """a_f(p^m) through the Hecke recurrence, exact."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    if p > table.X:
        raise ValueError(f"prime {p} exceeds table limit {table.X}")
    if m == 0:
        return 1
    ap = table.value(p)
    if m == 1:
        return ap
    pk = p ** (table.form.k - 1)
    prev, cur = 1, ap
    for _ in range(m - 1):
        prev, cur = cur, ap * cur - pk * prev
    return cur


# -- Chebyshev weights -------------------------------------------------------


def chebyshev_u(n: int, theta: float) -> float:
    """U_n(cos theta) = sin((n+1) theta) / sin(theta), with endpoint limits."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if not 0.0 <= theta <= math.pi:
        raise ValueError("theta must lie in [0, pi]")
    if theta == 0.0:
        return float(n + 1)
    if theta == math.pi:
        return float(n + 1) if n % 2 == 0 else -float(n + 1)
    s = math.sin(theta)
    if abs(s) < 1.0e-9:
        # Three-term recurrence is stable here and avoids the 0/0 ratio.
        c = math.cos(theta)
        prev, cur = 1.0, 2.0 * c
        if n == 0:
            return prev
        for _ in range(n - 1):
            prev, cur = cur, 2.0 * c * cur - prev
        return cur
    return math.sin((n + 1) * theta) / s


def _fold_angle(phi: float) -> float:
    """Reduce an angle to [0, pi] using evenness and periodicity of cos."""
    phi = math.fmod(phi, 2.0 * math.pi)
    if phi < 0.0:
        phi += 2.0 * math.pi
    if phi > math.pi:
        phi = 2.0 * math.pi - phi
    return min(max(phi, 0.0), math.pi)


def _prime_power_split(j: int) -> tuple[int, int] | None:
    """(p, m) with j = p^m, m >= 1, or None when j is not a prime power."""
    if j < 2:
        return None
    for d in (2, 3):
        if j % d == 0:
            m = 0
            while j % d == 0:
                j //= d
                m += 1
            return (d, m) if j == 1 else None
    f = 5
    while f * f <= j:
        for d in (f, f + 2):
            if j % d == 0:
                m = 0
                while j % d == 0:
                    j //= d
                    m += 1
                return (d, m) if j == 1 else None
        f += 6
    return (j, 1)


def lambda_coefficient(j: int, n: int, chi, table: CoefficientTable) -> complex:
    """Dirichlet-series coefficient of the twisted symmetric-power log derivative.

    Returns U_n(cos(m theta_p)) chi(j) log(p) at j = p^m and 0 when j is not a
    prime power.  `chi` is any object exposing value(int) -> complex, or None
    for the trivial character.
    """
    if j < 1:
        raise ValueError("j must be positive")
    if j > table.X:
        raise ValueError(f"j={j} exceeds table limit {table.X}")
    split = _prime_power_split(j)
    if split is None:
        return 0j
    p, m = split
    if table.form.N > 1 and table.form.N % p == 0:
        raise ValueError("ramified Euler coefficients are not supported for N > 1")
    theta = table.theta(p)
    weight = chebyshev_u(n, _fold_angle(m * theta))
    chi_val = 1.0 + 0j if chi is None else complex(chi.value(j))
    return weight * chi_val * math.log(p)


# -- coefficient file import -------------------------------------------------


def load_coefficient_file(path: str, form: FormParams) -> CoefficientTable:
    """Read `n a_f(n)` pairs (ascending, complete from n=1), Deligne-validated."""
    values: list[int] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise CacheFormatError(f"line {lineno}: expected 'n a_f(n)'")
            n, a = int(parts[0]), int(parts[1])
            if n != len(values) + 1:
                raise CacheFormatError(f"line {lineno}: indices must ascend from 1 without gaps")
            values.append(a)
    if not values:
        raise CacheFormatError("empty coefficient file")
    if values[0] != 1:
        raise CacheFormatError("a_f(1) must equal 1 for a normalized form")
    for p in range(2, len(values) + 1):
        if isprime(p) and values[p - 1] ** 2 > 4 * p ** (form.k - 1):
            raise CacheFormatError(f"coefficient at prime {p} violates the Deligne bound")
    return CoefficientTable(len(values), form, exact=values)


def save_coefficient_file(table: CoefficientTable, path: str, limit: int | None = None) -> None:
    limit = table.X if limit is None else min(limit, table.X)
    with open(path, "w") as fh:
        for n in range(1, limit + 1):
            fh.write(f"{n} {table.value(n)}\n")
