"""Finite abelian group arithmetic and heuristic group distributions.

Groups live in canonical invariant-factor form (AbelianGroup) or as a
prime plus exponent partition (PGroup, one primary component). The
distribution machinery covers the 1/|Aut(G)| family on q-groups, its
1/(|G|^k |Aut(G)|) variant over all finite abelian groups, and the
statistics used to compare empirical samples against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping, Union


class UndefinedRatioError(ValueError):
    """Raised when a ratio table is requested but no trivial group was counted."""


def is_prime(m: int) -> bool:
    """Deterministic Miller-Rabin, valid far beyond 64-bit inputs."""
    if m < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if m % p == 0:
            return m == p
    d = m - 1
    s = (d & -d).bit_length() - 1
    d >>= s
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, m)
        if x in (1, m - 1):
            continue
        for _ in range(s - 1):
            x = x * x % m
            if x == m - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class AbelianGroup:
    """Finite abelian group as invariant factors d_1 | d_2 | ..., each >= 2."""

    invariant_factors: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        fs = tuple(int(v) for v in self.invariant_factors)
        object.__setattr__(self, "invariant_factors", fs)
        for v in fs:
            if v < 2:
                raise ValueError(f"invariant factor {v} < 2")
        for a, b in zip(fs, fs[1:]):
            if b % a:
                raise ValueError(f"broken divisibility chain: {a} does not divide {b}")

    @property
    def is_trivial(self) -> bool:
        return not self.invariant_factors

    def __str__(self) -> str:
        return format_group(self)


TRIVIAL_GROUP = AbelianGroup(())


@dataclass(frozen=True)
class PGroup:
    """Abelian q-group given by a weakly decreasing partition of exponents."""

    q: int
    partition: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not is_prime(self.q):
            raise ValueError(f"{self.q} is not prime")
        part = tuple(int(v) for v in self.partition)
        object.__setattr__(self, "partition", part)
        if any(v < 1 for v in part):
            raise ValueError(f"partition entries must be >= 1: {part}")
        if any(a < b for a, b in zip(part, part[1:])):
            raise ValueError(f"partition not weakly decreasing: {part}")

    @property
    def is_trivial(self) -> bool:
        return not self.partition

    def order(self) -> int:
        return self.q ** sum(self.partition)


Group = Union[AbelianGroup, PGroup]


def group_order(g: Group) -> int:
    if isinstance(g, PGroup):
        return g.order()
    out = 1
    for v in g.invariant_factors:
        out *= v
    return out


def log_order(g: Group) -> float:
    if isinstance(g, PGroup):
        return sum(g.partition) * math.log(g.q)
    return float(sum(math.log(v) for v in g.invariant_factors))


def format_group(g: AbelianGroup) -> str:
    """Group literal: invariant factors ascending, e.g. "Z/2 x Z/4"; trivial is "1"."""
    if g.is_trivial:
        return "1"
    return " x ".join(f"Z/{v}" for v in g.invariant_factors)


def parse_group(text: str) -> AbelianGroup:
    text = text.strip()
    if text == "1":
        return TRIVIAL_GROUP
    factors = []
    for part in text.split("x"):
        part = part.strip()
        if not part.startswith("Z/"):
            raise ValueError(f"bad group literal component {part!r}")
        factors.append(int(part[2:]))
    return AbelianGroup(tuple(factors))


def sylow(g: AbelianGroup, q: int) -> PGroup:
    """The q-primary component, as a partition of q-adic valuations."""
    if not is_prime(q):
        raise ValueError(f"{q} is not prime")
    exps = []
    for v in g.invariant_factors:
        e = 0
        while v % q == 0:
            v //= q
            e += 1
        if e:
            exps.append(e)
    return PGroup(q, tuple(sorted(exps, reverse=True)))


def abelian_from_primary(parts: Iterable[PGroup]) -> AbelianGroup:
    """Assemble an AbelianGroup from primary components (one PGroup per prime)."""
    by_prime: dict[int, tuple[int, ...]] = {}
    for pg in parts:
        if pg.is_trivial:
            continue
        if pg.q in by_prime:
            raise ValueError(f"duplicate prime {pg.q}")
        by_prime[pg.q] = pg.partition
    if not by_prime:
        return TRIVIAL_GROUP
    width = max(len(p) for p in by_prime.values())
    factors = [1] * width
    for q, part in by_prime.items():
        # align largest exponents with the last invariant factor
        padded = (0,) * (width - len(part)) + tuple(sorted(part))
        for i, e in enumerate(padded):
            factors[i] *= q**e
    return AbelianGroup(tuple(v for v in factors if v > 1))


def factorize(m: int, cap: int = 10**6) -> dict[int, int]:
    """Prime factorization by trial division; refuses composites beyond cap."""
    if m < 1:
        raise ValueError(f"cannot factor {m}")
    out: dict[int, int] = {}
    for p in range(2, cap + 1):
        if p * p > m:
            break
        while m % p == 0:
            out[p] = out.get(p, 0) + 1
            m //= p
    if m > 1:
        if not is_prime(m):
            raise ValueError(f"cofactor {m} not factorable by trial division to {cap}")
        out[m] = out.get(m, 0) + 1
    return out


def primary_decomposition(g: AbelianGroup) -> list[PGroup]:
    exps: dict[int, list[int]] = {}
    for v in g.invariant_factors:
        for p, e in factorize(v).items():
            exps.setdefault(p, []).append(e)
    return [
        PGroup(p, tuple(sorted(es, reverse=True))) for p, es in sorted(exps.items())
    ]


def aut_order(g: Group) -> int:
    """|Aut(g)| by the closed form for abelian q-groups, multiplicative over primes."""
    if isinstance(g, PGroup):
        return _aut_order_partition(g.q, g.partition)
    out = 1
    for pg in primary_decomposition(g):
        out *= _aut_order_partition(pg.q, pg.partition)
    return out


def _aut_order_partition(p: int, partition: tuple[int, ...]) -> int:
    # For G = prod Z/p^{e_i} with e_1 <= ... <= e_n let d_k (c_k) be the
    # largest (smallest) 1-based index l with e_l = e_k. Then |Aut(G)| =
    # prod_k (p^{d_k} - p^{k-1}) * prod_j p^{e_j (n - d_j)} * prod_i p^{(e_i - 1)(n - c_i + 1)}.
    e = sorted(partition)
    n = len(e)
    if n == 0:
        return 1
    d = [max(l for l in range(n) if e[l] == e[k]) + 1 for k in range(n)]
    c = [min(l for l in range(n) if e[l] == e[k]) + 1 for k in range(n)]
    out = 1
    for k in range(n):
        out *= p ** d[k] - p**k
    for j in range(n):
        out *= p ** (e[j] * (n - d[j]))
    for i in range(n):
        out *= p ** ((e[i] - 1) * (n - c[i] + 1))
    return out


# ---------------------------------------------------------------------------
# Distributions.


@dataclass(frozen=True)
class GroupDistribution:
    """Group-valued probability weights plus explicit truncation residual."""

    weights: Mapping[Group, float]
    residual: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", dict(self.weights))
        if self.residual < -1e-12:
            raise ValueError(f"negative residual {self.residual}")
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("negative weight")
        total = sum(self.weights.values()) + self.residual
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights + residual = {total}, expected 1")

    @classmethod
    def from_counts(cls, counts: Mapping[Group, int]) -> "GroupDistribution":
        total = sum(counts.values())
        if total <= 0:
            raise ValueError("empty count table")
        return cls({g: c / total for g, c in counts.items() if c}, 0.0)


def cl_normalizer(q: int) -> float:
    """prod_{k>=1} (1 - q^{-k}), truncated once factors pass 1 - 1e-15."""
    if not is_prime(q):
        raise ValueError(f"{q} is not prime")
    out = 1.0
    k = 1
    while True:
        f = 1.0 - q**-k if q**-k > 0 else 1.0
        out *= f
        if f > 1.0 - 1e-15:
            return out
        k += 1


def cl_probability(h: PGroup) -> float:
    return cl_normalizer(h.q) / aut_order(h)


@lru_cache(maxsize=None)
def partitions(s: int) -> tuple[tuple[int, ...], ...]:
    """All weakly decreasing partitions of s (s = 0 gives the empty partition)."""

    def gen(rest: int, largest: int):
        if rest == 0:
            yield ()
            return
        for first in range(min(rest, largest), 0, -1):
            for tail in gen(rest - first, first):
                yield (first,) + tail

    return tuple(gen(s, s)) if s else ((),)


def cl_distribution(q: int, residual_target: float = 1e-6, max_size: int = 64) -> GroupDistribution:
    """The 1/|Aut| distribution on q-groups, truncated by group order."""
    norm = cl_normalizer(q)
    weights: dict[Group, float] = {}
    acc = 0.0
    for s in range(max_size + 1):
        for lam in partitions(s):
            w = norm / _aut_order_partition(q, lam)
            weights[PGroup(q, lam)] = w
            acc += w
        if 1.0 - acc < residual_target:
            return GroupDistribution(weights, max(1.0 - acc, 0.0))
    raise ValueError(f"residual {1.0 - acc} above target at size cap {max_size}")


@lru_cache(maxsize=None)
def zeta(s: int) -> float:
    """Riemann zeta at integer s >= 2 by direct summation plus integral tail."""
    if s < 2:
        raise ValueError(f"need s >= 2, got {s}")
    if s > 55:
        return 1.0 + 2.0**-s
    n_terms = 100_000 if s == 2 else 20_000 if s == 3 else 2_000
    out = sum(k**-float(s) for k in range(1, n_terms + 1))
    # Euler-Maclaurin tail: integral term plus half the next summand
    out += n_terms ** (1.0 - s) / (s - 1.0) + 0.5 * n_terms ** (-float(s))
    return out


@lru_cache(maxsize=None)
def _zeta_product_inv(kstart: int) -> float:
    """prod_{i>=kstart} zeta(i)^{-1}."""
    out = 1.0
    i = kstart
    while True:
        z = zeta(i)
        out /= z
        if z - 1.0 < 1e-16:
            return out
        i += 1


def lambda_k_normalizer(k: int) -> float:
    """prod_{i=k+1}^{inf} zeta(i)^{-1}."""
    if k < 1:
        raise ValueError("k must be >= 1: the k = 0 weights are not summable")
    return _zeta_product_inv(k + 1)


def lambda_k(g: AbelianGroup, k: int) -> float:
    """Probability of g under the weights 1/(|G|^k |Aut(G)|), normalized."""
    norm = lambda_k_normalizer(k)
    denom = group_order(g) ** k * aut_order(g)
    if denom.bit_length() > 900:
        return norm * math.exp(-(k * log_order(g) + math.log(aut_order(g))))
    return norm / denom


def _smallest_prime_factors(limit: int) -> list[int]:
    spf = list(range(limit + 1))
    for p in range(2, int(limit**0.5) + 1):
        if spf[p] == p:
            for m in range(p * p, limit + 1, p):
                if spf[m] == m:
                    spf[m] = p
    return spf


_LAMBDA_CACHE: dict[tuple[int, float], GroupDistribution] = {}


def _lambda_enumerate(k: int, bound: int) -> tuple[dict[Group, float], float]:
    """Weights of every group of order <= bound under lambda_k, plus their sum."""
    norm = lambda_k_normalizer(k)
    spf = _smallest_prime_factors(bound)
    weights: dict[Group, float] = {AbelianGroup(()): norm}
    acc = norm
    for n in range(2, bound + 1):
        exps: dict[int, int] = {}
        phi = 1
        m = n
        while m > 1:
            p = spf[m]
            e = 1
            m //= p
            while m % p == 0:
                e += 1
                m //= p
            exps[p] = e
            phi *= p**e - p ** (e - 1)
        nk = n**k
        w = norm / (nk * phi)
        weights[AbelianGroup((n,))] = w
        acc += w
        if max(exps.values()) > 1:
            primes = sorted(exps)
            for combo in product(*(partitions(exps[p]) for p in primes)):
                if all(len(lam) == 1 for lam in combo):
                    continue  # the cyclic group, handled above
                aut = 1
                for p, lam in zip(primes, combo):
                    aut *= _aut_order_partition(p, lam)
                g = abelian_from_primary(
                    PGroup(p, lam) for p, lam in zip(primes, combo)
                )
                w = norm / (nk * aut)
                weights[g] = w
                acc += w
    return weights, acc


def lambda_distribution(
    k: int, residual_target: float = 1e-6, max_order: int = 1_200_000
) -> GroupDistribution:
    """The lambda_k distribution over all finite abelian groups, by order.

    Enumeration proceeds in stages so that fast-converging k stop early;
    k = 1 needs roughly 1/residual_target orders and takes a while.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    key = (k, residual_target, max_order)
    if key in _LAMBDA_CACHE:
        return _LAMBDA_CACHE[key]
    bound = min(10_000, max_order)
    while True:
        weights, acc = _lambda_enumerate(k, bound)
        if 1.0 - acc < residual_target:
            dist = GroupDistribution(weights, max(1.0 - acc, 0.0))
            _LAMBDA_CACHE[key] = dist
            return dist
        if bound >= max_order:
            raise ValueError(
                f"residual {1.0 - acc} above target at order cap {max_order}"
            )
        bound = min(bound * 11, max_order)


def expected_phases() -> float:
    """2 (sum_{i>=1} prod_{j<i} p_j) - 1 with p_j = 1 - prod_{k>j} zeta(k)^{-1}."""
    total = 0.0
    term = 1.0
    j = 1
    while term >= 1e-10:
        total += term
        term *= 1.0 - _zeta_product_inv(j + 1)
        j += 1
    return 2.0 * total - 1.0


def tv_distance(emp: GroupDistribution, theo: GroupDistribution) -> float:
    """Total variation; each distribution's residual counts as unmatched mass."""
    support = set(emp.weights) | set(theo.weights)
    out = sum(abs(emp.weights.get(g, 0.0) - theo.weights.get(g, 0.0)) for g in support)
    out += abs(emp.residual - theo.residual)
    return 0.5 * out


def ratio_table(counts: Mapping[Group, int]) -> dict[Group, float]:
    """count(trivial)/count(G) for every nontrivial G with a positive count."""
    trivial_count = 0
    for g, c in counts.items():
        if g.is_trivial:
            trivial_count += c
    if trivial_count <= 0:
        raise UndefinedRatioError("no trivial-group observations; ratios undefined")
    return {
        g: trivial_count / c for g, c in counts.items() if c and not g.is_trivial
    }
