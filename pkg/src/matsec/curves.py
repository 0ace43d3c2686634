"""Rank-density curves and weight functionals.

A curve is a non-increasing, left-continuous step function of a rank
coordinate, zero beyond its support.  Density values on the support are at
least one.  All curve arithmetic is exact (fractions.Fraction); the only
floating point lives in the large-n evaluation of ``eta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

_EXACT_MAX_N = 64


def _as_fraction(x) -> Fraction:
    if isinstance(x, Rational):
        return Fraction(x)
    raise TypeError(f"expected an exact number, got {type(x).__name__}")


class WeightProfile:
    """The adversary's multiset of non-negative weights."""

    def __init__(self, weights):
        ws = tuple(weights)
        if not ws:
            raise ValueError("need at least one weight")
        for w in ws:
            if not (w >= 0) or (isinstance(w, float) and not math.isfinite(w)):
                raise ValueError(f"weights must be finite and non-negative, got {w!r}")
        self.weights = ws
        self.sorted_ascending = tuple(sorted(ws))
        self.w_max = self.sorted_ascending[-1]
        self.n = len(ws)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"WeightProfile(n={self.n}, w_max={self.w_max})"


def _eta_exact(profile: WeightProfile, k: int) -> Fraction:
    n = profile.n
    denom = math.comb(n, k)
    total = Fraction(0)
    for i in range(k, n + 1):  # 1-indexed position in ascending order
        w = profile.sorted_ascending[i - 1]
        total += Fraction(math.comb(i - 1, k - 1), denom) * Fraction(w)
    return total


def _log_comb(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def _eta_float(profile: WeightProfile, k: int) -> float:
    n = profile.n
    log_denom = _log_comb(n, k)
    total = 0.0
    for i in range(k, n + 1):
        w = float(profile.sorted_ascending[i - 1])
        if w:
            total += math.exp(_log_comb(i - 1, k - 1) - log_denom) * w
    return total


def eta(profile: WeightProfile, a):
    """Expected maximum of ``floor(a)`` weights drawn without replacement.

    Zero when ``a < 1``.  Exact rational for profiles of at most 64 weights,
    floating point above (binomial coefficients overflow doubles long before
    the profile sizes the harness uses).
    """
    if a < 0 or a > profile.n:
        raise ValueError(f"sample size {a} outside [0, {profile.n}]")
    k = math.floor(a)
    if k < 1:
        return Fraction(0)
    if profile.n <= _EXACT_MAX_N:
        return _eta_exact(profile, k)
    return _eta_float(profile, k)


@dataclass(frozen=True)
class CurveStep:
    rank_end: Fraction
    density: Fraction


class RankDensityCurve:
    """Step list ``(rank_end_i, density_i)``: the curve takes value
    ``density_i`` on ``(rank_end_{i-1}, rank_end_i]`` and 0 beyond the last end.
    """

    def __init__(self, steps=()):
        norm = []
        prev_end = Fraction(0)
        prev_density = None
        for rank_end, density in steps:
            rank_end = _as_fraction(rank_end)
            density = _as_fraction(density)
            if rank_end <= prev_end:
                raise ValueError("rank ends must be positive and strictly increasing")
            if density < 1:
                raise ValueError("densities on the support must be at least 1")
            if prev_density is not None and density >= prev_density:
                raise ValueError("densities must be strictly decreasing")
            norm.append(CurveStep(rank_end, density))
            prev_end, prev_density = rank_end, density
        self.steps = tuple(norm)

    @property
    def is_zero(self) -> bool:
        return not self.steps

    @property
    def support_end(self) -> Fraction:
        return self.steps[-1].rank_end if self.steps else Fraction(0)

    @property
    def densities(self) -> tuple[Fraction, ...]:
        return tuple(s.density for s in self.steps)

    @property
    def rank_ends(self) -> tuple[Fraction, ...]:
        return tuple(s.rank_end for s in self.steps)

    def value_at(self, t) -> Fraction:
        t = _as_fraction(t)
        if t <= 0:
            raise ValueError("curves are defined for t > 0")
        for s in self.steps:
            if t <= s.rank_end:
                return s.density
        return Fraction(0)

    def max_rank_at(self, lam) -> Fraction:
        """Largest t with value(t) >= lam; 0 if the curve never reaches lam."""
        lam = _as_fraction(lam)
        best = Fraction(0)
        for s in self.steps:
            if s.density >= lam:
                best = s.rank_end
        return best

    def __eq__(self, other) -> bool:
        return isinstance(other, RankDensityCurve) and self.steps == other.steps

    def __hash__(self) -> int:
        return hash(self.steps)

    def __repr__(self) -> str:
        inner = ", ".join(f"({s.rank_end}, {s.density})" for s in self.steps)
        return f"RankDensityCurve([{inner}])"

    def to_json_obj(self) -> list[dict]:
        out = []
        for s in self.steps:
            end = int(s.rank_end) if s.rank_end.denominator == 1 else str(s.rank_end)
            out.append(
                {
                    "rank_end": end,
                    "density_p": s.density.numerator,
                    "density_q": s.density.denominator,
                }
            )
        return out

    @classmethod
    def from_json_obj(cls, obj) -> "RankDensityCurve":
        steps = []
        for item in obj:
            steps.append(
                (Fraction(item["rank_end"]), Fraction(item["density_p"], item["density_q"]))
            )
        return cls(steps)


ZERO_CURVE = RankDensityCurve()


def _merged_steps(pieces) -> list[tuple[Fraction, Fraction]]:
    """Collapse consecutive equal-density pieces and drop zero-density ones."""
    out: list[tuple[Fraction, Fraction]] = []
    for end, dens in pieces:
        if dens == 0:
            continue
        if out and out[-1][1] == dens:
            out[-1] = (end, dens)
        else:
            out.append((end, dens))
    return out


def curve_value_F(profile: WeightProfile, curve: RankDensityCurve):
    """Sum over steps of (width in rank) x eta(density)."""
    total = Fraction(0)
    prev = Fraction(0)
    for s in curve.steps:
        if s.density > profile.n:
            raise ValueError(
                f"density {s.density} exceeds the profile size {profile.n}"
            )
        total += (s.rank_end - prev) * eta(profile, s.density)
        prev = s.rank_end
    return total


def downshift(curve: RankDensityCurve, alpha, beta) -> RankDensityCurve:
    """Compress the rank axis by ``alpha``, divide densities by ``beta``,
    and round values that land in (0, 1) up to 1.

    The head interval (0, 1] takes the constant value derived from the
    curve at rank coordinate ``alpha``.
    """
    alpha = _as_fraction(alpha)
    beta = _as_fraction(beta)
    if alpha < 1 or beta < 1:
        raise ValueError("alpha and beta must be at least 1")

    def clamp(phi: Fraction) -> Fraction:
        return Fraction(1) if 0 < phi < 1 else phi

    pieces: list[tuple[Fraction, Fraction]] = []
    head = clamp(curve.value_at(alpha) / beta)
    if head > 0:
        pieces.append((Fraction(1), head))
        for s in curve.steps:
            t_end = s.rank_end / alpha
            if t_end <= 1:
                continue
            pieces.append((t_end, clamp(s.density / beta)))
    return RankDensityCurve(_merged_steps(pieces))


def is_approximation(candidate: RankDensityCurve, reference: RankDensityCurve, alpha, beta) -> bool:
    """True iff ``candidate`` is sandwiched between ``reference`` and its
    (alpha, beta)-downshift, pointwise."""
    low = downshift(reference, alpha, beta)
    ends = sorted(set(candidate.rank_ends) | set(reference.rank_ends) | set(low.rank_ends))
    probes = []
    prev = Fraction(0)
    for e in ends:
        probes.append(e)
        if e > prev:
            probes.append(prev + (e - prev) / 2)  # just right of the previous breakpoint
        prev = e
    probes.append(prev + 1)
    for t in probes:
        if t <= 0:
            continue
        c = candidate.value_at(t)
        if not (low.value_at(t) <= c <= reference.value_at(t)):
            return False
    return True


@dataclass(frozen=True)
class GoodCurveBundle:
    """A curve conditioned onto a sparse density grid, plus its four-way split."""

    conditioned: RankDensityCurve
    splits: tuple[RankDensityCurve, RankDensityCurve, RankDensityCurve, RankDensityCurve]
    grid: tuple[Fraction, ...]


def _power_floor(value: Fraction, beta: int) -> Fraction:
    """Largest power of beta (including beta^0 = 1) that is <= value."""
    p = Fraction(1)
    while p * beta <= value:
        p *= beta
    return p


def _rounded_onto(curve: RankDensityCurve, levels, truncate_at: Fraction) -> RankDensityCurve:
    """Round every density down to the largest level <= it, cut at truncate_at."""
    lv = sorted(levels)
    pieces = []
    for s in curve.steps:
        end = min(s.rank_end, truncate_at)
        if end <= 0 or (pieces and end <= pieces[-1][0]):
            continue
        snapped = None
        for g in lv:
            if g <= s.density:
                snapped = g
        if snapped is None:
            break
        pieces.append((end, snapped))
        if s.rank_end >= truncate_at:
            break
    return RankDensityCurve(_merged_steps(pieces))


def find_good_curves(curve: RankDensityCurve, alpha, beta: int) -> GoodCurveBundle:
    """Condition a curve for chain-style online selection.

    Rounds densities down to powers of ``beta``, selects a geometrically
    spaced density grid (each next grid density is the rounded curve's value
    at ``alpha`` times the rank extent of the previous one), rounds the curve
    down onto the grid, and splits the grid into four residue classes.  Empty
    classes fall back to the all-ones curve on the conditioned support.
    """
    if not isinstance(beta, int) or beta < 3:
        raise ValueError("beta must be an integer >= 3")
    alpha = _as_fraction(alpha)
    if alpha < 24:
        raise ValueError("alpha must be at least 24")
    if curve.is_zero:
        z = ZERO_CURVE
        return GoodCurveBundle(z, (z, z, z, z), ())

    rounded = RankDensityCurve(
        _merged_steps((s.rank_end, _power_floor(s.density, beta)) for s in curve.steps)
    )
    grid = [rounded.densities[0]]
    while True:
        t = alpha * rounded.max_rank_at(grid[-1])
        nxt = rounded.value_at(t) if t <= rounded.support_end else Fraction(0)
        if nxt < 1:
            break
        if nxt >= grid[-1]:
            raise AssertionError("grid densities must decrease strictly")
        grid.append(nxt)

    tau = rounded.max_rank_at(grid[-1])
    conditioned = _rounded_onto(rounded, grid, tau)

    splits = []
    for i in range(4):
        cls = grid[i::4]
        if not cls:
            splits.append(RankDensityCurve([(tau, Fraction(1))]))
        else:
            tau_i = conditioned.max_rank_at(min(cls))
            splits.append(_rounded_onto(conditioned, cls, tau_i))
    return GoodCurveBundle(conditioned, tuple(splits), tuple(grid))
