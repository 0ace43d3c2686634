"""Online selection procedures.

Everything here consumes an ArrivalStream exactly once, never revokes a
selection, and only queries ranks of already-revealed elements; the
RevealedGuard turns any slip into a hard error instead of a silently
clairvoyant algorithm.  Element sets are bit masks in the oracle's id space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .bitset import bit, bits
from .curves import RankDensityCurve, downshift, find_good_curves
from .matroids import MinorView, RankOracle
from .principal import densest_set, rank_density_curve


class ProtocolViolation(RuntimeError):
    """A rank query touched an element that has not arrived yet."""


class RevealedGuard(RankOracle):
    """Restricts rank queries to revealed elements.

    ``structure_base`` stays reachable so offline curve computations on the
    revealed restriction can use kind-specific fast paths; restricting the
    base to a revealed subset cannot leak information about the rest.
    """

    def __init__(self, base: RankOracle):
        super().__init__(base.ground_size, f"{base.label}|guard")
        self.structure_base = base
        self.revealed = 0

    def reveal(self, mask: int) -> None:
        self.check_subset(mask)
        self.revealed |= mask

    def rank(self, subset: int) -> int:
        self.check_subset(subset)
        hidden = subset & ~self.revealed
        if hidden:
            raise ProtocolViolation(
                f"rank query on unrevealed elements {sorted(bits(hidden))}"
            )
        return self.structure_base.rank(subset)


def structure_base(oracle: RankOracle) -> RankOracle:
    """Unwrap any chain of guards down to the structural oracle."""
    while hasattr(oracle, "structure_base"):
        oracle = oracle.structure_base
    return oracle


@dataclass(frozen=True)
class Arrival:
    element: int
    weight: float
    in_sample: bool = False


class ArrivalStream:
    """One pass over the instance; optionally a sample phase first.

    Sample-phase elements are observable but may not be selected.  Taking an
    arrival reveals it to the attached guard as a side effect.
    """

    def __init__(self, arrivals, guard: RevealedGuard | None = None):
        arrivals = list(arrivals)
        ids = [a.element for a in arrivals]
        if len(set(ids)) != len(ids):
            raise ValueError("each element may arrive only once")
        self._arrivals = arrivals
        self._cursor = 0
        self._guard = guard

    @classmethod
    def uniform(cls, weights_by_element, rng, guard=None) -> "ArrivalStream":
        ids = sorted(weights_by_element)
        order = [ids[i] for i in rng.permutation(len(ids))]
        return cls([Arrival(e, float(weights_by_element[e])) for e in order], guard)

    @classmethod
    def with_sample_phase(cls, weights_by_element, rng, p, guard=None) -> "ArrivalStream":
        """Bernoulli(p) sample revealed first; the rest arrive in id order,
        which stands in for an adversarially fixed order chosen before the
        random weight assignment."""
        ids = sorted(weights_by_element)
        flags = {e: bool(rng.random() < p) for e in ids}
        arrivals = [Arrival(e, float(weights_by_element[e]), True) for e in ids if flags[e]]
        arrivals += [Arrival(e, float(weights_by_element[e])) for e in ids if not flags[e]]
        return cls(arrivals, guard)

    @property
    def remaining(self) -> int:
        return len(self._arrivals) - self._cursor

    def take(self) -> Arrival | None:
        if self._cursor >= len(self._arrivals):
            return None
        a = self._arrivals[self._cursor]
        self._cursor += 1
        if self._guard is not None:
            self._guard.reveal(bit(a.element))
        return a

    def take_sample_phase(self) -> list[Arrival]:
        out = []
        while self._cursor < len(self._arrivals) and self._arrivals[self._cursor].in_sample:
            out.append(self.take())
        return out


@dataclass(frozen=True)
class SelectionResult:
    """What an online run selected, plus enough trace to test each branch."""

    selected: int
    branch: str
    completed_rounds: int = 0
    picks: tuple[int, ...] = ()

    def weight(self, weights_by_element) -> float:
        return sum(weights_by_element[e] for e in bits(self.selected))


def _observation_count(horizon: int) -> int:
    if horizon <= 1:
        return 0
    return max(1, math.floor(horizon / math.e))


def classical_secretary(stream: ArrivalStream, horizon: int, eligible=None):
    """Dynkin's rule: observe, then take the first strict improvement.

    ``eligible`` filters out arrivals that may not be selected (loops, say);
    they still use up the horizon, since they did arrive.
    """
    if horizon <= 0:
        return None
    observe = _observation_count(horizon)
    best = None
    for seen in range(1, horizon + 1):
        a = stream.take()
        if a is None:
            return None
        if eligible is not None and not eligible(a.element):
            continue
        if seen <= observe:
            if best is None or a.weight > best:
                best = a.weight
        elif best is None or a.weight > best:
            return a.element
    return None


def _selectable(oracle: RankOracle):
    return lambda element: oracle.rank(bit(element)) == 1


def _without_loops(oracle: RankOracle, subset: int) -> int:
    """Drop rank-zero elements; only queries singletons inside ``subset``."""
    return sum(bit(e) for e in bits(subset) if oracle.rank(bit(e)) == 1)


class _OspMachine:
    """Round state for the online selection procedure (one chain index)."""

    def __init__(self, h: int, rank_of):
        self.h = h
        self.observe = _observation_count(h)
        self.rank_of = rank_of
        self.selected = 0
        self.size = 0
        self.completed_rounds = 0
        self.picks: list[int] = []
        self._count = 0
        self._best: float | None = None
        self._pick: int | None = None
        self._pick_weight = 0.0

    def feed(self, element: int, weight: float) -> None:
        # addability is judged against the committed set only; a pick staged
        # earlier in the round joins at the round boundary
        if self.rank_of(self.selected | bit(element)) != self.size + 1:
            return
        self._count += 1
        if self._count <= self.observe:
            if self._best is None or weight > self._best:
                self._best = weight
        elif self._pick is None and (self._best is None or weight > self._best):
            self._pick = element
            self._pick_weight = weight
        if self._count == self.h:
            self._close_round(completed=True)

    def finish(self) -> None:
        if self._count:
            self._close_round(completed=False)

    def _close_round(self, completed: bool) -> None:
        if self._pick is not None:
            self.selected |= bit(self._pick)
            self.size += 1
            self.picks.append(self._pick)
        if completed:
            self.completed_rounds += 1
        self._count = 0
        self._best = None
        self._pick = None


def osp(oracle: RankOracle, h: int, stream: ArrivalStream) -> SelectionResult:
    """Algorithm: repeated fresh secretary over the next h addable arrivals."""
    if not isinstance(h, int) or h < 1:
        raise ValueError("h must be a positive integer")
    machine = _OspMachine(h, oracle.rank)
    while (a := stream.take()) is not None:
        if a.in_sample:
            raise ValueError("osp streams must not contain sample-phase arrivals")
        machine.feed(a.element, a.weight)
    machine.finish()
    return SelectionResult(
        machine.selected, "osp", machine.completed_rounds, tuple(machine.picks)
    )


# --- chain decomposition -----------------------------------------------------


@dataclass(frozen=True)
class ChainDecomposition:
    sample: int
    lambdas: tuple[int, ...]
    densest: tuple[int, ...]  # D(S, lambda_i/beta), increasing
    spans: tuple[int, ...]
    grounds: tuple[int, ...]  # N_i, pairwise disjoint, disjoint from S
    minors: tuple[MinorView, ...]


def _grid_ints(lambdas, beta: int) -> list[int]:
    if not isinstance(beta, int) or beta < 1:
        raise ValueError("beta must be a positive integer")
    out = []
    for lam in lambdas:
        lam = Fraction(lam)
        h = lam / beta
        if h.denominator != 1 or h < 1:
            raise ValueError(f"grid density {lam} is not a positive multiple of beta")
        out.append(int(lam))
    if any(a <= b for a, b in zip(out, out[1:])):
        raise ValueError("grid densities must be strictly decreasing")
    return out


def chain_decompose(oracle: RankOracle, sample: int, lambdas, beta: int) -> ChainDecomposition:
    """Materialize the chain minors generated by a sample and a density grid."""
    oracle.check_subset(sample)
    grid = _grid_ints(lambdas, beta)
    densest: list[int] = []
    spans: list[int] = []
    grounds: list[int] = []
    minors: list[MinorView] = []
    prev_d = 0
    prev_span = 0
    for lam in grid:
        d = densest_set(oracle, sample, lam // beta)
        assert d & ~sample == 0 and prev_d & ~d == 0
        sp = oracle.span(d)
        ground = sp & ~(sample | prev_span)
        # contracting D instead of span(D) gives the same minor rank function
        minors.append(MinorView(oracle, prev_d, ground))
        densest.append(d)
        spans.append(sp)
        grounds.append(ground)
        prev_d, prev_span = d, sp
    return ChainDecomposition(
        sample, tuple(grid), tuple(densest), tuple(spans), tuple(grounds), tuple(minors)
    )


def _chain_select(oracle, sample: int, grid: list[int], beta: int, stream: ArrivalStream):
    """Route post-sample arrivals to per-index OSP machines by first span
    membership; returns (selected mask, completed rounds, picks)."""
    densest: list[int] = []
    dranks: list[int] = []
    machines: list[_OspMachine] = []
    prev_d = 0
    prev_rank = 0
    for lam in grid:
        d = densest_set(oracle, sample, lam // beta)
        r = oracle.rank(d)
        contract, contract_rank = prev_d, prev_rank

        def rank_of(mask, _c=contract, _cr=contract_rank):
            return oracle.rank(mask | _c) - _cr

        densest.append(d)
        dranks.append(r)
        machines.append(_OspMachine(lam, rank_of))
        prev_d, prev_rank = d, r

    while (a := stream.take()) is not None:
        if a.in_sample:
            raise ValueError("chain streams must not contain sample-phase arrivals")
        e = bit(a.element)
        for i, (d, r) in enumerate(zip(densest, dranks)):
            if oracle.rank(d | e) == r:  # e lies in span(D_i)
                machines[i].feed(a.element, a.weight)
                break

    selected = 0
    rounds = 0
    picks: list[int] = []
    for m in machines:
        m.finish()
        selected |= m.selected
        rounds += m.completed_rounds
        picks.extend(m.picks)
    return selected, rounds, picks


# --- layered selection procedures -------------------------------------------


def _validate_power_curve(curve: RankDensityCurve, beta: int) -> None:
    if not isinstance(beta, int) or beta < 3:
        raise ValueError("beta must be an integer >= 3")
    for d in curve.densities:
        if d.denominator != 1:
            raise ValueError("curve densities must be integers")
        v = int(d)
        while v % beta == 0:
            v //= beta
        if v != 1:
            raise ValueError(f"curve density {d} is not a power of {beta}")


def grp_run(
    oracle: RankOracle,
    curve: RankDensityCurve,
    beta: int,
    stream: ArrivalStream,
    rng,
    *,
    forced_branch: str | None = None,
) -> SelectionResult:
    """Mix of chain selection (12/15), a single secretary run (2/15), and a
    greedy-flavored OSP with h=1 (1/15), driven by a conditioned curve."""
    _validate_power_curve(curve, beta)
    if forced_branch is None:
        u = rng.random()
        branch = "chain" if u < 12 / 15 else ("secretary" if u < 14 / 15 else "osp1")
    else:
        branch = forced_branch
    if branch == "secretary":
        e = classical_secretary(stream, stream.remaining, _selectable(oracle))
        return SelectionResult(0 if e is None else bit(e), "grp:secretary")
    if branch == "osp1":
        inner = osp(oracle, 1, stream)
        return SelectionResult(inner.selected, "grp:osp1", inner.completed_rounds, inner.picks)
    if branch != "chain":
        raise ValueError(f"unknown branch {branch!r}")

    k = int(rng.binomial(stream.remaining, 0.5))
    sample = 0
    for _ in range(k):
        sample |= bit(stream.take().element)
    grid = [int(d) for d in curve.densities if d > 1]
    if not grid:
        return SelectionResult(0, "grp:chain")
    selected, rounds, picks = _chain_select(oracle, sample, grid, beta, stream)
    return SelectionResult(selected, "grp:chain", rounds, tuple(picks))


def aided_run(
    oracle: RankOracle,
    rho_tilde: RankDensityCurve,
    alpha: int,
    beta: int,
    stream: ArrivalStream,
    rng,
    *,
    forced_branch: str | None = None,
    forced_curve: int | None = None,
) -> SelectionResult:
    """Condition the approximate curve, pick one of its four splits, run grp."""
    bundle = find_good_curves(rho_tilde, alpha, beta)
    j = int(rng.integers(4)) if forced_curve is None else forced_curve
    inner = grp_run(
        oracle, bundle.splits[j], beta, stream, rng, forced_branch=forced_branch
    )
    return SelectionResult(
        inner.selected, f"aided[{j}]:{inner.branch}", inner.completed_rounds, inner.picks
    )


def main_run(
    oracle: RankOracle,
    stream: ArrivalStream,
    rng,
    *,
    alpha: int = 288,
    beta: int = 9,
    forced_branch: str | None = None,
) -> SelectionResult:
    """The headline procedure: secretary half the time, otherwise estimate the
    curve from a random half and run the curve-aided machinery on the rest."""
    n = stream.remaining
    if n == 0:
        return SelectionResult(0, "main:empty")
    if forced_branch is None:
        branch = "secretary" if rng.random() < 0.5 else "dense"
    else:
        branch = "secretary" if forced_branch == "secretary" else "dense"
    if branch == "secretary":
        e = classical_secretary(stream, n, _selectable(oracle))
        return SelectionResult(0 if e is None else bit(e), "main:secretary")

    k = int(rng.binomial(n, 0.5))
    sample = 0
    for _ in range(k):
        sample |= bit(stream.take().element)
    live = _without_loops(oracle, sample)  # loops never carry rank or weight
    base = structure_base(oracle)
    rho_sample = (
        rank_density_curve(MinorView(base, 0, live)) if live else RankDensityCurve()
    )
    rho_tilde = downshift(rho_sample, alpha, beta)
    inner_forced = None if forced_branch in (None, "dense") else forced_branch
    inner = aided_run(
        oracle,
        rho_tilde,
        alpha * alpha,
        beta * beta,
        stream,
        rng,
        forced_branch=inner_forced,
    )
    return SelectionResult(
        inner.selected, f"main:{inner.branch}", inner.completed_rounds, inner.picks
    )


def adversarial_sample_run(
    oracle: RankOracle,
    make_stream,
    rng,
    *,
    alpha: int = 288,
    beta: int = 9,
    forced_branch: str | None = None,
) -> SelectionResult:
    """Sample-then-adversarial-order variant of the main procedure.

    ``make_stream(p)`` must return a fresh stream whose Bernoulli(p) sample
    phase arrives first and is unselectable.
    """
    e_const = math.e
    if forced_branch is None:
        u = rng.random()
        if u < 1 / 2:
            branch = "threshold-e"
        elif u < 1 / 2 + 1 / 15:
            branch = "threshold-2e"
        elif u < 1 / 2 + 1 / 15 + 1 / 30:
            branch = "osp1"
        else:
            branch = "chain"
    else:
        branch = forced_branch

    if branch == "threshold-e":
        stream = make_stream(1 / e_const)
        threshold = max((a.weight for a in stream.take_sample_phase()), default=None)
        return SelectionResult(_first_above(stream, threshold, oracle), "adv:threshold-e")

    if branch == "threshold-2e":
        stream = make_stream((e_const + 1) / (2 * e_const))
        observed = stream.take_sample_phase()
        thinned = [a for a in observed if rng.random() < 1 / (e_const + 1)]
        threshold = max((a.weight for a in thinned), default=None)
        return SelectionResult(_first_above(stream, threshold, oracle), "adv:threshold-2e")

    if branch == "osp1":
        stream = make_stream(0.5)
        stream.take_sample_phase()
        inner = osp(oracle, 1, stream)
        return SelectionResult(inner.selected, "adv:osp1", inner.completed_rounds, inner.picks)

    if branch != "chain":
        raise ValueError(f"unknown branch {branch!r}")

    stream = make_stream(0.75)
    observed = stream.take_sample_phase()
    s_curve = 0  # plays the curve-estimation sample of the random-order run
    s_chain = 0  # plays the in-run sample that generates the chain
    for a in observed:
        if rng.random() < 2 / 3:
            s_curve |= bit(a.element)
        else:
            s_chain |= bit(a.element)
    s_curve = _without_loops(oracle, s_curve)
    base = structure_base(oracle)
    rho = rank_density_curve(MinorView(base, 0, s_curve)) if s_curve else RankDensityCurve()
    rho_tilde = downshift(rho, alpha, beta)
    bundle = find_good_curves(rho_tilde, alpha * alpha, beta * beta)
    j = int(rng.integers(4))
    grid = [int(d) for d in bundle.splits[j].densities if d > 1]
    if not grid:
        return SelectionResult(0, f"adv:chain[{j}]")
    selected, rounds, picks = _chain_select(
        oracle, s_chain, grid, beta * beta, stream
    )
    return SelectionResult(selected, f"adv:chain[{j}]", rounds, tuple(picks))


def _first_above(stream: ArrivalStream, threshold, oracle: RankOracle) -> int:
    selectable = _selectable(oracle)
    while (a := stream.take()) is not None:
        if a.in_sample or not selectable(a.element):
            continue
        if threshold is None or a.weight > threshold:
            return bit(a.element)
    return 0
