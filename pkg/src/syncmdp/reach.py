"""State-based primitives: predecessor fixpoints, reach/safety regions,
and the two counter-product constructions.

Everything here works on supports only; probabilities are copied into the
products but never consulted by a decision.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .model import (
    DEFAULT_SEQUENCE_CAP,
    Mdp,
    ModelError,
    ResourceLimitError,
    is_subset,
    iter_bits,
    state_cap,
)


@dataclass(frozen=True)
class PreSequence:
    """Ultimately periodic sequence of predecessor sets.

    `masks` holds the first `prefix_len + period` distinct sets; index `n`
    beyond that folds back into the periodic part.
    """

    masks: tuple
    prefix_len: int
    period: int
    names: tuple

    def mask_at(self, n: int) -> int:
        if n < len(self.masks):
            return self.masks[n]
        return self.masks[self.prefix_len + (n - self.prefix_len) % self.period]

    def set_at(self, n: int) -> frozenset:
        return _names_of(self.names, self.mask_at(n))

    @property
    def sets(self) -> tuple:
        return tuple(_names_of(self.names, mask) for mask in self.masks)

    def __len__(self):
        return len(self.masks)


@dataclass(frozen=True)
class PrePairSequence:
    """Ultimately periodic sequence of nested predecessor-set pairs."""

    pairs: tuple
    prefix_len: int
    period: int
    names: tuple

    def pair_at(self, n: int) -> tuple:
        if n < len(self.pairs):
            return self.pairs[n]
        return self.pairs[self.prefix_len + (n - self.prefix_len) % self.period]


def _names_of(names, mask):
    return frozenset(names[i] for i in iter_bits(mask))


def detect_cycle(first, step, cap=DEFAULT_SEQUENCE_CAP):
    """Iterate `step` from `first` until a value repeats.

    Returns (values, prefix_len, period).  Raises ResourceLimitError once
    more than `cap` distinct values appear.
    """
    values = []
    index = {}
    current = first
    while current not in index:
        if len(values) >= cap:
            raise ResourceLimitError(
                f"predecessor sequence exceeded {cap} distinct sets"
            )
        index[current] = len(values)
        values.append(current)
        current = step(current)
    k = index[current]
    return values, k, len(values) - k


def pre_mask(m: Mdp, t: int) -> int:
    """One-step predecessor mask, memoized per MDP."""
    cached = m._pre_cache.get(t)
    if cached is not None:
        return cached
    result = 0
    for qi in range(m.n):
        for row in m._succ[qi]:
            if row and is_subset(row, t):
                result |= 1 << qi
                break
    m._pre_cache[t] = result
    return result


def pre(m: Mdp, t: Iterable[str]) -> frozenset:
    """States having an action whose every successor lies in `t`."""
    return m.names_of(pre_mask(m, m.mask_of(t)))


def iterate_pre(m: Mdp, t: Iterable[str] | int) -> PreSequence:
    """The predecessor sequence of `t` up to its first repetition."""
    mask = t if isinstance(t, int) else m.mask_of(t)
    cached = m._seq_cache.get(mask)
    if cached is None:
        masks, k, r = detect_cycle(mask, lambda x: pre_mask(m, x))
        cached = PreSequence(tuple(masks), k, r, m.states)
        m._seq_cache[mask] = cached
    return cached


def iterate_pre_pair(m: Mdp, t, u) -> PrePairSequence:
    """Predecessor sequence on nested pairs (Pre^i(t), Pre^i(u))."""
    t_mask = t if isinstance(t, int) else m.mask_of(t)
    u_mask = u if isinstance(u, int) else m.mask_of(u)
    if not is_subset(t_mask, u_mask):
        raise ModelError("iterate_pre_pair requires t to be a subset of u")
    pairs, k, r = detect_cycle(
        (t_mask, u_mask), lambda p: (pre_mask(m, p[0]), pre_mask(m, p[1]))
    )
    return PrePairSequence(tuple(pairs), k, r, m.states)


# -- winning regions -------------------------------------------------------


def sure_reach_mask(m: Mdp, target: int) -> int:
    """Least fixpoint of X -> target | Pre(X): sure reachability."""
    region = target
    while True:
        grown = region | pre_mask(m, region)
        if grown == region:
            return region
        region = grown


def sure_reach_region(m: Mdp, target: Iterable[str]) -> frozenset:
    """States from which every path under some strategy reaches `target`."""
    return m.names_of(sure_reach_mask(m, m.mask_of(target)))


def sure_reach_strategy(m: Mdp, target: int):
    """Attractor region plus, per state, one action that makes progress."""
    layers = [target]
    region = target
    while True:
        grown = region | pre_mask(m, region)
        if grown == region:
            break
        layers.append(grown & ~region)
        region = grown
    choice: dict = {}
    seen = target
    for layer in layers[1:]:
        for qi in iter_bits(layer):
            for ai, row in enumerate(m._succ[qi]):
                if row and is_subset(row, seen):
                    choice[qi] = ai
                    break
        seen |= layer
    return region, choice


def sure_safety_mask(m: Mdp, t: int) -> int:
    """Greatest fixpoint of X -> t & Pre(X): sure safety."""
    region = t
    while True:
        shrunk = region & pre_mask(m, region)
        if shrunk == region:
            return region
        region = shrunk


def sure_safety_region(m: Mdp, t: Iterable[str]) -> frozenset:
    """Largest subset of `t` that some action choice keeps inside `t`."""
    return m.names_of(sure_safety_mask(m, m.mask_of(t)))


def safety_strategy(m: Mdp, region: int) -> dict:
    """For each region state, one action whose successors stay inside."""
    choice = {}
    for qi in iter_bits(region):
        for ai, row in enumerate(m._succ[qi]):
            if row and is_subset(row, region):
                choice[qi] = ai
                break
    return choice


def almost_sure_reach_mask(m: Mdp, target: int) -> int:
    """Almost-sure reachability region (= limit-sure region for MDPs).

    Classical nested fixpoint over the support graph: shrink a candidate
    region to the states that can reach the target with positive
    probability without ever being forced outside the candidate.
    """
    region = m.full_mask
    while True:
        reached = target & region
        while True:
            grown = reached
            for qi in iter_bits(region & ~reached):
                for row in m._succ[qi]:
                    if row and is_subset(row, region) and row & reached:
                        grown |= 1 << qi
                        break
            if grown == reached:
                break
            reached = grown
        if reached == region:
            return region
        region = reached


def almost_sure_reach_region(m: Mdp, target: Iterable[str]) -> frozenset:
    return m.names_of(almost_sure_reach_mask(m, m.mask_of(target)))


def almost_sure_reach_strategy(m: Mdp, target: int):
    """Region plus a memoryless action map: stay in the region, keep a
    positive-probability path to the target."""
    region = almost_sure_reach_mask(m, target)
    choice: dict = {}
    reached = target & region
    while True:
        grown = reached
        for qi in iter_bits(region & ~reached):
            for ai, row in enumerate(m._succ[qi]):
                if row and is_subset(row, region) and row & reached:
                    grown |= 1 << qi
                    choice.setdefault(qi, ai)
                    break
        if grown == reached:
            break
        reached = grown
    for qi in iter_bits(region & target):
        for ai, row in enumerate(m._succ[qi]):
            if row and is_subset(row, region):
                choice.setdefault(qi, ai)
                break
    return region, choice


# -- counter products ------------------------------------------------------


def counter_state(q: str, i: int) -> str:
    return f"{q}@{i}"


def _sink_name(m: Mdp) -> str:
    name = "sink"
    while name in m._sidx:
        name = "_" + name
    return name


def product_mod_counter(m: Mdp, z, r: int) -> Mdp:
    """The restriction of `m` to z-safe actions with a mod-`r` countdown.

    Requires Pre^r(z) = z.  State (q, i) promises q in Pre^i(z); an action
    is safe there when all its successors lie in Pre^(i-1)(z), and every
    unsafe action is redirected to an absorbing sink.
    """
    z_mask = z if isinstance(z, int) else m.mask_of(z)
    if r < 1:
        raise ModelError("period must be at least 1")
    chain = [z_mask]
    for _ in range(r - 1):
        chain.append(pre_mask(m, chain[-1]))
    if pre_mask(m, chain[-1]) != z_mask:
        raise ModelError("z is not periodic with period r under Pre")
    cap = state_cap()
    if m.n * r + 1 > cap:
        raise ResourceLimitError(
            f"mod-counter product needs {m.n * r + 1} states, cap is {cap}"
        )
    sink = _sink_name(m)
    states = [counter_state(q, i) for q in m.states for i in range(r)] + [sink]
    trans = {}
    one = Fraction(1)
    for q in m.states:
        qi = m.state_index(q)
        for i in range(r):
            src = counter_state(q, i)
            safe_mask = chain[(i - 1) % r]
            for a in m.actions:
                ai = m.action_index(a)
                row = m.row(qi, ai)
                if row and is_subset(m._succ[qi][ai], safe_mask):
                    trans[(src, a)] = [
                        (counter_state(m.states[t], (i - 1) % r), p) for t, p in row
                    ]
                else:
                    trans[(src, a)] = [(sink, one)]
    for a in m.actions:
        trans[(sink, a)] = [(sink, one)]
    return Mdp(states, m.actions, trans)


def product_cycle_counter(m: Mdp, ell: int) -> Mdp:
    """Synchronous product of `m` with a mod-`ell` countdown counter."""
    if ell < 1:
        raise ModelError("counter length must be at least 1")
    cap = state_cap()
    if m.n * ell > cap:
        raise ResourceLimitError(
            f"cycle-counter product needs {m.n * ell} states, cap is {cap}"
        )
    states = [counter_state(q, i) for q in m.states for i in range(ell)]
    trans = {}
    for q in m.states:
        qi = m.state_index(q)
        for i in range(ell):
            src = counter_state(q, i)
            for a in m.actions:
                ai = m.action_index(a)
                trans[(src, a)] = [
                    (counter_state(m.states[t], (i - 1) % ell), p)
                    for t, p in m.row(qi, ai)
                ]
    return Mdp(states, m.actions, trans)
