"""One-letter alternating finite automata.

Transition formulas are kept in disjunctive normal form: each state maps to
a nonempty list of clauses, each clause a nonempty set of states.  A word
(only its length matters) is accepted from q iff q belongs to the n-th
acceptance set, and the acceptance sets are exactly the predecessor sets of
the accepting set in the structurally corresponding MDP.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from .model import Mdp, ModelError, is_subset, iter_bits
from .reach import PreSequence, detect_cycle, iterate_pre


class Afa:
    """Alternating automaton over a one-letter alphabet, DNF transitions."""

    def __init__(self, states, delta, accepting):
        self.states = tuple(states)
        if len(set(self.states)) != len(self.states):
            raise ModelError("duplicate state names")
        self._sidx = {q: i for i, q in enumerate(self.states)}
        self.n = len(self.states)
        self.full_mask = (1 << self.n) - 1

        self._clauses = []
        for q in self.states:
            if q not in delta:
                raise ModelError(f"state {q!r} has no transition formula")
            clauses = []
            for clause in delta[q]:
                mask = 0
                for target in clause:
                    if target not in self._sidx:
                        raise ModelError(
                            f"clause of {q!r} mentions unknown state {target!r}"
                        )
                    mask |= 1 << self._sidx[target]
                if mask == 0:
                    raise ModelError(f"state {q!r} has an empty clause")
                clauses.append(mask)
            if not clauses:
                raise ModelError(f"state {q!r} has no clauses")
            self._clauses.append(tuple(clauses))

        self.accepting = frozenset(accepting)
        for q in self.accepting:
            if q not in self._sidx:
                raise ModelError(f"unknown accepting state {q!r}")
        self.accepting_mask = sum(1 << self._sidx[q] for q in self.accepting)

    def state_index(self, q: str) -> int:
        try:
            return self._sidx[q]
        except KeyError:
            raise ModelError(f"unknown state {q!r}")

    def mask_of(self, states: Iterable[str]) -> int:
        mask = 0
        for q in states:
            mask |= 1 << self.state_index(q)
        return mask

    def names_of(self, mask: int) -> frozenset:
        return frozenset(self.states[i] for i in iter_bits(mask))

    def clauses_of(self, q: str) -> tuple:
        return tuple(
            self.names_of(mask) for mask in self._clauses[self.state_index(q)]
        )

    def __repr__(self):
        return f"Afa(states={self.n}, accepting={len(self.accepting)})"


def acc_step_mask(a: Afa, s: int) -> int:
    result = 0
    for qi in range(a.n):
        for clause in a._clauses[qi]:
            if is_subset(clause, s):
                result |= 1 << qi
                break
    return result


def acc_step(a: Afa, s: Iterable[str]) -> frozenset:
    """States with some clause entirely inside `s` (one acceptance step)."""
    return a.names_of(acc_step_mask(a, a.mask_of(s)))


def pre_sequence(a: Afa) -> PreSequence:
    """Acceptance sets from the accepting set until the first repetition."""
    masks, k, r = detect_cycle(a.accepting_mask, lambda s: acc_step_mask(a, s))
    return PreSequence(tuple(masks), k, r, a.states)


def acc_n(a: Afa, n: int) -> frozenset:
    """States accepting the word of length `n` (folded through the cycle)."""
    if n < 0:
        raise ModelError("word length must be nonnegative")
    return a.names_of(pre_sequence(a).mask_at(n))


def emptiness(a: Afa, q: str) -> bool:
    """True iff no word at all is accepted from `q`."""
    bit = 1 << a.state_index(q)
    return all(mask & bit == 0 for mask in pre_sequence(a).masks)


def finiteness(a: Afa, q: str) -> bool:
    """True iff only finitely many word lengths are accepted from `q`."""
    seq = pre_sequence(a)
    bit = 1 << a.state_index(q)
    return all(mask & bit == 0 for mask in seq.masks[seq.prefix_len :])


def universal_finiteness(a: Afa) -> bool:
    """True iff the accepted language is finite from every state."""
    return any(mask == 0 for mask in pre_sequence(a).masks)


# -- structural correspondence with MDPs -----------------------------------


def afa_to_mdp(a: Afa) -> Mdp:
    """Uniform-probability MDP with the same alternating structure.

    Clause lists are padded to a common length by repeating the last
    clause; action a_k plays every state's k-th clause.  The acceptance
    sets of the automaton coincide with the predecessor sets of the result.
    """
    width = max(len(clauses) for clauses in a._clauses)
    actions = [f"a{k + 1}" for k in range(width)]
    trans = {}
    for qi, q in enumerate(a.states):
        clauses = a._clauses[qi]
        for k in range(width):
            clause = clauses[min(k, len(clauses) - 1)]
            members = [a.states[i] for i in iter_bits(clause)]
            share = Fraction(1, len(members))
            trans[(q, actions[k])] = [(t, share) for t in members]
    return Mdp(a.states, actions, trans)


def mdp_to_afa(m: Mdp, t: Iterable[str]) -> Afa:
    """Automaton whose acceptance sets are the predecessor sets of `t`."""
    delta = {}
    for q in m.states:
        qi = m.state_index(q)
        clauses = []
        for ai in range(len(m.actions)):
            mask = m._succ[qi][ai]
            if mask:
                clauses.append([m.states[i] for i in iter_bits(mask)])
        if not clauses:
            raise ModelError(f"state {q!r} has no transitions")
        delta[q] = clauses
    return Afa(m.states, delta, frozenset(t))


def _primes(count: int) -> list:
    primes = []
    candidate = 2
    while len(primes) < count:
        if all(candidate % p for p in primes):
            primes.append(candidate)
        candidate += 1
    return primes


def build_uf_gadget(a: Afa, q0: str) -> Afa:
    """Emptiness-to-universal-finiteness reduction instance.

    Attaches an entry state x feeding prime-length components C_1..C_n
    (p_i the i-th prime, n the state count of `a`), conjoins x into every
    clause of a modified copy of `a`, and puts a self-loop clause on `q0`.
    The language of `a` from `q0` is nonempty iff the result is NOT
    universally finite.
    """
    a.state_index(q0)
    n = a.n
    primes = _primes(n)
    x = "x"
    while x in a._sidx:
        x = "_" + x
    comp_states = {}
    for i, p in enumerate(primes, start=1):
        comp_states[i] = [f"c{i}_{j}" for j in range(p)]
        for name in comp_states[i]:
            if name in a._sidx:
                raise ModelError(f"gadget state name {name!r} collides")

    states = list(a.states) + [x] + [s for i in comp_states for s in comp_states[i]]
    delta = {}
    for q in a.states:
        modified = [set(clause) | {x} for clause in a.clauses_of(q)]
        if q == q0:
            modified = [{q0}] + modified
        delta[q] = modified
    delta[x] = [[comp_states[i][0]] for i in comp_states]
    for i, p in enumerate(primes, start=1):
        for j in range(p):
            delta[comp_states[i][j]] = [[x, comp_states[i][(j + 1) % p]]]

    accepting = set(a.accepting) | {x}
    for i, p in enumerate(primes, start=1):
        accepting.update(comp_states[i][: p - 1])
    return Afa(states, delta, accepting)


def _cross_check_pre(a: Afa, m: Mdp) -> bool:
    """The automaton's acceptance sets equal the MDP's predecessor sets."""
    left = pre_sequence(a)
    right = iterate_pre(m, frozenset(a.accepting))
    return left.sets == right.sets
