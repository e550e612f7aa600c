"""Core data model: MDPs, exact distributions, target functions, queries.

All probabilities are `fractions.Fraction` values; nothing in the decision
or simulation paths ever touches floating point.  State and action names
are strings; internally every set of states is a bit mask over dense
indices in declaration order, which is what the fixpoint computations
iterate over.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional


class ModelError(ValueError):
    """A model, distribution, or query violates a structural requirement."""


class ResourceLimitError(RuntimeError):
    """A configurable resource cap (states, sequence length, ...) was hit."""


DEFAULT_STATE_CAP = 10 ** 6
DEFAULT_SEQUENCE_CAP = 2 ** 20
SUBSET_ENUM_CAP = 20
STATE_CAP_ENV = "SYNC_MDP_STATE_CAP"


def state_cap() -> int:
    """Product-construction state cap, overridable via SYNC_MDP_STATE_CAP."""
    raw = os.environ.get(STATE_CAP_ENV)
    if raw is None:
        return DEFAULT_STATE_CAP
    try:
        value = int(raw)
    except ValueError:
        raise ModelError(f"{STATE_CAP_ENV} must be an integer, got {raw!r}")
    if value <= 0:
        raise ModelError(f"{STATE_CAP_ENV} must be positive, got {value}")
    return value


def as_fraction(value) -> Fraction:
    """Coerce int/str/Fraction into an exact Fraction.

    Strings accept both "num/den" and decimal literals ("0.5" is exact).
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ModelError(f"bad probability literal {value!r}: {exc}")
    if isinstance(value, float):
        raise ModelError(
            f"refusing float probability {value!r}; use a string or Fraction"
        )
    raise ModelError(f"cannot interpret {value!r} as a probability")


def iter_bits(mask: int):
    """Yield the indices of the set bits of `mask`, lowest first."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def is_subset(a: int, b: int) -> bool:
    return a & ~b == 0


class Distribution:
    """Exact probability distribution over named states."""

    __slots__ = ("_mass",)

    def __init__(self, mass: Mapping[str, object]):
        cleaned = {}
        for state, value in mass.items():
            p = as_fraction(value)
            if p < 0:
                raise ModelError(f"negative mass {p} on state {state!r}")
            if p > 0:
                cleaned[state] = p
        if sum(cleaned.values(), Fraction(0)) != 1:
            raise ModelError(
                f"distribution masses sum to {sum(cleaned.values(), Fraction(0))}, not 1"
            )
        self._mass = dict(sorted(cleaned.items()))

    @classmethod
    def dirac(cls, state: str) -> "Distribution":
        return cls({state: Fraction(1)})

    @classmethod
    def uniform(cls, states: Iterable[str]) -> "Distribution":
        states = sorted(set(states))
        if not states:
            raise ModelError("uniform distribution over empty set")
        share = Fraction(1, len(states))
        return cls({q: share for q in states})

    @property
    def mass(self) -> dict:
        return dict(self._mass)

    def __call__(self, state: str) -> Fraction:
        return self._mass.get(state, Fraction(0))

    def support(self) -> frozenset:
        return frozenset(self._mass)

    def is_dirac(self) -> bool:
        return len(self._mass) == 1

    def items(self):
        return self._mass.items()

    def restricted_sum(self, states: Iterable[str]) -> Fraction:
        return sum((self._mass.get(q, Fraction(0)) for q in states), Fraction(0))

    def __eq__(self, other):
        return isinstance(other, Distribution) and self._mass == other._mass

    def __hash__(self):
        return hash(tuple(self._mass.items()))

    def __repr__(self):
        inner = ", ".join(f"{q}: {p}" for q, p in self._mass.items())
        return f"Distribution({{{inner}}})"

    def to_json_dict(self) -> dict:
        return {q: str(p) for q, p in self._mass.items()}


class FnKind(str, enum.Enum):
    SUM = "sum"
    MAX = "max"


@dataclass(frozen=True)
class TargetFunction:
    """Evaluation function over distributions: total or maximal target mass."""

    kind: FnKind
    target: frozenset

    def __post_init__(self):
        object.__setattr__(self, "kind", FnKind(self.kind))
        object.__setattr__(self, "target", frozenset(self.target))
        if self.kind is FnKind.MAX and not self.target:
            raise ModelError("max target function needs a nonempty target set")

    @classmethod
    def sum_over(cls, target: Iterable[str]) -> "TargetFunction":
        return cls(FnKind.SUM, frozenset(target))

    @classmethod
    def max_over(cls, target: Iterable[str]) -> "TargetFunction":
        return cls(FnKind.MAX, frozenset(target))

    def to_json_dict(self) -> dict:
        return {"kind": self.kind.value, "target": sorted(self.target)}


def eval_target(d: Distribution, f: TargetFunction) -> Fraction:
    """Exact value of the target function on a distribution."""
    if f.kind is FnKind.SUM:
        return d.restricted_sum(f.target)
    if not f.target:
        raise ModelError("max over empty target set")
    return max(d(q) for q in f.target)


class SyncMode(str, enum.Enum):
    ALWAYS = "always"
    EVENTUALLY = "eventually"
    WEAKLY = "weakly"
    STRONGLY = "strongly"


class WinningMode(str, enum.Enum):
    SURE = "sure"
    ALMOST_SURE = "almost-sure"
    LIMIT_SURE = "limit-sure"


@dataclass(frozen=True)
class AnalysisQuery:
    sync_mode: SyncMode
    winning_mode: WinningMode
    function: TargetFunction
    initial: Distribution

    def __post_init__(self):
        object.__setattr__(self, "sync_mode", SyncMode(self.sync_mode))
        object.__setattr__(self, "winning_mode", WinningMode(self.winning_mode))

    def to_json_dict(self) -> dict:
        return {
            "sync_mode": self.sync_mode.value,
            "winning_mode": self.winning_mode.value,
            "function": self.function.to_json_dict(),
            "initial": self.initial.to_json_dict(),
        }


@dataclass(frozen=True)
class Verdict:
    """Decision result; `witness` is populated only for positive answers."""

    query: AnalysisQuery
    answer: bool
    witness: Optional[dict] = None
    note: Optional[str] = None

    def __post_init__(self):
        if self.witness is not None and not self.answer:
            raise ModelError("witness attached to a negative verdict")

    def to_json_dict(self) -> dict:
        doc = {
            "query": self.query.to_json_dict(),
            "answer": self.answer,
            "witness": self.witness,
        }
        if self.note is not None:
            doc["note"] = self.note
        return doc


class Mdp:
    """Finite MDP with exact rational transition probabilities.

    `transitions` maps (state, action) to the successor row, given either as
    a list of (state, probability) pairs, a mapping state -> probability, or
    a bare list of states (interpreted as the uniform distribution over
    them, since all decision procedures depend on supports only).
    Instances are immutable after construction and safe to share.
    """

    def __init__(self, states, actions, transitions):
        self.states = tuple(states)
        self.actions = tuple(actions)
        if len(set(self.states)) != len(self.states):
            raise ModelError("duplicate state names")
        if len(set(self.actions)) != len(self.actions):
            raise ModelError("duplicate action names")
        self._sidx = {q: i for i, q in enumerate(self.states)}
        self._aidx = {a: i for i, a in enumerate(self.actions)}
        self.n = len(self.states)
        self.full_mask = (1 << self.n) - 1

        # _rows[qi][ai] = tuple of (successor index, probability)
        self._rows = [[() for _ in self.actions] for _ in self.states]
        for key, row in transitions.items():
            q, a = key
            if q not in self._sidx:
                raise ModelError(f"transition from unknown state {q!r}")
            if a not in self._aidx:
                raise ModelError(f"transition on unknown action {a!r}")
            self._rows[self._sidx[q]][self._aidx[a]] = self._normalize_row(row)

        self._succ = [
            [self._mask_of_row(row) for row in per_state] for per_state in self._rows
        ]
        probs = [p for per_state in self._rows for row in per_state for _, p in row]
        self.eta = min(probs) if probs else None
        # fixpoint caches, keyed by target masks
        self._pre_cache: dict = {}
        self._seq_cache: dict = {}

    def _normalize_row(self, row):
        if isinstance(row, Mapping):
            entries = [(q, as_fraction(p)) for q, p in row.items()]
        else:
            entries = []
            uniform_targets = []
            for item in row:
                if isinstance(item, str):
                    uniform_targets.append(item)
                else:
                    q, p = item
                    entries.append((q, as_fraction(p)))
            if uniform_targets and entries:
                raise ModelError("mixed explicit and uniform transition row")
            if uniform_targets:
                share = Fraction(1, len(uniform_targets))
                entries = [(q, share) for q in uniform_targets]
        out = []
        for q, p in entries:
            if q not in self._sidx:
                raise ModelError(f"transition into unknown state {q!r}")
            out.append((self._sidx[q], p))
        out.sort()
        return tuple(out)

    @staticmethod
    def _mask_of_row(row) -> int:
        mask = 0
        for qi, p in row:
            if p > 0:
                mask |= 1 << qi
        return mask

    # -- index and mask helpers -------------------------------------------

    def state_index(self, q: str) -> int:
        try:
            return self._sidx[q]
        except KeyError:
            raise ModelError(f"unknown state {q!r}")

    def action_index(self, a: str) -> int:
        try:
            return self._aidx[a]
        except KeyError:
            raise ModelError(f"unknown action {a!r}")

    def mask_of(self, states: Iterable[str]) -> int:
        mask = 0
        for q in states:
            mask |= 1 << self.state_index(q)
        return mask

    def names_of(self, mask: int) -> frozenset:
        return frozenset(self.states[i] for i in iter_bits(mask))

    def sorted_names(self, mask: int) -> list:
        return [self.states[i] for i in iter_bits(mask)]

    def succ_mask(self, qi: int, ai: int) -> int:
        return self._succ[qi][ai]

    def row(self, qi: int, ai: int):
        return self._rows[qi][ai]

    def support_mask(self, d: Distribution) -> int:
        return self.mask_of(d.support())

    def check_distribution(self, d: Distribution):
        for q in d.support():
            if q not in self._sidx:
                raise ModelError(f"distribution mentions unknown state {q!r}")

    # -- public operations -------------------------------------------------

    def post_set(self, q: str, a: str) -> frozenset:
        """Support of the successor distribution of (q, a)."""
        return self.names_of(self._succ[self.state_index(q)][self.action_index(a)])

    def __repr__(self):
        return f"Mdp(states={len(self.states)}, actions={len(self.actions)})"


def validate_mdp(m: Mdp) -> list:
    """Check every structural invariant; return human-readable violations."""
    violations = []
    seen_min = None
    for q in m.states:
        qi = m.state_index(q)
        for a in m.actions:
            ai = m.action_index(a)
            row = m.row(qi, ai)
            if not row:
                violations.append(f"state {q!r} action {a!r}: no successors")
                continue
            total = sum((p for _, p in row), Fraction(0))
            if total != 1:
                violations.append(
                    f"state {q!r} action {a!r}: probabilities sum to {total}, not 1"
                )
            targets = [t for t, _ in row]
            if len(set(targets)) != len(targets):
                violations.append(f"state {q!r} action {a!r}: duplicate successor")
            for t, p in row:
                if p <= 0:
                    violations.append(
                        f"state {q!r} action {a!r} -> {m.states[t]!r}:"
                        f" nonpositive probability {p}"
                    )
                elif seen_min is None or p < seen_min:
                    seen_min = p
    if not violations and m.eta != seen_min:
        violations.append(f"eta is {m.eta}, expected minimum probability {seen_min}")
    return violations


def dirac_wrap(m: Mdp, d0: Distribution):
    """Add a fresh initial state whose every action moves to `d0`.

    Returns the wrapped MDP and the fresh state's name.  Verdicts of the
    eventually, weakly, and strongly synchronizing objectives are preserved
    when the query starts from the Dirac distribution on the fresh state.
    """
    m.check_distribution(d0)
    fresh = "init"
    while fresh in m._sidx:
        fresh = "_" + fresh
    trans = {}
    for q in m.states:
        qi = m.state_index(q)
        for a in m.actions:
            ai = m.action_index(a)
            trans[(q, a)] = [(m.states[t], p) for t, p in m.row(qi, ai)]
    for a in m.actions:
        trans[(fresh, a)] = [(q, p) for q, p in d0.items()]
    return Mdp(m.states + (fresh,), m.actions, trans), fresh


def _copy_names(q: str):
    return f"{q}#1", f"{q}#2"


def _duplicate_keeping(m: Mdp, keep: frozenset) -> Mdp:
    """Duplicate every state outside `keep`, halving mass into the copies."""
    for q in keep:
        m.state_index(q)
    if keep == frozenset(m.states):
        return m
    new_states = []
    for q in m.states:
        if q in keep:
            new_states.append(q)
        else:
            pair = _copy_names(q)
            for name in pair:
                if name in m._sidx:
                    raise ModelError(f"state name {name!r} collides with a copy name")
            new_states.extend(pair)

    def expand(row):
        out = []
        for t, p in row:
            name = m.states[t]
            if name in keep:
                out.append((name, p))
            else:
                c1, c2 = _copy_names(name)
                out.extend([(c1, p / 2), (c2, p / 2)])
        return out

    trans = {}
    for q in m.states:
        qi = m.state_index(q)
        sources = [q] if q in keep else list(_copy_names(q))
        for a in m.actions:
            row = expand(m.row(qi, m.action_index(a)))
            for src in sources:
                trans[(src, a)] = list(row)
    return Mdp(new_states, m.actions, trans)


def duplicate_except(m: Mdp, keep: str) -> Mdp:
    """Duplicate all states but `keep`; single-state mass can only form there.

    Reduces sum over the singleton {keep} to max over all states of the
    result: any verdict for Sum({keep}) in `m` equals the verdict for
    Max(all states) in the returned MDP, with initial distributions mapped
    through :func:`split_distribution`.
    """
    return _duplicate_keeping(m, frozenset([keep]))


def duplicate_outside(m: Mdp, t: Iterable[str]) -> Mdp:
    """Duplicate the states outside `t`; only `t` can accumulate mass.

    Reduces strongly synchronizing Max(t) in `m` to Max(all states) in the
    result.
    """
    return _duplicate_keeping(m, frozenset(t))


def split_distribution(m: Mdp, d0: Distribution, keep: Iterable[str]) -> Distribution:
    """Map a distribution of `m` into the duplicated MDP's state space."""
    keep = frozenset(keep)
    out = {}
    for q, p in d0.items():
        if q in keep:
            out[q] = p
        else:
            c1, c2 = _copy_names(q)
            out[c1] = p / 2
            out[c2] = p / 2
    return Distribution(out)
