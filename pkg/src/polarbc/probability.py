"""Finite probability models: channels, auxiliary sources and information measures.

Everything here is a small immutable container around a numpy table.  The
broadcast setting is described by an :class:`AuxiliaryModel` (the law of the
auxiliary bits and the map into the channel input) together with two
:class:`DMC` component channels.  Information quantities are computed by exact
summation over the joint table, in natural log, and reported in bits.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

PMF_TOL = 1e-12
DEGRADATION_TOL = 1e-9


def _as_prob_table(table, name: str) -> np.ndarray:
    arr = np.array(table, dtype=np.float64)
    if arr.size == 0:
        raise ValueError(f"{name}: empty table")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1 + PMF_TOL):
        raise ValueError(f"{name}: entries must lie in [0, 1]")
    arr.setflags(write=False)
    return arr


def binary_entropy(p: float) -> float:
    """h2(p) in bits, with 0 log 0 = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary_entropy: p={p} outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return -(p * math.log(p) + (1 - p) * math.log1p(-p)) / math.log(2)


def _entropy_bits(pmf: np.ndarray) -> float:
    p = pmf[pmf > 0]
    return float(-(p * np.log(p)).sum() / np.log(2))


# --------------------------------------------------------------------------
# channels


@dataclass(frozen=True, eq=False)
class DMC:
    """Discrete memoryless channel with transition table ``pmf[x, y] = P(y|x)``.

    Most channels in this package are binary input; the input alphabet is
    larger only when the map ``phi`` of an auxiliary model targets a product
    alphabet (for example the noiseless test channels).
    """

    pmf: np.ndarray
    name: str = "generic"

    def __post_init__(self):
        pmf = _as_prob_table(self.pmf, "DMC")
        if pmf.ndim != 2:
            raise ValueError("DMC: pmf must be a 2-d table P(y|x)")
        if np.any(np.abs(pmf.sum(axis=1) - 1.0) > PMF_TOL):
            raise ValueError("DMC: every row must sum to 1")
        object.__setattr__(self, "pmf", pmf)

    @property
    def input_alphabet_size(self) -> int:
        return self.pmf.shape[0]

    @property
    def output_alphabet_size(self) -> int:
        return self.pmf.shape[1]

    def sample(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Pass ``x`` through the channel by inverse-CDF sampling."""
        x = np.asarray(x)
        cdf = np.cumsum(self.pmf, axis=1)
        u = rng.random(x.shape)
        y = (u[..., None] >= cdf[x]).sum(axis=-1)
        return np.minimum(y, self.output_alphabet_size - 1).astype(np.int64)

    def to_dict(self) -> dict:
        return {"name": self.name, "pmf": self.pmf.tolist()}

    def __repr__(self):
        return f"DMC({self.name}, {self.pmf.shape[0]}x{self.pmf.shape[1]})"


BinaryInputDMC = DMC


def bsc(p: float) -> DMC:
    if not 0.0 <= p <= 1.0:
        raise ValueError("bsc: crossover outside [0, 1]")
    return DMC(np.array([[1 - p, p], [p, 1 - p]]), name=f"bsc({p:g})")


def bec(eps: float) -> DMC:
    """Binary erasure channel; output 2 is the erasure symbol."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("bec: erasure probability outside [0, 1]")
    return DMC(np.array([[1 - eps, 0.0, eps], [0.0, 1 - eps, eps]]), name=f"bec({eps:g})")


def identity_channel(size: int = 2) -> DMC:
    return DMC(np.eye(size), name=f"identity({size})")


def cascade(*channels: DMC) -> DMC:
    pmf = channels[0].pmf
    for ch in channels[1:]:
        pmf = pmf @ ch.pmf
    return DMC(pmf / pmf.sum(axis=1, keepdims=True), name="∘".join(c.name for c in channels))


def check_stochastic_degradation(p: DMC, q: DMC, tol: float = DEGRADATION_TOL) -> bool:
    """True iff ``q = p @ M`` for some stochastic ``M`` (q is degraded w.r.t. p).

    Solved as an LP minimising the largest constraint residual ``t``; the
    channels are declared degraded when the optimum is at most ``tol``.
    """
    if p.input_alphabet_size != q.input_alphabet_size:
        raise ValueError("degradation check needs equal input alphabets")
    nx, a, b = p.input_alphabet_size, p.output_alphabet_size, q.output_alphabet_size
    nm = a * b
    # variables: M (row-major, a x b) followed by t
    c = np.zeros(nm + 1)
    c[-1] = 1.0
    # residual rows: (p @ M)[x, j] - q[x, j]
    R = np.zeros((nx * b, nm + 1))
    for x in range(nx):
        for j in range(b):
            R[x * b + j, [y * b + j for y in range(a)]] = p.pmf[x]
    A_ub = np.vstack([R, -R])
    A_ub[:, -1] = -1.0
    b_ub = np.concatenate([q.pmf.ravel(), -q.pmf.ravel()])
    A_eq = np.zeros((a, nm + 1))
    for y in range(a):
        A_eq[y, y * b:(y + 1) * b] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=np.ones(a),
                  bounds=[(0, None)] * (nm + 1), method="highs")
    if res.status != 0:
        return False
    M = np.clip(res.x[:nm].reshape(a, b), 0.0, None)
    M /= M.sum(axis=1, keepdims=True)
    return bool(np.max(np.abs(p.pmf @ M - q.pmf)) <= tol)


# --------------------------------------------------------------------------
# joint distributions and information measures


@dataclass(frozen=True, eq=False)
class JointPMF:
    """A pmf over named finite random variables; axis ``k`` is ``names[k]``."""

    names: tuple[str, ...]
    pmf: np.ndarray

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=np.float64)
        if pmf.ndim != len(self.names) or len(set(self.names)) != len(self.names):
            raise ValueError("JointPMF: one distinct name per axis required")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "pmf", pmf)

    def sizes(self, names: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.pmf.shape[self._axis(n)] for n in names)

    def _axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}; have {self.names}") from None

    def marginal(self, names: Sequence[str]) -> np.ndarray:
        """Marginal table with axes in the order of ``names``."""
        axes = [self._axis(n) for n in names]
        if len(set(axes)) != len(axes):
            raise ValueError("repeated variable in marginal")
        rest = tuple(k for k in range(self.pmf.ndim) if k not in axes)
        m = self.pmf.sum(axis=rest) if rest else self.pmf
        kept = sorted(axes)
        return np.transpose(m, [kept.index(a) for a in axes])

    def entropy(self, names: Sequence[str], given: Sequence[str] = ()) -> float:
        names, given = list(names), [g for g in given if g not in names]
        return _entropy_bits(self.marginal(names + given)) - _entropy_bits(self.marginal(given))

    def mutual_information(self, a: Sequence[str], b: Sequence[str], given: Sequence[str] = ()) -> float:
        a, b, given = list(a), list(b), list(given)
        return (self.entropy(a, given) + self.entropy(b, given)
                - self.entropy(a + [v for v in b if v not in a], given))


_QUERY = re.compile(r"^\s*([HI])\((.*)\)\s*$")


def _split_vars(text: str) -> list[str]:
    out = [t.strip() for t in text.split(",")]
    if not all(out):
        raise ValueError(f"malformed variable list {text!r}")
    return out


def information_measure(joint: JointPMF, query: str) -> float:
    """Evaluate ``"H(A,B|C)"`` or ``"I(A;B|C)"`` on ``joint``, in bits."""
    if abs(joint.pmf.sum() - 1.0) > 1e-10 or np.any(joint.pmf < 0):
        raise ValueError("information_measure: joint is not normalized")
    m = _QUERY.match(query)
    if not m:
        raise ValueError(f"cannot parse query {query!r}")
    kind, body = m.groups()
    body, _, cond = body.partition("|")
    given = _split_vars(cond) if cond.strip() else []
    for v in given:
        joint._axis(v)
    if kind == "H":
        if ";" in body:
            raise ValueError("entropy query takes a single variable group")
        return joint.entropy(_split_vars(body), given)
    a, sep, b = body.partition(";")
    if not sep:
        raise ValueError("mutual information query needs 'A;B'")
    return joint.mutual_information(_split_vars(a), _split_vars(b), given)


# --------------------------------------------------------------------------
# auxiliary models


_AUX_NAMES = {1: ("V",), 2: ("V1", "V2"), 3: ("V", "V1", "V2")}


@dataclass(frozen=True, eq=False)
class AuxiliaryModel:
    """Law of the binary auxiliaries and their map to the channel input.

    For ``arity == 1`` (superposition) ``joint_pmf`` is the table p(v, x) and
    ``phi`` is unused.  For arity 2 (``V1, V2``) and 3 (``V, V1, V2``)
    ``joint_pmf`` has shape ``(2,) * arity`` and ``phi`` maps each auxiliary
    tuple to an input letter.
    """

    arity: int
    joint_pmf: np.ndarray
    input_alphabet_size: int = 2
    phi: np.ndarray | None = None

    def __post_init__(self):
        if self.arity not in _AUX_NAMES:
            raise ValueError("arity must be 1, 2 or 3")
        pmf = _as_prob_table(self.joint_pmf, "AuxiliaryModel")
        if abs(pmf.sum() - 1.0) > PMF_TOL:
            raise ValueError("AuxiliaryModel: joint pmf must sum to 1")
        if self.arity == 1:
            if pmf.shape != (2, self.input_alphabet_size):
                raise ValueError("arity-1 model stores p(v, x) as a 2 x |X| table")
            phi = None
        else:
            if pmf.shape != (2,) * self.arity:
                raise ValueError(f"joint pmf must have shape {(2,) * self.arity}")
            if self.phi is None:
                raise ValueError("phi is required for arity 2 and 3")
            phi = np.array(self.phi, dtype=np.int64)
            if phi.shape != (2,) * self.arity:
                raise ValueError("phi must be defined on every auxiliary tuple")
            if phi.min() < 0 or phi.max() >= self.input_alphabet_size:
                raise ValueError("phi maps outside the input alphabet")
            phi.setflags(write=False)
        object.__setattr__(self, "joint_pmf", pmf)
        object.__setattr__(self, "phi", phi)

    @property
    def aux_names(self) -> tuple[str, ...]:
        return _AUX_NAMES[self.arity]

    def joint_with_input(self) -> np.ndarray:
        """Table over (auxiliaries..., X)."""
        if self.arity == 1:
            return self.joint_pmf
        out = np.zeros((2,) * self.arity + (self.input_alphabet_size,))
        for aux in product((0, 1), repeat=self.arity):
            out[aux + (self.phi[aux],)] = self.joint_pmf[aux]
        return out

    def channel_input(self, aux: Sequence[np.ndarray]) -> np.ndarray:
        """Elementwise x = phi(aux) for auxiliary sequences of equal shape."""
        if self.arity == 1:
            raise ValueError("arity-1 models carry X as their own polar variable")
        return self.phi[tuple(np.asarray(a, dtype=np.int64) for a in aux)]

    def to_dict(self) -> dict:
        d = {"arity": self.arity, "joint_pmf": self.joint_pmf.tolist(),
             "input_alphabet_size": self.input_alphabet_size}
        if self.phi is not None:
            d["phi"] = self.phi.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AuxiliaryModel":
        return cls(int(d["arity"]), np.array(d["joint_pmf"], dtype=float),
                   int(d.get("input_alphabet_size", 2)),
                   None if d.get("phi") is None else np.array(d["phi"]))


def bsc_superposition_model(alpha: float, px1: float = 0.5) -> AuxiliaryModel:
    """p(v, x) with V -> X a BSC(alpha) and P(X = 1) = px1 (V chosen to match)."""
    if not 0.0 <= alpha <= 0.5:
        raise ValueError("alpha must lie in [0, 1/2]")
    if alpha == 0.5:
        pv1 = 0.5
    else:
        pv1 = (px1 - alpha) / (1 - 2 * alpha)
    if not -1e-12 <= pv1 <= 1 + 1e-12:
        raise ValueError("no input law for V gives the requested P(X = 1)")
    pv = np.array([1 - pv1, pv1]).clip(0, 1)
    w = np.array([[1 - alpha, alpha], [alpha, 1 - alpha]])
    return AuxiliaryModel(1, pv[:, None] * w)


def product_model(p_aux: np.ndarray) -> AuxiliaryModel:
    """Arity 2 or 3 model whose channel input is the auxiliary tuple itself."""
    p_aux = np.asarray(p_aux, dtype=float)
    arity = p_aux.ndim
    phi = np.arange(2 ** arity).reshape((2,) * arity)
    return AuxiliaryModel(arity, p_aux, 2 ** arity, phi)


# --------------------------------------------------------------------------
# pairwise joints for the polar constructions


@dataclass(frozen=True, eq=False)
class PairwiseJoint:
    """Per-letter joint P(t, s) of a binary polar source T and its side letter S.

    ``table`` has shape ``(2, S)``; ``side_names``/``side_sizes`` describe how
    the side letter is packed (row-major over the listed variables).  An empty
    side gives ``S == 1``.
    """

    table: np.ndarray
    side_names: tuple[str, ...] = ()
    side_sizes: tuple[int, ...] = ()
    label: str = ""

    def __post_init__(self):
        t = _as_prob_table(self.table, "PairwiseJoint")
        if t.ndim != 2 or t.shape[0] != 2:
            raise ValueError("PairwiseJoint: table must be 2 x |side|")
        if abs(t.sum() - 1.0) > PMF_TOL:
            raise ValueError("PairwiseJoint: table must sum to 1")
        if int(np.prod(self.side_sizes)) != t.shape[1]:
            raise ValueError("PairwiseJoint: side sizes do not match the table")
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "side_names", tuple(self.side_names))
        object.__setattr__(self, "side_sizes", tuple(int(s) for s in self.side_sizes))

    @property
    def side_size(self) -> int:
        return self.table.shape[1]

    @property
    def source_pmf(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def marginalized(self) -> "PairwiseJoint":
        return PairwiseJoint(self.source_pmf[:, None], label=self.label.split("|")[0] + "|")

    def conditional_entropy(self) -> float:
        """H(T|S) in bits."""
        return _entropy_bits(self.table) - _entropy_bits(self.table.sum(axis=0))

    def side_index(self, *seqs) -> np.ndarray:
        """Pack side sequences (one per side variable) into side letters."""
        if len(seqs) != len(self.side_names):
            raise ValueError(f"expected {len(self.side_names)} side sequences")
        if not seqs:
            return None
        return np.ravel_multi_index(tuple(np.asarray(s, dtype=np.int64) for s in seqs),
                                    self.side_sizes)

    def leaves(self, side: np.ndarray | None, n: int | None = None) -> np.ndarray:
        """Per-position likelihood pairs ``(..., n, 2)`` for side letters ``side``."""
        if side is None:
            if n is None:
                raise ValueError("n is required without side information")
            return np.broadcast_to(self.source_pmf, (n, 2))
        return self.table.T[side]


def pairwise_from_joint(joint: JointPMF, source: str, side: Sequence[str] = ()) -> PairwiseJoint:
    side = tuple(side)
    if source in side:
        raise ValueError("source cannot be part of its own side information")
    if joint.sizes([source]) != (2,):
        raise ValueError(f"polar source {source!r} must be binary")
    table = joint.marginal([source, *side]).reshape(2, -1)
    label = f"{source}|{','.join(side)}" if side else f"{source}|"
    return PairwiseJoint(table / table.sum(), side, joint.sizes(side), label)


def broadcast_joint(model: AuxiliaryModel, ch1: DMC | None, ch2: DMC | None = None,
                    output_names: tuple[str, str] = ("Y1", "Y2")) -> JointPMF:
    """Joint law of (auxiliaries, X, Y1, Y2) with Y1, Y2 independent given X."""
    p = model.joint_with_input()
    names = list(model.aux_names) + ["X"]
    for ch, name in zip((ch1, ch2), output_names):
        if ch is None:
            continue
        x_axis = names.index("X")
        if ch.input_alphabet_size != p.shape[x_axis]:
            raise ValueError(f"channel {ch.name} input alphabet does not match the model")
        shape = [1] * p.ndim + [ch.output_alphabet_size]
        shape[x_axis] = ch.input_alphabet_size
        p = p[..., None] * ch.pmf.reshape(shape)
        names.append(name)
    return JointPMF(tuple(names), p)


def effective_channel(model: AuxiliaryModel, component_channel: DMC | None,
                      observed: str, conditioned: Sequence[str] = ()) -> PairwiseJoint:
    """Joint of one auxiliary (or X) with the side tuple (conditioned..., Y)."""
    joint = broadcast_joint(model, component_channel, None, ("Y", "_"))
    side = tuple(conditioned) + (("Y",) if component_channel is not None else ())
    return pairwise_from_joint(joint, observed, side)


@dataclass(eq=False)
class BroadcastSetup:
    """An auxiliary model together with the two component channels."""

    model: AuxiliaryModel
    ch1: DMC
    ch2: DMC
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def joint(self) -> JointPMF:
        if "joint" not in self._cache:
            self._cache["joint"] = broadcast_joint(self.model, self.ch1, self.ch2)
        return self._cache["joint"]

    def pairwise(self, source: str, side: Sequence[str] = ()) -> PairwiseJoint:
        key = (source, tuple(side))
        if key not in self._cache:
            self._cache[key] = pairwise_from_joint(self.joint, source, side)
        return self._cache[key]

    def info(self, query: str) -> float:
        return information_measure(self.joint, query)

    def channel(self, user: int) -> DMC:
        return {1: self.ch1, 2: self.ch2}[user]


@dataclass(frozen=True)
class RatePoint:
    r0: float = 0.0
    r1: float = 0.0
    r2: float = 0.0

    def __post_init__(self):
        if min(self.r0, self.r1, self.r2) < -1e-12:
            raise ValueError("rates must be nonnegative")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r0, self.r1, self.r2)
