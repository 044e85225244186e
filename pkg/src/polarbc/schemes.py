"""Encoders and decoders: compression, point-to-point coding and chained broadcast codes.

All codecs are batched: messages have shape ``(B, L)``, channel inputs and
outputs ``(B, k, n)`` (or ``(B, n)`` for single-block codes), and every
block is handled by a single :func:`polarbc.polar.sc_run` call for the whole
batch.  One-dimensional inputs are accepted and treated as ``B == 1``.

Within a block every position is either *given* (payload, shared random,
fixed zero or a bit carried over from another block) or *decided* by the
argmax of one likelihood context, exactly as the encoder computed it.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .construction import ChainingLayout, IndexSetReport
from .polar import GIVEN, polar_transform, sc_run
from .probability import BroadcastSetup, PairwiseJoint

_U64 = np.uint64


class ChainOrderError(RuntimeError):
    """A chained decoder was asked for a block out of its mandated order."""


# --------------------------------------------------------------------------
# shared randomness


def _mix(z: np.ndarray) -> np.ndarray:
    z = z + _U64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


@dataclass(frozen=True)
class SharedRandomness:
    """Counter-based generator keyed by (seed, variable, block, trial, position)."""

    session_seed: int = 0

    def _words(self, var: str, block: int, n: int, trials) -> np.ndarray:
        trials = np.atleast_1d(np.asarray(trials, dtype=np.uint64))
        with np.errstate(over="ignore"):
            h = _mix(np.array([self.session_seed & (2**64 - 1)], dtype=np.uint64))
            h = _mix(h ^ _U64(zlib.crc32(var.encode())))
            h = _mix(h ^ _U64(block))
            h = _mix(h ^ trials)[:, None]
            return _mix(h ^ np.arange(n, dtype=np.uint64)[None, :])

    def bits(self, var: str, block: int, n: int, trials=0) -> np.ndarray:
        return (self._words(var, block, n, trials) >> _U64(63)).astype(np.uint8)

    def uniform(self, var: str, block: int, n: int, trials=0) -> np.ndarray:
        return (self._words(var, block, n, trials) >> _U64(11)).astype(np.float64) / 2.0**53


# --------------------------------------------------------------------------
# block plumbing


def _batch(a, dtype=np.uint8) -> tuple[np.ndarray, bool]:
    a = np.asarray(a, dtype=dtype)
    single = a.ndim == 1
    return (a[None] if single else a), single


def _trials(trials, b: int) -> np.ndarray:
    return np.arange(b) if trials is None else np.asarray(trials)


class _Block:
    """Assignment of every position of one block to a value or a context."""

    def __init__(self, b: int, n: int):
        self.b, self.n = b, n
        self.rule = np.full(n, GIVEN)
        self.given = np.zeros((b, n), dtype=np.uint8)
        self.done = np.zeros(n, dtype=bool)
        self.threshold = None

    def _mark(self, idx):
        if np.any(self.done[idx]):
            raise AssertionError("position assigned twice")
        self.done[idx] = True

    def give(self, idx, values=0):
        self._mark(idx)
        self.given[:, idx] = values

    def decide(self, idx, context: int, rounding: np.ndarray | None = None):
        self._mark(idx)
        self.rule[idx] = context
        if rounding is not None:
            if self.threshold is None:
                self.threshold = np.full((self.b, self.n), 0.5)
            self.threshold[:, idx] = rounding[:, idx]

    def run(self, contexts) -> tuple[np.ndarray, np.ndarray]:
        if not self.done.all():
            raise AssertionError("unassigned positions in block")
        leaves = np.empty((self.b, len(contexts), self.n, 2))
        for c, (pw, side) in enumerate(contexts):
            leaves[:, c] = pw.leaves(side, self.n)
        return sc_run(leaves, self.rule, self.given, threshold=self.threshold)


class _Reader:
    def __init__(self, msg: np.ndarray, expected: int, what: str):
        if msg.shape[1] != expected:
            raise ValueError(f"{what}: message has {msg.shape[1]} bits, layout carries {expected}")
        self.msg, self.pos = msg, 0

    def take(self, count: int) -> np.ndarray:
        out = self.msg[:, self.pos:self.pos + count]
        self.pos += count
        return out


class _Codec:
    """Shared options of all codes."""

    fd_rounding: bool = False

    def _rounding(self, shared: SharedRandomness, var: str, j: int, n: int, trials):
        if not self.fd_rounding:
            return None
        return shared.uniform(var + "/round", j, n, trials)


# --------------------------------------------------------------------------
# compression


def compress(x, report: IndexSetReport) -> np.ndarray:
    """Keep u = x G_n on the complement of the low set."""
    x, single = _batch(x)
    if x.shape[1] != report.n:
        raise ValueError("source block length does not match the report")
    keep = np.setdiff1d(np.arange(report.n), report.low_set)
    out = polar_transform(x)[:, keep]
    return out[0] if single else out


def decompress(codeword, report: IndexSetReport, pairwise: PairwiseJoint, side=None) -> np.ndarray:
    """Argmax-decide the low-set positions given the kept ones (and the side sequence)."""
    cw, single = _batch(codeword)
    n = report.n
    keep = np.setdiff1d(np.arange(n), report.low_set)
    if cw.shape[1] != keep.size:
        raise ValueError("codeword length does not match the report")
    if side is None:
        ctx = (pairwise if pairwise.side_size == 1 else pairwise.marginalized(), None)
    else:
        side_arr, _ = _batch(side, np.int64)
        ctx = (pairwise, side_arr)
    blk = _Block(cw.shape[0], n)
    blk.give(keep, cw)
    blk.decide(report.low_set, 0)
    _, x = blk.run([ctx])
    return x[0] if single else x


# --------------------------------------------------------------------------
# point-to-point coding


@dataclass(frozen=True, eq=False)
class P2PCode(_Codec):
    """Asymmetric-channel polar code: I = H_X ∩ L_{X|Y}, F_d = L_X, F_r the rest."""

    n: int
    info: np.ndarray
    f_r: np.ndarray
    f_d: np.ndarray
    pw_x: PairwiseJoint
    pw_xy: PairwiseJoint
    fd_rounding: bool = False

    @classmethod
    def from_reports(cls, report_x: IndexSetReport, report_xy: IndexSetReport,
                     pw_xy: PairwiseJoint, fd_rounding: bool = False) -> "P2PCode":
        n = report_x.n
        info = np.intersect1d(np.setdiff1d(report_x.high_set, report_x.low_set), report_xy.low_set)
        f_d = report_x.low_set
        f_r = np.setdiff1d(np.setdiff1d(np.arange(n), f_d), info)
        return cls(n, info, f_r, f_d, pw_xy.marginalized(), pw_xy, fd_rounding)

    @property
    def payload(self) -> int:
        return int(self.info.size)


def p2p_encode(message, code: P2PCode, shared: SharedRandomness, trials=None, block: int = 0):
    msg, single = _batch(message)
    b, n = msg.shape[0], code.n
    tr = _trials(trials, b)
    if msg.shape[1] != code.payload:
        raise ValueError(f"message has {msg.shape[1]} bits, code carries {code.payload}")
    blk = _Block(b, n)
    blk.give(code.info, msg)
    blk.give(code.f_r, shared.bits("p2p", block, n, tr)[:, code.f_r])
    blk.decide(code.f_d, 0, code._rounding(shared, "p2p", block, n, tr))
    _, x = blk.run([(code.pw_x, None)])
    return x[0] if single else x


def p2p_decode(y, code: P2PCode, shared: SharedRandomness, trials=None, block: int = 0):
    y, single = _batch(y, np.int64)
    b, n = y.shape[0], code.n
    tr = _trials(trials, b)
    blk = _Block(b, n)
    blk.give(code.f_r, shared.bits("p2p", block, n, tr)[:, code.f_r])
    blk.decide(code.f_d, 0, code._rounding(shared, "p2p", block, n, tr))
    blk.decide(code.info, 1)
    u, _ = blk.run([(code.pw_x, None), (code.pw_xy, y)])
    out = u[:, code.info]
    return out[0] if single else out


# --------------------------------------------------------------------------
# chained decoders


@dataclass
class ChainState:
    """Progress of one chained decode: mandated order and bits carried between blocks."""

    layout: ChainingLayout
    order: list
    position: int = 0
    carried: dict = field(default_factory=dict)

    @property
    def block_index(self) -> int | None:
        return self.order[self.position] if self.position < len(self.order) else None


class ChainDecoder:
    """Decode a chain block by block in the order the scheme mandates."""

    def __init__(self, code, user: int, shared: SharedRandomness, trials, order):
        if user not in (1, 2):
            raise ValueError("user must be 1 or 2")
        self.code, self.user, self.shared = code, user, shared
        self.trials = trials
        self.state = ChainState(code.layout, list(order))
        self.u_hat: dict = {}
        self.payload: dict = {}

    def decode_block(self, j: int, y) -> None:
        expected = self.state.block_index
        if expected is None or j != expected:
            raise ChainOrderError(f"user {self.user}: expected block {expected}, got {j}")
        y = np.asarray(y, dtype=np.int64)
        if self.trials is None:
            self.trials = np.arange(y.shape[0])
        self._decode(j, y)
        self.state.position += 1

    def decode(self, y_blocks):
        y, single = _batch_blocks(y_blocks)
        if self.trials is None:
            self.trials = np.arange(y.shape[0])
        for j in list(self.state.order[self.state.position:]):
            self.decode_block(j, y[:, j])
        out = self.result()
        return _unbatch(out, single)

    def _collect(self, name: str) -> np.ndarray:
        blocks = self.payload.get(name, {})
        parts = [blocks[j] for j in sorted(blocks)]
        if not parts:
            return np.zeros((len(self.trials), 0), dtype=np.uint8)
        return np.concatenate(parts, axis=1)

    def _store(self, name: str, j: int, bits: np.ndarray):
        self.payload.setdefault(name, {})[j] = bits

    def _check_complete(self):
        if self.state.block_index is not None:
            raise ChainOrderError("chain not fully decoded")

    def _decode(self, j, y):
        raise NotImplementedError

    def result(self):
        raise NotImplementedError


def _batch_blocks(y):
    y = np.asarray(y, dtype=np.int64)
    if y.ndim == 2:
        return y[None], True
    if y.ndim != 3:
        raise ValueError("expected blocks of shape (k, n) or (B, k, n)")
    return y, False


def _unbatch(out, single):
    if not single:
        return out
    if isinstance(out, tuple):
        return tuple(o[0] for o in out)
    return out[0]


# --------------------------------------------------------------------------
# chained cloud variable (superposition U2, Marton U0)


class _Cloud:
    """Cloud chain shared by both receivers.

    ``fwd`` is the decodable-only set of the receiver decoding forward,
    repeated in ``R`` (inside the other receiver's set) of the next block;
    ``B`` is the remainder of that other set, filled with payload from block
    2 on and carried for the forward receiver by a satellite variable.
    """

    def __init__(self, layout: ChainingLayout, var: str = "cloud"):
        s, self.k, self.n, self.var = layout.sets, layout.k, layout.n, var
        full = layout.meta.get("corner", "full") == "full"
        self.icap, self.R, self.B = s["Icap"], s["R2"], s["B2"]
        self.fwd = s["D1"] if full else s["D2"]
        self.fd, self.fr = s["Fd2"], s["Fr2"]
        self.fwd_user = 1 if full else 2

    def payload(self, j: int) -> np.ndarray:
        parts = [self.icap]
        if j < self.k - 1:
            parts.append(self.fwd)
        if j > 0:
            parts.append(self.B)
        return np.unique(np.concatenate(parts))

    def capacity(self) -> int:
        return sum(self.payload(j).size for j in range(self.k))

    def encode(self, bits: _Reader, shared, trials, pw_marg, rounding) -> list:
        b, n = bits.msg.shape[0], self.n
        us = []
        for j in range(self.k):
            blk = _Block(b, n)
            blk.decide(self.fd, 0, rounding(j))
            blk.give(self.fr, shared.bits(self.var, j, n, trials)[:, self.fr])
            pay = self.payload(j)
            blk.give(pay, bits.take(pay.size))
            if j == self.k - 1:
                blk.give(self.fwd, 0)
            if j == 0:
                blk.give(self.R, 0)
                blk.give(self.B, 0)
            else:
                blk.give(self.R, us[-1][:, self.fwd])
            u, _ = blk.run([(pw_marg, None)])
            us.append(u)
        return us

    def decode(self, j: int, role: str, carried: dict, contexts, shared, trials, rounding):
        """One cloud block; ``contexts`` = [marginal, with own channel output]."""
        b, n = contexts[1][1].shape[0], self.n
        blk = _Block(b, n)
        blk.decide(self.fd, 0, rounding(j))
        blk.give(self.fr, shared.bits(self.var, j, n, trials)[:, self.fr])
        blk.decide(self.icap, 1)
        if role == "fwd":
            if j == self.k - 1:
                blk.give(self.fwd, 0)
            else:
                blk.decide(self.fwd, 1)
            if j == 0:
                blk.give(self.R, 0)
                blk.give(self.B, 0)
            else:
                blk.give(self.R, carried["R"])
                blk.give(self.B, carried.get("B", 0))
        else:
            if j == 0:
                blk.give(self.R, 0)
                blk.give(self.B, 0)
            else:
                blk.decide(self.R, 1)
                blk.decide(self.B, 1)
            if j == self.k - 1:
                blk.give(self.fwd, 0)
            else:
                blk.give(self.fwd, carried["fwd"])
        u, v = blk.run(contexts)
        if role == "fwd":
            carried["R"] = u[:, self.fwd]
        else:
            carried["fwd"] = u[:, self.R]
        return u, v


# --------------------------------------------------------------------------
# superposition


class SuperpositionCode(_Codec):
    """Chained superposition code: cloud U2 = V G_n, satellite U1 = X G_n."""

    def __init__(self, layout: ChainingLayout, setup: BroadcastSetup, fd_rounding: bool = False):
        if layout.scheme != "superposition":
            raise ValueError("layout is not a superposition layout")
        self.layout, self.setup, self.fd_rounding = layout, setup, fd_rounding
        self.cloud = _Cloud(layout)
        self.pw = {"V": setup.pairwise("V"), "V|Y1": setup.pairwise("V", ("Y1",)),
                   "V|Y2": setup.pairwise("V", ("Y2",)), "X|V": setup.pairwise("X", ("V",)),
                   "X|V,Y1": setup.pairwise("X", ("V", "Y1"))}

    def satellite_payload(self, j: int) -> np.ndarray:
        s = self.layout.sets
        return s["I1"] if j == self.layout.k - 1 else s["I1free"]

    def payload_sizes(self) -> dict:
        k = self.layout.k
        return {1: sum(self.satellite_payload(j).size for j in range(k)),
                2: self.cloud.capacity()}

    def encode(self, msg1, msg2, shared: SharedRandomness, trials=None):
        m1, single = _batch(msg1)
        m2, _ = _batch(msg2)
        b, n, k, s = m1.shape[0], self.layout.n, self.layout.k, self.layout.sets
        tr = _trials(trials, b)
        sizes = self.payload_sizes()
        r2 = _Reader(m2, sizes[2], "user 2")
        r1 = _Reader(m1, sizes[1], "user 1")
        u2 = self.cloud.encode(r2, shared, tr, self.pw["V"],
                               lambda j: self._rounding(shared, "cloud", j, n, tr))
        xs = []
        for j in range(k):
            v = polar_transform(u2[j])
            blk = _Block(b, n)
            blk.decide(s["Fd1"], 0, self._rounding(shared, "satellite", j, n, tr))
            blk.give(s["Fr1"], shared.bits("satellite", j, n, tr)[:, s["Fr1"]])
            pay = self.satellite_payload(j)
            blk.give(pay, r1.take(pay.size))
            if j < k - 1:
                blk.give(s["B1"], u2[j + 1][:, s["B2"]])
            _, x = blk.run([(self.pw["X|V"], v)])
            xs.append(x)
        x = np.stack(xs, axis=1)
        return x[0] if single else x

    def decoder(self, user: int, shared: SharedRandomness, trials=None) -> ChainDecoder:
        return _SuperpositionDecoder(self, user, shared, trials)

    def decode(self, user: int, y_blocks, shared: SharedRandomness, trials=None):
        return self.decoder(user, shared, trials).decode(y_blocks)


class _SuperpositionDecoder(ChainDecoder):
    def __init__(self, code: SuperpositionCode, user, shared, trials):
        k = code.layout.k
        self.role = "fwd" if user == code.cloud.fwd_user else "bwd"
        order = range(k) if self.role == "fwd" else range(k - 1, -1, -1)
        super().__init__(code, user, shared, trials, order)

    def _decode(self, j, y):
        c, s, n, tr = self.code, self.code.layout.sets, self.code.layout.n, self.trials
        pw = c.pw[f"V|Y{self.user}"]
        u2, v = c.cloud.decode(j, self.role, self.state.carried, [(c.pw["V"], None), (pw, y)],
                               self.shared, tr, lambda jj: c._rounding(self.shared, "cloud", jj, n, tr))
        self.u_hat.setdefault("cloud", {})[j] = u2
        self._store("cloud", j, u2[:, c.cloud.payload(j)])
        if self.user != 1:
            return
        blk = _Block(y.shape[0], n)
        blk.decide(s["Fd1"], 0, c._rounding(self.shared, "satellite", j, n, tr))
        blk.give(s["Fr1"], self.shared.bits("satellite", j, n, tr)[:, s["Fr1"]])
        blk.decide(s["I1"], 1)
        side = c.pw["X|V,Y1"].side_index(v, y)
        u1, _ = blk.run([(c.pw["X|V"], v), (c.pw["X|V,Y1"], side)])
        self.u_hat.setdefault("satellite", {})[j] = u1
        self.state.carried["B"] = u1[:, s["B1"]]
        self._store("satellite", j, u1[:, c.satellite_payload(j)])

    def result(self):
        self._check_complete()
        return self._collect("satellite" if self.user == 1 else "cloud")


def superposition_encode_chain(msg1, msg2, layout, setup, shared, trials=None):
    return SuperpositionCode(layout, setup).encode(msg1, msg2, shared, trials)


def superposition_decode_chain(user, y_blocks, layout, setup, shared, trials=None):
    return SuperpositionCode(layout, setup).decode(user, y_blocks, shared, trials)


# --------------------------------------------------------------------------
# binning


class BinningCode(_Codec):
    """Chained binning code: U1 = V1 G_n coded alone, U2 = V2 G_n coded given V1."""

    def __init__(self, layout: ChainingLayout, setup: BroadcastSetup, fd_rounding: bool = False):
        if layout.scheme != "binning":
            raise ValueError("layout is not a binning layout")
        self.layout, self.setup, self.fd_rounding = layout, setup, fd_rounding
        k = layout.k
        self.backward = layout.meta.get("direction", "backward") == "backward"
        # block where user 2 starts (V1 known there) and the block encoded first
        self.start = k - 1 if self.backward else 0
        self.first = 0 if self.backward else k - 1
        self.pw = {"V1": setup.pairwise("V1"), "V1|Y1": setup.pairwise("V1", ("Y1",)),
                   "V2": setup.pairwise("V2"), "V2|V1": setup.pairwise("V2", ("V1",)),
                   "V2|Y2": setup.pairwise("V2", ("Y2",))}

    def source(self, j: int) -> int:
        """Block whose critical bits are stored in R of block j."""
        return j - 1 if self.backward else j + 1

    def plain_payload(self, j: int) -> np.ndarray:
        return np.zeros(0, dtype=np.int64) if j == self.start else self.layout["I1"]

    def binned_payload(self, j: int) -> np.ndarray:
        return self.layout["I2"] if j == self.first else self.layout["I2free"]

    def payload_sizes(self) -> dict:
        k = self.layout.k
        return {1: sum(self.plain_payload(j).size for j in range(k)),
                2: sum(self.binned_payload(j).size for j in range(k))}

    def plain_block(self, j, bits, shared, tr, b):
        s, n = self.layout.sets, self.layout.n
        blk = _Block(b, n)
        blk.decide(s["Fd1"], 0, self._rounding(shared, "plain", j, n, tr))
        blk.give(s["Fr1"], shared.bits("plain", j, n, tr)[:, s["Fr1"]])
        blk.give(s["I1"], bits)
        return blk.run([(self.pw["V1"], None)])

    def encode(self, msg1, msg2, shared: SharedRandomness, trials=None):
        m1, single = _batch(msg1)
        m2, _ = _batch(msg2)
        b, n, k, s = m1.shape[0], self.layout.n, self.layout.k, self.layout.sets
        tr = _trials(trials, b)
        sizes = self.payload_sizes()
        r1, r2 = _Reader(m1, sizes[1], "user 1"), _Reader(m2, sizes[2], "user 2")
        v1 = []
        for j in range(k):
            bits = 0 if j == self.start else r1.take(s["I1"].size)
            v1.append(self.plain_block(j, bits, shared, tr, b)[1])
        order = range(k) if self.backward else range(k - 1, -1, -1)
        payloads = {}
        u2, v2 = {}, {}
        for j in range(k):
            payloads[j] = r2.take(self.binned_payload(j).size)
        for j in order:
            blk = _Block(b, n)
            blk.decide(s["Fd2"], 0, self._rounding(shared, "binned", j, n, tr))
            blk.give(s["Fr2"], shared.bits("binned", j, n, tr)[:, s["Fr2"]])
            blk.decide(np.union1d(s["Fout2"], s["Fcr2"]), 1)
            blk.give(self.binned_payload(j), payloads[j])
            if j != self.first:
                blk.give(s["R"], u2[self.source(j)][:, s["Fcr2"]])
            u2[j], v2[j] = blk.run([(self.pw["V2"], None), (self.pw["V2|V1"], v1[j])])
        x = np.stack([self.setup.model.channel_input((v1[j], v2[j])) for j in range(k)], axis=1)
        return x[0] if single else x

    def decoder(self, user: int, shared: SharedRandomness, trials=None) -> ChainDecoder:
        return _BinningDecoder(self, user, shared, trials)

    def decode(self, user: int, y_blocks, shared: SharedRandomness, trials=None):
        return self.decoder(user, shared, trials).decode(y_blocks)


class _BinningDecoder(ChainDecoder):
    def __init__(self, code: BinningCode, user, shared, trials):
        k = code.layout.k
        if user == 1 or not code.backward:
            order = range(k)
        else:
            order = range(k - 1, -1, -1)
        super().__init__(code, user, shared, trials, order)

    def _decode(self, j, y):
        c, s, n, tr = self.code, self.code.layout.sets, self.code.layout.n, self.trials
        b = y.shape[0]
        if self.user == 1:
            if j == c.start:
                self._store("plain", j, np.zeros((b, 0), dtype=np.uint8))
                return
            blk = _Block(b, n)
            blk.decide(s["Fd1"], 0, c._rounding(self.shared, "plain", j, n, tr))
            blk.give(s["Fr1"], self.shared.bits("plain", j, n, tr)[:, s["Fr1"]])
            blk.decide(s["I1"], 1)
            u1, _ = blk.run([(c.pw["V1"], None), (c.pw["V1|Y1"], y)])
            self.u_hat.setdefault("plain", {})[j] = u1
            self._store("plain", j, u1[:, s["I1"]])
            return
        blk = _Block(b, n)
        blk.decide(s["Fd2"], 0, c._rounding(self.shared, "binned", j, n, tr))
        blk.give(s["Fr2"], self.shared.bits("binned", j, n, tr)[:, s["Fr2"]])
        blk.decide(s["I2"], 1)
        contexts = [(c.pw["V2"], None), (c.pw["V2|Y2"], y)]
        if j == c.start:
            _, v1 = c.plain_block(j, 0, self.shared, tr, b)
            contexts.append((c.pw["V2|V1"], v1))
            blk.decide(np.union1d(s["Fout2"], s["Fcr2"]), 2)
        else:
            blk.decide(s["Fout2"], 1)
            blk.give(s["Fcr2"], self.state.carried["Fcr"])
        u2, _ = blk.run(contexts)
        self.u_hat.setdefault("binned", {})[j] = u2
        self.state.carried["Fcr"] = u2[:, s["R"]]
        self._store("binned", j, u2[:, c.binned_payload(j)])

    def result(self):
        self._check_complete()
        return self._collect("plain" if self.user == 1 else "binned")


def binning_encode_chain(msg1, msg2, layout, setup, shared, trials=None):
    return BinningCode(layout, setup).encode(msg1, msg2, shared, trials)


def binning_decode_chain(user, y_blocks, layout, setup, shared, trials=None):
    return BinningCode(layout, setup).decode(user, y_blocks, shared, trials)


# --------------------------------------------------------------------------
# Marton / MGP


class MartonCode(_Codec):
    """Chained Marton code with an optional common message.

    U0 = V G_n is the cloud (user 1 forward, user 2 backward), U2 = V2 G_n is
    coded given V (fixed zeros in block 1), and U1 = V1 G_n is coded given
    (V, V2), encoded from the last block backwards so that R_bin of block j
    carries the critical bits of block j+1 and B1 carries B2 of block j+1.
    """

    def __init__(self, layout: ChainingLayout, setup: BroadcastSetup, fd_rounding: bool = False):
        if layout.scheme != "marton":
            raise ValueError("layout is not a Marton layout")
        self.layout, self.setup, self.fd_rounding = layout, setup, fd_rounding
        self.cloud = _Cloud(layout)
        p = setup.pairwise
        self.pw = {"V": p("V"), "V|Y1": p("V", ("Y1",)), "V|Y2": p("V", ("Y2",)),
                   "V2|V": p("V2", ("V",)), "V2|V,Y2": p("V2", ("V", "Y2")),
                   "V1|V": p("V1", ("V",)), "V1|V,V2": p("V1", ("V", "V2")),
                   "V1|V,Y1": p("V1", ("V", "Y1"))}
        # cloud payload slots in stream order, and which of them carry the common message
        k = layout.k
        in_b = np.concatenate([np.isin(self.cloud.payload(j), self.cloud.B) for j in range(k)])
        free = np.flatnonzero(~in_b)
        self.common_mask = np.zeros(in_b.size, dtype=bool)
        self.common_mask[free[:layout.meta.get("common_bits", 0)]] = True

    def binned_payload(self, j: int) -> np.ndarray:
        return self.layout["I1"] if j == self.layout.k - 1 else self.layout["I1free"]

    def plain_payload(self, j: int) -> np.ndarray:
        return np.zeros(0, dtype=np.int64) if j == 0 else self.layout["Ibin2"]

    def payload_sizes(self) -> dict:
        k = self.layout.k
        cloud = self.cloud.capacity()
        common = int(self.common_mask.sum())
        return {0: common, 1: sum(self.binned_payload(j).size for j in range(k)),
                2: cloud - common + sum(self.plain_payload(j).size for j in range(k))}

    def plain_block(self, j, bits, v, shared, tr, b):
        s, n = self.layout.sets, self.layout.n
        blk = _Block(b, n)
        blk.decide(s["Fd2b"], 0, self._rounding(shared, "plain", j, n, tr))
        blk.give(s["Fr2b"], shared.bits("plain", j, n, tr)[:, s["Fr2b"]])
        blk.give(s["Ibin2"], bits)
        return blk.run([(self.pw["V2|V"], v)])

    def encode(self, msg0, msg1, msg2, shared: SharedRandomness, trials=None):
        m1, single = _batch(msg1)
        b = m1.shape[0]
        m0 = _batch(msg0)[0] if np.size(msg0) else np.zeros((b, 0), dtype=np.uint8)
        m2, _ = _batch(msg2)
        n, k, s = self.layout.n, self.layout.k, self.layout.sets
        tr = _trials(trials, b)
        sizes = self.payload_sizes()
        if m0.shape[1] != sizes[0]:
            raise ValueError(f"common message has {m0.shape[1]} bits, layout carries {sizes[0]}")
        if m2.shape[1] != sizes[2]:
            raise ValueError(f"user 2: message has {m2.shape[1]} bits, layout carries {sizes[2]}")
        ncloud = self.common_mask.size
        stream = np.zeros((b, ncloud), dtype=np.uint8)
        stream[:, self.common_mask] = m0
        stream[:, ~self.common_mask] = m2[:, :ncloud - sizes[0]]
        r2 = _Reader(m2[:, ncloud - sizes[0]:], sizes[2] - (ncloud - sizes[0]), "user 2")
        u0 = self.cloud.encode(_Reader(stream, ncloud, "cloud"), shared, tr, self.pw["V"],
                               lambda j: self._rounding(shared, "cloud", j, n, tr))
        v = [polar_transform(u) for u in u0]
        v2 = []
        for j in range(k):
            bits = 0 if j == 0 else r2.take(s["Ibin2"].size)
            v2.append(self.plain_block(j, bits, v[j], shared, tr, b)[1])
        r1 = _Reader(m1, sizes[1], "user 1")
        payloads = [r1.take(self.binned_payload(j).size) for j in range(k)]
        u1, v1 = {}, {}
        for j in range(k - 1, -1, -1):
            blk = _Block(b, n)
            blk.decide(s["Fd1"], 0, self._rounding(shared, "binned", j, n, tr))
            blk.give(s["Fr1"], shared.bits("binned", j, n, tr)[:, s["Fr1"]])
            blk.decide(np.union1d(s["Fout1"], s["Fcr1"]), 1)
            blk.give(self.binned_payload(j), payloads[j])
            if j < k - 1:
                blk.give(s["B1"], u0[j + 1][:, s["B2"]])
                blk.give(s["Rbin"], u1[j + 1][:, s["Fcr1"]])
            side = self.pw["V1|V,V2"].side_index(v[j], v2[j])
            u1[j], v1[j] = blk.run([(self.pw["V1|V"], v[j]), (self.pw["V1|V,V2"], side)])
        x = np.stack([self.setup.model.channel_input((v[j], v1[j], v2[j])) for j in range(k)], axis=1)
        return x[0] if single else x

    def decoder(self, user: int, shared: SharedRandomness, trials=None) -> ChainDecoder:
        return _MartonDecoder(self, user, shared, trials)

    def decode(self, user: int, y_blocks, shared: SharedRandomness, trials=None):
        return self.decoder(user, shared, trials).decode(y_blocks)


class _MartonDecoder(ChainDecoder):
    def __init__(self, code: MartonCode, user, shared, trials):
        k = code.layout.k
        order = range(k) if user == 1 else range(k - 1, -1, -1)
        super().__init__(code, user, shared, trials, order)

    def _decode(self, j, y):
        c, s, n, tr = self.code, self.code.layout.sets, self.code.layout.n, self.trials
        b = y.shape[0]
        role = "fwd" if self.user == 1 else "bwd"
        carried = self.state.carried
        u0, v = c.cloud.decode(j, role, carried, [(c.pw["V"], None), (c.pw[f"V|Y{self.user}"], y)],
                               self.shared, tr, lambda jj: c._rounding(self.shared, "cloud", jj, n, tr))
        self.u_hat.setdefault("cloud", {})[j] = u0
        self._store("cloud", j, u0[:, c.cloud.payload(j)])
        if self.user == 2:
            blk = _Block(b, n)
            blk.decide(s["Fd2b"], 0, c._rounding(self.shared, "plain", j, n, tr))
            blk.give(s["Fr2b"], self.shared.bits("plain", j, n, tr)[:, s["Fr2b"]])
            if j == 0:
                blk.give(s["Ibin2"], 0)
            else:
                blk.decide(s["Ibin2"], 1)
            pw = c.pw["V2|V,Y2"]
            u2, _ = blk.run([(c.pw["V2|V"], v), (pw, pw.side_index(v, y))])
            self.u_hat.setdefault("plain", {})[j] = u2
            self._store("plain", j, u2[:, c.plain_payload(j)])
            return
        blk = _Block(b, n)
        blk.decide(s["Fd1"], 0, c._rounding(self.shared, "binned", j, n, tr))
        blk.give(s["Fr1"], self.shared.bits("binned", j, n, tr)[:, s["Fr1"]])
        blk.decide(s["I1"], 1)
        pw = c.pw["V1|V,Y1"]
        contexts = [(c.pw["V1|V"], v), (pw, pw.side_index(v, y))]
        if j == 0:
            _, v2 = c.plain_block(0, 0, v, self.shared, tr, b)
            pw2 = c.pw["V1|V,V2"]
            contexts.append((pw2, pw2.side_index(v, v2)))
            blk.decide(np.union1d(s["Fout1"], s["Fcr1"]), 2)
        else:
            blk.decide(s["Fout1"], 1)
            blk.give(s["Fcr1"], carried["Fcr"])
        u1, _ = blk.run(contexts)
        self.u_hat.setdefault("binned", {})[j] = u1
        carried["Fcr"] = u1[:, s["Rbin"]]
        carried["B"] = u1[:, s["B1"]]
        self._store("binned", j, u1[:, c.binned_payload(j)])

    def result(self):
        """(common, private) message pair of this user."""
        self._check_complete()
        cloud = self._collect("cloud")
        mask = self.code.common_mask
        common = cloud[:, mask]
        if self.user == 1:
            return common, self._collect("binned")
        return common, np.concatenate([cloud[:, ~mask], self._collect("plain")], axis=1)


def marton_encode_chain(msg_common, msg1, msg2, layout, setup, shared, trials=None):
    return MartonCode(layout, setup).encode(msg_common, msg1, msg2, shared, trials)


def marton_decode_chain(user, y_blocks, layout, setup, shared, trials=None):
    return MartonCode(layout, setup).decode(user, y_blocks, shared, trials)


def make_code(layout: ChainingLayout, setup: BroadcastSetup, fd_rounding: bool = False):
    cls = {"superposition": SuperpositionCode, "binning": BinningCode,
           "marton": MartonCode}[layout.scheme]
    return cls(layout, setup, fd_rounding)


@dataclass
class TransmissionTrace:
    """Channel inputs, outputs and decoded messages of a batch of chained transmissions."""

    x: np.ndarray                       # (B, k, n)
    y: dict                             # user -> (B, k, n)
    sent: dict                          # message name -> (B, L)
    decoded: dict                       # message name -> (B, L) as seen by its receiver
    errors: dict                        # user -> bool (B,)

    def __post_init__(self):
        total = self.x.shape[-1] * self.x.shape[-2]
        if any(v.shape[-1] * v.shape[-2] != total for v in self.y.values()):
            raise ValueError("all traces must have length n k")
