"""Monte-Carlo block-error simulation of the codes in :mod:`polarbc.schemes`.

Every trial draws its messages and channel noise from its own generator,
keyed by (seed, stream name, trial index), so results do not depend on how
trials are batched or spread over threads.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.stats import binomtest

from .probability import DMC, BroadcastSetup
from .schemes import MartonCode, P2PCode, SharedRandomness, TransmissionTrace, p2p_decode, p2p_encode


def trial_rng(seed: int, stream: str, trial: int) -> np.random.Generator:
    key = (zlib.crc32(stream.encode()), int(trial))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def derived_seed(seed: int, stream: str) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(stream.encode()),))
    return int(ss.generate_state(1, np.uint64)[0])


def _messages(seed: int, sizes: dict, trials: np.ndarray) -> dict:
    out = {}
    for name, size in sizes.items():
        rows = [trial_rng(seed, f"message{name}", t).integers(0, 2, size, dtype=np.uint8)
                for t in trials]
        out[name] = np.array(rows, dtype=np.uint8).reshape(len(trials), size)
    return out


def _noise(seed: int, channel: DMC, user: int, x: np.ndarray, trials: np.ndarray) -> np.ndarray:
    return np.stack([channel.sample(x[b], trial_rng(seed, f"noise{user}", t))
                     for b, t in enumerate(trials)])


def run_broadcast_batch(code, setup: BroadcastSetup, seed: int, shared: SharedRandomness,
                        trials: np.ndarray) -> TransmissionTrace:
    trials = np.asarray(trials)
    sizes = code.payload_sizes()
    msgs = _messages(seed, sizes, trials)
    if isinstance(code, MartonCode):
        x = code.encode(msgs[0], msgs[1], msgs[2], shared, trials)
    else:
        x = code.encode(msgs[1], msgs[2], shared, trials)
    y, decoded, errors = {}, {}, {}
    for user in (1, 2):
        y[user] = _noise(seed, setup.channel(user), user, x, trials)
        out = code.decode(user, y[user], shared, trials)
        if isinstance(code, MartonCode):
            common, private = out
            decoded[f"0@{user}"], decoded[user] = common, private
            errors[user] = np.any(common != msgs[0], axis=1) | np.any(private != msgs[user], axis=1)
        else:
            decoded[user] = out
            errors[user] = np.any(out != msgs[user], axis=1)
    return TransmissionTrace(x, y, msgs, decoded, errors)


def run_p2p_batch(code: P2PCode, channel: DMC, seed: int, shared: SharedRandomness,
                  trials: np.ndarray) -> dict:
    trials = np.asarray(trials)
    msg = _messages(seed, {1: code.payload}, trials)[1]
    x = p2p_encode(msg, code, shared, trials)
    y = _noise(seed, channel, 1, x, trials)
    out = p2p_decode(y, code, shared, trials)
    return {1: np.any(out != msg, axis=1)}


def simulate(batch_fn, trials: int, batch: int = 100, workers: int = 1) -> dict:
    """Run ``batch_fn(trial_indices) -> {user: errors}`` over all trials; per-user error flags."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    chunks = [np.arange(s, min(s + batch, trials)) for s in range(0, trials, batch)]

    def work(idx):
        out = batch_fn(idx)
        return out.errors if isinstance(out, TransmissionTrace) else out

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    users = sorted(parts[0])
    return {u: np.concatenate([p[u] for p in parts]) for u in users}


def bler_interval(errors: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a block error rate."""
    ci = binomtest(int(errors), int(trials)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)
