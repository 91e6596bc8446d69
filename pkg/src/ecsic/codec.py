"""Z-channel model and the practical error-correction codes used for
collision signalling: repetition, flip, and a modified (7,4) Hamming code
(inner Hamming, outer per-symbol repetition).

Channel-bit convention: symbol 1 means "observed reward was zero" (possible
collision), symbol 0 means "reward was positive" (certainly no collision).
A transmitted 1 (forced collision) is always received as 1; a transmitted 0
flips to 1 with the crossover probability of the receiver's listening arm.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize

SCHEMES = ("repetition", "flip", "hamming")

# Generator / parity-check tables of the inner (7,4) Hamming code.
HAMMING_G = np.array(
    [
        [1, 1, 0, 1],
        [1, 0, 1, 1],
        [1, 0, 0, 0],
        [0, 1, 1, 1],
        [0, 1, 0, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
    ],
    dtype=np.uint8,
)
HAMMING_H = np.array(
    [
        [1, 0, 1, 0, 1, 0, 1],
        [0, 1, 1, 0, 0, 1, 1],
        [0, 0, 0, 1, 1, 1, 1],
    ],
    dtype=np.uint8,
)
# Positions of the 4 payload bits inside a 7-bit inner codeword.
_HAMMING_DATA_POS = np.array([2, 4, 5, 6])


def z_capacity(q: float) -> float:
    """Capacity in bits per use of a Z-channel with 0->1 crossover q."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"crossover probability must be in [0, 1], got {q}")
    if q == 0.0:
        return 1.0
    if q == 1.0:
        return 0.0
    return float(np.log2(1.0 + (1.0 - q) * q ** (q / (1.0 - q))))


def _gallager_e0(rho, p, q):
    """Gallager E0 (base-2) for the Z-channel, input distribution P(x=0)=p."""
    rho = np.asarray(rho, dtype=float)
    p = np.asarray(p, dtype=float)
    y0 = p ** (1.0 + rho) * (1.0 - q)
    y1 = (p * q ** (1.0 / (1.0 + rho)) + (1.0 - p)) ** (1.0 + rho)
    return -np.log2(y0 + y1)


def error_exponent(q: float, rate: float, grid: int = 201) -> float:
    """Random-coding error exponent E_r(rate) for the Z-channel, in bits.

    Maximizes E0(rho, p) - rho*rate over rho in [0,1] and the input
    distribution p by a grid search followed by local refinement.
    """
    if not 0.0 <= q < 1.0:
        raise ValueError(f"crossover probability must be in [0, 1), got {q}")
    cap = z_capacity(q)
    if rate < 0 or rate > cap + 1e-12:
        raise ValueError(f"rate {rate} outside [0, capacity={cap}]")
    rhos = np.linspace(0.0, 1.0, grid)
    ps = np.linspace(0.0, 1.0, grid)
    vals = _gallager_e0(rhos[:, None], ps[None, :], q) - rhos[:, None] * rate
    i, j = np.unravel_index(np.argmax(vals), vals.shape)

    def neg(x):
        return -(float(_gallager_e0(x[0], x[1], q)) - x[0] * rate)

    res = optimize.minimize(
        neg,
        x0=[rhos[i], ps[j]],
        method="L-BFGS-B",
        bounds=[(0.0, 1.0), (0.0, 1.0)],
    )
    best = max(float(vals[i, j]), -float(res.fun))
    return max(best, 0.0)


def optimal_reference_length(q_bits: int, horizon: int, mu_min: float) -> float:
    """Block length of the (non-constructive) capacity-achieving reference
    code: max{Q / C_Z(1-mu_min), ln(T) / E_r(C_Z(1-mu_min))}.

    Reported as a reference number only; never used as an executable codec.
    """
    q = 1.0 - mu_min
    cap = z_capacity(q)
    exponent = error_exponent(q, cap / 2.0)
    return max(q_bits / cap, math.log(horizon) / exponent)


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Big-endian bit vector of `value` in `width` bits."""
    if not 0 <= value < 2**width:
        raise ValueError(f"value {value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits: np.ndarray) -> int:
    out = 0
    for b in np.asarray(bits).astype(int):
        out = (out << 1) | (b & 1)
    return out


def quantize(x: float, q_bits: int) -> np.ndarray:
    """Quantize x in [0,1] to a Q-bit message: floor(x * 2^Q) clamped to 2^Q - 1."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"value to quantize must be in [0, 1], got {x}")
    return int_to_bits(quantize_value(x, q_bits), q_bits)


def quantize_value(x: float, q_bits: int) -> int:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"value to quantize must be in [0, 1], got {x}")
    return min(int(math.floor(x * 2**q_bits)), 2**q_bits - 1)


def dequantize(bits: np.ndarray) -> float:
    return bits_to_int(bits) / 2 ** len(bits)


def dequantize_value(value: int, q_bits: int) -> float:
    return value / 2**q_bits


def _padded_q(scheme: str, q_bits: int) -> int:
    if scheme == "flip":
        return q_bits + (q_bits % 2)
    if scheme == "hamming":
        return q_bits + (-q_bits) % 4
    return q_bits


def code_length(scheme: str, q_bits: int, horizon: int, mu_min: float):
    """Per-bit repetition count A and total codeword length N for a Q-bit
    message, sized so the word error rate is below 1/T at crossover
    1 - mu_min. Natural logarithm throughout.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if q_bits < 1 or horizon < 1:
        raise ValueError("q_bits and horizon must be >= 1")
    if not 0.0 < mu_min <= 1.0:
        raise ValueError(f"mu_min must be in (0, 1], got {mu_min}")
    if scheme == "repetition":
        a = math.ceil(math.log(q_bits * horizon) / mu_min)
    elif scheme == "flip":
        a = math.ceil(math.log(q_bits * horizon / 2) / mu_min)
    else:
        # Integral per-symbol count; conservative vs. the fractional A = ceil(.)/2.
        a = math.ceil(math.log(7 * q_bits * horizon / 8) / (2 * mu_min))
    return a, codeword_length(scheme, q_bits, a)


def codeword_length(scheme: str, q_bits: int, a: int) -> int:
    """Channel symbols per Q-bit message for a given per-bit count A."""
    qp = _padded_q(scheme, q_bits)
    if scheme == "hamming":
        return (7 * qp // 4) * a
    return qp * a


def encode(scheme: str, bits: np.ndarray, a: int) -> np.ndarray:
    """Encode a message bit vector into channel symbols."""
    if a < 1:
        raise ValueError("repetition count must be >= 1")
    bits = np.asarray(bits, dtype=np.uint8)
    if scheme == "repetition":
        return np.repeat(bits, a)
    if scheme == "flip":
        if len(bits) % 2:
            bits = np.append(bits, 0)
        # Each pair maps to its complement, each half repeated A times.
        return np.repeat(1 - bits, a)
    if scheme == "hamming":
        pad = (-len(bits)) % 4
        if pad:
            bits = np.append(bits, np.zeros(pad, dtype=np.uint8))
        words = bits.reshape(-1, 4)
        coded = (words @ HAMMING_G.T) % 2
        return np.repeat(coded.astype(np.uint8).ravel(), a)
    raise ValueError(f"unknown scheme {scheme!r}")


def decode(scheme: str, observed: np.ndarray, q_bits: int, a: int) -> np.ndarray:
    """Decode observed channel symbols back to a Q-bit message.

    Decoding is total: a corrupted word yields a (possibly wrong) message,
    never an error.
    """
    observed = np.asarray(observed, dtype=np.uint8)
    expected = codeword_length(scheme, q_bits, a)
    if observed.shape[0] != expected:
        raise ValueError(f"observed length {observed.shape[0]} != expected {expected}")
    if scheme == "repetition":
        return observed.reshape(q_bits, a).all(axis=1).astype(np.uint8)
    if scheme == "flip":
        qp = _padded_q(scheme, q_bits)
        halves = observed.reshape(qp, a).all(axis=1)
        return (1 - halves.astype(np.uint8))[:q_bits]
    if scheme == "hamming":
        qp = _padded_q(scheme, q_bits)
        inner = observed.reshape(qp // 4, 7, a).all(axis=2).astype(np.uint8)
        decoded = _hamming_correct(inner)
        return decoded.ravel()[:q_bits]
    raise ValueError(f"unknown scheme {scheme!r}")


def _hamming_correct(words: np.ndarray) -> np.ndarray:
    """Syndrome-decode a batch of 7-bit words; returns (n, 4) payload bits."""
    words = words.copy()
    syn = (words @ HAMMING_H.T) % 2
    pos = syn[:, 0] + 2 * syn[:, 1] + 4 * syn[:, 2]
    hit = pos > 0
    rows = np.nonzero(hit)[0]
    words[rows, pos[hit] - 1] ^= 1
    return words[:, _HAMMING_DATA_POS]


def transmit(symbols: np.ndarray, q: float, rng: np.random.Generator) -> np.ndarray:
    """Pass channel symbols through a Z-channel: 0 -> 1 with probability q."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"crossover probability must be in [0, 1], got {q}")
    symbols = np.asarray(symbols, dtype=np.uint8)
    out = symbols.copy()
    zeros = symbols == 0
    out[zeros & (rng.random(symbols.shape) < q)] = 1
    return out


def analytic_error_bound(scheme: str, q_bits: int, a: int, mu_min: float) -> float:
    """Word-error upper bound at crossover 1 - mu_min."""
    if scheme == "repetition":
        return q_bits * math.exp(-mu_min * a)
    if scheme == "flip":
        return (q_bits / 2) * math.exp(-mu_min * a)
    if scheme == "hamming":
        return (7 * q_bits / 8) * math.exp(-2 * mu_min * a)
    raise ValueError(f"unknown scheme {scheme!r}")


def _encode_batch(scheme: str, msgs: np.ndarray, a: int) -> np.ndarray:
    """Row-wise encode; row i equals encode(scheme, msgs[i], a)."""
    if scheme == "repetition":
        return np.repeat(msgs, a, axis=1)
    if scheme == "flip":
        if msgs.shape[1] % 2:
            msgs = np.hstack([msgs, np.zeros((len(msgs), 1), dtype=np.uint8)])
        return np.repeat(1 - msgs, a, axis=1)
    if scheme == "hamming":
        pad = (-msgs.shape[1]) % 4
        if pad:
            msgs = np.hstack([msgs, np.zeros((len(msgs), pad), dtype=np.uint8)])
        words = msgs.reshape(len(msgs), -1, 4)
        coded = (words @ HAMMING_G.T) % 2
        return np.repeat(coded.astype(np.uint8).reshape(len(msgs), -1), a, axis=1)
    raise ValueError(f"unknown scheme {scheme!r}")


def _decode_batch(scheme: str, observed: np.ndarray, q_bits: int, a: int) -> np.ndarray:
    """Row-wise decode; row i equals decode(scheme, observed[i], q_bits, a)."""
    n = len(observed)
    qp = _padded_q(scheme, q_bits)
    if scheme == "repetition":
        return observed.reshape(n, q_bits, a).all(axis=2).astype(np.uint8)
    if scheme == "flip":
        halves = observed.reshape(n, qp, a).all(axis=2)
        return (1 - halves.astype(np.uint8))[:, :q_bits]
    if scheme == "hamming":
        inner = observed.reshape(n, qp // 4, 7, a).all(axis=3).astype(np.uint8)
        flat = inner.reshape(-1, 7)
        return _hamming_correct(flat).reshape(n, -1)[:, :q_bits]
    raise ValueError(f"unknown scheme {scheme!r}")


def word_error_rate(
    scheme: str,
    q_bits: int,
    a: int,
    q: float,
    trials: int,
    rng: np.random.Generator,
    batch: int = 50000,
) -> float:
    """Monte Carlo word-error rate over uniformly random Q-bit messages."""
    errors = 0
    done = 0
    while done < trials:
        n = min(batch, trials - done)
        msgs = rng.integers(0, 2, size=(n, q_bits), dtype=np.uint8)
        coded = _encode_batch(scheme, msgs, a)
        noise = rng.random(coded.shape) < q
        observed = np.where((coded == 0) & noise, 1, coded).astype(np.uint8)
        decoded = _decode_batch(scheme, observed, q_bits, a)
        errors += int((decoded != msgs).any(axis=1).sum())
        done += n
    return errors / trials
