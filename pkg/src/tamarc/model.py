"""Domain types and the time-asynchronous Gaussian MARC channel.

K source encoders plus a relay (index K+1) transmit length-n complex
codewords, each delayed by an unknown integer offset d_l <= d_max.  The
destination observes the delayed superposition through complex gains plus
circularly symmetric complex Gaussian noise of total variance N per sample
(N/2 per real dimension); the relay observes the K encoder signals only.

Subsets of transmitter indices are 1-based: {1..K} encoders, K+1 the relay.
All operations are pure functions of (inputs, seed).
"""

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import PowerViolation, ValidationError

# terminal tags mixed into the noise seed so destination/relay streams are
# independent but reproducible, and shared across channel variants
_DEST_TAG = 0xD
_RELAY_TAG = 0xE

BLOCK_MAGIC = b"TAMC"
BLOCK_VERSION = 1


def as_subset(subset, K):
    """Validate and freeze a 1-based subset of [1, K+1]."""
    s = frozenset(int(i) for i in subset)
    for i in s:
        if not 1 <= i <= K + 1:
            raise ValidationError(f"subset index {i} outside [1, {K + 1}]")
    return s


def full_set(K):
    return frozenset(range(1, K + 2))


@dataclass(frozen=True)
class ChannelParams:
    """Link gains, noise power and per-encoder power budgets.

    gains_dest has K+1 entries (encoders then relay), gains_relay K entries,
    powers K+1 entries.
    """

    K: int
    gains_dest: np.ndarray
    gains_relay: np.ndarray
    noise_power: float
    powers: np.ndarray

    def __post_init__(self):
        if self.K < 1:
            raise ValidationError(f"K: must be >= 1, got {self.K}")
        object.__setattr__(self, "gains_dest", np.asarray(self.gains_dest, dtype=complex))
        object.__setattr__(self, "gains_relay", np.asarray(self.gains_relay, dtype=complex))
        object.__setattr__(self, "powers", np.asarray(self.powers, dtype=float))
        if self.gains_dest.shape != (self.K + 1,):
            raise ValidationError(
                f"gains_dest: expected {self.K + 1} entries, got {self.gains_dest.shape}"
            )
        if self.gains_relay.shape != (self.K,):
            raise ValidationError(
                f"gains_relay: expected {self.K} entries, got {self.gains_relay.shape}"
            )
        if self.powers.shape != (self.K + 1,):
            raise ValidationError(f"powers: expected {self.K + 1} entries, got {self.powers.shape}")
        if not np.isfinite(self.gains_dest).all() or not np.isfinite(self.gains_relay).all():
            raise ValidationError("gains: must be finite")
        if not (self.noise_power > 0):
            raise ValidationError(f"noise_power: must be > 0, got {self.noise_power}")
        if (self.powers < 0).any() or not np.isfinite(self.powers).all():
            raise ValidationError("powers: must be finite and >= 0")

    def subset_gain_power(self, subset):
        """(sum of |g_lD|^2 P_l, sum |g_lD|^2, sum P_l) over a 1-based subset."""
        idx = np.array(sorted(as_subset(subset, self.K)), dtype=int) - 1
        g2 = np.abs(self.gains_dest[idx]) ** 2
        p = self.powers[idx]
        return float((g2 * p).sum()), float(g2.sum()), float(p.sum())


@dataclass(frozen=True)
class DelayProfile:
    """Integer start offsets d_1..d_{K+1} bounded by d_max."""

    offsets: np.ndarray
    d_max: int

    def __post_init__(self):
        object.__setattr__(self, "offsets", np.asarray(self.offsets, dtype=np.int64))
        object.__setattr__(self, "d_max", int(self.d_max))
        if self.d_max < 0:
            raise ValidationError(f"d_max: must be >= 0, got {self.d_max}")
        if self.offsets.ndim != 1:
            raise ValidationError("offsets: expected a 1-D sequence")
        if (self.offsets < 0).any() or (self.offsets > self.d_max).any():
            raise ValidationError(f"offsets: each must lie in [0, {self.d_max}]")

    @staticmethod
    def sample(K, d_max, rng):
        """Uniform profile on [0, d_max]^(K+1)."""
        return DelayProfile(rng.integers(0, d_max + 1, size=K + 1), d_max)


@dataclass(frozen=True)
class CodewordBlock:
    """Per-transmitter length-n complex codewords, one row per stream."""

    n: int
    symbols: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "symbols", np.asarray(self.symbols, dtype=complex))
        if self.symbols.ndim != 2 or self.symbols.shape[1] != self.n:
            raise ValidationError(
                f"symbols: expected shape (streams, {self.n}), got {self.symbols.shape}"
            )
        if self.n < 1:
            raise ValidationError(f"n: must be >= 1, got {self.n}")

    @property
    def num_streams(self):
        return self.symbols.shape[0]

    def empirical_powers(self):
        return (np.abs(self.symbols) ** 2).mean(axis=1)

    def check_power(self, powers, tol=1e-9):
        emp = self.empirical_powers()
        budget = np.asarray(powers, dtype=float) * (1.0 + tol) + 1e-300
        bad = np.nonzero(emp > budget)[0]
        if bad.size:
            raise PowerViolation(
                f"stream {bad[0] + 1}: empirical power {emp[bad[0]]:.6g} exceeds "
                f"budget {float(np.asarray(powers)[bad[0]]):.6g}"
            )


@dataclass(frozen=True)
class SourceModel:
    """Joint pmf of K finite-alphabet memoryless sources.

    Index K+1 is the empty component by convention: subset queries through
    the regions module treat it as entropy-free.
    """

    K: int
    alphabets: tuple
    pmf: np.ndarray
    log_base: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "alphabets", tuple(int(a) for a in self.alphabets))
        object.__setattr__(self, "pmf", np.asarray(self.pmf, dtype=float).reshape(self.alphabets))
        if len(self.alphabets) != self.K:
            raise ValidationError(f"alphabets: expected {self.K} sizes, got {len(self.alphabets)}")
        if any(a < 1 for a in self.alphabets):
            raise ValidationError("alphabets: sizes must be >= 1")
        if (self.pmf < 0).any():
            raise ValidationError("pmf: entries must be >= 0")
        if abs(self.pmf.sum() - 1.0) > 1e-12:
            raise ValidationError(f"pmf: must sum to 1 within 1e-12, got {self.pmf.sum()!r}")
        if not (self.log_base > 0 and self.log_base != 1):
            raise ValidationError(f"log_base: must be positive and != 1, got {self.log_base}")

    def sample(self, m, rng):
        """m i.i.d. joint symbols, shape (m, K)."""
        flat = rng.choice(self.pmf.size, size=m, p=self.pmf.reshape(-1))
        return np.stack(np.unravel_index(flat, self.alphabets), axis=1)


def dsbs(p, crossover_weight=0.5):
    """Doubly symmetric binary source: U2 is U1 through a BSC(p)."""
    q = crossover_weight
    pmf = np.array([[(1 - p) * q, p * q], [p * (1 - q), (1 - p) * (1 - q)]])
    return SourceModel(K=2, alphabets=(2, 2), pmf=pmf)


@dataclass(frozen=True)
class IntervalPartition:
    """Splits [0, n+d_max-1] into left tail A, right tail B, common part C."""

    n: int
    d_max: int

    def __post_init__(self):
        if not 0 <= self.d_max <= self.n:
            raise ValidationError(f"d_max: need 0 <= d_max <= n, got d_max={self.d_max} n={self.n}")

    @property
    def A(self):
        return np.arange(0, self.d_max)

    @property
    def B(self):
        return np.arange(self.n, self.n + self.d_max)

    @property
    def C(self):
        return np.arange(self.d_max, self.n)


def noise_streams(n_out, noise_power, noise_seed):
    """Deterministic destination/relay noise, total variance N per sample.

    One stream per (seed, terminal) pair so the channel variants below see
    identical noise realizations for matched seeds.
    """
    scale = np.sqrt(noise_power / 2.0)
    out = []
    for tag in (_DEST_TAG, _RELAY_TAG):
        rng = np.random.default_rng([int(noise_seed), tag])
        out.append(scale * (rng.standard_normal(n_out) + 1j * rng.standard_normal(n_out)))
    return tuple(out)


def _check_transmit_args(params, delays, block):
    if block.num_streams != params.K + 1:
        raise ValidationError(
            f"block: expected {params.K + 1} streams for K={params.K}, got {block.num_streams}"
        )
    if delays.offsets.shape != (params.K + 1,):
        raise ValidationError(
            f"delays: expected {params.K + 1} offsets, got {delays.offsets.shape}"
        )
    if delays.d_max > block.n:
        raise ValidationError(f"d_max: need d_max <= n, got d_max={delays.d_max} n={block.n}")


def _shifted_sum(gains, offsets, symbols, n_out, indices):
    """sum_l g_l X_l[i - d_l] over i in [0, n_out) with zero padding."""
    n = symbols.shape[1]
    y = np.zeros(n_out, dtype=complex)
    for l in indices:
        d = offsets[l]
        y[d : d + n] += gains[l] * symbols[l]
    return y


def transmit(params, delays, block, noise_seed, include_noise=True, check_power=True):
    """Destination and relay observations, each of length n + d_max."""
    _check_transmit_args(params, delays, block)
    if check_power:
        block.check_power(params.powers)
    n_out = block.n + delays.d_max
    z_dest, z_relay = (
        noise_streams(n_out, params.noise_power, noise_seed)
        if include_noise
        else (np.zeros(n_out, dtype=complex),) * 2
    )
    y_dest = _shifted_sum(params.gains_dest, delays.offsets, block.symbols, n_out, range(params.K + 1))
    y_relay = _shifted_sum(
        np.concatenate([params.gains_relay, [0.0]]),
        delays.offsets,
        block.symbols,
        n_out,
        range(params.K),
    )
    return y_dest + z_dest, y_relay + z_relay


def transmit_sliced(params, delays, block, subset, noise_seed, include_noise=True, check_power=True):
    """Destination sum restricted to `subset`; relay observation unchanged."""
    _check_transmit_args(params, delays, block)
    if check_power:
        block.check_power(params.powers)
    s = as_subset(subset, params.K)
    n_out = block.n + delays.d_max
    z_dest, z_relay = (
        noise_streams(n_out, params.noise_power, noise_seed)
        if include_noise
        else (np.zeros(n_out, dtype=complex),) * 2
    )
    y_dest = _shifted_sum(
        params.gains_dest, delays.offsets, block.symbols, n_out, [i - 1 for i in sorted(s)]
    )
    y_relay = _shifted_sum(
        np.concatenate([params.gains_relay, [0.0]]),
        delays.offsets,
        block.symbols,
        n_out,
        range(params.K),
    )
    return y_dest + z_dest, y_relay + z_relay


def transmit_cyclic(params, delays, block, subset, noise_seed, include_noise=True, check_power=True):
    """Sliced variant with codewords wrapped modulo n at the destination.

    Output length n; samples on the common interval C coincide with the
    sliced output for the same seed.  The relay observation is unchanged.
    """
    _check_transmit_args(params, delays, block)
    IntervalPartition(block.n, delays.d_max)  # d_max <= n or the wrap is ill-defined
    if check_power:
        block.check_power(params.powers)
    s = as_subset(subset, params.K)
    n_out = block.n + delays.d_max
    z_dest, z_relay = (
        noise_streams(n_out, params.noise_power, noise_seed)
        if include_noise
        else (np.zeros(n_out, dtype=complex),) * 2
    )
    y = np.zeros(block.n, dtype=complex)
    for i in sorted(s):
        y += params.gains_dest[i - 1] * np.roll(block.symbols[i - 1], delays.offsets[i - 1])
    y_relay = _shifted_sum(
        np.concatenate([params.gains_relay, [0.0]]),
        delays.offsets,
        block.symbols,
        n_out,
        range(params.K),
    )
    return y + z_dest[: block.n], y_relay + z_relay


def relay_causal_encode(strategy, y_relay_prefix):
    """Next relay symbol from the received prefix y_R[0..i]."""
    return complex(strategy(np.asarray(y_relay_prefix, dtype=complex)))


class RelayEncoder:
    """Runs a causal relay policy symbol by symbol with power accounting.

    The policy maps a received prefix to one output symbol; the cumulative
    output power is checked against n * power_budget.
    """

    def __init__(self, strategy, power_budget, n):
        self.strategy = strategy
        self.power_budget = float(power_budget)
        self.n = int(n)
        self.energy = 0.0
        self.emitted = 0

    def step(self, y_relay_prefix):
        x = relay_causal_encode(self.strategy, y_relay_prefix)
        self.energy += abs(x) ** 2
        self.emitted += 1
        if self.energy > self.n * self.power_budget * (1.0 + 1e-6):
            raise PowerViolation(
                f"relay policy exceeded power budget after {self.emitted} symbols"
            )
        return x

    def run(self, y_relay):
        """Strictly causal pass: symbol i+1 sees y_relay[0..i]."""
        y = np.asarray(y_relay, dtype=complex)
        out = np.empty(self.n, dtype=complex)
        for i in range(self.n):
            out[i] = self.step(y[:i])
        return out


def silent_relay():
    return lambda prefix: 0.0


def amplify_forward(beta):
    """Scale the most recent received sample; zero before anything arrives."""
    return lambda prefix: beta * prefix[-1] if prefix.size else 0.0


def dft(x):
    """Unitary DFT: preserves the squared norm, inverse recovers the input."""
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] < 1:
        raise ValidationError("dft: need length >= 1")
    return np.fft.fft(x) / np.sqrt(x.shape[-1])


def idft(x):
    x = np.asarray(x, dtype=complex)
    return np.fft.ifft(x) * np.sqrt(x.shape[-1])


# -- serialization -----------------------------------------------------------


def save_channel_params(params, path):
    doc = {
        "K": params.K,
        "gains_dest": [[g.real, g.imag] for g in params.gains_dest],
        "gains_relay": [[g.real, g.imag] for g in params.gains_relay],
        "noise_power": params.noise_power,
        "powers": [float(p) for p in params.powers],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")


def channel_params_from_dict(doc):
    for key in ("K", "gains_dest", "gains_relay", "noise_power", "powers"):
        if key not in doc:
            raise ValidationError(f"{key}: missing required key")

    def cx(pairs, key):
        try:
            return np.array([complex(re, im) for re, im in pairs])
        except (TypeError, ValueError) as e:
            raise ValidationError(f"{key}: expected [re, im] pairs ({e})")

    return ChannelParams(
        K=int(doc["K"]),
        gains_dest=cx(doc["gains_dest"], "gains_dest"),
        gains_relay=cx(doc["gains_relay"], "gains_relay"),
        noise_power=float(doc["noise_power"]),
        powers=np.asarray(doc["powers"], dtype=float),
    )


def load_channel_params(path):
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"channel file {path}: not valid JSON ({e})")
    return channel_params_from_dict(doc)


def save_block(block, path):
    """Columnar binary format: 16-byte header (magic, version, n, streams),
    then each stream's n complex128 samples contiguously."""
    header = struct.pack("<4sIII", BLOCK_MAGIC, BLOCK_VERSION, block.n, block.num_streams)
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(block.symbols, dtype=np.complex128).tobytes())


def load_block(path):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 16:
        raise ValidationError(f"block file {path}: truncated header")
    magic, version, n, streams = struct.unpack("<4sIII", raw[:16])
    if magic != BLOCK_MAGIC:
        raise ValidationError(f"block file {path}: bad magic {magic!r}")
    if version != BLOCK_VERSION:
        raise ValidationError(f"block file {path}: unsupported version {version}")
    data = np.frombuffer(raw[16:], dtype=np.complex128)
    if data.size != n * streams:
        raise ValidationError(f"block file {path}: payload size mismatch")
    return CodewordBlock(n=n, symbols=data.reshape(streams, n).copy())
