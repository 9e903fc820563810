"""Desk-scale separate source-channel coding pipeline.

Slepian-Wolf random binning feeds bin indices directly as channel message
indices (the tandem map stays bijective).  Channel transmission follows the
block Markov layout: encoder l sends the pair-indexed word x_l(W_{l,b-1},
W_{l,b}) in block b, the relay sends a word indexed by the previous block's
full message tuple, boundaries use index 0.  The relay MAC-decodes each block
and forwards; the destination decodes backward from the last block.  Both
decoders are ML (minimum residual) over message tuples x integer shift grids
[0, d_max] per transmitter - the decoders never see the true delays.

Monte Carlo error estimation sweeps a delay grid (corners plus uniform
samples) and reports the worst profile with a binomial 95% interval.
"""

import math
import time
from dataclasses import dataclass, field
from hashlib import blake2b
from itertools import product

import numpy as np

from . import kernels
from .errors import BudgetError, ValidationError
from .model import CodewordBlock, DelayProfile, SourceModel, transmit

SEARCH_BUDGET = 1 << 24
_SW_SPACE_GUARD = 1 << 22
_CODEBOOK_ELEM_GUARD = 1 << 26


def derive_seed(*parts):
    """Stable 64-bit seed from hashable labels (runs reproduce bit-exactly)."""
    h = blake2b(digest_size=8)
    for p in parts:
        h.update(str(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def wilson_interval(errors, trials, z=1.959963984540054):
    """95% binomial confidence interval for an error count."""
    if trials <= 0:
        raise ValidationError("trials must be positive")
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


# -- Slepian-Wolf binning ------------------------------------------------------


@dataclass
class BinningCode:
    """Per-source seeded bin maps over length-m sequences.

    Bins are a seeded permutation of the sequence index space reduced mod the
    bin count, so they are balanced and injective whenever the bin count
    covers the space (the lossless one-to-one regime).
    """

    K: int
    m: int
    alphabets: tuple
    num_bins: tuple
    rates: tuple
    seed: int
    _perms: list = field(repr=False, default_factory=list)
    _members: dict = field(repr=False, default_factory=dict)

    def bin_of_code(self, l, seq_code):
        return int(self._perms[l][seq_code] % self.num_bins[l])

    def members(self, l, bin_index):
        """Sequence codes mapped to a bin, ascending."""
        key = l
        if key not in self._members:
            bins_of = self._perms[l] % self.num_bins[l]
            order = np.argsort(bins_of, kind="stable")
            bounds = np.searchsorted(bins_of[order], np.arange(self.num_bins[l] + 1))
            self._members[key] = (order, bounds)
        order, bounds = self._members[key]
        if not 0 <= bin_index < self.num_bins[l]:
            return np.empty(0, dtype=np.int64)
        sel = np.sort(order[bounds[bin_index] : bounds[bin_index + 1]])
        return sel


def bins_for_rate(m, rate):
    return int(math.ceil(2.0 ** (m * rate)))


def make_binning_code(alphabets, m, rates=None, num_bins=None, seed=0):
    alphabets = tuple(int(a) for a in alphabets)
    K = len(alphabets)
    if not 1 <= m <= 16:
        raise ValidationError(f"m: need 1 <= m <= 16, got {m}")
    if int(np.prod(alphabets)) > 1 << 20:
        raise ValidationError("alphabets: joint per-symbol alphabet exceeds 2^20")
    if num_bins is None:
        if rates is None or len(rates) != K:
            raise ValidationError("rates: need one rate per source (or explicit num_bins)")
        num_bins = tuple(bins_for_rate(m, r) for r in rates)
    else:
        num_bins = tuple(int(b) for b in num_bins)
        rates = tuple(math.log2(b) / m for b in num_bins)
    if any(b < 1 for b in num_bins):
        raise ValidationError("num_bins: each must be >= 1")
    perms = []
    for l, a in enumerate(alphabets):
        space = a**m
        if space > _SW_SPACE_GUARD:
            raise ValidationError(f"source {l + 1}: sequence space {space} exceeds guard")
        perms.append(np.random.default_rng([int(seed), l]).permutation(space))
    return BinningCode(K, m, alphabets, num_bins, tuple(float(r) for r in rates), int(seed), perms)


def _seq_to_code(seq, alphabet):
    code = 0
    for u in seq:
        code = code * alphabet + int(u)
    return code


def _code_to_seq(code, alphabet, m):
    out = np.empty(m, dtype=np.int64)
    for i in range(m - 1, -1, -1):
        out[i] = code % alphabet
        code //= alphabet
    return out


def sw_encode(src_block, code):
    """Bin index per source for an (m, K) block of source symbols."""
    src_block = np.asarray(src_block)
    if src_block.shape != (code.m, code.K):
        raise ValidationError(f"src_block: expected shape ({code.m}, {code.K})")
    return np.array(
        [code.bin_of_code(l, _seq_to_code(src_block[:, l], code.alphabets[l])) for l in range(code.K)],
        dtype=np.int64,
    )


def _symbols_of_codes(codes, alphabet, m):
    out = np.empty((len(codes), m), dtype=np.int64)
    c = np.asarray(codes, dtype=np.int64).copy()
    for i in range(m - 1, -1, -1):
        out[:, i] = c % alphabet
        c //= alphabet
    return out


def sw_decode(bins, code, src):
    """Most probable bin-consistent source tuple, or None if none exists.

    Exhaustive over the cartesian product of the bin member lists, scored by
    the joint pmf (the ML surrogate for joint typicality).
    """
    if src.K != code.K or src.alphabets != code.alphabets:
        raise ValidationError("source model does not match the binning code")
    lists = [code.members(l, int(bins[l])) for l in range(code.K)]
    if any(len(c) == 0 for c in lists):
        return None
    total = math.prod(len(c) for c in lists)
    if total > SEARCH_BUDGET:
        raise BudgetError(f"bin-list product {total} exceeds search budget {SEARCH_BUDGET}")
    with np.errstate(divide="ignore"):
        logp = np.log(src.pmf)
    syms = [_symbols_of_codes(lists[l], code.alphabets[l], code.m) for l in range(code.K)]
    if code.K == 1:
        scores = logp[syms[0]].sum(axis=1)
        best = int(np.argmax(scores))
        if not np.isfinite(scores[best]):
            return None
        return syms[0][best].reshape(code.m, 1)
    if code.K == 2:
        scores = np.zeros((len(lists[0]), len(lists[1])))
        for i in range(code.m):
            scores += logp[syms[0][:, i][:, None], syms[1][None, :, i]]
        flat = int(np.argmax(scores))
        a, b = divmod(flat, len(lists[1]))
        if not np.isfinite(scores[a, b]):
            return None
        return np.stack([syms[0][a], syms[1][b]], axis=1)
    best_score, best_tuple = -np.inf, None
    for combo in product(*(range(len(c)) for c in lists)):
        s = 0.0
        for i in range(code.m):
            s += logp[tuple(syms[l][combo[l], i] for l in range(code.K))]
        if s > best_score:
            best_score, best_tuple = s, combo
    if best_tuple is None or not np.isfinite(best_score):
        return None
    return np.stack([syms[l][best_tuple[l]] for l in range(code.K)], axis=1)


# -- random Gaussian codebooks ---------------------------------------------------


def _cn_words(rng, shape, power):
    w = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    if power == 0.0:
        return np.zeros(shape, dtype=complex)
    n = shape[-1]
    norms = (np.abs(w) ** 2).sum(axis=-1, keepdims=True)
    return w * np.sqrt(n * power / norms)


def gaussian_codebook(n, rate, power, seed):
    """ceil(2^{nR}) i.i.d. complex Gaussian words, each rescaled to empirical
    power exactly `power`."""
    if n * rate > 22:
        raise BudgetError(f"n*rate = {n * rate:.3g} exceeds the 22-bit codebook guard")
    if rate < 0:
        raise ValidationError("rate: must be >= 0")
    M = int(math.ceil(2.0 ** (n * rate)))
    return _cn_words(np.random.default_rng([int(seed)]), (M, n), float(power))


@dataclass
class BlockMarkovCodebooks:
    """Pair-indexed encoder codebooks plus a tuple-indexed relay codebook.

    enc[l] has shape (M_l, M_l, n): first index the previous block's message,
    second the current one.  relay has shape (prod M, n), row-major over the
    message tuple.
    """

    n: int
    num_messages: tuple
    enc: list
    relay: np.ndarray

    def relay_row(self, msg_tuple):
        return int(np.ravel_multi_index(tuple(int(w) for w in msg_tuple), self.num_messages))


def build_block_markov_codebooks(n, num_messages, powers, seed):
    num_messages = tuple(int(m) for m in num_messages)
    K = len(num_messages)
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (K + 1,):
        raise ValidationError(f"powers: expected {K + 1} entries")
    if any(m < 1 for m in num_messages):
        raise ValidationError("num_messages: each must be >= 1")
    total = int(np.prod(num_messages))
    elems = sum(m * m * n for m in num_messages) + total * n
    if elems > _CODEBOOK_ELEM_GUARD:
        raise BudgetError(f"codebook storage {elems} elements exceeds guard; lower n*R")
    enc = [
        _cn_words(np.random.default_rng([int(seed), l]), (m, m, n), float(powers[l]))
        for l, m in enumerate(num_messages)
    ]
    relay = _cn_words(np.random.default_rng([int(seed), K]), (total, n), float(powers[K]))
    return BlockMarkovCodebooks(n=n, num_messages=num_messages, enc=enc, relay=relay)


# -- block Markov schedule -------------------------------------------------------


@dataclass(frozen=True)
class BlockMarkovSchedule:
    """Codeword selectors for B message blocks sent over B+1 channel blocks."""

    B: int
    num_messages: tuple

    def pair_index(self, l, b, messages):
        """(previous, current) message of encoder l in channel block b (1-based);
        boundary blocks use index 0."""
        if not 1 <= b <= self.B + 1:
            raise ValidationError(f"block {b} outside [1, {self.B + 1}]")
        prev = int(messages[l, b - 2]) if b >= 2 else 0
        cur = int(messages[l, b - 1]) if b <= self.B else 0
        return prev, cur

    def relay_tuple(self, b, messages):
        """Message tuple carried by the relay in channel block b (all zeros in
        block 1: the relay has decoded nothing yet)."""
        if b == 1:
            return (0,) * len(self.num_messages)
        return tuple(int(w) for w in messages[:, b - 2])


def encoder_waveforms(schedule, codebooks, messages):
    """Per-encoder concatenated waveforms, shape (K, (B+1) n)."""
    K = len(codebooks.num_messages)
    n, B = codebooks.n, schedule.B
    out = np.empty((K, (B + 1) * n), dtype=complex)
    for l in range(K):
        if (np.asarray(messages[l]) >= codebooks.num_messages[l]).any():
            raise ValidationError(f"encoder {l + 1}: message index out of codebook range")
        for b in range(1, B + 2):
            prev, cur = schedule.pair_index(l, b, messages)
            out[l, (b - 1) * n : b * n] = codebooks.enc[l][prev, cur]
    return out


def relay_waveform(schedule, codebooks, decoded):
    """Relay row under decode-and-forward: block b repeats the tuple decoded
    after block b-1 (index-0 word when nothing is decoded yet)."""
    n, B = codebooks.n, schedule.B
    out = np.empty((B + 1) * n, dtype=complex)
    for b in range(1, B + 2):
        out[(b - 1) * n : b * n] = codebooks.relay[codebooks.relay_row(schedule.relay_tuple(b, decoded))]
    return out


def block_markov_encode(schedule, codebooks, messages):
    """Genie layout of all K+1 rows (relay forwards the true tuples)."""
    messages = np.asarray(messages, dtype=np.int64)
    K = len(codebooks.num_messages)
    if messages.shape != (K, schedule.B):
        raise ValidationError(f"messages: expected shape ({K}, {schedule.B})")
    rows = encoder_waveforms(schedule, codebooks, messages)
    return np.vstack([rows, relay_waveform(schedule, codebooks, messages)])


# -- shift-search ML decoding ------------------------------------------------------


def _shift_grid(n_streams, d_max):
    return np.array(list(product(range(d_max + 1), repeat=n_streams)), dtype=np.int64)


def _check_budget(n_shift_tuples, total):
    if n_shift_tuples * total > SEARCH_BUDGET:
        raise BudgetError(
            f"search size {n_shift_tuples} x {total} exceeds {SEARCH_BUDGET}; "
            "lower n*R or d_max"
        )


def _stage_search(y_win, padded, gains, n_msgs, strides, total, offs):
    stacked = np.vstack(padded)
    row_start = np.cumsum([0] + [p.shape[0] for p in padded[:-1]], dtype=np.int64)
    res = kernels.search_residuals(
        y_win, stacked, row_start, np.asarray(n_msgs, dtype=np.int64),
        np.asarray(strides, dtype=np.int64), np.asarray(gains, dtype=complex), offs, total,
    )
    return kernels.best_candidate(res)


def _tuple_strides(num_messages):
    K = len(num_messages)
    strides = [1] * K
    for l in range(K - 2, -1, -1):
        strides[l] = strides[l + 1] * num_messages[l + 1]
    return strides


def relay_decode_block(y_window, codebooks, params, d_max, history=()):
    """ML decode of one block's message tuple at the relay.

    `history` holds the tuples decoded in earlier blocks; it fixes the known
    pair prefix of each candidate word and the known tail of the previous
    block inside the window.  Returns (message tuple, shift tuple, residual).
    """
    K = params.K
    n = codebooks.n
    if not 0 <= d_max <= n:
        raise ValidationError(f"d_max: need 0 <= d_max <= n, got {d_max}")
    Ms = codebooks.num_messages
    total = int(np.prod(Ms))
    grid = _shift_grid(K, d_max)
    _check_budget(grid.shape[0], total)
    b = len(history) + 1
    prev = history[-1] if b >= 2 else (0,) * K
    prev_prev = history[-2] if b >= 3 else (0,) * K
    padded, strides = [], _tuple_strides(Ms)
    for l in range(K):
        cand = codebooks.enc[l][prev[l] if b >= 2 else 0]
        prev_word = codebooks.enc[l][prev_prev[l], prev[l]] if b >= 2 else np.zeros(n, dtype=complex)
        padded.append(np.hstack([np.tile(prev_word, (Ms[l], 1)), cand]))
    offs = n - grid
    si, t, resid = _stage_search(
        y_window, padded, params.gains_relay, Ms, strides, total, offs
    )
    msg = tuple(int((t // strides[l]) % Ms[l]) for l in range(K))
    return msg, tuple(int(d) for d in grid[si]), resid


def relay_process(y_relay, codebooks, schedule, params, d_max):
    """Decode-and-forward chain over all blocks.

    Block b is decoded from the length-n window [(b-1) n, b n) only, so the
    relay's block b+1 output depends on strictly earlier receptions.  Returns
    (relay waveform, decoded messages (K, B), shift estimates).
    """
    n, B = codebooks.n, schedule.B
    history, shifts = [], []
    for b in range(1, B + 1):
        msg, shift, _ = relay_decode_block(
            y_relay[(b - 1) * n : b * n], codebooks, params, d_max, tuple(history)
        )
        history.append(msg)
        shifts.append(shift)
    decoded = np.array(history, dtype=np.int64).T if history else np.zeros((params.K, 0), np.int64)
    return relay_waveform(schedule, codebooks, decoded), decoded, shifts


def destination_backward_decode(y_dest, codebooks, schedule, params, d_max):
    """Backward ML decoding at the destination.

    Stage b (from B+1 down to 2) reads the window [(b-1) n + d_max, b n +
    d_max) and resolves the tuple W_{.,b-1} carried jointly by the encoders'
    pair words and the relay word of block b; later blocks are already known.
    Returns (messages (K, B), shift estimates per stage).
    """
    K = params.K
    n, B = codebooks.n, schedule.B
    if not 0 <= d_max <= n:
        raise ValidationError(f"d_max: need 0 <= d_max <= n, got {d_max}")
    Ms = codebooks.num_messages
    total = int(np.prod(Ms))
    grid = _shift_grid(K + 1, d_max)
    _check_budget(grid.shape[0], total)
    strides = _tuple_strides(Ms)
    decoded = {B + 1: (0,) * K}  # boundary tuple
    shifts = []
    gains = params.gains_dest
    zeros = np.zeros(n, dtype=complex)
    for b in range(B + 1, 1, -1):
        w_cur = decoded[b] if b <= B else (0,) * K
        padded = []
        for l in range(K):
            cand = codebooks.enc[l][:, w_cur[l], :]
            if b + 1 <= B + 1:
                nxt_cur = decoded[b + 1][l] if b + 1 <= B else 0
                nxt = codebooks.enc[l][w_cur[l], nxt_cur]
            else:
                nxt = zeros
            padded.append(np.hstack([cand, np.tile(nxt, (Ms[l], 1))]))
        relay_next = (
            codebooks.relay[codebooks.relay_row(w_cur)] if b + 1 <= B + 1 else zeros
        )
        padded.append(np.hstack([codebooks.relay, np.tile(relay_next, (total, 1))]))
        offs = d_max - grid
        si, t, _ = _stage_search(
            y_dest[(b - 1) * n + d_max : b * n + d_max],
            padded,
            gains,
            list(Ms) + [total],
            strides + [1],
            total,
            offs,
        )
        decoded[b - 1] = tuple(int((t // strides[l]) % Ms[l]) for l in range(K))
        shifts.append(tuple(int(d) for d in grid[si]))
    msgs = np.array([decoded[b] for b in range(1, B + 1)], dtype=np.int64).T
    return msgs, shifts


# -- Monte Carlo ---------------------------------------------------------------


@dataclass
class TrialReport:
    """Stage-by-stage outcome of one end-to-end trial.

    overall_error is the OR of every stage's error events (a relay slip that
    happens not to corrupt the final reconstruction still counts).
    """

    n: int
    B: int
    d_max: int
    rates: tuple
    offsets: tuple
    relay_block_errors: list
    dest_block_errors: list
    sw_block_errors: list
    overall_error: bool
    wall_clock: float


@dataclass
class ProfileSummary:
    offsets: tuple
    trials: int
    errors: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    relay_errors: int
    dest_errors: int
    sw_errors: int


@dataclass
class MonteCarloReport:
    profiles: list
    headline: ProfileSummary
    trial_reports: list


@dataclass
class SimConfig:
    """Experiment description; everything downstream is derived from `seed`."""

    params: object
    source: SourceModel
    rates: tuple  # bits per source symbol, one per source
    m: int
    n: int
    B: int
    d_max: int
    trials: int
    seed: int
    grid_corners: bool = True
    grid_samples: int = 0
    channel_rates: tuple = None  # optional consistency check, bits/channel use

    def num_bins(self):
        return tuple(bins_for_rate(self.m, r) for r in self.rates)

    def validate(self):
        if self.source.K != self.params.K:
            raise ValidationError("source K does not match channel K")
        if len(self.rates) != self.params.K:
            raise ValidationError(f"rates: expected {self.params.K} entries")
        if not (self.m >= 1 and self.n >= 1 and self.B >= 1 and self.trials >= 1):
            raise ValidationError("m, n, B, trials must all be >= 1")
        if not 0 <= self.d_max <= self.n:
            raise ValidationError(f"d_max: need 0 <= d_max <= n, got {self.d_max}")
        if self.channel_rates is not None:
            for l, (rs, rc) in enumerate(zip(self.rates, self.channel_rates)):
                if bins_for_rate(self.m, rs) != int(math.ceil(2.0 ** (self.n * rc))):
                    raise ValidationError(
                        f"encoder {l + 1}: source bins != channel words; "
                        "tandem map must stay bijective (config rejected)"
                    )


def delay_grid(K, d_max, corners=True, samples=0, seed=0):
    """Corner profiles {0, d_max}^(K+1) plus uniformly sampled ones."""
    profiles = []
    seen = set()
    if corners:
        for combo in product((0, d_max), repeat=K + 1):
            if combo not in seen:
                seen.add(combo)
                profiles.append(DelayProfile(np.array(combo), d_max))
    rng = np.random.default_rng([int(seed), 0x6])
    for _ in range(samples):
        combo = tuple(int(x) for x in rng.integers(0, d_max + 1, size=K + 1))
        if combo not in seen:
            seen.add(combo)
            profiles.append(DelayProfile(np.array(combo), d_max))
    return profiles


def run_trial(cfg, codebooks, bincode, schedule, delays, trial_seed):
    """One end-to-end trial: draw, bin, transmit, DF-relay, backward decode,
    source decode; deterministic in trial_seed."""
    t0 = time.perf_counter()
    K, m, n, B = cfg.params.K, cfg.m, codebooks.n, schedule.B
    rng = np.random.default_rng([int(trial_seed), 1])
    noise_seed = derive_seed(trial_seed, "noise")
    blocks_u = [cfg.source.sample(m, rng) for _ in range(B)]
    W = np.stack([sw_encode(u, bincode) for u in blocks_u], axis=1)  # (K, B)

    enc_rows = encoder_waveforms(schedule, codebooks, W)
    silent = np.zeros((B + 1) * n, dtype=complex)
    probe = CodewordBlock((B + 1) * n, np.vstack([enc_rows, silent]))
    _, y_relay = transmit(cfg.params, delays, probe, noise_seed, check_power=False)

    x_relay, W_relay, _ = relay_process(y_relay, codebooks, schedule, cfg.params, cfg.d_max)
    block = CodewordBlock((B + 1) * n, np.vstack([enc_rows, x_relay]))
    y_dest, _ = transmit(cfg.params, delays, block, noise_seed, check_power=False)

    W_dest, _ = destination_backward_decode(y_dest, codebooks, schedule, cfg.params, cfg.d_max)

    relay_err = [bool((W_relay[:, b] != W[:, b]).any()) for b in range(B)]
    dest_err = [bool((W_dest[:, b] != W[:, b]).any()) for b in range(B)]
    sw_err = []
    for b in range(B):
        u_hat = sw_decode(W_dest[:, b], bincode, cfg.source)
        sw_err.append(u_hat is None or bool((u_hat != blocks_u[b]).any()))
    overall = any(relay_err) or any(dest_err) or any(sw_err)
    return TrialReport(
        n=n, B=B, d_max=cfg.d_max, rates=tuple(cfg.rates),
        offsets=tuple(int(d) for d in delays.offsets),
        relay_block_errors=relay_err, dest_block_errors=dest_err, sw_block_errors=sw_err,
        overall_error=overall, wall_clock=time.perf_counter() - t0,
    )


def monte_carlo_error(cfg, collect_trials=False):
    """Sup-over-delays error estimate on the configured grid."""
    cfg.validate()
    Ms = cfg.num_bins()
    total = int(np.prod(Ms))
    _check_budget((cfg.d_max + 1) ** (cfg.params.K + 1), total)
    codebooks = build_block_markov_codebooks(
        cfg.n, Ms, cfg.params.powers, derive_seed(cfg.seed, "codebooks")
    )
    bincode = make_binning_code(
        cfg.source.alphabets, cfg.m, num_bins=Ms, seed=derive_seed(cfg.seed, "bins")
    )
    schedule = BlockMarkovSchedule(B=cfg.B, num_messages=Ms)
    grid = delay_grid(cfg.params.K, cfg.d_max, cfg.grid_corners, cfg.grid_samples, cfg.seed)
    profiles, all_trials = [], []
    for delays in grid:
        offsets = tuple(int(d) for d in delays.offsets)
        errs = relay_e = dest_e = sw_e = 0
        for t in range(cfg.trials):
            rep = run_trial(
                cfg, codebooks, bincode, schedule, delays,
                derive_seed(cfg.seed, offsets, t),
            )
            errs += rep.overall_error
            relay_e += any(rep.relay_block_errors)
            dest_e += any(rep.dest_block_errors)
            sw_e += any(rep.sw_block_errors)
            if collect_trials:
                all_trials.append(rep)
        lo, hi = wilson_interval(errs, cfg.trials)
        profiles.append(
            ProfileSummary(offsets, cfg.trials, errs, errs / cfg.trials, lo, hi,
                           relay_e, dest_e, sw_e)
        )
    headline = max(profiles, key=lambda p: (p.p_hat, p.offsets))
    return MonteCarloReport(profiles=profiles, headline=headline, trial_reports=all_trials)
