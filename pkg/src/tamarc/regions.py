"""Rate regions and feasibility verdicts.

Constraint systems are subset-indexed: a constraint (S, rhs) bounds the rate
sum of the encoders in S (index K+1, the relay, carries rate 0 and an empty
source component).  Channel-side right-hand sides are kappa-scaled logs; the
Slepian-Wolf region stores conditional entropies as lower bounds instead.

Everything here is pure and stateless.
"""

import math
from dataclasses import dataclass
from itertools import chain, combinations

import numpy as np

from .errors import ValidationError
from .model import as_subset

CHANNEL_KINDS = ("outer", "achievable", "mac_relay", "mac_destination", "ic")
KINDS = CHANNEL_KINDS + ("slepian_wolf",)


def _log(x, base):
    return math.log(x) / math.log(base)


def subsets_with_relay(K):
    """All S with K+1 in S, i.e. one per subset of [1, K] (2^K of them)."""
    out = []
    for r in range(K + 1):
        for c in combinations(range(1, K + 1), r):
            out.append(frozenset(c) | {K + 1})
    return out


def nonempty_encoder_subsets(K):
    return [
        frozenset(c)
        for c in chain.from_iterable(combinations(range(1, K + 1), r) for r in range(1, K + 1))
    ]


def subset_mask(subset):
    return sum(1 << (i - 1) for i in subset)


@dataclass(frozen=True)
class Constraint:
    subset: frozenset
    rhs: float
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"kind: unknown constraint kind {self.kind!r}")


@dataclass
class RateRegion:
    """Subset-indexed linear constraint system on (R_1..R_K, R_{K+1}=0)."""

    K: int
    constraints: list
    kind: str
    note: str = ""

    def __post_init__(self):
        seen = set()
        for c in self.constraints:
            key = (c.kind, c.subset)
            if key in seen:
                raise ValidationError(f"duplicate constraint for kind={c.kind} S={sorted(c.subset)}")
            seen.add(key)
            if c.kind in CHANNEL_KINDS and c.rhs < 0:
                raise ValidationError("channel constraint rhs must be >= 0")

    def rhs_for(self, subset, kind=None):
        s = frozenset(subset)
        for c in self.constraints:
            if c.subset == s and (kind is None or c.kind == kind):
                return c.rhs
        raise KeyError(f"no constraint for subset {sorted(s)}")

    def canonical(self):
        """subset -> tightest rhs, the polytope-defining map."""
        out = {}
        for c in self.constraints:
            out[c.subset] = min(out.get(c.subset, math.inf), c.rhs)
        return out

    def same_polytope(self, other, tol=1e-12):
        a, b = self.canonical(), other.canonical()
        if set(a) != set(b):
            return False
        return all(abs(a[s] - b[s]) <= tol for s in a)

    def to_text_lines(self):
        lines = []
        for c in sorted(self.constraints, key=lambda c: (c.kind, subset_mask(c.subset))):
            lines.append(f"S={subset_mask(c.subset)} rhs={c.rhs:.12g} kind={c.kind}")
        return lines


@dataclass
class FeasibilityVerdict:
    status: str  # inside | outside | boundary
    binding: list
    margin: float
    definitive: bool = True


# -- entropies ----------------------------------------------------------------


def _entropy(p, base):
    p = p[p > 0]
    return float(-(p * (np.log(p) / math.log(base))).sum())


def joint_entropy(src, subset=None, base=None):
    """H(U_S) for S a subset of [1, K]; full joint if subset is None."""
    base = src.log_base if base is None else base
    if subset is None:
        return _entropy(src.pmf.reshape(-1), base)
    s = sorted(i for i in as_subset(subset, src.K) if i <= src.K)
    drop = tuple(ax for ax in range(src.K) if ax + 1 not in s)
    marg = src.pmf.sum(axis=drop) if drop else src.pmf
    return _entropy(np.asarray(marg).reshape(-1), base)


def conditional_entropy(src, subset, base=None):
    """H(U_{S cap [1,K]} | U_{complement}); index K+1 contributes nothing."""
    base = src.log_base if base is None else base
    s = as_subset(subset, src.K)
    rest = frozenset(range(1, src.K + 1)) - s
    return joint_entropy(src, None, base) - joint_entropy(src, rest, base)


# -- channel-side regions ------------------------------------------------------


def mac_region(gains, powers, noise_power, kappa=1.0, kind="mac_destination", base=2.0):
    """Polymatroid MAC region: R_S <= kappa * log(1 + sum_S |g|^2 P / N)."""
    gains = np.asarray(gains, dtype=complex)
    powers = np.asarray(powers, dtype=float)
    if not np.isfinite(gains).all():
        raise ValidationError("gains: must be finite")
    if gains.shape != powers.shape:
        raise ValidationError("gains and powers must have matching lengths")
    if not noise_power > 0:
        raise ValidationError("noise_power: must be > 0")
    k = len(gains)
    cons = []
    for s in nonempty_encoder_subsets(k):
        snr = sum(abs(gains[i - 1]) ** 2 * powers[i - 1] for i in s) / noise_power
        cons.append(Constraint(s, kappa * _log(1.0 + snr, base), kind))
    return RateRegion(K=k, constraints=cons, kind=kind)


def outer_region(params, kappa=1.0, base=2.0):
    """Necessary conditions: one constraint per S containing the relay,
    rhs = kappa * log(1 + sum_S |g_lD|^2 P_l / N)."""
    if not kappa > 0:
        raise ValidationError(f"kappa: must be > 0, got {kappa}")
    cons = []
    for s in subsets_with_relay(params.K):
        gp, _, _ = params.subset_gain_power(s)
        cons.append(Constraint(s, kappa * _log(1.0 + gp / params.noise_power, base), "outer"))
    return RateRegion(K=params.K, constraints=cons, kind="outer")


def gain_conditions_hold(params):
    """Per-subset relay-dominance test: sum_S |g_lR|^2 P_l >= |g_{K+1,D}|^2
    P_{K+1} + sum_S |g_lD|^2 P_l for every nonempty S of encoders."""
    relay_term = abs(params.gains_dest[params.K]) ** 2 * params.powers[params.K]
    violating = []
    for s in nonempty_encoder_subsets(params.K):
        idx = np.array(sorted(s)) - 1
        lhs = float((np.abs(params.gains_relay[idx]) ** 2 * params.powers[idx]).sum())
        rhs = relay_term + float((np.abs(params.gains_dest[idx]) ** 2 * params.powers[idx]).sum())
        if lhs < rhs:
            violating.append(s)
    return (not violating), violating


def achievable_region(params, kappa=1.0, base=2.0):
    """Sufficient conditions (strict inequalities understood).

    Under the gain conditions this is the same constraint family as the outer
    region.  Otherwise the relay's MAC-decoding constraints are added and the
    region is an intersection with no optimality claim.
    """
    cons = [
        Constraint(c.subset, c.rhs, "achievable")
        for c in outer_region(params, kappa, base).constraints
    ]
    holds, _ = gain_conditions_hold(params)
    note = ""
    if not holds:
        relay_mac = mac_region(
            params.gains_relay, params.powers[: params.K], params.noise_power,
            kappa, "mac_relay", base,
        )
        cons.extend(relay_mac.constraints)
        note = "intersection, separation not guaranteed"
    return RateRegion(K=params.K, constraints=cons, kind="achievable", note=note)


def feasible(src, params, kappa=1.0, tolerance=1e-9, base=2.0):
    """Compare source conditional entropies against every constraint.

    Verdict is definitive only when the gain conditions hold; otherwise it is
    evaluated against the intersection region and flagged accordingly.
    """
    if src.K != params.K:
        raise ValidationError(f"source K={src.K} does not match channel K={params.K}")
    region = achievable_region(params, kappa, base)
    margin = math.inf
    binding = []
    for c in region.constraints:
        slack = c.rhs - conditional_entropy(src, c.subset, base)
        if slack < margin:
            margin = slack
        if slack <= tolerance:
            binding.append(c.subset)
    if margin > tolerance:
        status = "inside"
    elif margin < -tolerance:
        status = "outside"
    else:
        status = "boundary"
    holds, _ = gain_conditions_hold(params)
    return FeasibilityVerdict(
        status=status,
        binding=sorted(set(binding), key=subset_mask),
        margin=margin,
        definitive=holds,
    )


def slepian_wolf_region(src, base=None):
    """Lossless-compression lower bounds: H(U_S | U_{S^c}) < R_S."""
    base = src.log_base if base is None else base
    cons = [
        Constraint(s, conditional_entropy(src, s, base), "slepian_wolf")
        for s in subsets_with_relay(src.K)
    ]
    return RateRegion(K=src.K, constraints=cons, kind="slepian_wolf")


def ic_region(g11, g12, g21, g22, P1, P2, N, base=2.0):
    """Two-user interference channel region as the constraint-wise
    intersection of the two receiver MAC regions (gain g_ij: node i to
    receiver j).  strong is True when each cross gain dominates the direct
    one, the regime where this intersection is the exact answer."""
    for name, g in (("g11", g11), ("g12", g12), ("g21", g21), ("g22", g22)):
        if not np.isfinite(complex(g)):
            raise ValidationError(f"{name}: gain must be finite")
    rx1 = mac_region([g11, g21], [P1, P2], N, kind="mac_destination", base=base)
    rx2 = mac_region([g12, g22], [P1, P2], N, kind="mac_destination", base=base)
    strong = abs(g11) <= abs(g12) and abs(g22) <= abs(g21)
    c1, c2 = rx1.canonical(), rx2.canonical()
    cons = [Constraint(s, min(c1[s], c2[s]), "ic") for s in sorted(c1, key=subset_mask)]
    return strong, RateRegion(K=2, constraints=cons, kind="ic")


# -- rate-point helpers --------------------------------------------------------


def rate_sum(rates, subset, K):
    return float(sum(rates[i - 1] for i in subset if i <= K))


def channel_margin(region, rates):
    """min over channel constraints of rhs - R_S (negative means outside)."""
    vals = [
        c.rhs - rate_sum(rates, c.subset, region.K)
        for c in region.constraints
        if c.kind in CHANNEL_KINDS
    ]
    if not vals:
        raise ValidationError("region has no channel constraints")
    return min(vals)


def scale_rates_to_fraction(region, base_rates, fraction):
    """Scale a rate direction so the binding constraint sits at the given
    fraction of its rhs: max_S R_S / rhs_S == fraction."""
    base_rates = np.asarray(base_rates, dtype=float)
    worst = 0.0
    for c in region.constraints:
        if c.kind not in CHANNEL_KINDS:
            continue
        rs = rate_sum(base_rates, c.subset, region.K)
        if rs > 0:
            worst = max(worst, rs / c.rhs)
    if worst == 0.0:
        raise ValidationError("base_rates: must load at least one constraint")
    return base_rates * (fraction / worst)
