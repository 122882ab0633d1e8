"""Channel realizations, decoding sets and the two relay-selection rules.

Everything is computed at the SINR level: a link's SINR is its SNR divided
by one plus the summed INR of the interferers seen at the receiver.  The
scalar functions handle one trial and stay close to the selection rules;
the ``*_block`` functions are the vectorized equivalents used by the
Monte Carlo engine.

Threshold conventions: a relay decodes iff its first-hop SINR is strictly
above the threshold, and a trial is in outage iff its effective SINR is
*not* strictly above it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erfc

from .fading import GammaSampler, TrialRng, trial_uniforms
from .params import DecodingPolicy, NetworkParams


class Strategy(enum.Enum):
    RRS = "rrs"
    PRS = "prs"


@dataclass(frozen=True)
class ChannelRealization:
    first_hop_snr: np.ndarray
    second_hop_snr: np.ndarray
    relay_inr_sum: np.ndarray
    dest_inr_sum: np.ndarray
    first_hop_sinr: np.ndarray
    second_hop_sinr: np.ndarray

    @classmethod
    def from_gains(cls, first_hop_snr, second_hop_snr, relay_inr_sum=None, dest_inr_sum=0.0):
        """Build a realization from SNR/INR gains; ``dest_inr_sum`` may be a scalar shared by all branches."""
        first = np.asarray(first_hop_snr, dtype=np.float64)
        second = np.asarray(second_hop_snr, dtype=np.float64)
        if first.shape != second.shape or first.ndim != 1:
            raise ValueError("first and second hop arrays must be 1-D of equal length")
        relay = np.zeros_like(first) if relay_inr_sum is None else np.asarray(relay_inr_sum, dtype=np.float64)
        dest = np.broadcast_to(np.asarray(dest_inr_sum, dtype=np.float64), first.shape).copy()
        if relay.shape != first.shape:
            raise ValueError("relay_inr_sum must have one entry per branch")
        return cls(first, second, relay, dest, first / (1.0 + relay), second / (1.0 + dest))

    @property
    def n_branches(self) -> int:
        return self.first_hop_sinr.shape[0]


@dataclass(frozen=True)
class SelectionOutcome:
    strategy: Strategy
    chosen_relay: Optional[int]
    effective_sinr: float
    outage: bool
    decoding_set_size: int


def packet_error_rate(sinr, packet_length: int):
    """Union-bound packet error proxy ``min(1, M * Q(sqrt(2 * sinr)))`` for antipodal symbols."""
    # Q(sqrt(2x)) = erfc(sqrt(x)) / 2
    return np.minimum(1.0, packet_length * 0.5 * erfc(np.sqrt(sinr)))


# -- block kernels ----------------------------------------------------------


@dataclass(frozen=True)
class ChannelBlock:
    """SINRs of a batch of trials, arrays of shape ``(n_trials, n_branches)``."""

    first_hop_snr: np.ndarray
    second_hop_snr: np.ndarray
    relay_inr_sum: np.ndarray
    dest_inr_sum: np.ndarray
    first_hop_sinr: np.ndarray
    second_hop_sinr: np.ndarray
    decode_uniforms: np.ndarray


def realize_block(params: NetworkParams, master_seed: int, trial_indices) -> ChannelBlock:
    """Realize every trial in ``trial_indices`` from its own stream.

    Stream layout per trial: N first-hop gains, N second-hop gains, N*L
    relay interferer gains (branch-major), destination interferer gains
    (N*L branch-major, or L when shared), then N decoding uniforms.
    """
    n, l = params.n_branches, params.n_interferers
    u = trial_uniforms(master_seed, trial_indices, params.stream_length)
    first = GammaSampler(params.m_first, params.avg_snr_first).from_uniform(u[:, :n])
    second = GammaSampler(params.m_second, params.avg_snr_second).from_uniform(u[:, n : 2 * n])
    if l:
        interf = GammaSampler(params.m_interf, params.avg_inr)
        relay = interf.from_uniform(u[:, 2 * n : 2 * n + n * l]).reshape(-1, n, l).sum(axis=2)
        gains = interf.from_uniform(u[:, 2 * n + n * l : params.draws_per_trial])
        if params.shared_dest_interference:
            dest = np.repeat(gains.sum(axis=1, keepdims=True), n, axis=1)
        else:
            dest = gains.reshape(-1, n, l).sum(axis=2)
    else:
        relay = np.zeros_like(first)
        dest = np.zeros_like(first)
    return ChannelBlock(
        first_hop_snr=first,
        second_hop_snr=second,
        relay_inr_sum=relay,
        dest_inr_sum=dest,
        first_hop_sinr=first / (1.0 + relay),
        second_hop_sinr=second / (1.0 + dest),
        decode_uniforms=u[:, params.draws_per_trial :],
    )


def mld_decoded_block(block: ChannelBlock, packet_length: int) -> np.ndarray:
    return block.decode_uniforms < 1.0 - packet_error_rate(block.first_hop_sinr, packet_length)


def rrs_block(second_hop_sinr: np.ndarray, decoded: np.ndarray):
    """Best second hop among decoding relays; effective SINR 0 when nobody decoded."""
    masked = np.where(decoded, second_hop_sinr, -np.inf)
    chosen = np.argmax(masked, axis=1)
    best = np.take_along_axis(masked, chosen[:, None], axis=1)[:, 0]
    return chosen, np.where(np.isfinite(best), best, 0.0)


def prs_choice_block(first_hop_sinr: np.ndarray, second_hop_sinr: np.ndarray):
    """Max-min relay per trial and its max-min value."""
    bottleneck = np.minimum(first_hop_sinr, second_hop_sinr)
    chosen = np.argmax(bottleneck, axis=1)
    return chosen, np.take_along_axis(bottleneck, chosen[:, None], axis=1)[:, 0]


# -- single trial -----------------------------------------------------------


def realize_channel(params: NetworkParams, rng: TrialRng) -> ChannelRealization:
    b = realize_block(params, rng.master_seed, [rng.trial_index])
    return ChannelRealization(
        first_hop_snr=b.first_hop_snr[0],
        second_hop_snr=b.second_hop_snr[0],
        relay_inr_sum=b.relay_inr_sum[0],
        dest_inr_sum=b.dest_inr_sum[0],
        first_hop_sinr=b.first_hop_sinr[0],
        second_hop_sinr=b.second_hop_sinr[0],
    )


def _decodes(real: ChannelRealization, params: NetworkParams, rng: Optional[TrialRng], n: int) -> bool:
    sinr = float(real.first_hop_sinr[n])
    if params.decoding_policy is DecodingPolicy.OUTAGE_THRESHOLD:
        return sinr > params.outage_threshold
    if rng is None:
        raise ValueError("the MLD proxy policy needs the trial stream")
    success = 1.0 - float(packet_error_rate(sinr, params.packet_length))
    return rng.uniform(params.draws_per_trial + n) < success


def decoding_set(real: ChannelRealization, params: NetworkParams, rng: Optional[TrialRng] = None) -> frozenset:
    return frozenset(n for n in range(real.n_branches) if _decodes(real, params, rng, n))


def select_rrs(real: ChannelRealization, decoding: frozenset, threshold: float) -> SelectionOutcome:
    if not decoding:
        return SelectionOutcome(Strategy.RRS, None, 0.0, True, 0)
    chosen = max(sorted(decoding), key=lambda r: real.second_hop_sinr[r])
    effective = float(real.second_hop_sinr[chosen])
    return SelectionOutcome(Strategy.RRS, chosen, effective, not effective > threshold, len(decoding))


def select_prs(real: ChannelRealization, params: NetworkParams, rng: Optional[TrialRng] = None) -> SelectionOutcome:
    bottleneck = [min(s, d) for s, d in zip(real.first_hop_sinr, real.second_hop_sinr)]
    chosen = max(range(real.n_branches), key=lambda n: bottleneck[n])
    decoded = _decodes(real, params, rng, chosen)
    effective = float(real.second_hop_sinr[chosen]) if decoded else 0.0
    return SelectionOutcome(
        Strategy.PRS, chosen, effective, not effective > params.outage_threshold, int(decoded)
    )
