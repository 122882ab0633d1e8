"""Reactive vs proactive relay selection in dual-hop DF networks with co-channel interference."""

from .analytic import (
    CdfEvaluator,
    InterferenceProfile,
    LinkFading,
    e2e_cdf_prs,
    e2e_cdf_rrs,
    e2e_cdf_shared,
    outage_probability,
    sinr_cdf_closed,
    sinr_cdf_quadrature,
)
from .fading import GammaSampler, TrialRng, derive_trial_stream, sample_power
from .montecarlo import TrialReport, ks_statistic, run_trials, ser_map
from .network import (
    ChannelRealization,
    SelectionOutcome,
    decoding_set,
    realize_channel,
    select_prs,
    select_rrs,
)
from .params import DecodingPolicy, NetworkParams, ParamsError, db_to_linear, validate

__version__ = "0.1.0"
