"""Network parameterization shared by the simulator, the analytic CDFs and the CLI."""

from __future__ import annotations

import enum
import math
import numbers
from dataclasses import dataclass

MIN_SHAPE = 0.5
DEFAULT_PACKET_LENGTH = 128


class ParamsError(ValueError):
    """Raised when a parameter set violates a model constraint."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DecodingPolicy(enum.Enum):
    """How a relay decides it has decoded the first-hop packet."""

    OUTAGE_THRESHOLD = "outage_threshold"
    MLD_PROXY = "mld_proxy"


@dataclass(frozen=True)
class NetworkParams:
    """Dual-hop DF network with ``n_branches`` relays and ``n_interferers`` co-channel interferers.

    Mean SNR/INR values are linear and noise-normalized. Every interferer
    link, at each relay and at the destination, is i.i.d. with
    ``(m_interf, avg_inr)``.

    By default each candidate second hop sees its own draw of the
    destination interference, which keeps second-hop SINRs independent
    across branches as the product-form outage CDFs assume.  With
    ``shared_dest_interference`` one interference sum is common to all
    second hops; the outage CDF then has to be averaged over that sum
    (see ``analytic.e2e_cdf_shared``).
    """

    n_branches: int
    n_interferers: int
    m_first: float
    m_second: float
    m_interf: float
    avg_snr_first: float
    avg_snr_second: float
    avg_inr: float
    outage_threshold: float
    decoding_policy: DecodingPolicy = DecodingPolicy.OUTAGE_THRESHOLD
    packet_length: int = DEFAULT_PACKET_LENGTH
    shared_dest_interference: bool = False

    @property
    def dest_interference_draws(self) -> int:
        l = self.n_interferers
        return l if self.shared_dest_interference else self.n_branches * l

    @property
    def draws_per_trial(self) -> int:
        """Number of uniforms consumed by one channel realization."""
        n, l = self.n_branches, self.n_interferers
        return 2 * n + n * l + self.dest_interference_draws

    @property
    def stream_length(self) -> int:
        """Channel draws followed by one decoding draw per relay."""
        return self.draws_per_trial + self.n_branches


def _is_int(x) -> bool:
    return isinstance(x, numbers.Integral) and not isinstance(x, bool)


def _positive_finite(x) -> bool:
    return isinstance(x, numbers.Real) and math.isfinite(x) and x > 0


def validate(params: NetworkParams) -> None:
    """Raise :class:`ParamsError` naming the first offending field, else return None."""
    if not _is_int(params.n_branches) or params.n_branches < 1:
        raise ParamsError("n_branches", "n_branches must be ≥ 1")
    if not _is_int(params.n_interferers) or params.n_interferers < 0:
        raise ParamsError("n_interferers", "n_interferers must be a non-negative integer")
    for name in ("m_first", "m_second", "m_interf"):
        m = getattr(params, name)
        if not isinstance(m, numbers.Real) or not math.isfinite(m) or m < MIN_SHAPE:
            raise ParamsError(name, f"fading shape must be ≥ {MIN_SHAPE}, got {m!r}")
    for name in ("avg_snr_first", "avg_snr_second", "outage_threshold"):
        if not _positive_finite(getattr(params, name)):
            raise ParamsError(name, f"must be a positive finite number, got {getattr(params, name)!r}")
    inr = params.avg_inr
    if not isinstance(inr, numbers.Real) or not math.isfinite(inr) or inr < 0:
        raise ParamsError("avg_inr", f"must be a non-negative finite number, got {inr!r}")
    if params.n_interferers > 0 and inr == 0:
        raise ParamsError("avg_inr", "avg_inr must be > 0 when n_interferers ≥ 1")
    if not isinstance(params.decoding_policy, DecodingPolicy):
        raise ParamsError("decoding_policy", f"unknown policy {params.decoding_policy!r}")
    if not _is_int(params.packet_length) or params.packet_length < 1:
        raise ParamsError("packet_length", "packet_length must be a positive integer")


def db_to_linear(x_db: float) -> float:
    """Convert decibels to a linear power ratio.

    The decade is split off so that adding 10 dB scales the result by
    exactly 10 up to rounding of the final products.
    """
    x_db = float(x_db)
    if not math.isfinite(x_db):
        raise ValueError(f"dB value must be finite, got {x_db!r}")
    decades = math.floor(x_db / 10.0)
    rest = x_db - 10.0 * decades
    return 10.0 ** (rest / 10.0) * 10.0**decades


def linear_to_db(x: float) -> float:
    if not x > 0:
        raise ValueError(f"linear value must be positive, got {x!r}")
    return 10.0 * math.log10(x)
