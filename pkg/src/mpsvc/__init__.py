"""Preference-aware multi-path scheduling and simulation for layered video."""

from .model import (
    SKIPPED,
    BandwidthTrace,
    FetchPlan,
    ModelError,
    VideoSpec,
    WeightTable,
    build_weights,
    cumulative_bandwidth,
    deadlines,
    symmetric_weights,
    validate_weights,
)
from .offline import backward_cost, forward_scan, mp_svc_offline
from .pref import PreferenceConfig, avoid_skips_mp_svc, pref_mp_svc
from .noskip import (
    InfeasibleStall,
    avoid_stalls_mp_svc,
    min_stall_scan,
    no_skip_mp_svc,
    pref_no_skip_mp_svc,
)
from .mptcp import aggregate_trace, mptcp_svc, pref_mptcp_svc
from .online import OnlineConfig, run_online
from .playback import DownloadLog, QoeReport, compute_metrics, simulate_download

__version__ = "0.1.0"
