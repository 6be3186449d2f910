"""Secure beamforming for a cooperative D2D multicast group sharing spectrum
with a cellular user, against independent or colluding eavesdroppers."""
from .harness import Campaign, CampaignResult, emit_csv, run_campaign
from .normal_case import ScaOptions, solve_normal
from .rates import BeamformingSolution, RatePair, rate_pair
from .scenario import ChannelRealization, SystemConfig, generate_channels
from .suboptimal import SuboptOptions, plan_suboptimal
from .worst_case import WorstOptions, solve_worst

__all__ = [
    "BeamformingSolution", "Campaign", "CampaignResult", "ChannelRealization",
    "RatePair", "ScaOptions", "SuboptOptions", "SystemConfig", "WorstOptions",
    "emit_csv", "generate_channels", "plan_suboptimal", "rate_pair",
    "run_campaign", "solve_normal", "solve_worst",
]
