"""Hybrid statistical / instantaneous CSI feedback for FDD massive MIMO downlink.

Users either feed back a quantized channel (class-I) or are served from
their covariance alone (class-S); the split is chosen by maximizing a
covariance-only sum-rate bound.
"""

__version__ = "0.1.0"
