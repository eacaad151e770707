"""Core engine: chain model, strapdown propagation, measurement channels, filters, simulator and harness."""

__version__ = "1.0.0"
__app_name__ = "limbfusion"
