"""Standalone model backend for the line-JSON anticipation protocol.

The pieces live in submodules: ``protocol`` (framing and validation),
``models`` (deterministic stand-ins), ``config`` (the adapter config
file), and ``server`` (the stdio/TCP serve loop and entry point).
"""

__all__ = ["config", "models", "protocol", "server"]
