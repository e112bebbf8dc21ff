"""Consent enforcement with ledger-backed audit and a BFT side-chain simulator."""

__version__ = "0.1.0"
