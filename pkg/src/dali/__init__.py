"""Desk-scale federated data space: governed connectors, catalogue, clearing house."""

__version__ = "0.1.0"
