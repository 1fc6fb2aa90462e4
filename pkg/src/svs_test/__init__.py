"""Conformance testing for SBOM-based vulnerability scanners."""

__version__ = "0.1.0"
