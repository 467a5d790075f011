"""safepool: pooled vs company-specific safety-outcome prediction pipeline."""

__version__ = "0.1.0"
