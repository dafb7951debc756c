"""Fractional mean function norms on finite spaces of homogeneous type."""
