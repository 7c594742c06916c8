"""Numerical spectral analysis of a retarded Sturm-Liouville problem with interface conditions."""
