"""Projection-method spectral solver for quasiperiodic elliptic operators."""
