"""Weighted nonlinear forecast combination with linear baselines."""
