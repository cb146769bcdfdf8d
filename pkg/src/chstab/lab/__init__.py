"""Experiment configuration, presets, plotting and the command line."""
