"""
core/benchmarks.py - Published benchmark systems and datasets
Double-integrator-like example, its recorded noisy trajectory, and the
lateral aircraft model with its data-generation recipe.
"""
from __future__ import annotations

from typing import Dict, Literal

import numpy as np

from core.data_model import NoiseModel, SystemModel, TrajectoryData, noise_norm_bound, simulate

Preset = Literal["example2", "example3", "example4"]


# ---------------------------------------------------------------------------
# Second-order example
# ---------------------------------------------------------------------------

def example2_system() -> SystemModel:
    return SystemModel(np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([[0.5], [1.0]]))


EXAMPLE2_GAIN = np.array([[-1.0, -1.0]])
EXAMPLE2_OPT_GAIN = np.array([[-0.667, -1.333]])


def example3_data() -> TrajectoryData:
    """Recorded trajectory of the second-order example (T = 4, ||W-|| = 1)."""
    u = np.array([[2.0], [-4.0], [3.0], [5.0]])
    x = np.array([[0.0, 0.0], [1.0, 2.0], [2.0, -2.0], [1.5, 1.0], [5.0, 5.0]])
    w = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, -1.0]])
    return TrajectoryData(u=u, x=x, w=w)


def example3_noise(T: int = 4) -> NoiseModel:
    return noise_norm_bound(2, T, 1.0)


EXAMPLE3_GAIN = np.array([[-1.35, -1.7]])
EXAMPLE3_OPT_GAIN = np.array([[-1.426, -1.782]])


# ---------------------------------------------------------------------------
# Lateral aircraft model (n = 6, m = 2)
# ---------------------------------------------------------------------------

AIRCRAFT_A = np.array([
    [1.000, -0.374, -0.190, -0.321,  0.056, -0.026],
    [0.000,  0.982,  0.010, -0.000, -0.003,  0.001],
    [0.000,  0.115,  0.975, -0.000, -0.269,  0.191],
    [0.000,  0.001,  0.010,  1.000, -0.001,  0.001],
    [0.000,  0.000,  0.000,  0.000,  0.741,  0.000],
    [0.000,  0.000,  0.000,  0.000,  0.000,  0.741],
])

# published transposed (2 x 6); stored n x m
AIRCRAFT_B = np.array([
    [0.007, 0.000, -0.043, 0.000, 0.259, 0.000],
    [-0.003, 0.000, 0.030, 0.000, 0.000, 0.259],
]).T

AIRCRAFT_X0 = np.array([0.809, -1.323, 0.753, 1.862, -0.953, 0.215])
AIRCRAFT_T = 500
AIRCRAFT_NOISE_ENTRY = 0.005 / 6      # disturbance entries uniform in [-b, b]
AIRCRAFT_NOISE_EPS = 0.005            # Phi11 = eps^2 T I

AIRCRAFT_K_DESIGN = np.array([
    [-0.023,  1.563,  0.899,  0.939, -1.688,  0.248],
    [0.016,  -1.389, -0.548, -0.792,  0.262, -1.523],
])
AIRCRAFT_K_OPT = np.array([
    [-0.368,  2.412,  1.201,  1.768, -1.641,  0.303],
    [0.257,  -1.927, -0.770, -1.384,  0.325, -1.436],
])
AIRCRAFT_DELTA = np.array([
    [-0.010, -0.052,  0.099,  0.012,  0.036, 0.058],
    [-0.228, -0.212, -0.105, -0.064, -0.071, 0.087],
])


def aircraft_system() -> SystemModel:
    return SystemModel(AIRCRAFT_A.copy(), AIRCRAFT_B.copy())


def aircraft_noise(T: int = AIRCRAFT_T) -> NoiseModel:
    """Phi11 = 0.005^2 T I, Phi12 = 0, Phi22 = -I_T."""
    return noise_norm_bound(6, T, AIRCRAFT_NOISE_EPS * np.sqrt(T))


def aircraft_data(seed: int = 0, T: int = AIRCRAFT_T) -> TrajectoryData:
    """Gaussian inputs, uniform disturbances; inputs are drawn before disturbances."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((T, 2))
    w = rng.uniform(-AIRCRAFT_NOISE_ENTRY, AIRCRAFT_NOISE_ENTRY, size=(T, 6))
    return simulate(aircraft_system(), AIRCRAFT_X0, u, w)


def preset(name: Preset, seed: int = 0) -> Dict[str, object]:
    """System, dataset and noise model of a named preset."""
    if name in ("example2", "example3"):
        data = example3_data()
        return {"system": example2_system(), "data": data, "noise": example3_noise(data.T)}
    if name == "example4":
        data = aircraft_data(seed)
        return {"system": aircraft_system(), "data": data, "noise": aircraft_noise(data.T)}
    raise ValueError(f"unknown preset '{name}'")
