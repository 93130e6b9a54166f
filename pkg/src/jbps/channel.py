"""Seeded Rician MISO channels with a far-field ULA line-of-sight component.

Every user's channel for a given draw comes from its own Philox stream keyed
by ``SeedSequence(seed, spawn_key=(draw_index, user))``, so an instance is a
pure function of ``(config, params, draw_index)`` regardless of call order or
how draws are spread over workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import SystemInstance, db_to_linear, dbm_to_watts

DEFAULT_DIRECTIONS_DEG = (-30.0, -60.0, 60.0, 30.0)


@dataclass(frozen=True)
class ChannelConfig:
    num_antennas: int = 4
    user_directions: tuple[float, ...] = DEFAULT_DIRECTIONS_DEG
    rician_factor_db: float = 5.0
    # Literal values from the reference setup; the two magnitudes are not
    # mutually consistent (see README), so both stay overridable.
    los_amplitude: float = 1e-4
    nlos_variance: float = 1e-4
    element_spacing_ratio: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "user_directions", tuple(float(d) for d in self.user_directions))
        if int(self.num_antennas) < 1:
            raise ValueError("num_antennas must be >= 1")
        if not self.user_directions:
            raise ValueError("at least one user direction is required")
        if not self.nlos_variance > 0 or not self.los_amplitude > 0:
            raise ValueError("los_amplitude and nlos_variance must be positive")
        if not self.element_spacing_ratio > 0:
            raise ValueError("element_spacing_ratio must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def num_users(self) -> int:
        return len(self.user_directions)

    @property
    def rician_factor(self) -> float:
        return db_to_linear(self.rician_factor_db)


@dataclass(frozen=True)
class LinkParams:
    """Receiver-side constants shared by all users (watts, linear)."""

    antenna_noise: float = field(default_factory=lambda: dbm_to_watts(-70.0))
    id_noise: float = field(default_factory=lambda: dbm_to_watts(-50.0))
    eh_efficiency: float = 0.5


def ula_los(num_antennas: int, direction_deg: float, spacing_ratio: float = 0.5, amplitude: float = 1e-4) -> np.ndarray:
    theta = -2.0 * np.pi * spacing_ratio * np.sin(np.deg2rad(direction_deg))
    return amplitude * np.exp(1j * theta * np.arange(num_antennas))


def rician_draw(rng: np.random.Generator, los: np.ndarray, rician_factor: float, nlos_variance: float) -> np.ndarray:
    if rician_factor < 0:
        raise ValueError("Rician factor must be nonnegative")
    n = los.shape[0]
    scatter = np.sqrt(nlos_variance / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return np.sqrt(rician_factor / (1.0 + rician_factor)) * los + np.sqrt(1.0 / (1.0 + rician_factor)) * scatter


def user_rng(seed: int, draw_index: int, user: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(draw_index), int(user)))))


def generate_channels(config: ChannelConfig, draw_index: int) -> np.ndarray:
    K_R = config.rician_factor
    cols = []
    for k, phi in enumerate(config.user_directions):
        los = ula_los(config.num_antennas, phi, config.element_spacing_ratio, config.los_amplitude)
        cols.append(rician_draw(user_rng(config.seed, draw_index, k), los, K_R, config.nlos_variance))
    return np.column_stack(cols)


def generate_instance(config: ChannelConfig, params: LinkParams = LinkParams(), draw_index: int = 0) -> SystemInstance:
    K = config.num_users
    return SystemInstance(
        channels=generate_channels(config, draw_index),
        antenna_noise=np.full(K, params.antenna_noise),
        id_noise=np.full(K, params.id_noise),
        eh_efficiency=np.full(K, params.eh_efficiency),
    )
