"""Agent and message traits, and the reshare/like scoring rules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from platsim.stochastics import RandomSource, triangular_inverse_cdf

DEFAULT_TRIANGULAR_MODE = 0.5


def reshare_threshold(reward_sensitivity, meaning_seeking):
    """Norm of the (1 - rho, 1 - mu) vector; scalar or array."""
    return np.hypot(1.0 - np.asarray(reward_sensitivity), 1.0 - np.asarray(meaning_seeking))


@dataclass(frozen=True)
class AgentTraits:
    quality_preference: float
    reward_sensitivity: float
    meaning_seeking: float
    reshare_threshold: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "reshare_threshold",
            math.hypot(1.0 - self.reward_sensitivity, 1.0 - self.meaning_seeking),
        )


@dataclass(frozen=True)
class MessageTraits:
    motivating: float
    illuminating: float
    quality: float

    @property
    def magnitude(self) -> float:
        return message_magnitude(self.motivating, self.illuminating)


@dataclass
class Message:
    id: int
    author: int
    created_step: int
    traits: MessageTraits
    reshare_count: int = 0
    like_count: int = 0


def message_magnitude(k: float, beta: float) -> float:
    return math.hypot(k, beta)


def like_score(phi, k, beta):
    """(1 - phi) * k + phi * beta.

    Only used for ranking, so values outside [0, 1] (phi < 0) are left alone.
    """
    return (1.0 - phi) * k + phi * beta


def eligible_for_reshare(msg: MessageTraits, traits: AgentTraits) -> bool:
    # strict on quality, inclusive on magnitude
    return msg.quality > traits.quality_preference and msg.magnitude >= traits.reshare_threshold


def sample_agent_traits(src: RandomSource, mode: float = DEFAULT_TRIANGULAR_MODE) -> AgentTraits:
    u = src.random(3)
    return AgentTraits(
        quality_preference=float(-1.0 + 2.0 * u[0]),
        reward_sensitivity=float(triangular_inverse_cdf(u[1], 0.0, mode, 1.0)),
        meaning_seeking=float(triangular_inverse_cdf(u[2], 0.0, mode, 1.0)),
    )


def sample_message_traits(src: RandomSource, mode: float = DEFAULT_TRIANGULAR_MODE) -> MessageTraits:
    u = src.random(3)
    return message_traits_from_uniforms(u, mode)


def message_traits_from_uniforms(u, mode: float = DEFAULT_TRIANGULAR_MODE) -> MessageTraits:
    tri = triangular_inverse_cdf(np.asarray(u[:2]), 0.0, mode, 1.0)
    return MessageTraits(
        motivating=float(tri[0]), illuminating=float(tri[1]), quality=float(-1.0 + 2.0 * u[2])
    )


@dataclass(frozen=True)
class AgentPopulation:
    """Column-oriented traits for agents 0..n-1 (users first, then pages)."""

    quality_preference: np.ndarray
    reward_sensitivity: np.ndarray
    meaning_seeking: np.ndarray
    reshare_threshold: np.ndarray

    def __len__(self) -> int:
        return len(self.quality_preference)

    def __getitem__(self, i: int) -> AgentTraits:
        return AgentTraits(
            float(self.quality_preference[i]),
            float(self.reward_sensitivity[i]),
            float(self.meaning_seeking[i]),
        )


def sample_population(src: RandomSource, n: int, mode: float = DEFAULT_TRIANGULAR_MODE) -> AgentPopulation:
    """Traits for ``n`` agents in ascending id order.

    Consumes the stream exactly as ``n`` successive ``sample_agent_traits`` calls would.
    """
    u = src.random((n, 3))
    phi = -1.0 + 2.0 * u[:, 0]
    rho = triangular_inverse_cdf(u[:, 1], 0.0, mode, 1.0)
    mu = triangular_inverse_cdf(u[:, 2], 0.0, mode, 1.0)
    return AgentPopulation(phi, rho, mu, reshare_threshold(rho, mu))
