"""Conditional photocount laws for the legitimate receiver and the eavesdropper.

Operating point convention: everything is referred to the eavesdropper's side.
``nbar_e`` is the mean pulse energy she captures, ``delta_e`` the modulation
depth in units of her shot-noise standard deviation,

    n_E0 = nbar_e - delta_e * sqrt(nbar_e),
    n_E1 = nbar_e + delta_e * sqrt(nbar_e),

and the legitimate receiver enters only through the transmission ratio
``tau_ratio`` (his collected fraction over hers) and his background mean
``n_b``.  Absolute transmitter-side energies never appear: only the products
tau_ratio * n_Ei and n_Ei itself enter any count distribution, so carrying
them would add two redundant degrees of freedom.

The eavesdropper demultiplexes her signal into the pulse-0 mode u and its
complement v, then photon-counts each.  With noiseless unit-efficiency
detection her counts are

    bit 0:  k_u ~ Pois(n_E0),            k_v ~ Pois(0),
    bit 1:  k_u ~ Pois((1 - D) n_E1),    k_v ~ Pois(D n_E1),

where D is the symbol shape distortion.  The v-detector is dark for bit 0, so
a single v-count identifies bit 1 outright — that asymmetry is what makes the
demultiplexing attack powerful and is load-bearing for everything downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .poisson import PoissonLaw


@dataclass(frozen=True)
class ScenarioParams:
    """One operating point of the key-distribution link under attack.

    nbar_e    mean pulse energy at the eavesdropper, photons/slot (> 0)
    delta_e   rescaled modulation depth, in [0, sqrt(nbar_e)]
    distortion  symbol shape distortion D in [0, 1]
    tau_ratio   receiver/eavesdropper transmission ratio (> 0)
    n_b       background mean photocounts at the receiver (>= 0)
    """

    nbar_e: float
    delta_e: float
    distortion: float
    tau_ratio: float
    n_b: float

    def __post_init__(self):
        if not (math.isfinite(self.nbar_e) and self.nbar_e > 0):
            raise ValueError(f"nbar_e must be positive, got {self.nbar_e}")
        if not (math.isfinite(self.delta_e) and self.delta_e >= 0):
            raise ValueError(f"delta_e must be >= 0, got {self.delta_e}")
        if self.delta_e > math.sqrt(self.nbar_e) * (1 + 1e-12):
            raise ValueError("negative pulse energy")
        if not (0.0 <= self.distortion <= 1.0):
            raise ValueError("distortion out of [0,1]")
        if not (math.isfinite(self.tau_ratio) and self.tau_ratio > 0):
            raise ValueError(f"tau_ratio must be positive, got {self.tau_ratio}")
        if not (math.isfinite(self.n_b) and self.n_b >= 0):
            raise ValueError(f"n_b must be >= 0, got {self.n_b}")


@dataclass(frozen=True)
class EnergyPair:
    """Pulse energies at the eavesdropper for the two bit values."""

    n_e0: float
    n_e1: float


@dataclass(frozen=True)
class BobChannel:
    """Receiver photocount laws conditioned on the transmitted bit."""

    law0: PoissonLaw
    law1: PoissonLaw


@dataclass(frozen=True)
class EveChannel:
    """Eavesdropper photocount laws per demultiplexed mode and bit value."""

    u_law0: PoissonLaw
    u_law1: PoissonLaw
    v_law0: PoissonLaw
    v_law1: PoissonLaw


def energies_from_params(p: ScenarioParams) -> EnergyPair:
    """Invert the rescaled modulation depth into the two pulse energies."""
    step = p.delta_e * math.sqrt(p.nbar_e)
    n_e0 = p.nbar_e - step
    if n_e0 < 0:
        # delta_e == sqrt(nbar_e) within float rounding lands at exactly zero
        if n_e0 < -1e-12 * p.nbar_e:
            raise ValueError("negative pulse energy")
        n_e0 = 0.0
    return EnergyPair(n_e0=n_e0, n_e1=p.nbar_e + step)


def bob_channel(p: ScenarioParams) -> BobChannel:
    """Receiver counts: Poisson with mean tau_ratio * n_Ei + n_b."""
    energies = energies_from_params(p)
    return BobChannel(
        law0=PoissonLaw(p.tau_ratio * energies.n_e0 + p.n_b),
        law1=PoissonLaw(p.tau_ratio * energies.n_e1 + p.n_b),
    )


def eve_channel(p: ScenarioParams) -> EveChannel:
    """Eavesdropper counts after demultiplexing into the u and v modes.

    Given the bit value the two detector counts are independent; the v
    detector has mean zero for bit 0 exactly.
    """
    energies = energies_from_params(p)
    d = p.distortion
    return EveChannel(
        u_law0=PoissonLaw(energies.n_e0),
        u_law1=PoissonLaw((1.0 - d) * energies.n_e1),
        v_law0=PoissonLaw(0.0),
        v_law1=PoissonLaw(d * energies.n_e1),
    )
