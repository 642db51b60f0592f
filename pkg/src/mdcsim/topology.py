"""Devices of a mobile device cloud and their resource / potential accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable


@dataclass
class Device:
    device_id: Hashable
    residual_resource: float
    interface_ids: list = field(default_factory=list)
    requests_received: int = 0
    requests_serviced: int = 0
    registered: bool = True

    def __post_init__(self) -> None:
        if self.residual_resource < 0:
            raise ValueError(f"residual_resource must be >= 0 for device {self.device_id!r}")
        if not self.interface_ids:
            raise ValueError(f"device {self.device_id!r} needs at least one interface")
        if self.requests_serviced > self.requests_received:
            raise ValueError("requests_serviced cannot exceed requests_received")

    @property
    def potential(self) -> float:
        return device_potential(self.requests_serviced, self.requests_received)


@dataclass
class MdcComposition:
    devices: list = field(default_factory=list)
    formation_slot: int = 0

    def __post_init__(self) -> None:
        ids = [d.device_id for d in self.devices]
        if len(ids) != len(set(ids)):
            raise ValueError("device ids must be unique within a composition")

    def device(self, device_id: Hashable) -> Device:
        for d in self.devices:
            if d.device_id == device_id:
                return d
        raise KeyError(device_id)

    def union(self, other: "MdcComposition") -> "MdcComposition":
        return MdcComposition(self.devices + other.devices, min(self.formation_slot, other.formation_slot))


def total_resource(composition: MdcComposition) -> float:
    """Combined residual resource of every member device."""
    return sum(d.residual_resource for d in composition.devices)


def device_potential(serviced: int, received: int) -> float:
    """Serviced / received for one device; 1.0 when nothing has been received."""
    if serviced > received:
        raise ValueError(f"serviced ({serviced}) exceeds received ({received})")
    if serviced < 0:
        raise ValueError("counts must be nonnegative")
    if received == 0:
        return 1.0
    return serviced / received


def mdc_potential(composition: MdcComposition) -> float:
    """Composition-wide ratio of serviced to received requests (1.0 if none received)."""
    return potential_from_counts(
        (d.requests_serviced, d.requests_received) for d in composition.devices
    )


def potential_from_counts(pairs: Iterable[tuple[int, int]]) -> float:
    serviced = received = 0
    for s, r in pairs:
        serviced += s
        received += r
    if received == 0:
        return 1.0
    return serviced / received
