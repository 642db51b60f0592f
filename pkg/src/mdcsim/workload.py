"""Request stream: Poisson arrivals, request sizes and deadlines, packetization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .queueing import Packet

MB = 1_000_000


@dataclass(frozen=True)
class WorkloadParams:
    lam: float = 0.6
    size_min: int = 1 * MB
    size_max: int = 4 * MB
    deadline_min: int = 50
    deadline_max: int = 200
    payload_unit: int = 65536
    consumers: int = 20
    unregistered_fraction: float = 0.05

    def validate(self) -> None:
        if self.lam <= 0:
            raise ValueError("lambda must be > 0")
        if not 0 < self.size_min <= self.size_max:
            raise ValueError("size bounds must satisfy 0 < size_min <= size_max")
        if not 1 <= self.deadline_min <= self.deadline_max:
            raise ValueError("deadline bounds must satisfy 1 <= deadline_min <= deadline_max")
        if self.payload_unit <= 0:
            raise ValueError("payload_unit must be > 0")
        if self.consumers < 1:
            raise ValueError("consumers must be >= 1")
        if not 0 <= self.unregistered_fraction <= 1:
            raise ValueError("unregistered_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class Request:
    request_id: int
    consumer_id: Hashable
    size: int
    arrival_slot: int
    deadline_slots: int
    payload_unit: int = 65536

    @property
    def packet_count(self) -> int:
        return math.ceil(self.size / self.payload_unit)


def consumer_ids(count: int) -> list[str]:
    return [f"c{i}" for i in range(count)]


def poisson_arrivals(rng: np.random.Generator, lam: float) -> int:
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam!r}")
    return int(rng.poisson(lam))


def generate_request(
    rng: np.random.Generator,
    params: WorkloadParams,
    request_id: int = 0,
    arrival_slot: int = 0,
    consumers: Sequence[Hashable] | None = None,
) -> Request:
    """Draw one request: uniform size and deadline, uniform registered consumer.

    With probability ``unregistered_fraction`` the consumer is an outsider
    (id ``"u<request_id>"``) that admission control will reject.
    """
    if consumers is None:
        consumers = consumer_ids(params.consumers)
    size = int(rng.integers(params.size_min, params.size_max, endpoint=True))
    deadline = int(rng.integers(params.deadline_min, params.deadline_max, endpoint=True))
    if params.unregistered_fraction > 0 and rng.random() < params.unregistered_fraction:
        consumer = f"u{request_id}"
    else:
        consumer = consumers[int(rng.integers(len(consumers)))]
    return Request(request_id, consumer, size, arrival_slot, deadline, params.payload_unit)


def packetize(request: Request, payload_unit: int | None = None) -> list[Packet]:
    """Split a request into ceil(size / payload_unit) packets; the last may be short."""
    unit = request.payload_unit if payload_unit is None else payload_unit
    if unit <= 0:
        raise ValueError("payload_unit must be > 0")
    n = math.ceil(request.size / unit)
    last = request.size - unit * (n - 1)
    return [
        Packet(request.request_id, i, unit if i < n - 1 else last, request.arrival_slot)
        for i in range(n)
    ]
