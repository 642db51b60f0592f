"""Per-interface packet queues and the congestion-handler queue policy."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, NamedTuple, Optional, Sequence

import numpy as np

from .channel import service_success_probability


@dataclass(slots=True, eq=False)
class Packet:
    request_id: int
    sequence_index: int
    size: int
    enqueue_slot: int = 0
    retransmission: bool = False
    failed_on: Optional[int] = None

    @property
    def key(self) -> tuple[int, int]:
        return (self.request_id, self.sequence_index)


@dataclass(eq=False)
class InterfaceQueue:
    """FIFO buffer for one interface (one MPTCP subflow)."""

    interface_id: int
    capacity: int
    threshold_tau: float
    weight_w: float = 1.0
    cwnd: int = 1
    ssthresh: int = 16
    failed: bool = False
    consecutive_bad_slots: int = 0
    consecutive_good_slots: int = 0
    device_id: Optional[Hashable] = None
    buffer: deque = field(default_factory=deque)

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        if not 0 < self.threshold_tau <= self.capacity:
            raise ValueError(
                f"threshold_tau must lie in (0, capacity={self.capacity}], got {self.threshold_tau}"
            )
        if self.weight_w <= 0:
            raise ValueError("weight_w must be > 0")
        if self.cwnd < 1 or self.ssthresh < 1:
            raise ValueError("cwnd and ssthresh must be >= 1")

    def __len__(self) -> int:
        return len(self.buffer)

    @property
    def occupancy(self) -> int:
        return len(self.buffer)

    @property
    def free(self) -> int:
        return self.capacity - len(self.buffer)

    @property
    def congested(self) -> bool:
        return congestion_trigger(len(self.buffer), self.weight_w, self.threshold_tau)


def congestion_trigger(occupancy: float, weight_w: float, tau: float) -> bool:
    """True when the weighted occupancy reaches the threshold: occupancy * w >= tau."""
    return occupancy * weight_w >= tau


def enqueue(queue: InterfaceQueue, packet: Packet) -> bool:
    """Append ``packet`` at the tail; False (overflow) if the buffer is full."""
    if len(queue.buffer) >= queue.capacity:
        return False
    queue.buffer.append(packet)
    return True


def select_offload_target(queues: Sequence[InterfaceQueue], source_id: int) -> Optional[int]:
    """Pick the healthy peer queue with the smallest weighted occupancy.

    A peer is eligible when it is not failed, has a free slot, and sits strictly
    below its own trigger. Ties go to the lowest interface id.
    """
    best = None
    best_key = None
    for q in queues:
        if q.interface_id == source_id or q.failed:
            continue
        n = len(q.buffer)
        if n >= q.capacity:
            continue
        load = n * q.weight_w
        if load >= q.threshold_tau:
            continue
        key = (load, q.interface_id)
        if best_key is None or key < best_key:
            best, best_key = q.interface_id, key
    return best


def offload_excess(source: InterfaceQueue, target: InterfaceQueue) -> list[Packet]:
    """Move the newest packets from ``source`` to ``target`` until the source trigger clears.

    Stops early when ``target`` fills. Moved packets keep their relative order.
    Returns the moved packets (empty when the source is not congested).
    """
    if source is target or not source.congested:
        return []
    moved = []
    room = target.free
    while room > 0 and source.buffer and source.congested:
        moved.append(source.buffer.pop())
        room -= 1
    moved.reverse()
    target.buffer.extend(moved)
    return moved


def evacuate_failed_interface(
    source: InterfaceQueue, queues: Sequence[InterfaceQueue]
) -> tuple[list[Packet], list[Packet]]:
    """Empty a failed queue into healthy peers, head first.

    Returns ``(moved, dropped)``; packets with no eligible destination are dropped.
    """
    by_id = {q.interface_id: q for q in queues}
    moved: list[Packet] = []
    dropped: list[Packet] = []
    target = None
    while source.buffer:
        if target is None or target.free <= 0 or target.congested or target.failed:
            tid = select_offload_target(queues, source.interface_id)
            if tid is None:
                dropped.extend(source.buffer)
                source.buffer.clear()
                break
            target = by_id[tid]
        pkt = source.buffer.popleft()
        target.buffer.append(pkt)
        moved.append(pkt)
    return moved, dropped


class ServeResult(NamedTuple):
    delivered: list
    to_retransmit: list
    timeout: bool


def serve_slot(
    queue: InterfaceQueue,
    gain: float,
    rng: np.random.Generator,
    ref_gain: float = 1.0,
) -> ServeResult:
    """Transmit up to ``cwnd`` head-of-line packets over one slot.

    Each packet is delivered with the channel's success probability; failures come
    back marked as retransmissions. ``timeout`` is set when a retransmission
    fails again on the interface it already failed on; the caller applies
    :func:`on_retransmission_timeout`. The window grows after every slot that
    sent something (doubling below ssthresh, +1 above, capped at capacity).
    """
    return serve_with_probability(queue, service_success_probability(gain, ref_gain), rng)


def serve_with_probability(queue: InterfaceQueue, p: float, rng: np.random.Generator) -> ServeResult:
    """:func:`serve_slot` with the per-packet success probability already known."""
    n = min(queue.cwnd, len(queue.buffer))
    delivered: list[Packet] = []
    failed: list[Packet] = []
    timeout = False
    if n:
        sent = [queue.buffer.popleft() for _ in range(n)]
        if p >= 1.0:
            delivered = sent
        elif p <= 0.0:
            failed = sent
        else:
            for pkt, u in zip(sent, rng.random(n).tolist()):
                (delivered if u < p else failed).append(pkt)
        here = queue.interface_id
        for pkt in failed:
            # retransmission timers are per subflow
            if pkt.retransmission and pkt.failed_on == here:
                timeout = True
            pkt.retransmission = True
            pkt.failed_on = here
        if queue.cwnd < queue.ssthresh:
            queue.cwnd = min(queue.cwnd * 2, queue.capacity)
        else:
            queue.cwnd = min(queue.cwnd + 1, queue.capacity)
        queue.cwnd = max(queue.cwnd, 1)
    return ServeResult(delivered, failed, timeout)


def on_retransmission_timeout(queue: InterfaceQueue) -> None:
    """Halve ssthresh (floor 1) and restart slow start from a window of 1."""
    queue.ssthresh = max(1, queue.cwnd // 2)
    queue.cwnd = 1


@dataclass
class AdmissionRegistry:
    registered_devices: set = field(default_factory=set)
    friend_lists: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for dev, friends in self.friend_lists.items():
            unknown = set(friends) - self.registered_devices
            if unknown:
                raise ValueError(f"friend list of {dev!r} names unregistered devices {sorted(map(str, unknown))}")


def forced_drop_decision(
    consumer: Hashable,
    registry: AdmissionRegistry,
    serving_device: Hashable,
    friend_mode: bool = False,
) -> bool:
    """Admission check: True to accept, False to force-drop the request."""
    if consumer not in registry.registered_devices:
        return False
    if not friend_mode:
        return True
    return consumer in registry.friend_lists.get(serving_device, ())
