"""Slotted simulation of a mobile device cloud with or without the congestion handler.

Each slot runs, in order:

1. channel refresh (fading parameter, gain, link weight), failure detection,
   evacuation of failed interfaces;
2. Poisson arrivals, admission, packetization and enqueueing;
3. congestion-handler offload sweep (handler arm only);
4. service of every healthy queue, retransmission routing, timeouts;
5. deadline expiry;
6. counter updates.

Without the handler a request is pinned to the one subflow it was assigned to,
and retransmissions go back to the tail of the same queue. With the handler,
packets entering a queue at or above its trigger are redirected to the best
peer queue, congested queues shed their newest packets, and retransmissions
are pushed to another interface.
"""

from __future__ import annotations

import hashlib
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channel import nakagami_sample, sample_fading_parameter
from .config import SimulationConfig, validate
from .metrics import MetricsReport, SweepReport, arm_name, sweep_row
from .queueing import (
    AdmissionRegistry,
    InterfaceQueue,
    evacuate_failed_interface,
    forced_drop_decision,
    offload_excess,
    on_retransmission_timeout,
    select_offload_target,
    serve_with_probability,
)
from .topology import Device, MdcComposition
from .workload import consumer_ids, generate_request, packetize, poisson_arrivals

_CHANNEL_BLOCK = 512


def detect_interface_failure(history: Sequence[float], threshold_m: float, window: int) -> bool:
    """True iff the last ``window`` fading samples are all below ``threshold_m``."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(history) < window:
        return False
    return all(m < threshold_m for m in history[-window:])


def room_below_trigger(queue: InterfaceQueue) -> int:
    """How many packets can be appended before the queue trips its trigger or fills."""
    n = len(queue.buffer)
    w, tau, cap = queue.weight_w, queue.threshold_tau, queue.capacity
    if n * w >= tau or n >= cap:
        return 0
    limit = min(cap, math.ceil(tau / w))
    while limit > n and (limit - 1) * w >= tau:
        limit -= 1
    while limit < cap and limit * w < tau:
        limit += 1
    return limit - n


def derive_seed(master_seed: int, *key) -> int:
    """Stable 64-bit seed from a master seed and a key tuple."""
    text = ":".join(str(part) for part in (master_seed, *key))
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


@dataclass
class _Live:
    request: object
    device: Device
    remaining: int
    expiry: int


@dataclass
class StepSummary:
    slot: int
    arrivals: int = 0
    delivered: int = 0
    offloads: int = 0
    dropped: int = 0


class Simulation:
    """Mutable state of one run. Drive it with :meth:`step` or :func:`run`."""

    def __init__(self, config: SimulationConfig, capacity: int | None = None):
        self.config = config
        self.capacity = config.aggregate_capacity if capacity is None else capacity
        self.handler = config.handler_enabled
        seq = np.random.SeedSequence(config.seed)
        ch, wl, sv, pol = seq.spawn(4)
        self.rng_channel = np.random.default_rng(ch)
        self.rng_workload = np.random.default_rng(wl)
        self.rng_service = np.random.default_rng(sv)
        rng_policy = np.random.default_rng(pol)

        caps = config.per_queue_capacities(self.capacity)
        self.queues: list[InterfaceQueue] = []
        devices = []
        iid = 0
        for d in range(config.device_count):
            ids = []
            for _ in range(config.interfaces_per_device):
                cap = caps[iid]
                self.queues.append(
                    InterfaceQueue(
                        interface_id=iid,
                        capacity=cap,
                        threshold_tau=config.threshold_fraction * cap,
                        weight_w=config.k,
                        cwnd=1,
                        ssthresh=min(config.initial_ssthresh, cap),
                        device_id=f"d{d}",
                    )
                )
                ids.append(iid)
                iid += 1
            devices.append(Device(f"d{d}", config.residual_resource, ids))
        self.composition = MdcComposition(devices)
        self.device_of = {q.interface_id: devices[i // config.interfaces_per_device] for i, q in enumerate(self.queues)}

        self.consumers = consumer_ids(config.consumers)
        registered = set(self.consumers) | {d.device_id for d in devices}
        friends = {
            d.device_id: {c for c, u in zip(self.consumers, rng_policy.random(len(self.consumers))) if u < config.friend_fraction}
            for d in devices
        }
        self.registry = AdmissionRegistry(registered, friends)

        self.slot = 0
        self.next_request_id = 0
        self.live: dict[int, _Live] = {}
        self.expiries: dict[int, list[int]] = {}
        self._m_block = np.empty((0, len(self.queues)))
        self._g_block = np.empty((0, len(self.queues)))
        self._block_pos = 0
        self.received = 0
        self.serviced = 0
        self.report = MetricsReport(
            capacity=self.capacity,
            arm=arm_name(self.handler),
            seed=config.seed,
            config=config,
        )

    # -- helpers -----------------------------------------------------------

    def packets_in_queues(self) -> int:
        return sum(len(q.buffer) for q in self.queues)

    def _channel_row(self):
        if self._block_pos >= len(self._m_block):
            n = max(1, min(_CHANNEL_BLOCK, self.config.slots - self.slot))
            shape = (n, len(self.queues))
            c = self.config
            self._m_block = sample_fading_parameter(self.rng_channel, c.m_low, c.m_high, size=shape)
            gains = nakagami_sample(self.rng_channel, self._m_block, c.omega)
            self._g_block = gains
            self._p_block = np.minimum(1.0, gains * gains / (c.reference_gain * c.reference_gain))
            self._block_pos = 0
        i = self._block_pos
        self._block_pos += 1
        return self._m_block[i], self._g_block[i], self._p_block[i]

    def _purge(self, dead: set) -> int:
        removed = 0
        for q in self.queues:
            buf = q.buffer
            if not buf:
                continue
            kept = deque(p for p in buf if p.request_id not in dead)
            removed += len(buf) - len(kept)
            q.buffer = kept
        return removed

    def _finish(self, rid: int) -> _Live:
        live = self.live.pop(rid)
        live.device.residual_resource += live.request.size
        return live

    def _drop_live(self, rids: Iterable[int], cause: str) -> int:
        """Drop live requests, purge their queued packets; returns purged packet count."""
        rids = set(rids)
        if not rids:
            return 0
        for rid in rids:
            self._finish(rid)
        purged = self._purge(rids)
        rep = self.report
        if cause == "overflow":
            rep.dropped_overflow_requests += len(rids)
            rep.packets_dropped_overflow += purged
        elif cause == "deadline":
            rep.dropped_deadline += len(rids)
            rep.packets_dropped_deadline += purged
        else:
            rep.dropped_forced += len(rids)
            rep.packets_dropped_forced += purged
        return purged

    def _pick_queue(self, size: int) -> InterfaceQueue | None:
        best = None
        best_key = None
        for q in self.queues:
            if q.failed or self.device_of[q.interface_id].residual_resource < size:
                continue
            key = (len(q.buffer) * q.weight_w, q.interface_id)
            if best_key is None or key < best_key:
                best, best_key = q, key
        return best

    # -- phases --------------------------------------------------------------

    def _phase_channel(self) -> None:
        c = self.config
        m_row, g_row, p_row = self._channel_row()
        self.gains = g_row
        self.success = p_row.tolist()
        for q, m in zip(self.queues, m_row.tolist()):
            q.weight_w = c.k * m
            if m < c.failure_m:
                q.consecutive_bad_slots += 1
                q.consecutive_good_slots = 0
            else:
                q.consecutive_good_slots += 1
                q.consecutive_bad_slots = 0
            if not q.failed and q.consecutive_bad_slots >= c.failure_window:
                q.failed = True
            elif q.failed and q.consecutive_good_slots >= c.failure_window:
                q.failed = False
        dead = set()
        for q in self.queues:
            if q.failed and q.buffer:
                moved, dropped = evacuate_failed_interface(q, self.queues)
                self.report.evacuations += 1
                if dropped:
                    # dropped packets are already out of every queue
                    rids = {p.request_id for p in dropped}
                    self.report.packets_dropped_overflow += len(dropped)
                    dead |= rids
        if dead:
            self._drop_live(dead, "overflow")

    def _phase_arrivals(self, summary: StepSummary) -> None:
        c = self.config
        rep = self.report
        wl = c.workload
        n = poisson_arrivals(self.rng_workload, c.lam)
        summary.arrivals = n
        for _ in range(n):
            req = generate_request(self.rng_workload, wl, self.next_request_id, self.slot, self.consumers)
            self.next_request_id += 1
            packets = packetize(req)
            npk = len(packets)
            rep.requests_arrived += 1
            rep.packets_arrived += npk
            self.received += 1

            target = self._pick_queue(req.size)
            device = self.device_of[target.interface_id] if target else self._fallback_device()
            device.requests_received += 1
            accepted = target is not None and forced_drop_decision(
                req.consumer_id, self.registry, device.device_id, c.friend_mode
            )
            if accepted and self.handler and not any(
                not q.failed and len(q.buffer) * q.weight_w < q.threshold_tau for q in self.queues
            ):
                accepted = False
            if not accepted:
                rep.dropped_forced += 1
                rep.packets_dropped_forced += npk
                summary.dropped += 1
                continue

            live = _Live(req, device, npk, self.slot + req.deadline_slots - 1)
            self.live[req.request_id] = live
            device.residual_resource -= req.size
            self.expiries.setdefault(live.expiry, []).append(req.request_id)

            if not self.handler:
                if target.free < npk:
                    self._finish(req.request_id)
                    rep.dropped_overflow_requests += 1
                    rep.packets_dropped_overflow += npk
                    summary.dropped += 1
                    continue
                target.buffer.extend(packets)
                continue

            q = target
            placed = 0
            while placed < npk:
                room = room_below_trigger(q)
                if room <= 0:
                    tid = select_offload_target(self.queues, q.interface_id)
                    if tid is not None:
                        q = self.queues[tid]
                        rep.offload_events += 1
                        continue
                    # no eligible peer: fill this queue to its hard limit
                    room = q.free
                    if room <= 0:
                        break
                chunk = packets[placed:placed + room]
                q.buffer.extend(chunk)
                placed += len(chunk)
                if q is not target:
                    rep.packets_offloaded += len(chunk)
            if placed < npk:
                # every queue is congested: the new arrival is force-dropped
                rep.packets_dropped_forced += npk - placed
                self._drop_live([req.request_id], "forced")
                summary.dropped += 1

    def _fallback_device(self) -> Device:
        return self.device_of[min(self.queues, key=lambda q: (len(q.buffer) * q.weight_w, q.interface_id)).interface_id]

    def _phase_offload(self, summary: StepSummary) -> None:
        rep = self.report
        for q in self.queues:
            while not q.failed and q.congested:
                tid = select_offload_target(self.queues, q.interface_id)
                if tid is None:
                    break
                moved = offload_excess(q, self.queues[tid])
                if not moved:
                    break
                rep.offload_events += 1
                rep.packets_offloaded += len(moved)
                summary.offloads += 1

    def _phase_serve(self, summary: StepSummary) -> None:
        rep = self.report
        live_map = self.live
        retransmit = []
        for q, p in zip(self.queues, self.success):
            if q.failed or not q.buffer:
                continue
            res = serve_with_probability(q, p, self.rng_service)
            for pkt in res.delivered:
                live = live_map[pkt.request_id]
                live.remaining -= 1
                if live.remaining == 0:
                    self._complete(pkt.request_id)
            rep.packets_delivered += len(res.delivered)
            summary.delivered += len(res.delivered)
            if res.to_retransmit:
                retransmit.append((q, res.to_retransmit))
            if res.timeout:
                on_retransmission_timeout(q)
                rep.timeouts += 1
        dead = set()
        for source, packets in retransmit:
            dest = None
            for pkt in packets:
                if pkt.request_id in dead:
                    rep.packets_dropped_overflow += 1
                    continue
                if self.handler:
                    if dest is None or dest.free <= 0 or dest.congested:
                        tid = select_offload_target(self.queues, source.interface_id)
                        dest = self.queues[tid] if tid is not None else None
                if dest is not None:
                    dest.buffer.append(pkt)
                elif source.free > 0:
                    source.buffer.append(pkt)
                else:
                    rep.packets_dropped_overflow += 1
                    dead.add(pkt.request_id)
        if dead:
            self._drop_live(dead, "overflow")

    def _complete(self, rid: int) -> None:
        live = self._finish(rid)
        elapsed = self.slot - live.request.arrival_slot + 1
        rep = self.report
        rep.requests_serviced += 1
        rep.completion_times.append(elapsed)
        rep.completion_deadlines.append(live.request.deadline_slots)
        live.device.requests_serviced += 1
        self.serviced += 1

    def _phase_deadlines(self, summary: StepSummary) -> None:
        due = self.expiries.pop(self.slot, ())
        expired = [rid for rid in due if rid in self.live]
        if expired:
            self._drop_live(expired, "deadline")
            summary.dropped += len(expired)

    def step(self) -> StepSummary:
        """Advance one slot."""
        summary = StepSummary(self.slot)
        self._phase_channel()
        self._phase_arrivals(summary)
        if self.handler:
            self._phase_offload(summary)
        self._phase_serve(summary)
        self._phase_deadlines(summary)
        self.report.potential_series.append(self.serviced / self.received if self.received else 1.0)
        self.slot += 1
        return summary

    def finalize(self) -> MetricsReport:
        rep = self.report
        rep.slots = self.slot
        rep.requests_in_flight = len(self.live)
        rep.packets_residual = self.packets_in_queues()
        return rep


def run(config: SimulationConfig, capacity: int | None = None) -> MetricsReport:
    """Run ``config.slots`` slots from a fresh state and return the finalized report."""
    validate(config)
    sim = Simulation(config, capacity)
    for _ in range(config.slots):
        sim.step()
    return sim.finalize()


def _run_job(args) -> MetricsReport:
    config, capacity = args
    return run(config, capacity)


def run_many(jobs: Sequence[tuple[SimulationConfig, int]], n_jobs: int = 1) -> list[MetricsReport]:
    """Run independent ``(config, capacity)`` jobs, optionally across processes; order is preserved."""
    if n_jobs <= 1 or len(jobs) <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_run_job, jobs, chunksize=1))


def sweep_seed(master_seed: int, capacity: int, iteration: int, arm: str) -> int:
    return derive_seed(master_seed, "sweep", capacity, iteration, arm)


def run_sweep(
    config: SimulationConfig,
    capacities: Sequence[int],
    iterations: int,
    n_jobs: int = 1,
) -> SweepReport:
    """Run both arms ``iterations`` times at every capacity and average them.

    Seeds are keyed by capacity value, iteration and arm, so rows do not depend on
    the order of ``capacities``.
    """
    if not capacities:
        raise ValueError("capacities must be nonempty")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    validate(config.replace(aggregate_capacity=min(capacities)))
    jobs = []
    for cap in capacities:
        for it in range(iterations):
            for handler in (True, False):
                seed = sweep_seed(config.seed, cap, it, arm_name(handler))
                jobs.append((config.replace(seed=seed, handler_enabled=handler, aggregate_capacity=cap), cap))
    runs = run_many(jobs, n_jobs)
    rows = []
    for cap in capacities:
        with_runs = [r for r in runs if r.capacity == cap and r.arm == "with"]
        without_runs = [r for r in runs if r.capacity == cap and r.arm == "without"]
        rows.append(sweep_row(cap, with_runs, without_runs, config.improvement_basis))
    return SweepReport(rows, runs, config.seed, iterations)


def paired_seeds(master_seed: int, count: int, capacity: int) -> list[int]:
    return [derive_seed(master_seed, "pair", capacity, i) for i in range(count)]


def run_pairs(config: SimulationConfig, seed_count: int, n_jobs: int = 1) -> list[tuple[MetricsReport, MetricsReport]]:
    """Handler-on / handler-off runs sharing each derived seed, at the configured capacity."""
    if seed_count < 1:
        raise ValueError("seed_count must be >= 1")
    seeds = paired_seeds(config.seed, seed_count, config.aggregate_capacity)
    jobs = []
    for s in seeds:
        for handler in (True, False):
            jobs.append((config.replace(seed=s, handler_enabled=handler), config.aggregate_capacity))
    runs = run_many(jobs, n_jobs)
    return [(runs[2 * i], runs[2 * i + 1]) for i in range(seed_count)]
