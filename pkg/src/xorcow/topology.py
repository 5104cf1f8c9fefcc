"""XOR-CoW on a generic information topology.

A topology is a list of streams, each with one source node and a set of
subscribers. Phase one gives every stream a slot. In the XOR phase a pair
of mutually inverse unicast streams shares one slot: every node holding
both messages broadcasts their XOR, and each endpoint strips the half it
already has. Other streams keep a slot of their own, relayed by all holders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import PhaseSplit
from .channel import SystemParams
from .sim import LinkRealization


@dataclass(frozen=True, order=True)
class Stream:
    source: int
    subscribers: tuple[int, ...]

    def __post_init__(self):
        subs = tuple(sorted(set(self.subscribers)))
        if self.source < 0 or any(d < 0 for d in subs):
            raise ValueError(f"node ids must be non-negative: {self.source} -> {subs}")
        if not subs:
            raise ValueError(f"stream from {self.source} has no subscribers")
        if self.source in subs:
            raise ValueError(f"stream from {self.source} lists its source as a subscriber")
        object.__setattr__(self, "subscribers", subs)

    @property
    def is_unicast(self):
        return len(self.subscribers) == 1

    def __str__(self):
        subs = ",".join(map(str, self.subscribers))
        return f"{self.source}->{{{subs}}}"


@dataclass(frozen=True)
class InfoTopology:
    streams: tuple[Stream, ...]

    def __init__(self, streams):
        object.__setattr__(self, "streams", tuple(
            s if isinstance(s, Stream) else Stream(s[0], tuple(s[1])) for s in streams))
        if not self.streams:
            raise ValueError("topology needs at least one stream")

    @property
    def nodes(self):
        ids = set()
        for s in self.streams:
            ids.add(s.source)
            ids.update(s.subscribers)
        return sorted(ids)

    @property
    def size(self):
        """Matrix dimension needed to host every node id."""
        return max(self.nodes) + 1

    @classmethod
    def star(cls, n):
        """Controller 0 exchanging one message each way with nodes 1..n."""
        streams = []
        for i in range(1, n + 1):
            streams.append(Stream(0, (i,)))
            streams.append(Stream(i, (0,)))
        return cls(streams)


def build_xor_schedule(topology: InfoTopology):
    """Return ``(G, G_X)``: phase-one slots and XOR-phase slots.

    ``G`` lists the streams in canonical (source, subscribers) order. Each
    entry of ``G_X`` is a 1- or 2-tuple of streams; paired slots come first,
    then the unpaired streams, both in canonical order.
    """
    G = sorted(topology.streams)
    used = [False] * len(G)
    pairs, singles = [], []
    for i, s in enumerate(G):
        if used[i] or not s.is_unicast:
            continue
        back = Stream(s.subscribers[0], (s.source,))
        for j in range(i + 1, len(G)):
            if not used[j] and G[j] == back:
                used[i] = used[j] = True
                pairs.append((s, G[j]))
                break
    for i, s in enumerate(G):
        if not used[i]:
            singles.append((s,))
    return G, pairs + singles


def generic_deliveries(cap, topology: InfoTopology, params: SystemParams, split: PhaseSplit):
    """Delivery flags per (stream, subscriber) for a stack of capacity matrices.

    Phase one runs at ``m |G| / T_1`` and the XOR phase at ``m |G_X| / T_X``
    with ``T_1 = (f_D + f_U) T`` and ``T_X = f_X T``.
    """
    size = cap.shape[-1]
    if topology.size > size:
        raise ValueError(f"topology references node {topology.size - 1}, realization has {size} nodes")
    G, G_X = build_xor_schedule(topology)
    T_1 = (split.f_D + split.f_U) * params.cycle_T
    T_X = split.f_X * params.cycle_T
    R_1 = params.m_bits * len(G) / T_1
    R_X = params.m_bits * len(G_X) / T_X
    own = np.eye(size, dtype=bool)

    holds = {}
    for s in G:
        # the source transmits in its slot and everyone else listens
        holds[s] = own[s.source][None, :] | (cap[:, s.source, :] >= R_1)

    delivered = {}
    for slot in G_X:
        if len(slot) == 2:
            s, t = slot
            tx = holds[s] & holds[t]
            # each endpoint holds its own message and strips it from the XOR
            for need, dest in ((t, s.source), (s, t.source)):
                delivered[need, dest] = holds[need][:, dest] | np.any(tx & (cap[:, :, dest] >= R_X), axis=1)
        else:
            (s,) = slot
            tx = holds[s]
            for dest in s.subscribers:
                delivered[s, dest] = holds[s][:, dest] | np.any(tx & (cap[:, :, dest] >= R_X), axis=1)
    return delivered


def generic_batch(cap, topology: InfoTopology, params: SystemParams, split: PhaseSplit):
    """Per-trial success: every stream reached every subscriber."""
    ok = np.ones(cap.shape[0], dtype=bool)
    for flags in generic_deliveries(cap, topology, params, split).values():
        ok &= flags
    return ok


@dataclass
class GenericOutcome:
    delivered: dict
    failed: bool


def run_generic_cycle(real: LinkRealization, topology: InfoTopology, params: SystemParams,
                      split: PhaseSplit) -> GenericOutcome:
    cap = real.capacities(params)[None]
    flags = {k: bool(v[0]) for k, v in generic_deliveries(cap, topology, params, split).items()}
    return GenericOutcome(flags, not all(flags.values()))
