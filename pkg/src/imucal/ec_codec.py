"""Sliding-window XOR erasure code for gyro packets.

Packet ``i`` carries its own 6-byte gyro payload ``G_i`` plus the parity

    E_i = G_{i-1} ^ G_{i-2} ^ ... ^ G_{i-M}

where payloads before the start of the stream count as zero.  The sender
keeps a ring of the last ``M`` payloads and a running XOR, so each packet
costs two XORs.  Payloads are handled as 48-bit integers internally.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import InconsistentParityError

PAYLOAD_BYTES = 6
DEFAULT_WINDOW = 4
MAX_WINDOW = 16
# BMI160 at +-2000 deg/s: 16.4 LSB per deg/s
GYRO_LSB_PER_RAD_S = 16.4 * 180.0 / np.pi


@dataclass(frozen=True)
class EcPacket:
    packet_index: int
    payload: bytes
    parity: bytes


def to_int(payload: bytes) -> int:
    if len(payload) != PAYLOAD_BYTES:
        raise ValueError(f"payload must be {PAYLOAD_BYTES} bytes, got {len(payload)}")
    return int.from_bytes(payload, "little")


def to_bytes(value: int) -> bytes:
    return value.to_bytes(PAYLOAD_BYTES, "little")


def check_window(m: int) -> int:
    if not 1 <= m <= MAX_WINDOW:
        raise ValueError(f"window must be between 1 and {MAX_WINDOW}, got {m}")
    return m


class XorWindowEncoder:
    """Streaming encoder holding the ring buffer and running XOR."""

    __slots__ = ("window", "ring", "pos", "running", "count")

    def __init__(self, window: int = DEFAULT_WINDOW):
        self.window = check_window(window)
        self.ring = [0] * window
        self.pos = 0
        self.running = 0
        self.count = 0

    def push(self, payload: int) -> int:
        """Return the parity to send with ``payload`` and absorb it into the window."""
        parity = self.running
        # zero-initialised ring makes the warm-up branch-free
        self.running ^= payload ^ self.ring[self.pos]
        self.ring[self.pos] = payload
        self.pos = (self.pos + 1) % self.window
        self.count += 1
        return parity

    def ring_xor(self) -> int:
        acc = 0
        for g in self.ring:
            acc ^= g
        return acc

    def encode(self, payload: bytes) -> EcPacket:
        index = self.count
        parity = self.push(to_int(payload))
        return EcPacket(index, bytes(payload), to_bytes(parity))


def encode_stream(payloads, window: int = DEFAULT_WINDOW) -> list[EcPacket]:
    enc = XorWindowEncoder(window)
    return [enc.encode(p) for p in payloads]


def encode_array(payloads: np.ndarray, window: int = DEFAULT_WINDOW) -> np.ndarray:
    """Vectorised parities for an array of integer payloads.

    With prefix XORs ``P_i = G_0 ^ ... ^ G_{i-1}`` the parity is
    ``P_i ^ P_{i-M}``.
    """
    check_window(window)
    g = np.asarray(payloads, dtype=np.uint64)
    prefix = np.zeros(len(g) + 1, dtype=np.uint64)
    np.bitwise_xor.accumulate(g, out=prefix[1:])
    lagged = np.zeros(len(g), dtype=np.uint64)
    if len(g) > window:
        lagged[window:] = prefix[: len(g) - window]
    return prefix[:-1] ^ lagged


def decode_stream(
    received: list[EcPacket], window: int = DEFAULT_WINDOW, n_packets: int | None = None
) -> tuple[dict[int, bytes], list[int]]:
    """Recover lost payloads from the parities of received packets.

    Peeling first: a lost payload is recovered from any received packet
    whose window holds it as the only unknown, repeated until nothing
    changes.  The checks left over are solved by GF(2) elimination per
    cluster of overlapping windows, so every payload the received parities
    determine is recovered.  Returns the payload map and the indices that
    stay unknown.  ``n_packets`` defaults to one past the highest received
    index.
    """
    check_window(window)
    known = {p.packet_index: to_int(p.payload) for p in received}
    parity = {p.packet_index: to_int(p.parity) for p in received}
    if n_packets is None:
        n_packets = max(known) + 1 if known else 0
    missing = set(range(n_packets)) - set(known)

    def span(j):
        return range(max(j - window, 0), j)

    # checks indexed by the lost payloads they touch
    watchers: dict[int, list[int]] = {i: [] for i in missing}
    unknown_count = {}
    for j in parity:
        c = 0
        for i in span(j):
            if i in missing:
                watchers[i].append(j)
                c += 1
        unknown_count[j] = c
        if c == 0:
            _verify(j, span(j), known, parity[j])

    queue = sorted(j for j, c in unknown_count.items() if c == 1)
    while queue:
        j = queue.pop(0)
        if unknown_count[j] != 1:
            continue
        acc = parity[j]
        target = None
        for i in span(j):
            if i in known:
                acc ^= known[i]
            else:
                target = i
        known[target] = acc
        missing.discard(target)
        for j2 in watchers[target]:
            unknown_count[j2] -= 1
            if unknown_count[j2] == 1:
                queue.append(j2)
            elif unknown_count[j2] == 0 and j2 != j:
                _verify(j2, span(j2), known, parity[j2])
        queue.sort()

    leftover = sorted(j for j, c in unknown_count.items() if c >= 2)
    for cluster in _clusters(leftover, window, missing):
        for i, v in _eliminate(cluster, span, known, parity, missing).items():
            known[i] = v
            missing.discard(i)

    payloads = {i: to_bytes(v) for i, v in sorted(known.items())}
    return payloads, sorted(missing)


def _clusters(checks, window, missing):
    """Group sorted checks whose windows share lost payloads."""
    groups, last = [], -1
    for j in checks:
        touched = [i for i in range(max(j - window, 0), j) if i in missing]
        if groups and touched[0] <= last:
            groups[-1].append(j)
        else:
            groups.append([j])
        last = max(last, touched[-1])
    return groups


def _eliminate(checks, span, known, parity, missing):
    """Solve one cluster over GF(2); return the payloads it pins down."""
    cols = sorted({i for j in checks for i in span(j) if i in missing})
    col = {i: c for c, i in enumerate(cols)}
    pivots = {}  # pivot bit -> [mask, value], kept fully reduced
    for j in checks:
        mask, value = 0, parity[j]
        for i in span(j):
            if i in col:
                mask |= 1 << col[i]
            else:
                value ^= known[i]
        for p in sorted(pivots, reverse=True):
            if mask >> p & 1:
                mask ^= pivots[p][0]
                value ^= pivots[p][1]
        if mask == 0:
            if value:
                raise InconsistentParityError(f"inconsistent parity at packet {j}")
            continue
        p = mask.bit_length() - 1
        for row in pivots.values():
            if row[0] >> p & 1:
                row[0] ^= mask
                row[1] ^= value
        pivots[p] = [mask, value]
    return {cols[p]: v for p, (m, v) in pivots.items() if m == 1 << p}


def _verify(j, indices, known, parity):
    acc = 0
    for i in indices:
        acc ^= known[i]
    if acc != parity:
        raise InconsistentParityError(f"inconsistent parity at packet {j}")


# -- channel -----------------------------------------------------------------


@dataclass(frozen=True)
class LossModel:
    """``kind`` is ``"iid"`` (drop each packet with probability ``p``) or
    ``"burst"`` (start a burst of ``length`` drops with probability ``p``)."""

    kind: str = "iid"
    p: float = 0.0
    length: int = 1

    def __post_init__(self):
        if self.kind not in ("iid", "burst"):
            raise ValueError(f"unknown loss model {self.kind!r}")
        if not 0.0 <= self.p < 1.0:
            raise ValueError("loss probability must be in [0, 1)")
        if self.length < 1:
            raise ValueError("burst length must be at least 1")

    @classmethod
    def parse(cls, text: str) -> "LossModel":
        """``iid:P`` or ``burst:LEN:P``."""
        parts = text.split(":")
        if parts[0] == "iid" and len(parts) == 2:
            return cls("iid", float(parts[1]))
        if parts[0] == "burst" and len(parts) == 3:
            return cls("burst", float(parts[2]), int(parts[1]))
        raise ValueError(f"cannot parse loss model {text!r}")


def drop_mask(n: int, model: LossModel, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if model.kind == "iid":
        return rng.random(n) < model.p
    starts = np.flatnonzero(rng.random(n) < model.p)
    mask = np.zeros(n, dtype=bool)
    for s in starts:
        mask[s : s + model.length] = True
    return mask


def channel_simulate(packets: list, model: LossModel, seed: int = 0) -> list:
    """Drop whole packets; deterministic for a given seed."""
    mask = drop_mask(len(packets), model, seed)
    return [p for p, lost in zip(packets, mask) if not lost]


# -- gyro payloads -------------------------------------------------------------


def gyro_to_payload(rate, lsb_per_unit: float = GYRO_LSB_PER_RAD_S) -> bytes:
    """Quantise one gyro sample to three little-endian int16 values."""
    counts = np.clip(np.round(np.asarray(rate, dtype=float) * lsb_per_unit), -32768, 32767)
    return struct.pack("<3h", *(int(c) for c in counts))


def payload_to_gyro(payload: bytes, lsb_per_unit: float = GYRO_LSB_PER_RAD_S) -> np.ndarray:
    return np.array(struct.unpack("<3h", payload), dtype=float) / lsb_per_unit


# -- packet files --------------------------------------------------------------

PACKET_HEADER = "packet_index,payload,parity"
PAYLOAD_HEADER = "packet_index,payload"


def packets_to_csv(packets: list[EcPacket]) -> str:
    lines = [PACKET_HEADER] + [f"{p.packet_index},{p.payload.hex()},{p.parity.hex()}" for p in packets]
    return "\n".join(lines) + "\n"


def packets_from_csv(text: str) -> list[EcPacket]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != PACKET_HEADER:
        raise ValueError(f"line 1: expected header {PACKET_HEADER}")
    out = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        try:
            idx, payload, parity = line.strip().split(",")
            pkt = EcPacket(int(idx), bytes.fromhex(payload), bytes.fromhex(parity))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if len(pkt.payload) != PAYLOAD_BYTES or len(pkt.parity) != PAYLOAD_BYTES:
            raise ValueError(f"line {lineno}: payload and parity must be {PAYLOAD_BYTES} bytes")
        out.append(pkt)
    return out


def payloads_to_csv(payloads: dict[int, bytes]) -> str:
    lines = [PAYLOAD_HEADER] + [f"{i},{v.hex()}" for i, v in sorted(payloads.items())]
    return "\n".join(lines) + "\n"
