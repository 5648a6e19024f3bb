"""Slotted uplink sessions: polling, per-slot PHY + MAC pipeline, throughput
accounting, and trace record/replay.

Throughput is ``sum(N_u) / slots`` where N_u counts the source packets (L per
message) of every message of node u the AP fully decoded, and ``slots`` is
the number of transmission slots in the session.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import convcode
from .channel import bpsk_map, draw_channel, perturb_csi, transmit
from .erasure import CodedPacket, Stream, encode_packet, random_message
from .galois import GF256
from .macdec import EquationStore, next_index
from .phydec import (GROUPS, DecoderConfig, SlotOutcome, decode_slot, event_group, frame_bits,
                     phy_bridge, single_user_decode, strip_xor)

log = logging.getLogger(__name__)

TRACE_FORMAT = "ncma-trace"
TRACE_VERSION = 1

VARIANTS = {
    "SU": ("su", "rmud"),
    "RMUD": ("mud", "rmud"),
    "SIC": ("mud", "sic"),
    "RMUD+SIC": ("mud", "rmud+sic"),
    "NCMA-RMUD": ("ncma", "rmud"),
    "NCMA-SIC": ("ncma", "sic"),
    "NCMA-RMUD+SIC": ("ncma", "rmud+sic"),
}
MAC_MODES = ("ncma", "mud", "su")


class ConfigError(ValueError):
    pass


class TraceError(ValueError):
    pass


@dataclass
class SessionConfig:
    nodes: dict = field(default_factory=lambda: {"A": 10.0, "B": 10.0})  # name -> SNR dB
    pairs: list = field(default_factory=lambda: [("A", "B")])
    L: dict = field(default_factory=lambda: {"A": 16, "B": 16})
    K: int = 64
    slots: int = 1000
    slots_per_poll: int = 3
    variant: str = "NCMA-RMUD"
    channel: str = "fixed-phase"
    groups: int = 8
    alpha: float = 0.228
    sigma2: float = 0.5
    csi_error: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.pairs = [tuple(p) for p in self.pairs]
        if isinstance(self.L, int):
            self.L = {n: self.L for n in self.nodes}
        self.validate()

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {sorted(VARIANTS)}")
        if self.slots < 1:
            raise ConfigError("slots (N_Beacon) must be at least 1")
        if self.slots_per_poll < 1:
            raise ConfigError("slots_per_poll must be at least 1")
        if not self.pairs:
            raise ConfigError("pairing list is empty")
        seen = set()
        for a, b in self.pairs:
            if a == b:
                raise ConfigError(f"pair ({a}, {b}) must reference two distinct nodes")
            for n in (a, b):
                if n not in self.nodes:
                    raise ConfigError(f"pair references unknown node {n!r}")
                if n in seen:
                    raise ConfigError(f"node {n!r} appears in more than one pair")
                seen.add(n)
                if not 1 <= self.L.get(n, 0) <= GF256.order:
                    raise ConfigError(f"L for node {n!r} must be in [1, {GF256.order}]")
        if self.K < 1:
            raise ConfigError("K must be positive")
        if not 0 < self.alpha < 0.5:
            raise ConfigError("alpha must lie in (0, 0.5)")

    @property
    def mac_mode(self) -> str:
        return VARIANTS[self.variant][0]

    @property
    def mud_mode(self) -> str:
        return VARIANTS[self.variant][1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pairs"] = [list(p) for p in self.pairs]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SessionConfig:
        return cls(**d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def upper_bound(groups: dict) -> float:
    """Throughput bound from group frequencies: AB and AX|BX count 2, A|B and X count 1."""
    unknown = set(groups) - set(GROUPS)
    if unknown:
        raise ValueError(f"unknown groups {sorted(unknown)}")
    vals = [groups.get(g, 0.0) for g in GROUPS]
    if min(vals) < 0 or abs(sum(vals) - 1.0) > 1e-9:
        raise ValueError(f"group frequencies must be nonnegative and sum to 1, got {groups}")
    return (2.0 * (groups.get("AB", 0.0) + groups.get("AX|BX", 0.0))
            + groups.get("A|B", 0.0) + groups.get("X", 0.0))


@dataclass
class SessionStats:
    variant: str
    slots: int
    recovered: dict  # node -> recovered source packets (N_A, N_B, ...)
    messages: dict  # node -> decoded messages
    abandoned: dict  # node -> messages dropped after exhausting all indices
    groups: dict  # group -> frequency over two-user slots
    throughput: dict  # node -> N_u / slots
    total_throughput: float
    upper_bound: float | None

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------- pair MACs


class _PairMac:
    """Two nodes transmitting together, NCMA or MUD-only decoding."""

    def __init__(self, names, L, K, mode, rng):
        self.names = names
        self.L = {Stream.A: L[names[0]], Stream.B: L[names[1]]}
        self.K = K
        self.mode = mode
        self.rng = rng
        self.N = GF256.order
        self.store = EquationStore(K, self.L[Stream.A], self.L[Stream.B], use_xor=(mode == "ncma"))
        self.index = 1
        self.msgs = {s: random_message(K, self.L[s], rng, s) for s in (Stream.A, Stream.B)}
        self.sent = {Stream.A: 0, Stream.B: 0}
        self.credit = {n: 0 for n in names}
        self.solved = {n: 0 for n in names}
        self.abandoned = {n: 0 for n in names}
        self.message_errors = 0

    def node(self, s: Stream) -> str:
        return self.names[0] if s is Stream.A else self.names[1]

    def current_packets(self) -> tuple[CodedPacket, CodedPacket]:
        return (encode_packet(self.msgs[Stream.A], self.index),
                encode_packet(self.msgs[Stream.B], self.index))

    def outcome_from_event(self, event: str) -> SlotOutcome:
        """Rebuild a slot outcome from its event label using this MAC's messages."""
        mud, pnc = event.split("/")
        pa, pb = self.current_packets()
        px = CodedPacket(self.index, pa.payload ^ pb.payload, Stream.AxorB)
        return SlotOutcome(self.index, pa if mud in ("i", "ii") else None,
                           pb if mud in ("i", "iii") else None,
                           px if pnc == "I" else None, event)

    def _new_message(self, s: Stream) -> None:
        self.msgs[s] = random_message(self.K, self.L[s], self.rng, s)
        self.sent[s] = 0

    def receive(self, outcome: SlotOutcome) -> None:
        i = self.index
        o = phy_bridge(outcome) if self.mode == "ncma" else strip_xor(outcome)
        self.store.ingest(i, o)
        self.store.resolve()
        done = [s for s in (Stream.A, Stream.B) if self.store.is_solved(s)]
        for s in done:
            n = self.node(s)
            self.credit[n] += self.L[s]
            self.solved[n] += 1
            if self.store.solved[s] != self.msgs[s]:
                self.message_errors += 1
        if len(done) == 2:
            self.store.reset()
        elif done:
            self.store.rotate(done[0], i)
        for s in (Stream.A, Stream.B):
            if s in done:
                self._new_message(s)
                continue
            self.sent[s] += 1
            if self.sent[s] >= self.N:
                log.debug("node %s abandons a message after %d packets", self.node(s), self.N)
                self.abandoned[self.node(s)] += 1
                self.store.reset_stream(s)
                self.store.reset_stream(Stream.AxorB)
                self._new_message(s)
        self.index = next_index(i, self.N)


class _SuMac:
    """User-by-user transmission: one node sends until its message decodes."""

    def __init__(self, names, L, K, rng):
        self.names = names
        self.L = {n: L[n] for n in names}
        self.K = K
        self.rng = rng
        self.N = GF256.order
        self.active = 0
        self.index = 1
        self.msg = random_message(K, self.L[names[0]], rng)
        self.store = EquationStore(K, self.L[names[0]], self.L[names[0]], use_xor=False)
        self.credit = {n: 0 for n in names}
        self.solved = {n: 0 for n in names}
        self.abandoned = {n: 0 for n in names}
        self.message_errors = 0

    @property
    def active_node(self) -> str:
        return self.names[self.active]

    def current_packet(self) -> CodedPacket:
        return encode_packet(self.msg, self.index)

    def _next_message(self, switch: bool) -> None:
        if switch:
            self.active = 1 - self.active
        L = self.L[self.active_node]
        self.msg = random_message(self.K, L, self.rng)
        self.store = EquationStore(self.K, L, L, use_xor=False)
        self.index = 1

    def receive(self, packet: CodedPacket | None) -> None:
        n = self.active_node
        self.store.ingest(self.index, SlotOutcome(self.index, decodedA=packet))
        self.store.resolve()
        if self.store.is_solved(Stream.A):
            self.credit[n] += self.L[n]
            self.solved[n] += 1
            if self.store.solved[Stream.A] != self.msg:
                self.message_errors += 1
            self._next_message(switch=True)
        elif self.index == self.N:
            self.abandoned[n] += 1
            self._next_message(switch=True)
        else:
            self.index += 1


def _make_macs(cfg: SessionConfig, mode: str):
    rng = np.random.default_rng([cfg.seed, 1])
    if mode == "su":
        return [_SuMac(p, cfg.L, cfg.K, rng) for p in cfg.pairs]
    return [_PairMac(p, cfg.L, cfg.K, mode, rng) for p in cfg.pairs]


def _pair_for_slot(t: int, cfg: SessionConfig) -> int:
    return (t // cfg.slots_per_poll) % len(cfg.pairs)


def _stats(cfg: SessionConfig, macs, events, variant: str) -> SessionStats:
    recovered, messages, abandoned = {}, {}, {}
    for m in macs:
        recovered.update(m.credit)
        messages.update(m.solved)
        abandoned.update(m.abandoned)
    two_user = [e for e in events if e != "SU"]
    groups, ub = {}, None
    if two_user:
        counts = {g: 0 for g in GROUPS}
        for e in two_user:
            counts[event_group(e)] += 1
        groups = {g: c / len(two_user) for g, c in counts.items()}
        ub = upper_bound(groups)
    thr = {n: recovered[n] / cfg.slots for n in recovered}
    return SessionStats(variant, cfg.slots, recovered, messages, abandoned, groups, thr,
                        sum(recovered.values()) / cfg.slots, ub)


# ---------------------------------------------------------------- traces


@dataclass
class Trace:
    config: dict
    records: list  # one dict per slot
    diagnostics: dict = field(default_factory=dict)

    def save(self, path) -> None:
        path = Path(path)
        with path.open("w") as f:
            header = {"format": TRACE_FORMAT, "version": TRACE_VERSION,
                      "config": self.config, "diagnostics": self.diagnostics}
            f.write(json.dumps(header, sort_keys=True) + "\n")
            for r in self.records:
                f.write(json.dumps(r, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> Trace:
        path = Path(path)
        with path.open() as f:
            lines = f.read().splitlines()
        if not lines:
            raise TraceError(f"{path}: empty trace file")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as e:
            raise TraceError(f"{path}: unreadable header: {e}") from None
        if header.get("format") != TRACE_FORMAT or header.get("version") != TRACE_VERSION:
            raise TraceError(f"{path}: not a version-{TRACE_VERSION} {TRACE_FORMAT} file")
        records = []
        for lineno, line in enumerate(lines[1:], start=2):
            try:
                r = json.loads(line)
            except json.JSONDecodeError as e:
                raise TraceError(f"{path}: line {lineno} (slot {lineno - 2}) is not valid JSON: {e}") from None
            _check_record(r, lineno - 2)
            records.append(r)
        return cls(header["config"], records, header.get("diagnostics", {}))


def _check_record(r, expected_slot: int) -> None:
    slot = r.get("slot", expected_slot) if isinstance(r, dict) else expected_slot
    if not isinstance(r, dict):
        raise TraceError(f"slot {slot}: record is not an object")
    for key in ("slot", "pair", "index", "event", "packets", "channel_seed"):
        if key not in r:
            raise TraceError(f"slot {slot}: record lacks {key!r}")
    if r["slot"] != expected_slot:
        raise TraceError(f"slot {slot}: out of order, expected slot {expected_slot}")
    ev = r["event"]
    if ev != "SU":
        try:
            event_group(ev)
        except (ValueError, KeyError):
            raise TraceError(f"slot {slot}: bad event label {ev!r}") from None
    for h in r["packets"]:
        try:
            CodedPacket.from_bytes(bytes.fromhex(h))
        except ValueError as e:
            raise TraceError(f"slot {slot}: bad packet record: {e}") from None


# ---------------------------------------------------------------- sessions


def _slot_seed(seed: int, t: int) -> int:
    return int(np.random.SeedSequence([seed, 2, t]).generate_state(1)[0])


def run_session(cfg: SessionConfig) -> tuple[SessionStats, Trace]:
    """Simulate ``cfg.slots`` transmission slots; deterministic given the seed."""
    cfg.validate()
    mode = cfg.mac_mode
    macs = _make_macs(cfg, mode)
    dec_cfg = DecoderConfig(mud=cfg.mud_mode, pnc=(mode == "ncma"), alpha=cfg.alpha)
    records, events = [], []
    undetected = 0
    for t in range(cfg.slots):
        p = _pair_for_slot(t, cfg)
        mac = macs[p]
        seed = _slot_seed(cfg.seed, t)
        rng = np.random.default_rng(seed)
        if mode == "su":
            pkt = mac.current_packet()
            coded = convcode.conv_encode(frame_bits(pkt.payload, Stream.A))
            ch = draw_channel(cfg.nodes[mac.active_node], None, coded.size, rng,
                              cfg.channel, cfg.sigma2, cfg.groups)
            rx = transmit(bpsk_map(coded), None, ch, rng)
            est = perturb_csi(ch, cfg.csi_error, rng)
            payload = single_user_decode(rx, est.hA, cfg.alpha)
            got = None if payload is None else CodedPacket(mac.index, payload, Stream.A)
            if got is not None and not np.array_equal(payload, pkt.payload):
                undetected += 1
            records.append({"slot": t, "pair": p, "index": mac.index, "event": "SU",
                            "active": mac.active_node, "channel_seed": seed,
                            "packets": [] if got is None else [got.to_bytes().hex()]})
            events.append("SU")
            mac.receive(got)
            continue

        a, b = mac.names
        pa, pb = mac.current_packets()
        ca = convcode.conv_encode(frame_bits(pa.payload, Stream.A))
        cb = convcode.conv_encode(frame_bits(pb.payload, Stream.B))
        ch = draw_channel(cfg.nodes[a], cfg.nodes[b], ca.size, rng, cfg.channel, cfg.sigma2, cfg.groups)
        rx = transmit(bpsk_map(ca), bpsk_map(cb), ch, rng)
        est = perturb_csi(ch, cfg.csi_error, rng)
        out = decode_slot(rx, est, dec_cfg, index=mac.index)
        truth = {Stream.A: pa.payload, Stream.B: pb.payload, Stream.AxorB: pa.payload ^ pb.payload}
        for s, q in out.packets().items():
            if not np.array_equal(q.payload, truth[s]):
                undetected += 1
        records.append({"slot": t, "pair": p, "index": mac.index, "event": out.event,
                        "channel_seed": seed,
                        "packets": [q.to_bytes().hex() for q in out.packets().values()]})
        events.append(out.event)
        mac.receive(out)

    stats = _stats(cfg, macs, events, cfg.variant)
    diag = {"undetected_packet_errors": undetected,
            "message_errors": sum(m.message_errors for m in macs),
            "config_hash": cfg.config_hash()}
    if sum(stats.messages.values()) < 50:
        log.info("only %d messages decoded; throughput is dominated by edge effects",
                 sum(stats.messages.values()))
    return stats, Trace(cfg.to_dict(), records, diag)


def replay(trace: Trace, **overrides) -> SessionStats:
    """Re-run MAC decoding over the recorded PHY events.

    Overrides may change MAC parameters: ``L`` (int or per-node dict),
    ``mac`` ("ncma", "mud" or "su") and ``seed`` (message contents). With
    ``mac="mud"`` XOR packets are ignored; with ``mac="su"`` each slot
    credits only the node whose turn it is, and only if the multiuser
    decoder recovered that node's packet (a lower bound construction).
    """
    base = dict(trace.config)
    mac_mode = overrides.pop("mac", None)
    unknown = set(overrides) - {"L", "seed", "K"}
    if unknown:
        raise ConfigError(f"cannot override {sorted(unknown)} in a replay")
    base.update(overrides)
    cfg = SessionConfig.from_dict(base)
    recorded_mode = cfg.mac_mode
    mode = mac_mode or recorded_mode
    if mode not in MAC_MODES:
        raise ConfigError(f"unknown MAC mode {mode!r}")
    if recorded_mode == "su" and mode != "su":
        raise ConfigError("a single-user trace can only be replayed in SU mode")
    if len(trace.records) != cfg.slots:
        raise TraceError(f"trace holds {len(trace.records)} slots, config says {cfg.slots}")
    if mode == "ncma" and recorded_mode != "ncma":
        log.warning("replaying NCMA over a trace recorded without the PNC decoder")
    macs = _make_macs(cfg, mode)
    events = []
    for r in trace.records:
        t = r["slot"]
        mac = macs[r["pair"]]
        ev = r["event"]
        if recorded_mode == "su":
            mac.receive(mac.current_packet() if r["packets"] else None)
            events.append("SU")
            continue
        events.append(ev)
        if mode == "su":
            mud = ev.split("/")[0]
            ok = mud == "i" or (mud == "ii" and mac.active == 0) or (mud == "iii" and mac.active == 1)
            mac.receive(mac.current_packet() if ok else None)
            continue
        if r["index"] != mac.index:
            raise TraceError(f"slot {t}: recorded index {r['index']} but MAC expects {mac.index}")
        mac.receive(mac.outcome_from_event(ev))
    variant = cfg.variant if mode == recorded_mode else f"{mode}-projection"
    return _stats(cfg, macs, events, variant)
