"""Chain construction and the cross-endpoint configuration wire format.

A chained transfer is described to every participant by one config record
(ChainNodeConfig); the records form a doubly linked list over the mesh. On
the wire a record is serialised into a CfgPacket of fixed-width frames so the
same codec works over any byte-aligned link width.

Frame layout (little-endian), one frame per link word:

    header  u16   bits 0-1  type identifier (read/write request)
                  bits 2-15 frame identifier: total frame count on the first
                            frame, 1-based frame index on the rest
    body    link_width/8 - 2 bytes of payload, zero-padded in the last frame

Payload layout (fields A-F):

    A  u16  previous-node id            (0xFFFF = none, chain head)
    B  u16  next-node id                (0xFFFF = none, chain tail)
    C  u16  this config's target node
    D  u32  role (low 8 bits) | task id << 8
    E  u32  request size in bytes
    F  u8   pattern dimension count
       u32  pattern base offset
       per dimension: i32 stride, u32 bound
"""
from __future__ import annotations

import itertools
import struct
from dataclasses import dataclass
from enum import IntEnum
from math import prod
from typing import Iterator

from .errors import CodecError, FramingError, ProtocolError
from .scheduling import ChainOrder, DestinationSet

_NONE_ID = 0xFFFF
_MAX_NODE_ID = 0xFFFE
_MAX_TASK_ID = (1 << 24) - 1
_HEADER_BYTES = 2
_HEADER_FMT = "<H"
_FIXED_FMT = "<HHHIIBI"  # A, B, C, D, E, F.ndim, F.base
_DIM_FMT = "<iI"
_FIXED_BYTES = struct.calcsize(_FIXED_FMT)
_DIM_BYTES = struct.calcsize(_DIM_FMT)
_MAX_FRAMES = (1 << 14) - 1


class TypeId(IntEnum):
    READ_REQUEST = 0
    WRITE_REQUEST = 1


class Role(IntEnum):
    INITIATOR = 0
    MIDDLE = 1
    TAIL = 2


@dataclass(frozen=True)
class AccessPattern:
    """N-dimensional affine access pattern: base + sum(index * stride).

    strides[0] is the outermost dimension; the last dimension iterates
    fastest. An empty pattern addresses the single element at `base`.
    """

    base: int = 0
    strides: tuple[int, ...] = ()
    bounds: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "strides", tuple(self.strides))
        object.__setattr__(self, "bounds", tuple(self.bounds))
        if len(self.strides) != len(self.bounds):
            raise ValueError("strides and bounds must have matching dimensions")
        if any(b < 1 for b in self.bounds):
            raise ValueError("all bounds must be >= 1")

    @property
    def n_elements(self) -> int:
        return prod(self.bounds)

    @classmethod
    def contiguous(cls, n_bytes: int, elem_bytes: int = 64) -> "AccessPattern":
        """A flat 1-D pattern covering n_bytes in elem_bytes steps."""
        return cls(0, (elem_bytes,), (-(-n_bytes // elem_bytes),))


@dataclass(frozen=True)
class ChainNodeConfig:
    """One endpoint's entry in the doubly linked transfer chain."""

    node: int
    prev: int | None
    next: int | None
    role: Role
    task_id: int
    transfer_bytes: int
    pattern: AccessPattern

    def __post_init__(self):
        if self.role is Role.INITIATOR and self.prev is not None:
            raise ValueError("initiator config must not have a previous node")
        if self.role is Role.TAIL and self.next is not None:
            raise ValueError("tail config must not have a next node")
        if self.role is Role.MIDDLE and (self.prev is None or self.next is None):
            raise ValueError("middle config needs both neighbours")
        if self.transfer_bytes <= 0:
            raise ValueError("transfer_bytes must be positive")


@dataclass(frozen=True)
class Frame:
    type_id: TypeId
    ident: int
    body: bytes


@dataclass(frozen=True)
class CfgPacket:
    frames: tuple[Frame, ...]

    @property
    def type_id(self) -> TypeId:
        return self.frames[0].type_id

    def to_bytes(self) -> bytes:
        out = bytearray()
        for frame in self.frames:
            out += struct.pack(_HEADER_FMT, (frame.ident << 2) | int(frame.type_id))
            out += frame.body
        return bytes(out)

    @classmethod
    def from_bytes(cls, raw: bytes, link_width_bits: int) -> "CfgPacket":
        word = _frame_bytes(link_width_bits)
        if len(raw) == 0 or len(raw) % word:
            raise FramingError(
                f"packet length {len(raw)} is not a multiple of the {word}-byte frame"
            )
        frames = []
        for off in range(0, len(raw), word):
            (header,) = struct.unpack_from(_HEADER_FMT, raw, off)
            frames.append(
                Frame(TypeId(header & 0x3), header >> 2, raw[off + _HEADER_BYTES : off + word])
            )
        return cls(tuple(frames))


def build_chain_configs(
    task: DestinationSet,
    order: ChainOrder,
    transfer_bytes: int,
    pattern: AccessPattern,
    task_id: int = 0,
) -> list[ChainNodeConfig]:
    """Configs for the initiator plus every destination, linked in visit order."""
    if sorted(order.visit) != task.sorted_destinations():
        raise ValueError("order is not a permutation of the task's destinations")
    chain = [task.initiator, *order.visit]
    configs = []
    for i, node in enumerate(chain):
        last = i == len(chain) - 1
        if i == 0:
            role = Role.INITIATOR
        elif last:
            role = Role.TAIL
        else:
            role = Role.MIDDLE
        configs.append(
            ChainNodeConfig(
                node=node,
                prev=None if i == 0 else chain[i - 1],
                next=None if last else chain[i + 1],
                role=role,
                task_id=task_id,
                transfer_bytes=transfer_bytes,
                pattern=pattern,
            )
        )
    return configs


def validate_chain(configs: list[ChainNodeConfig]) -> None:
    """Check doubly-linked-list integrity; raises ProtocolError when broken."""
    if not configs or configs[0].role is not Role.INITIATOR:
        raise ProtocolError("chain must start with an initiator config")
    by_node = {c.node: c for c in configs}
    if len(by_node) != len(configs):
        raise ProtocolError("duplicate node in chain")
    seen = []
    cur = configs[0]
    while True:
        seen.append(cur.node)
        if cur.next is None:
            break
        nxt = by_node.get(cur.next)
        if nxt is None:
            raise ProtocolError(f"node {cur.node} points to unknown next {cur.next}")
        if nxt.prev != cur.node:
            raise ProtocolError(f"node {nxt.node} prev pointer does not mirror {cur.node}")
        if nxt.node in seen:
            raise ProtocolError("chain contains a cycle")
        cur = nxt
    if cur.role is not Role.TAIL:
        raise ProtocolError("forward traversal does not end at a tail config")
    if len(seen) != len(configs):
        raise ProtocolError("forward traversal does not visit every config")


def _frame_bytes(link_width_bits: int) -> int:
    if link_width_bits % 8:
        raise CodecError(f"link width {link_width_bits} is not byte-aligned")
    if link_width_bits < (_HEADER_BYTES + 1) * 8:
        raise CodecError(
            f"link width {link_width_bits} cannot carry the {_HEADER_BYTES}-byte "
            "frame header plus payload"
        )
    return link_width_bits // 8


def _encode_id(node: int | None) -> int:
    if node is None:
        return _NONE_ID
    if not 0 <= node <= _MAX_NODE_ID:
        raise CodecError(f"node id {node} does not fit the 16-bit id field")
    return node


def _pack_payload(cfg: ChainNodeConfig) -> bytes:
    if not 0 <= cfg.task_id <= _MAX_TASK_ID:
        raise CodecError(f"task id {cfg.task_id} does not fit 24 bits")
    if cfg.transfer_bytes >= 1 << 32:
        raise CodecError("transfer_bytes does not fit 32 bits")
    pat = cfg.pattern
    if len(pat.bounds) > 0xFF:
        raise CodecError("pattern has too many dimensions")
    if not 0 <= pat.base < 1 << 32:
        raise CodecError("pattern base does not fit 32 bits")
    payload = struct.pack(
        _FIXED_FMT,
        _encode_id(cfg.prev),
        _encode_id(cfg.next),
        _encode_id(cfg.node),
        int(cfg.role) | (cfg.task_id << 8),
        cfg.transfer_bytes,
        len(pat.bounds),
        pat.base,
    )
    for stride, bound in zip(pat.strides, pat.bounds):
        if not -(1 << 31) <= stride < 1 << 31:
            raise CodecError(f"stride {stride} does not fit a signed 32-bit field")
        if bound >= 1 << 32:
            raise CodecError(f"bound {bound} does not fit 32 bits")
        payload += struct.pack(_DIM_FMT, stride, bound)
    return payload


def encode_cfg(
    cfg: ChainNodeConfig,
    link_width_bits: int = 512,
    type_id: TypeId = TypeId.WRITE_REQUEST,
) -> CfgPacket:
    """Serialise a config into ceil(payload / usable-frame-bytes) frames."""
    body_bytes = _frame_bytes(link_width_bits) - _HEADER_BYTES
    payload = _pack_payload(cfg)
    n_frames = -(-len(payload) // body_bytes)
    if n_frames > _MAX_FRAMES:
        raise CodecError("payload needs more frames than the 14-bit identifier allows")
    frames = []
    for i in range(n_frames):
        chunk = payload[i * body_bytes : (i + 1) * body_bytes]
        chunk = chunk.ljust(body_bytes, b"\x00")
        ident = n_frames if i == 0 else i + 1
        frames.append(Frame(type_id, ident, chunk))
    return CfgPacket(tuple(frames))


def decode_cfg(packet: CfgPacket) -> ChainNodeConfig:
    """Exact inverse of encode_cfg; raises FramingError on bad frame sequences."""
    frames = packet.frames
    if not frames:
        raise FramingError("packet has no frames")
    total = frames[0].ident
    if total < 1:
        raise FramingError("first frame announces a zero frame count")
    if len(frames) != total:
        raise FramingError(f"first frame announces {total} frames but {len(frames)} arrived")
    for i, frame in enumerate(frames[1:], start=1):
        if frame.ident != i + 1:
            raise FramingError(f"frame at position {i} carries index {frame.ident}, expected {i + 1}")
        if frame.type_id != frames[0].type_id:
            raise FramingError("frames disagree on the type identifier")
    payload = b"".join(f.body for f in frames)
    if len(payload) < _FIXED_BYTES:
        raise FramingError("payload shorter than the fixed field block")
    prev_raw, next_raw, node, d_word, transfer_bytes, ndim, base = struct.unpack_from(
        _FIXED_FMT, payload
    )
    need = _FIXED_BYTES + ndim * _DIM_BYTES
    if len(payload) < need:
        raise FramingError("payload truncated inside the access-pattern block")
    strides = []
    bounds = []
    for d in range(ndim):
        stride, bound = struct.unpack_from(_DIM_FMT, payload, _FIXED_BYTES + d * _DIM_BYTES)
        strides.append(stride)
        bounds.append(bound)
    if any(payload[need:]):
        raise FramingError("non-zero padding after the payload")
    try:
        role = Role(d_word & 0xFF)
    except ValueError as exc:
        raise CodecError(f"unknown role code {d_word & 0xFF}") from exc
    return ChainNodeConfig(
        node=node,
        prev=None if prev_raw == _NONE_ID else prev_raw,
        next=None if next_raw == _NONE_ID else next_raw,
        role=role,
        task_id=d_word >> 8,
        transfer_bytes=transfer_bytes,
        pattern=AccessPattern(base, tuple(strides), tuple(bounds)),
    )


def gen_affine_addresses(pattern: AccessPattern) -> Iterator[int]:
    """Yield base + sum(index * stride), innermost dimension fastest."""
    for idx in itertools.product(*(range(b) for b in pattern.bounds)):
        yield pattern.base + sum(i * s for i, s in zip(idx, pattern.strides))


def describe_packet(packet: CfgPacket) -> str:
    """Human-readable field and hex breakdown for the codec-dump command."""
    lines = []
    for i, frame in enumerate(packet.frames):
        kind = "total" if i == 0 else "index"
        lines.append(
            f"frame {i}: type={frame.type_id.name.lower()} "
            f"ident={frame.ident} ({kind}) body={frame.body.hex()}"
        )
    cfg = decode_cfg(packet)
    none = "-"
    lines.append(f"A prev            : {none if cfg.prev is None else cfg.prev}")
    lines.append(f"B next            : {none if cfg.next is None else cfg.next}")
    lines.append(f"C node            : {cfg.node}")
    lines.append(f"D role/task       : {cfg.role.name.lower()}/{cfg.task_id}")
    lines.append(f"E transfer bytes  : {cfg.transfer_bytes}")
    lines.append(
        f"F pattern         : base={cfg.pattern.base} "
        f"strides={list(cfg.pattern.strides)} bounds={list(cfg.pattern.bounds)}"
    )
    return "\n".join(lines)
