from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaincast import (
    AccessPattern,
    CfgPacket,
    ChainNodeConfig,
    ChainOrder,
    CodecError,
    DestinationSet,
    Frame,
    FramingError,
    ProtocolError,
    Role,
    TypeId,
    build_chain_configs,
    decode_cfg,
    describe_packet,
    encode_cfg,
    gen_affine_addresses,
    validate_chain,
)

DATA_DIR = Path(__file__).parent / "data"

node_ids = st.integers(0, 0xFFFE)


@st.composite
def patterns(draw, max_dims=4):
    ndim = draw(st.integers(0, max_dims))
    strides = tuple(
        draw(st.integers(-(2**31), 2**31 - 1)) for _ in range(ndim)
    )
    bounds = tuple(draw(st.integers(1, 2**32 - 1)) for _ in range(ndim))
    base = draw(st.integers(0, 2**32 - 1))
    return AccessPattern(base, strides, bounds)


@st.composite
def cfgs(draw):
    role = draw(st.sampled_from(list(Role)))
    return ChainNodeConfig(
        node=draw(node_ids),
        prev=None if role is Role.INITIATOR else draw(node_ids),
        next=None if role is Role.TAIL else draw(node_ids),
        role=role,
        task_id=draw(st.integers(0, 2**24 - 1)),
        transfer_bytes=draw(st.integers(1, 2**32 - 1)),
        pattern=draw(patterns()),
    )


link_widths = st.integers(3, 128).map(lambda w: w * 8)


# ---------------------------------------------------------------- chain build

def test_build_chain_worked_example():
    task = DestinationSet(0, frozenset({3, 12, 15}))
    configs = build_chain_configs(task, ChainOrder((3, 15, 12)), 4096, AccessPattern())
    assert [(c.node, c.prev, c.next, c.role) for c in configs] == [
        (0, None, 3, Role.INITIATOR),
        (3, 0, 15, Role.MIDDLE),
        (15, 3, 12, Role.MIDDLE),
        (12, 15, None, Role.TAIL),
    ]


def test_build_chain_single_destination():
    task = DestinationSet(0, frozenset({5}))
    configs = build_chain_configs(task, ChainOrder((5,)), 64, AccessPattern())
    assert len(configs) == 2
    assert configs[1].role is Role.TAIL
    validate_chain(configs)


def test_build_chain_rejects_mismatched_order():
    task = DestinationSet(0, frozenset({3, 12}))
    with pytest.raises(ValueError):
        build_chain_configs(task, ChainOrder((3, 15)), 64, AccessPattern())


@given(
    st.integers(0, 100),
    st.lists(st.integers(1, 1000), min_size=1, max_size=20, unique=True),
)
def test_chain_is_doubly_linked(initiator, visit):
    visit = [v for v in visit if v != initiator] or [initiator + 1]
    task = DestinationSet(initiator, frozenset(visit))
    configs = build_chain_configs(task, ChainOrder(tuple(visit)), 64, AccessPattern())
    assert len(configs) == len(visit) + 1
    validate_chain(configs)
    by_node = {c.node: c for c in configs}
    # forward traversal from the head and backward traversal from the tail
    # visit the same nodes in reverse orders
    forward = []
    cur = configs[0]
    while cur is not None:
        forward.append(cur.node)
        cur = by_node.get(cur.next) if cur.next is not None else None
    backward = []
    cur = configs[-1]
    while cur is not None:
        backward.append(cur.node)
        cur = by_node.get(cur.prev) if cur.prev is not None else None
    assert forward == [initiator, *visit]
    assert backward == forward[::-1]
    for cfg in configs[1:]:
        assert by_node[cfg.prev].next == cfg.node
    for cfg in configs[:-1]:
        assert by_node[cfg.next].prev == cfg.node


def test_validate_chain_detects_broken_links():
    task = DestinationSet(0, frozenset({3, 12}))
    configs = build_chain_configs(task, ChainOrder((3, 12)), 64, AccessPattern())
    broken = list(configs)
    broken[1] = ChainNodeConfig(3, 9, 12, Role.MIDDLE, 0, 64, AccessPattern())
    with pytest.raises(ProtocolError):
        validate_chain(broken)
    with pytest.raises(ProtocolError):
        validate_chain(configs[:-1] + [configs[-1]] * 0 + [configs[1]])


# --------------------------------------------------------------------- codec

def test_single_frame_on_wide_link():
    cfg = ChainNodeConfig(3, 0, 15, Role.MIDDLE, 1, 131072, AccessPattern(0, (64,), (2048,)))
    packet = encode_cfg(cfg, link_width_bits=512)
    assert len(packet.frames) == 1
    assert packet.frames[0].ident == 1
    assert len(packet.to_bytes()) == 64


def test_multi_frame_on_narrow_link():
    cfg = ChainNodeConfig(3, 0, 15, Role.MIDDLE, 1, 131072, AccessPattern(0, (64,), (2048,)))
    packet = encode_cfg(cfg, link_width_bits=64)
    # 27-byte payload over 6-byte bodies
    assert len(packet.frames) == 5
    assert packet.frames[0].ident == 5
    assert [f.ident for f in packet.frames[1:]] == [2, 3, 4, 5]
    assert decode_cfg(packet) == cfg


def test_width_below_header_rejected():
    cfg = ChainNodeConfig(1, None, None, Role.INITIATOR, 0, 64, AccessPattern())
    for width in (8, 16, 20, 100):
        with pytest.raises(CodecError):
            encode_cfg(cfg, link_width_bits=width)


@given(cfgs(), link_widths)
@settings(max_examples=300)
def test_codec_roundtrip(cfg, width):
    packet = encode_cfg(cfg, link_width_bits=width)
    assert decode_cfg(packet) == cfg
    # wire image parses back to the same packet
    assert CfgPacket.from_bytes(packet.to_bytes(), width) == packet


@given(cfgs())
def test_roundtrip_through_read_request(cfg):
    packet = encode_cfg(cfg, 128, type_id=TypeId.READ_REQUEST)
    assert packet.type_id is TypeId.READ_REQUEST
    assert decode_cfg(packet) == cfg


def test_missing_frame_detected():
    cfg = ChainNodeConfig(3, 0, 15, Role.MIDDLE, 1, 131072, AccessPattern(0, (64,), (2048,)))
    packet = encode_cfg(cfg, link_width_bits=64)
    frames = list(packet.frames)
    del frames[1]  # drop frame index 2
    with pytest.raises(FramingError):
        decode_cfg(CfgPacket(tuple(frames)))


def test_frame_count_mismatch_detected():
    cfg = ChainNodeConfig(3, 0, 15, Role.MIDDLE, 1, 131072, AccessPattern(0, (64,), (2048,)))
    packet = encode_cfg(cfg, link_width_bits=64)
    frames = list(packet.frames)
    # first frame claims N frames but N+1 arrive
    frames.append(Frame(frames[0].type_id, len(frames) + 1, bytes(len(frames[0].body))))
    with pytest.raises(FramingError):
        decode_cfg(CfgPacket(tuple(frames)))


def test_duplicate_frame_detected():
    cfg = ChainNodeConfig(3, 0, 15, Role.MIDDLE, 1, 131072, AccessPattern(0, (64,), (2048,)))
    packet = encode_cfg(cfg, link_width_bits=64)
    frames = list(packet.frames)
    frames[2] = frames[1]
    with pytest.raises(FramingError):
        decode_cfg(CfgPacket(tuple(frames)))


def test_golden_packets_are_byte_stable():
    for name, cfg, width in _golden_cases():
        golden = (DATA_DIR / name).read_bytes()
        assert encode_cfg(cfg, width).to_bytes() == golden
        # stability across repeated encodes
        assert encode_cfg(cfg, width).to_bytes() == golden
        assert decode_cfg(CfgPacket.from_bytes(golden, width)) == cfg


def _golden_cases():
    head = ChainNodeConfig(
        0, None, 3, Role.INITIATOR, 1, 65536, AccessPattern(0, (64,), (1024,))
    )
    middle = ChainNodeConfig(
        3, 0, 15, Role.MIDDLE, 1, 65536, AccessPattern(4096, (512, 64), (16, 8))
    )
    tail = ChainNodeConfig(
        12, 15, None, Role.TAIL, 1, 65536, AccessPattern(8192, (64,), (1024,))
    )
    return [
        ("cfg_head_w512.bin", head, 512),
        ("cfg_middle_w512.bin", middle, 512),
        ("cfg_middle_w64.bin", middle, 64),
        ("cfg_tail_w128.bin", tail, 128),
    ]


def test_describe_packet_mentions_fields():
    cfg = ChainNodeConfig(3, 0, 15, Role.MIDDLE, 7, 4096, AccessPattern(64, (8,), (16,)))
    text = describe_packet(encode_cfg(cfg, 512))
    assert "A prev" in text and ": 0" in text
    assert "C node" in text
    assert "middle/7" in text
    assert "4096" in text


# ---------------------------------------------------------- address generator

def test_affine_1d():
    assert list(gen_affine_addresses(AccessPattern(0, (8,), (4,)))) == [0, 8, 16, 24]


def test_affine_2d_matches_nested_loops():
    pattern = AccessPattern(100, (64, 8), (2, 3))
    got = list(gen_affine_addresses(pattern))
    want = []
    for i in range(2):
        for j in range(3):
            want.append(100 + i * 64 + j * 8)
    assert got == want == [100, 108, 116, 164, 172, 180]


def test_affine_degenerate():
    assert list(gen_affine_addresses(AccessPattern(0, (), ()))) == [0]


@given(patterns(max_dims=3))
@settings(max_examples=60)
def test_affine_length(pattern):
    bounded = AccessPattern(
        pattern.base,
        pattern.strides,
        tuple(min(b, 6) for b in pattern.bounds),
    )
    assert len(list(gen_affine_addresses(bounded))) == bounded.n_elements


def test_affine_contiguous_when_stride_matches():
    pattern = AccessPattern(256, (4,), (10,))
    addrs = list(gen_affine_addresses(pattern))
    assert addrs == list(range(256, 256 + 40, 4))


def test_pattern_validation():
    with pytest.raises(ValueError):
        AccessPattern(0, (8,), ())
    with pytest.raises(ValueError):
        AccessPattern(0, (8,), (0,))
