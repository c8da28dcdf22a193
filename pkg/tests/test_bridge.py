import sys

import numpy as np
import pytest

from uis import (
    BridgeConfig,
    BridgeDenoiser,
    IdentityDenoiser,
    ProtocolError,
    RngStream,
    SamplerParams,
    SignalVector,
    WienerDenoiser,
    bridge_denoise,
    sample_prior,
)
from uis.bridge import BridgeProcessError, BridgeTimeoutError, decode_frame, encode_frame

# minimal stdlib-only children implementing the frame protocol, used to
# exercise the client against an independent implementation
CHILD_TEMPLATE = """
import struct, sys
def read_exact(n):
    buf = b""
    while len(buf) < n:
        chunk = sys.stdin.buffer.read(n - len(buf))
        if not chunk:
            sys.exit(0)
        buf += chunk
    return buf
while True:
    head = read_exact(16)
    assert head[:4] == b"UIS1"
    h, w, c = struct.unpack("<III", head[4:16])
    values = list(struct.unpack("<%df" % (h*w*c), read_exact(4*h*w*c)))
    {transform}
    sys.stdout.buffer.write(head + struct.pack("<%df" % len(values), *values))
    sys.stdout.buffer.flush()
"""


def child_cmd(transform):
    return [sys.executable, "-c", CHILD_TEMPLATE.format(transform=transform)]


IDENTITY_CHILD = child_cmd("pass")
WIENER_CHILD = child_cmd("values = [v * 0.5 for v in values]")  # N(0,1) prior at sigma=1
NAN_CHILD = child_cmd("values = [float('nan') for v in values]")


class TestFraming:
    def test_roundtrip_random_payloads(self):
        rng = np.random.default_rng(0)
        for shape in ((1, 2, 1), (4, 5, 3), (1, 1, 1)):
            n = shape[0] * shape[1] * shape[2]
            values = rng.standard_normal(n).astype(np.float32)
            decoded, got_shape = decode_frame(encode_frame(values, shape))
            assert got_shape == shape
            assert np.array_equal(decoded, values)

    def test_bad_magic_rejected(self):
        frame = bytearray(encode_frame(np.zeros(2, dtype=np.float32), (1, 2, 1)))
        frame[:4] = b"XXXX"
        with pytest.raises(ProtocolError):
            decode_frame(bytes(frame))

    def test_truncated_rejected(self):
        frame = encode_frame(np.zeros(4, dtype=np.float32), (2, 2, 1))
        with pytest.raises(ProtocolError):
            decode_frame(frame[:-3])

    def test_length_mismatch_rejected(self):
        frame = encode_frame(np.zeros(4, dtype=np.float32), (2, 2, 1))
        with pytest.raises(ProtocolError):
            decode_frame(frame + b"\x00\x00\x00\x00")


class TestBridgeDenoiser:
    def test_identity_loopback(self):
        cfg = BridgeConfig(IDENTITY_CHILD, timeout=20)
        y = SignalVector(np.linspace(0, 1, 12), (3, 4, 1))
        out = bridge_denoise(cfg, y)
        assert out.shape == y.shape
        assert np.array_equal(out.data, y.data.astype(np.float32).astype(np.float64))

    def test_wiener_loopback_closed_form(self):
        cfg = BridgeConfig(WIENER_CHILD, timeout=20)
        out = bridge_denoise(cfg, SignalVector([2.0, 0.0]))
        assert np.allclose(out.data, [1.0, 0.0], atol=1e-6)

    def test_multiple_requests_in_order(self):
        with BridgeDenoiser(BridgeConfig(IDENTITY_CHILD, timeout=20)) as bridge:
            for k in range(5):
                y = SignalVector(np.full(3, float(k) + 0.25))
                out = bridge.denoise(y)
                assert np.allclose(out.data, y.data, atol=1e-6)

    def test_nan_response_is_protocol_error(self):
        cfg = BridgeConfig(NAN_CHILD, timeout=20)
        with pytest.raises(ProtocolError):
            bridge_denoise(cfg, SignalVector([1.0, 2.0]))

    def test_timeout(self):
        cmd = [sys.executable, "-c", "import time; time.sleep(60)"]
        cfg = BridgeConfig(cmd, timeout=0.3)
        with pytest.raises(BridgeTimeoutError):
            bridge_denoise(cfg, SignalVector([1.0]))

    def test_dead_child_exhausts_restarts(self):
        cmd = [sys.executable, "-c", "import sys; sys.exit(3)"]
        cfg = BridgeConfig(cmd, timeout=5, max_restarts=1)
        with BridgeDenoiser(cfg) as bridge:
            with pytest.raises(BridgeProcessError):
                bridge.denoise(SignalVector([1.0]))

    def test_restart_recovers_single_shot_child(self):
        # child answers one request then exits; one restart covers two calls
        one_shot = [
            sys.executable,
            "-c",
            CHILD_TEMPLATE.format(transform="pass").replace("while True:", "for _ in range(1):"),
        ]
        cfg = BridgeConfig(one_shot, timeout=20, max_restarts=1)
        with BridgeDenoiser(cfg) as bridge:
            a = bridge.denoise(SignalVector([1.0, 2.0]))
            b = bridge.denoise(SignalVector([3.0, 4.0]))
            assert np.allclose(a.data, [1.0, 2.0], atol=1e-6)
            assert np.allclose(b.data, [3.0, 4.0], atol=1e-6)


class TestBridgeInSampler:
    def test_identity_bridge_matches_in_process(self):
        params = SamplerParams(seed=21)
        f_local, t_local = sample_prior(IdentityDenoiser(), params, RngStream(21), shape=8)
        with BridgeDenoiser(BridgeConfig(IDENTITY_CHILD, timeout=20)) as bridge:
            f_wire, t_wire = sample_prior(bridge, params, RngStream(21), shape=8)
        assert t_wire.iterations == t_local.iterations == 1
        assert np.abs(f_wire.data - f_local.data).max() < 1e-6

    def test_wiener_bridge_matches_in_process(self):
        params = SamplerParams(seed=33, beta=1.0)
        local = WienerDenoiser(0.0, 1.0, sigma=1.0)
        f_local, t_local = sample_prior(local, params, RngStream(33), shape=4)
        with BridgeDenoiser(BridgeConfig(WIENER_CHILD, timeout=20)) as bridge:
            f_wire, t_wire = sample_prior(bridge, params, RngStream(33), shape=4)
        assert t_wire.iterations == t_local.iterations
        assert np.abs(f_wire.data - f_local.data).max() < 1e-6

    def test_nan_mid_run_aborts_with_trace(self):
        # child answers two shrink steps, then goes bad
        flaky = child_cmd(
            "count = globals().setdefault('_count', 0)\n"
            "    globals()['_count'] = count + 1\n"
            "    values = [float('nan') for v in values] if count >= 2 else [v * 0.5 for v in values]"
        )
        cfg = BridgeConfig(flaky, timeout=20)
        with BridgeDenoiser(cfg) as bridge:
            with pytest.raises(ProtocolError) as excinfo:
                sample_prior(bridge, SamplerParams(seed=2, beta=1.0), RngStream(2), shape=4)
        assert excinfo.value.trace.iterations == 2
