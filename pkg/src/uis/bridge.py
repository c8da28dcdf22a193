"""Client for out-of-process denoisers speaking a framed float32 protocol.

Frames, both directions, over the child's stdin/stdout:

    magic "UIS1" (4 bytes)
    uint32 little-endian height, width, channels
    height * width * channels float32 little-endian values,
    planar channel-major, row-major within each plane

One request is in flight at a time and the child must answer in order.  No
noise level is transmitted: the protocol deliberately enforces the blind
contract, so a served model must handle any noise amplitude on its own.
Values are float32 on the wire and float64 in-core; the conversion at this
boundary is the pipeline's only precision loss.
"""

from __future__ import annotations

import select
import shlex
import struct
import subprocess
import time
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .core import ImageShape, SignalVector

__all__ = [
    "MAGIC",
    "BridgeConfig",
    "BridgeDenoiser",
    "BridgeTimeoutError",
    "BridgeProcessError",
    "ProtocolError",
    "bridge_denoise",
    "encode_frame",
    "decode_frame",
]

MAGIC = b"UIS1"
_HEADER = struct.Struct("<III")


class ProtocolError(RuntimeError):
    """Malformed frame: bad magic, bad length, or non-finite payload."""


class BridgeTimeoutError(TimeoutError):
    """The external denoiser did not answer within the configured timeout."""


class BridgeProcessError(RuntimeError):
    """The external denoiser exited and the restart budget is exhausted."""


def encode_frame(values, shape: ImageShape) -> bytes:
    """Serialize a payload to one wire frame (float32, planar layout)."""
    h, w, c = (int(v) for v in shape)
    arr = np.ascontiguousarray(np.asarray(values).reshape(-1), dtype="<f4")
    if arr.size != h * w * c:
        raise ValueError(f"shape {(h, w, c)} implies {h * w * c} values, got {arr.size}")
    return MAGIC + _HEADER.pack(h, w, c) + arr.tobytes()


def decode_frame(data: bytes) -> Tuple[np.ndarray, ImageShape]:
    """Parse one wire frame; raises ProtocolError on any malformation."""
    if len(data) < len(MAGIC) + _HEADER.size:
        raise ProtocolError(f"frame truncated at {len(data)} bytes")
    if data[:4] != MAGIC:
        raise ProtocolError(f"bad magic {data[:4]!r}")
    h, w, c = _HEADER.unpack_from(data, 4)
    expected = len(MAGIC) + _HEADER.size + 4 * h * w * c
    if len(data) != expected:
        raise ProtocolError(f"frame length {len(data)}, header implies {expected}")
    payload = np.frombuffer(data, dtype="<f4", offset=len(MAGIC) + _HEADER.size)
    return payload.copy(), (h, w, c)


@dataclass(frozen=True)
class BridgeConfig:
    """How to launch and talk to an external denoiser process.

    command may be a shell-style string or an argv sequence.  On a dead
    child the bridge relaunches and retries, up to max_restarts times over
    the bridge's lifetime, then fails.
    """

    command: Union[str, Sequence[str]]
    timeout: float = 30.0
    max_restarts: int = 1

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError(f"timeout must be > 0, got {self.timeout}")
        if self.max_restarts < 0:
            raise ValueError(f"max_restarts must be >= 0, got {self.max_restarts}")

    def argv(self) -> Sequence[str]:
        return shlex.split(self.command) if isinstance(self.command, str) else list(self.command)


def _read_exact(proc: subprocess.Popen, nbytes: int, deadline: float) -> bytes:
    """Read exactly nbytes from the child's stdout before the deadline."""
    out = bytearray()
    fd = proc.stdout.fileno()
    while len(out) < nbytes:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise BridgeTimeoutError(f"no response within timeout ({nbytes - len(out)} bytes missing)")
        ready, _, _ = select.select([fd], [], [], remaining)
        if not ready:
            continue
        chunk = proc.stdout.read(nbytes - len(out))
        if not chunk:
            raise BridgeProcessError(f"denoiser process closed its output (exit code {proc.poll()})")
        out.extend(chunk)
    return bytes(out)


class BridgeDenoiser:
    """Denoiser handle backed by a child process.

    Blind: the sigma hint is accepted and discarded.  One instance serves
    one chain; run parallel chains with independent instances.
    """

    concurrency_safe = False

    def __init__(self, config: BridgeConfig):
        self.config = config
        self._proc: Optional[subprocess.Popen] = None
        self._restarts_used = 0

    def _launch(self):
        self._proc = subprocess.Popen(
            self.config.argv(),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            bufsize=0,
        )

    def _ensure_running(self):
        if self._proc is None or self._proc.poll() is not None:
            if self._proc is not None:
                self._restarts_used += 1
                if self._restarts_used > self.config.max_restarts:
                    raise BridgeProcessError(
                        f"denoiser process died and restart budget ({self.config.max_restarts}) is spent"
                    )
            self._launch()

    def close(self):
        if self._proc is not None:
            if self._proc.stdin:
                try:
                    self._proc.stdin.close()
                except OSError:
                    pass
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
            self._proc = None

    def __enter__(self):
        self._ensure_running()
        return self

    def __exit__(self, *exc):
        self.close()

    def _roundtrip(self, frame: bytes, shape: ImageShape) -> np.ndarray:
        proc = self._proc
        deadline = time.monotonic() + self.config.timeout
        try:
            proc.stdin.write(frame)
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as err:
            raise BridgeProcessError(f"denoiser process rejected the request: {err}") from err
        head = _read_exact(proc, len(MAGIC) + _HEADER.size, deadline)
        if head[:4] != MAGIC:
            raise ProtocolError(f"bad magic {head[:4]!r} in response")
        h, w, c = _HEADER.unpack_from(head, 4)
        if (h, w, c) != shape:
            raise ProtocolError(f"response shape {(h, w, c)} does not match request {shape}")
        payload = _read_exact(proc, 4 * h * w * c, deadline)
        values = np.frombuffer(payload, dtype="<f4")
        if not np.all(np.isfinite(values)):
            raise ProtocolError("response payload contains non-finite values")
        return values

    def denoise(self, y: SignalVector, sigma_hint: Optional[float] = None) -> SignalVector:
        del sigma_hint  # blind by protocol design
        shape = y.shape if y.shape is not None else (1, y.n, 1)
        frame = encode_frame(y.data, shape)
        while True:
            self._ensure_running()
            try:
                values = self._roundtrip(frame, shape)
                break
            except BridgeProcessError:
                if self._restarts_used >= self.config.max_restarts:
                    raise
                # make sure the child is gone; the next pass relaunches it
                if self._proc.poll() is None:
                    self._proc.kill()
                    self._proc.wait()
        return y.with_data(values.astype(np.float64))


def bridge_denoise(config: BridgeConfig, y: SignalVector) -> SignalVector:
    """One-shot denoise through a freshly launched child process."""
    with BridgeDenoiser(config) as bridge:
        return bridge.denoise(y)
