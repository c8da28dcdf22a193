"""Single-threaded request loop: one response frame per request frame."""

from __future__ import annotations

import sys
from typing import BinaryIO, Optional

from .framing import MalformedFrame, read_frame, write_frame
from .modes import Transform


def serve(transform: Transform, stdin: Optional[BinaryIO] = None, stdout: Optional[BinaryIO] = None) -> int:
    """Answer frames until the input closes; returns the process exit code.

    A malformed request stops the loop immediately: nothing further is
    written and the exit code is nonzero.
    """
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout.buffer
    while True:
        try:
            frame = read_frame(stdin)
        except MalformedFrame as err:
            print(f"uis-adapter: {err}", file=sys.stderr)
            return 1
        if frame is None:
            return 0
        values, shape = frame
        write_frame(stdout, transform(values, shape), shape)
