"""Regenerate the golden frame corpus.  Run from this directory:

    python3 make_corpus.py

The files are committed; rerunning must be byte-stable.
"""

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"UIS1"
HERE = Path(__file__).parent


def frame(values, shape):
    h, w, c = shape
    arr = np.asarray(values, dtype="<f4").reshape(-1)
    assert arr.size == h * w * c
    return MAGIC + struct.pack("<III", h, w, c) + arr.tobytes()


def wiener(values, mean, prior_var, sigma):
    gain = prior_var / (prior_var + sigma**2)
    return (mean + gain * (np.asarray(values, dtype="<f4").astype(np.float64) - mean)).astype("<f4")


def main():
    small = np.array([2.0, 0.0], dtype="<f4")
    big = np.linspace(-1.0, 2.0, 24).astype("<f4")

    files = {
        "req_2x1.bin": frame(small, (1, 2, 1)),
        "resp_identity_2x1.bin": frame(small, (1, 2, 1)),
        "resp_wiener_2x1.bin": frame(wiener(small, 0.0, 1.0, 1.0), (1, 2, 1)),
        "req_4x3x2.bin": frame(big, (4, 3, 2)),
        "resp_identity_4x3x2.bin": frame(big, (4, 3, 2)),
        "resp_wiener_4x3x2.bin": frame(wiener(big, 0.25, 2.0, 0.5), (4, 3, 2)),
        "malformed_magic.bin": b"XXXX" + frame(small, (1, 2, 1))[4:],
        "truncated.bin": frame(big, (4, 3, 2))[:-10],
    }
    for name, blob in files.items():
        (HERE / name).write_bytes(blob)

    corpus = [
        {"request": "req_2x1.bin", "response": "resp_identity_2x1.bin", "argv": ["--mode", "identity"]},
        {
            "request": "req_2x1.bin",
            "response": "resp_wiener_2x1.bin",
            "argv": ["--mode", "wiener", "--mean", "0", "--prior-var", "1", "--sigma", "1"],
        },
        {"request": "req_4x3x2.bin", "response": "resp_identity_4x3x2.bin", "argv": ["--mode", "identity"]},
        {
            "request": "req_4x3x2.bin",
            "response": "resp_wiener_4x3x2.bin",
            "argv": ["--mode", "wiener", "--mean", "0.25", "--prior-var", "2", "--sigma", "0.5"],
        },
    ]
    (HERE / "corpus.json").write_text(json.dumps(corpus, indent=2) + "\n")
    print(f"wrote {len(files)} frames + corpus.json")


if __name__ == "__main__":
    main()
