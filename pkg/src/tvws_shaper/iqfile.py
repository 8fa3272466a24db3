"""Burst files: a short text header followed by little-endian float32 I/Q pairs.

Header lines are ``key=value``; an empty line ends the header::

    # tvws-shaper iq v1
    rate_hz=56888888.889
    length=115240
    provenance=ifft512,cp,cs,asym-window,stuff2,fir40
    group_delay=19.5
    <empty line>
    <length * 2 float32 values, I then Q>
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .windowing import ShapedBurst

MAGIC = "# tvws-shaper iq v1"


def write_iq(path: str | Path, burst: ShapedBurst) -> None:
    header = [
        MAGIC,
        f"rate_hz={burst.rate_hz!r}",
        f"length={len(burst.samples)}",
        f"n_symbols={burst.n_symbols}",
        f"provenance={','.join(burst.provenance)}",
        f"group_delay={burst.group_delay!r}",
    ]
    if burst.profile is not None:
        header.append(f"profile={burst.profile.name}")
    iq = np.empty(2 * len(burst.samples), dtype="<f4")
    iq[0::2] = burst.samples.real
    iq[1::2] = burst.samples.imag
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n\n").encode("ascii"))
        fh.write(iq.tobytes())


def read_iq(path: str | Path) -> tuple[np.ndarray, dict]:
    """Return (complex samples, header dict)."""
    data = Path(path).read_bytes()
    end = data.find(b"\n\n")
    if not data.startswith(MAGIC.encode()) or end < 0:
        raise ValueError(f"{path}: not a tvws-shaper I/Q file")
    meta = {}
    for line in data[:end].decode("ascii").splitlines()[1:]:
        key, _, value = line.partition("=")
        meta[key] = value
    iq = np.frombuffer(data[end + 2 :], dtype="<f4")
    samples = iq[0::2].astype(np.float64) + 1j * iq[1::2]
    if "length" in meta and int(meta["length"]) != len(samples):
        raise ValueError(f"{path}: header says {meta['length']} samples, file holds {len(samples)}")
    return samples, meta
