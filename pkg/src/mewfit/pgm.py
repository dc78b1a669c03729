"""PGM (portable graymap) reading and writing, P2 and P5 at maxval 255.

Intensities map as gray/255 on read; writing rounds to the nearest integer
gray level. Comments (# ...) are allowed anywhere in the header.
"""

import numpy as np

from .exceptions import PgmError

MAXVAL = 255


def _header_tokens(data):
    """Yield whitespace-separated header tokens, skipping # comments, and
    finally the offset where pixel data begins."""
    pos = 0
    tokens = []
    while len(tokens) < 4:
        if pos >= len(data):
            raise PgmError("truncated header")
        c = data[pos:pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            if nl < 0:
                raise PgmError("unterminated comment")
            pos = nl + 1
        elif c.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace() \
                    and data[end:end + 1] != b"#":
                end += 1
            tokens.append(data[pos:end])
            pos = end
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise PgmError("missing separator after maxval")
    return tokens, pos + 1


def read_pgm(path):
    """Read a PGM file into a float grid with intensities in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P2", b"P5"):
        raise PgmError("not a P2/P5 PGM stream")
    tokens, offset = _header_tokens(data)
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise PgmError(f"non-numeric header field: {exc}") from None
    if width < 1 or height < 1:
        raise PgmError("non-positive dimensions")
    if maxval != MAXVAL:
        raise PgmError(f"unsupported maxval {maxval}, expected {MAXVAL}")
    if magic == b"P5":
        raster = data[offset:offset + width * height]
        if len(raster) < width * height:
            raise PgmError("truncated raster")
        grid = np.frombuffer(raster, dtype=np.uint8).astype(float)
    else:
        try:
            values = [int(t) for t in data[offset:].split()]
        except ValueError as exc:
            raise PgmError(f"non-numeric sample: {exc}") from None
        if len(values) < width * height:
            raise PgmError("truncated raster")
        grid = np.array(values[: width * height], dtype=float)
        if grid.min() < 0 or grid.max() > MAXVAL:
            raise PgmError("sample out of range")
    return grid.reshape(height, width) / MAXVAL


def write_pgm(path, img, binary=True):
    """Write an intensity grid in [0, 1] as P5 (default) or P2, maxval 255."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise PgmError("image must be 2-d")
    if img.min() < 0.0 or img.max() > 1.0:
        raise PgmError("intensities outside [0, 1]")
    gray = np.rint(img * MAXVAL).astype(np.uint8)
    height, width = gray.shape
    with open(path, "wb") as fh:
        if binary:
            fh.write(f"P5\n{width} {height}\n{MAXVAL}\n".encode())
            fh.write(gray.tobytes())
        else:
            fh.write(f"P2\n{width} {height}\n{MAXVAL}\n".encode())
            for row in gray:
                fh.write((" ".join(str(v) for v in row) + "\n").encode())
