from __future__ import annotations

import hashlib
import json
import os
import tempfile
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path


def percent(count: int, total: int, places: int = 1) -> float:
    """``100 * count / total`` rounded half-up, e.g. ``percent(62, 1120) == 5.5``."""
    if total <= 0:
        return 0.0
    q = Decimal(1).scaleb(-places)
    return float((Decimal(100 * count) / Decimal(total)).quantize(q, rounding=ROUND_HALF_UP))


def round_half_up(x: float) -> int:
    return int(Decimal(x).to_integral_value(rounding=ROUND_HALF_UP))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_text(path: str | Path, text: str) -> Path:
    """Write ``text`` atomically (temp file + rename), UTF-8, ``\\n`` line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path
