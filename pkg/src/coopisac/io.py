"""File formats: observation tuples, run configs, CSV/PGM exports, tensor dumps.

Tuples file
    One target per line, ``d_B,v_B,theta_B_deg,d_U,v_U``. ``#`` starts a
    comment. A directive line ``sign_convention: paper`` or
    ``sign_convention: internal`` (optionally behind ``#``) states whether
    the last column uses the approaching-positive sign (``paper``, negated
    on load) or the receding-positive one.

Tensor dump
    16-byte header of four little-endian uint32 ``(ndim, d0, d1, d2)``
    (unused dims are 1), then the samples as little-endian interleaved
    complex64 in C order.
"""
from __future__ import annotations

import csv
import io as _stdio
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .fusion import DEFAULT_SIGMA, FusionOptions
from .ofdm import OfdmConfig

_DIRECTIVE = re.compile(r"^\s*#?\s*sign_convention\s*:\s*(\w+)\s*$")


class FormatError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.line = line


# ---------------------------------------------------------------------------
# tuples


def read_tuples(path) -> tuple[np.ndarray, str | None, list[int]]:
    """Parse a tuples file; returns ``(rows, sign_convention, line_numbers)``.

    Rows are returned exactly as written, no sign flip applied.
    """
    rows, lines, convention = [], [], None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            m = _DIRECTIVE.match(raw)
            if m:
                convention = m.group(1).lower()
                if convention not in ("paper", "internal"):
                    raise FormatError(f"unknown sign convention {convention!r}", path, lineno)
                continue
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = [p.strip() for p in text.split(",")]
            if len(parts) != 5:
                raise FormatError(f"expected 5 comma-separated values, got {len(parts)}", path, lineno)
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise FormatError(f"non-numeric value in {text!r}", path, lineno) from None
            if not np.all(np.isfinite(vals)):
                raise FormatError("values must be finite", path, lineno)
            rows.append(vals)
            lines.append(lineno)
    if not rows:
        raise FormatError("no observation tuples found", path)
    return np.array(rows), convention, lines


def validate_tuples(Y, ue_position, range_bin: float, path=None, lines=None) -> None:
    """Reject physically impossible rows, naming the offending line."""
    base = float(np.hypot(*np.asarray(ue_position, float)))
    for i, row in enumerate(np.asarray(Y)):
        line = lines[i] if lines else i + 1
        if row[0] <= 0:
            raise FormatError("d_B must be positive", path, line)
        if abs(row[2]) > 90:
            raise FormatError("theta_B must lie within [-90, 90] degrees", path, line)
        if row[3] < base - range_bin:
            raise FormatError(
                f"d_U={row[3]:.3f} m is shorter than the BS-UE baseline {base:.3f} m", path, line)


def write_tuples(path, Y, sign_convention: str = "internal") -> None:
    lines = [f"# sign_convention: {sign_convention}", "# d_B,v_B,theta_B_deg,d_U,v_U"]
    lines += [",".join(f"{v:.6f}" for v in row) for row in np.asarray(Y)]
    _atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# generic writers


def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "" if np.isnan(v) else f"{float(v):.6f}"
    return str(v)


def write_csv(path, header, rows) -> None:
    """Write rows atomically with fixed 6-decimal float formatting."""
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    _atomic_write_text(path, buf.getvalue())


def write_map_csv(path, magnitude) -> None:
    """Range-Doppler magnitude, one range bin per row."""
    mag = np.asarray(magnitude)
    text = "\n".join(",".join(f"{v:.6e}" for v in row) for row in mag)
    _atomic_write_text(path, text + "\n")


def write_pgm(path, magnitude, dynamic_range_db: float = 60.0) -> None:
    """8-bit binary PGM of the normalised log-magnitude (rows = range bins)."""
    mag = np.asarray(magnitude, dtype=float)
    peak = mag.max() if mag.size and mag.max() > 0 else 1.0
    db = 20 * np.log10(np.maximum(mag / peak, 1e-300))
    img = np.clip((db + dynamic_range_db) / dynamic_range_db, 0, 1)
    pix = np.round(img * 255).astype(np.uint8)
    h, w = pix.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise FormatError("not a binary PGM", path)
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise FormatError("only 8-bit PGM supported", path)
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


def dump_tensor(path, x) -> None:
    x = np.asarray(x)
    if x.ndim > 3:
        raise ValueError("at most three dimensions")
    dims = list(x.shape) + [1] * (3 - x.ndim)
    header = np.array([x.ndim, *dims], dtype="<u4").tobytes()
    body = np.ascontiguousarray(x, dtype="<c8").tobytes()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header + body)


def load_tensor(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    ndim, d0, d1, d2 = np.frombuffer(raw[:16], dtype="<u4")
    shape = (d0, d1, d2)[:ndim]
    return np.frombuffer(raw[16:], dtype="<c8").reshape(shape)


# ---------------------------------------------------------------------------
# run configuration


@dataclass
class RunSettings:
    snr_bs_db: float | None = 0.0
    snr_ue_db: float | None = 10.0
    music_grid_step: float = 0.1
    peak_threshold_db: float = 12.0
    min_separation: int = 3
    bs_zero_pad: object = 1
    ue_zero_pad: object = (8, 1)
    ue_max_targets: int = 8
    ue_dynamic_range_db: float | None = 15.0
    beam: str = "omni"


@dataclass
class RunConfig:
    radio: OfdmConfig = field(default_factory=OfdmConfig)
    scenario: dict = field(default_factory=dict)
    settings: RunSettings = field(default_factory=RunSettings)
    fusion: FusionOptions = field(default_factory=FusionOptions)
    runs: int = 1
    base_seed: int = 0
    randomize_targets: bool = True
    output_dir: str = "out"


_RADIO_INT = {"N", "M", "n_guard_low", "n_guard_high", "N_cp", "M_T", "M_R"}


def _num(v):
    return None if v is None else float(v)


def parse_config(data: dict, base_dir=".") -> RunConfig:
    """Build a :class:`RunConfig` from a parsed YAML mapping."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise FormatError("config root must be a mapping")
    known = {"radio", "scenario", "processing", "fusion", "montecarlo", "output_dir"}
    unknown = set(data) - known
    if unknown:
        raise FormatError(f"unknown config sections: {sorted(unknown)}")

    radio = {}
    for k, v in (data.get("radio") or {}).items():
        radio[k] = int(v) if k in _RADIO_INT else _num(v)
    cfg = OfdmConfig().with_overrides(**radio)

    scenario = dict(data.get("scenario") or {})
    if "file" in scenario:
        p = Path(base_dir) / scenario.pop("file")
        if not p.exists():
            raise FormatError(f"scenario file {p} does not exist")
        with open(p, encoding="utf-8") as fh:
            scenario = {**(yaml.safe_load(fh) or {}), **scenario}

    proc = dict(data.get("processing") or {})
    st = RunSettings()
    for k, v in proc.items():
        if not hasattr(st, k):
            raise FormatError(f"unknown processing key {k!r}")
        if k in ("bs_zero_pad", "ue_zero_pad"):
            v = tuple(int(x) for x in v) if isinstance(v, (list, tuple)) else int(v)
        elif k in ("min_separation", "ue_max_targets"):
            v = int(v)
        elif k == "beam":
            v = str(v)
        else:
            v = _num(v)
        setattr(st, k, v)

    fus = dict(data.get("fusion") or {})
    fopts = {}
    for k, v in fus.items():
        if k not in FusionOptions.__dataclass_fields__:
            raise FormatError(f"unknown fusion key {k!r}")
        if k == "sigma":
            v = tuple(float(x) for x in v)
            if len(v) != len(DEFAULT_SIGMA) or min(v) <= 0:
                raise FormatError("fusion.sigma needs five positive entries")
        elif k in ("max_iter", "inner_max_iter"):
            v = int(v)
        else:
            v = float(v)
        fopts[k] = v

    mc = dict(data.get("montecarlo") or {})
    runs = int(mc.get("runs", 1))
    if runs < 1:
        raise FormatError("montecarlo.runs must be >= 1")
    return RunConfig(
        radio=cfg, scenario=scenario, settings=st, fusion=FusionOptions(**fopts),
        runs=runs, base_seed=int(mc.get("base_seed", 0)),
        randomize_targets=bool(mc.get("randomize_targets", True)),
        output_dir=str(data.get("output_dir", "out")),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"config file {path} does not exist")
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise FormatError(f"invalid YAML: {exc}", path) from None
    try:
        return parse_config(data, base_dir=path.parent)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(str(exc), path) from None
