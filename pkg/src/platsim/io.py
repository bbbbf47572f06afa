"""Messages CSV, config files and summary tables."""

from __future__ import annotations

import configparser
import csv
import dataclasses
import json
from pathlib import Path
from typing import Iterable, Sequence

from platsim.engine import ConfigError, SimulationConfig
from platsim.graph import Architecture
from platsim.metrics import METRICS, ConditionSummary, MessageOutcome

MESSAGE_COLUMNS = ("seed", "platform", "algorithm", "msg_id", "created_step",
                   "k", "beta", "alpha", "reach", "exposure", "reshares", "likes")
_INT_COLUMNS = ("seed", "msg_id", "created_step", "reach", "exposure", "reshares", "likes")
_FLOAT_COLUMNS = ("k", "beta", "alpha")


class SchemaError(ValueError):
    pass


def fmt(x: float) -> str:
    return format(x, ".9g")


def exact(x: float) -> str:
    # shortest string that parses back to the same double
    return repr(float(x))


def write_messages(path, rows: Iterable[tuple[int, str, str, Sequence[MessageOutcome]]], append: bool = False) -> int:
    """Write ``(seed, platform, algorithm, outcomes)`` groups; returns rows written."""
    path = Path(path)
    mode = "a" if append and path.exists() else "w"
    n = 0
    with path.open(mode, newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if mode == "w":
            w.writerow(MESSAGE_COLUMNS)
        for seed, platform, algorithm, outcomes in rows:
            for o in outcomes:
                w.writerow([seed, platform, algorithm, o.msg_id, o.created_step, exact(o.k), exact(o.beta),
                            exact(o.alpha), o.reach, o.exposure, o.reshares, o.likes])
                n += 1
    return n


@dataclasses.dataclass(frozen=True)
class MessageRow:
    seed: int
    platform: str
    algorithm: str
    outcome: MessageOutcome


def read_messages(path) -> list[MessageRow]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in MESSAGE_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s): {', '.join(missing)}")
        out = []
        for lineno, rec in enumerate(reader, 2):
            try:
                ints = {c: int(rec[c]) for c in _INT_COLUMNS}
                floats = {c: float(rec[c]) for c in _FLOAT_COLUMNS}
            except (TypeError, ValueError) as exc:
                bad = next(c for c in _INT_COLUMNS + _FLOAT_COLUMNS if not _parses(rec[c], c))
                raise SchemaError(f"{path}:{lineno}: bad value in column {bad!r}") from exc
            out.append(MessageRow(ints.pop("seed"), rec["platform"], rec["algorithm"],
                                  MessageOutcome(**ints, **floats)))
    return out


def _parses(value, column: str) -> bool:
    try:
        (int if column in _INT_COLUMNS else float)(value)
        return True
    except (TypeError, ValueError):
        return False


# ---------------------------------------------------------------------------
# config files: flat key = value, [defaults] plus optional per-architecture sections

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SimulationConfig)}


def _coerce(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise ConfigError(key, "unknown configuration key")
    typ = str(_FIELD_TYPES[key])
    raw = raw.strip()
    if raw.lower() in ("", "none") and "None" in typ:
        return None
    try:
        if "bool" in typ:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if "dict" in typ:
            return {k.strip(): float(v) for k, v in (kv.split(":") for kv in raw.split(","))}
        if "int" in typ and "float" not in typ:
            return int(raw)
        if "float" in typ:
            return float(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r}") from None
    return raw


def read_config(path, architecture: Architecture | str | None = None) -> dict:
    """Settings from ``path`` for one architecture: ``[defaults]`` overlaid by ``[<architecture>]``."""
    parser = configparser.ConfigParser(default_section="defaults", interpolation=None)
    parser.optionxform = str
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError("config", f"cannot read {path}")
    values = {k: _coerce(k, v) for k, v in parser.defaults().items()}
    if architecture is not None:
        arch = Architecture.parse(architecture).value
        if parser.has_section(arch):
            for k in parser.options(arch):
                values[k] = _coerce(k, parser.get(arch, k))
    return values


# ---------------------------------------------------------------------------
# summary tables


def summary_record(platform: str, algorithm: str, summary: ConditionSummary, **extra) -> dict:
    return {"platform": platform, "algorithm": algorithm, **extra, **summary.to_dict()}


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def _num(x, pct: bool = False) -> str:
    if x is None:
        return "-"
    return f"{100 * x:.1f}%" if pct else f"{x:.4g}"


def breadth_depth_table(rows: Sequence[tuple[str, str, ConditionSummary]]) -> str:
    """Aligned plain-text table: B, M, GM per metric per condition."""
    header = ["platform", "alg"]
    for m in METRICS:
        header += [f"{m}.B", f"{m}.M", f"{m}.GM"]
    header += ["n", "ewq"]
    body = []
    for platform, alg, s in rows:
        line = [platform, alg]
        for m in METRICS:
            ms = s.metric(m)
            line += [_num(ms.breadth, pct=True), _num(ms.depth_arith), _num(ms.depth_geom)]
        line += [str(s.n_messages), _num(s.exposure_weighted_quality)]
        body.append(line)
    return align([header] + body)


def align(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.rjust(w) if j > 1 else c.ljust(w) for j, (c, w) in enumerate(zip(r, widths))).rstrip()
                     for r in rows) + "\n"
