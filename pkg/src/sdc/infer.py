"""Online detection: apply a selected ruleset to unseen columns.

Constraints sharing a pre-condition (same function, inner radius and
matching fraction) are grouped so each pre-condition is evaluated once
per column; members of a holding group then flag values beyond their
own outer radii. Flags are unioned across constraints and every
flagged cell reports the highest confidence among its flaggers. The
grouped evaluation returns exactly what a naive per-constraint loop
would.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .candidates import Sdc
from .corpus import Column, Corpus
from .domain_fns import DistanceCache, Registry
from .errors import DataFormatError

PrecondKey = tuple[str, float, float]  # (fn_id, d_in, m)


@dataclass
class EvalCounter:
    """Counts pre-condition evaluations (used to verify the dedup
    optimization does strictly less work, never different work)."""

    preconditions: int = 0


@dataclass(frozen=True)
class Detection:
    column_id: str
    value_index: int
    value: str
    confidence: float
    sdc_id: str
    explanation: str

    def to_record(self) -> dict:
        return {
            "column_id": self.column_id,
            "value_index": self.value_index,
            "value": self.value,
            "confidence": self.confidence,
            "sdc_id": self.sdc_id,
            "explanation": self.explanation,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Detection":
        return cls(
            column_id=rec["column_id"],
            value_index=int(rec["value_index"]),
            value=rec["value"],
            confidence=float(rec["confidence"]),
            sdc_id=rec["sdc_id"],
            explanation=rec.get("explanation", ""),
        )


@dataclass
class CompiledRuleset:
    sdcs: list[Sdc]
    precondition_groups: dict[PrecondKey, list[int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.sdcs)


def compile_ruleset(sdcs: Iterable[Sdc]) -> CompiledRuleset:
    """Group constraints by exact (fn_id, d_in, m); the groups partition
    the ruleset."""
    ruleset = CompiledRuleset(sdcs=list(sdcs))
    for i, s in enumerate(ruleset.sdcs):
        key = (s.fn_id, s.d_in, s.m)
        ruleset.precondition_groups.setdefault(key, []).append(i)
    return ruleset


def _explanation(sdc: Sdc, fn_desc: str, value: str, dist: float) -> str:
    dist_txt = "inf" if dist == float("inf") else f"{dist:.6g}"
    return (
        f"{sdc.m * 100:g}% of column values are within {sdc.d_in:g} of {fn_desc}; "
        f"{value!r} is at distance {dist_txt} > {sdc.d_out:g}"
    )


def _finalize(
    column: Column,
    flaggers: dict[int, list[tuple[float, str, float, str]]],
    min_confidence: float,
) -> list[Detection]:
    out: list[Detection] = []
    for idx, hits in flaggers.items():
        # Highest confidence wins; ties break on constraint id so the
        # report is deterministic.
        conf, sdc_id, dist, expl = max(hits, key=lambda h: (h[0], h[1]))
        if conf < min_confidence:
            continue
        out.append(
            Detection(
                column_id=column.id,
                value_index=idx,
                value=column.values[idx],
                confidence=conf,
                sdc_id=sdc_id,
                explanation=expl,
            )
        )
    out.sort(key=lambda d: (-d.confidence, d.value_index))
    return out


def detect_errors(
    ruleset: CompiledRuleset,
    column: Column,
    registry: Registry,
    min_confidence: float = 0.0,
    cache: Optional[DistanceCache] = None,
    counter: Optional[EvalCounter] = None,
) -> list[Detection]:
    """Apply the ruleset to one column: each pre-condition group is
    evaluated once; flagged (index, value) pairs are unioned; each flag
    carries the max confidence among its flaggers. Sorted by descending
    confidence, then index."""
    cache = cache or DistanceCache()
    n = len(column)
    flaggers: dict[int, list[tuple[float, str, float, str]]] = {}
    for (fn_id, d_in, m), members in ruleset.precondition_groups.items():
        fn = registry.get(fn_id)
        dists = cache.distances(fn, column)
        if counter is not None:
            counter.preconditions += 1
        inside = int(np.count_nonzero(dists <= d_in))
        if inside < m * n:
            continue
        for i in members:
            sdc = ruleset.sdcs[i]
            conf = sdc.confidence if sdc.confidence is not None else 0.0
            for idx in np.nonzero(dists > sdc.d_out)[0]:
                idx = int(idx)
                hits = flaggers.setdefault(idx, [])
                hits.append(
                    (
                        conf,
                        sdc.id,
                        float(dists[idx]),
                        _explanation(sdc, fn.describe(), column.values[idx], float(dists[idx])),
                    )
                )
    return _finalize(column, flaggers, min_confidence)


def detect_errors_naive(
    sdcs: Sequence[Sdc],
    column: Column,
    registry: Registry,
    min_confidence: float = 0.0,
    cache: Optional[DistanceCache] = None,
    counter: Optional[EvalCounter] = None,
) -> list[Detection]:
    """Reference implementation: evaluate every constraint separately.
    Used to verify the grouped evaluation changes nothing."""
    cache = cache or DistanceCache()
    n = len(column)
    flaggers: dict[int, list[tuple[float, str, float, str]]] = {}
    for sdc in sdcs:
        fn = registry.get(sdc.fn_id)
        dists = cache.distances(fn, column)
        if counter is not None:
            counter.preconditions += 1
        inside = int(np.count_nonzero(dists <= sdc.d_in))
        if inside < sdc.m * n:
            continue
        conf = sdc.confidence if sdc.confidence is not None else 0.0
        for idx in np.nonzero(dists > sdc.d_out)[0]:
            idx = int(idx)
            flaggers.setdefault(idx, []).append(
                (
                    conf,
                    sdc.id,
                    float(dists[idx]),
                    _explanation(sdc, fn.describe(), column.values[idx], float(dists[idx])),
                )
            )
    return _finalize(column, flaggers, min_confidence)


def detect_corpus(
    ruleset: CompiledRuleset,
    corpus: Corpus,
    registry: Registry,
    min_confidence: float = 0.0,
    cache: Optional[DistanceCache] = None,
    workers: int = 1,
) -> list[Detection]:
    """Per-column detection concatenated in corpus order. Columns are
    independent, so the worker count cannot change the report."""
    cache = cache or DistanceCache()
    out: list[Detection] = []
    if workers > 1 and len(corpus) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda col: detect_errors(
                        ruleset, col, registry, min_confidence, cache
                    ),
                    corpus,
                )
            )
        for part in parts:
            out.extend(part)
    else:
        for column in corpus:
            out.extend(detect_errors(ruleset, column, registry, min_confidence, cache))
    return out


def save_report(report: Sequence[Detection], path: str, meta: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({"kind": "report-meta", **meta}, sort_keys=True) + "\n")
        for det in report:
            fh.write(json.dumps(det.to_record(), ensure_ascii=False) + "\n")


def load_report(path: str) -> list[Detection]:
    out: list[Detection] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path} line {lineno}: invalid JSON") from exc
            if isinstance(rec, dict) and rec.get("kind") == "report-meta":
                continue
            try:
                out.append(Detection.from_record(rec))
            except (KeyError, TypeError, ValueError) as exc:
                raise DataFormatError(f"{path} line {lineno}: bad record ({exc})") from exc
    return out
