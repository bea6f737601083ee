"""Dataset manifest: labeled video records, line-oriented JSON IO, splitting.

Manifest format: the first line is a header object {"n_c": int, "n_m": int}
(optionally carrying "metadata"), each following line is one record with the
fields of VideoRecord. Record paths are stored relative to the manifest file
unless absolute. Medium id 0 always denotes live capture (no spoof medium).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

from goas.errors import SchemaError, ValidationError

SPLITS = ("train", "test")


@dataclass(frozen=True)
class VideoRecord:
    id: str
    path: str
    sensor_id: int
    medium_id: int
    object_id: int
    background_id: int
    split: str

    @property
    def is_live(self) -> bool:
        return self.medium_id == 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "path": self.path,
                "sensor_id": self.sensor_id,
                "medium_id": self.medium_id,
                "object_id": self.object_id,
                "background_id": self.background_id,
                "split": self.split,
            }
        )


@dataclass
class DatasetManifest:
    records: list[VideoRecord]
    n_c: int
    n_m: int
    metadata: dict[str, str] = field(default_factory=dict)

    def validate(self, check_paths: bool = False) -> None:
        if self.n_c < 1 or self.n_m < 1:
            raise SchemaError(f"sensor/medium counts must be positive, got n_c={self.n_c}, n_m={self.n_m}")
        for rec in self.records:
            if not 0 <= rec.sensor_id < self.n_c:
                raise SchemaError(f"record {rec.id!r}: sensor_id {rec.sensor_id} out of range [0, {self.n_c})")
            if not 0 <= rec.medium_id < self.n_m:
                raise SchemaError(f"record {rec.id!r}: medium_id {rec.medium_id} out of range [0, {self.n_m})")
            if rec.split not in SPLITS:
                raise SchemaError(f"record {rec.id!r}: unknown split {rec.split!r}")
            if check_paths and not Path(rec.path).exists():
                raise SchemaError(f"record {rec.id!r}: path does not exist: {rec.path}")
        if not self.records:
            warnings.warn("manifest contains no records", stacklevel=3)

    def split_records(self, split: str) -> list[VideoRecord]:
        return [r for r in self.records if r.split == split]

    def live_records(self, split: str | None = None) -> list[VideoRecord]:
        return [r for r in self.records if r.is_live and (split is None or r.split == split)]

    def spoof_records(self, split: str | None = None) -> list[VideoRecord]:
        return [r for r in self.records if not r.is_live and (split is None or r.split == split)]

    def spoof_combos(self, split: str | None = None) -> set[tuple[int, int]]:
        return {(r.sensor_id, r.medium_id) for r in self.spoof_records(split)}


_RECORD_FIELDS = {"id", "path", "sensor_id", "medium_id", "object_id", "background_id", "split"}


def load_manifest(path: str | Path, check_paths: bool = True) -> DatasetManifest:
    """Parse a manifest file and validate its invariants."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"manifest file not found: {path}")
    base = path.parent
    with open(path) as fh:
        lines = [ln for ln in (l.strip() for l in fh) if ln]
    if not lines:
        raise SchemaError(f"manifest {path} is empty (missing header line)")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest header is not valid JSON: {exc}") from exc
    if "n_c" not in header or "n_m" not in header:
        raise SchemaError("manifest header must define n_c and n_m")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"line {lineno}: invalid JSON: {exc}") from exc
        missing = _RECORD_FIELDS - raw.keys()
        if missing:
            raise SchemaError(f"line {lineno}: record {raw.get('id', '?')!r} missing fields {sorted(missing)}")
        rec_path = Path(raw["path"])
        if not rec_path.is_absolute():
            rec_path = base / rec_path
        records.append(
            VideoRecord(
                id=str(raw["id"]),
                path=str(rec_path),
                sensor_id=int(raw["sensor_id"]),
                medium_id=int(raw["medium_id"]),
                object_id=int(raw["object_id"]),
                background_id=int(raw["background_id"]),
                split=str(raw["split"]),
            )
        )
    manifest = DatasetManifest(
        records=records,
        n_c=int(header["n_c"]),
        n_m=int(header["n_m"]),
        metadata=dict(header.get("metadata", {})),
    )
    manifest.validate(check_paths=check_paths)
    return manifest


def save_manifest(manifest: DatasetManifest, path: str | Path, relative_to: str | Path | None = None) -> None:
    """Write header + one record per line. Paths under relative_to are
    stored relative (keeps synthetic datasets relocatable)."""
    path = Path(path)
    header: dict = {"n_c": manifest.n_c, "n_m": manifest.n_m}
    if manifest.metadata:
        header["metadata"] = manifest.metadata
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in manifest.records:
            out = rec
            if relative_to is not None:
                try:
                    out = replace(rec, path=str(Path(rec.path).relative_to(relative_to)))
                except ValueError:
                    pass
            fh.write(out.to_json() + "\n")


def split_by_rule(manifest: DatasetManifest, train_objects: set[int], train_backgrounds: set[int]) -> DatasetManifest:
    """Reassign splits: records with object AND background in the train sets
    become train; records with both outside become test; mixed records are
    excluded (and reported via a warning)."""
    if not train_objects or not train_backgrounds:
        raise ValidationError("train object/background sets must be non-empty")
    kept, excluded = [], []
    for rec in manifest.records:
        obj_in = rec.object_id in train_objects
        bg_in = rec.background_id in train_backgrounds
        if obj_in and bg_in:
            kept.append(replace(rec, split="train"))
        elif not obj_in and not bg_in:
            kept.append(replace(rec, split="test"))
        else:
            excluded.append(rec.id)
    if excluded:
        warnings.warn(f"split rule excluded {len(excluded)} mixed-membership records: {excluded}", stacklevel=2)
    out = DatasetManifest(records=kept, n_c=manifest.n_c, n_m=manifest.n_m, metadata=dict(manifest.metadata))
    if excluded:
        out.metadata["excluded_record_ids"] = ",".join(excluded)
    if not out.split_records("train"):
        raise ValidationError("split rule produced an empty train split")
    if not out.split_records("test"):
        raise ValidationError("split rule produced an empty test split")
    return out
