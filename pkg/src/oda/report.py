"""Per-temperature-level training traces."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields

FORMAT_VERSION = 1


@dataclass
class LevelRecord:
    temperature: float
    k_effective: int
    samples_seen_cumulative: int
    avg_distortion: float | None = None
    accuracy: float | None = None
    f1_macro: float | None = None
    wall_time_ms: float = 0.0
    forced_advance: bool = False
    observations: int = 0


@dataclass
class RunReport:
    """Metrics trace of one training run, one record per temperature level.

    ``wall_time_ms`` is machine dependent, so it is left out of the
    serialized forms unless ``include_timing`` is set; everything else is a
    deterministic function of the configuration and seed.
    """

    levels: list[LevelRecord] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    rng_seed: int | None = None
    algorithm: str = "oda"

    def append(self, record: LevelRecord) -> None:
        self.levels.append(record)

    def __len__(self):
        return len(self.levels)

    @property
    def k_trace(self) -> list[int]:
        return [r.k_effective for r in self.levels]

    @property
    def temperature_trace(self) -> list[float]:
        return [r.temperature for r in self.levels]

    def _level_dict(self, record, include_timing):
        d = asdict(record)
        if not include_timing:
            d.pop("wall_time_ms")
        return d

    def to_dict(self, include_timing=False) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "algorithm": self.algorithm,
            "rng_seed": self.rng_seed,
            "config": self.config,
            "summary": self.summary,
            "levels": [self._level_dict(r, include_timing) for r in self.levels],
        }

    @classmethod
    def from_dict(cls, data) -> "RunReport":
        names = {f.name for f in fields(LevelRecord)}
        levels = [LevelRecord(**{k: v for k, v in r.items() if k in names})
                  for r in data.get("levels", [])]
        return cls(levels=levels, summary=data.get("summary", {}),
                   config=data.get("config", {}), rng_seed=data.get("rng_seed"),
                   algorithm=data.get("algorithm", "oda"))

    def to_jsonl(self, include_timing=False) -> str:
        """Header line (run metadata) followed by one line per level."""
        head = self.to_dict(include_timing)
        levels = head.pop("levels")
        head["record"] = "run"
        lines = [json.dumps(head, sort_keys=True)]
        for lv in levels:
            lv["record"] = "level"
            lines.append(json.dumps(lv, sort_keys=True))
        return "\n".join(lines) + "\n"

    def to_csv(self, include_timing=False) -> str:
        cols = [f.name for f in fields(LevelRecord)
                if include_timing or f.name != "wall_time_ms"]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for r in self.levels:
            writer.writerow(["" if getattr(r, c) is None else getattr(r, c)
                             for c in cols])
        return buf.getvalue()
