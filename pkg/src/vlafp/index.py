"""Exact inner-product fingerprint index with binary persistence.

Brute-force blocked dot products only; results are bit-reproducible and
identical to a linear scan by contract.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

INDEX_MAGIC = b"VLIX"
INDEX_VERSION = 1
UNIT_NORM_TOL = 1e-4
HEADER_BYTES = 4 + 4 + 4 + 8
ENTRY_FIXED_BYTES = 8 + 4 + 4 + 4  # audio_id u64, segment_ord u32, start f32, dur f32


@dataclass(frozen=True)
class IndexEntry:
    vector: np.ndarray  # float32, unit L2
    audio_id: int
    segment_ord: int
    start_time: float
    duration: float


class FingerprintIndex:
    """Append-only store of unit vectors with provenance and exact top-k search."""

    def __init__(self, dim: int, metadata: str = ""):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.metadata = metadata
        self._vectors: list[np.ndarray] = []
        self._audio_ids: list[int] = []
        self._segment_ords: list[int] = []
        self._starts: list[float] = []
        self._durations: list[float] = []
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._vectors)

    def insert(self, entry: IndexEntry) -> None:
        vec = np.asarray(entry.vector, dtype=np.float32)
        if vec.shape != (self.dim,):
            raise ValueError(f"vector dim {vec.shape} != index dim ({self.dim},)")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"vector norm {norm:.6f} not unit within {UNIT_NORM_TOL}")
        self._vectors.append(vec)
        self._audio_ids.append(int(entry.audio_id))
        self._segment_ords.append(int(entry.segment_ord))
        self._starts.append(float(entry.start_time))
        self._durations.append(float(entry.duration))
        self._matrix = None

    @classmethod
    def build(cls, entries: list[IndexEntry], metadata: str = "") -> "FingerprintIndex":
        if not entries:
            raise ValueError("cannot build an index from zero entries")
        index = cls(int(np.asarray(entries[0].vector).shape[0]), metadata)
        for e in entries:
            index.insert(e)
        return index

    def entry(self, i: int) -> IndexEntry:
        return IndexEntry(
            self._vectors[i],
            self._audio_ids[i],
            self._segment_ords[i],
            self._starts[i],
            self._durations[i],
        )

    def _stacked(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.vstack(self._vectors) if self._vectors else np.zeros((0, self.dim), np.float32)
        return self._matrix

    def search_top_k(self, query: np.ndarray, k: int) -> list[tuple[IndexEntry, float]]:
        """Exact top-k by inner product, scores descending.

        Ties break toward the lower (audio_id, segment_ord).
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        q = np.asarray(query, dtype=np.float32)
        if q.shape != (self.dim,):
            raise ValueError(f"query dim {q.shape} != index dim ({self.dim},)")
        if not self._vectors:
            return []
        scores = self._stacked() @ q
        order = np.lexsort((self._segment_ords, self._audio_ids, -scores))
        top = order[: min(k, len(order))]
        return [(self.entry(int(i)), float(scores[i])) for i in top]

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            fh.write(INDEX_MAGIC)
            fh.write(struct.pack("<IIQ", INDEX_VERSION, self.dim, len(self)))
            for i in range(len(self)):
                fh.write(
                    struct.pack(
                        "<QIff",
                        self._audio_ids[i],
                        self._segment_ords[i],
                        self._starts[i],
                        self._durations[i],
                    )
                )
                fh.write(self._vectors[i].astype("<f4").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "FingerprintIndex":
        with open(path, "rb") as fh:
            if fh.read(4) != INDEX_MAGIC:
                raise ValueError(f"{path}: bad index magic")
            version, dim, count = struct.unpack("<IIQ", fh.read(16))
            if version != INDEX_VERSION:
                raise ValueError(f"{path}: unsupported index version {version}")
            index = cls(dim)
            for _ in range(count):
                audio_id, seg_ord, start, dur = struct.unpack("<QIff", fh.read(ENTRY_FIXED_BYTES))
                vec = np.frombuffer(fh.read(4 * dim), dtype="<f4")
                index._vectors.append(vec.copy())
                index._audio_ids.append(audio_id)
                index._segment_ords.append(seg_ord)
                index._starts.append(start)
                index._durations.append(dur)
        return index


def expected_file_size(n_entries: int, dim: int) -> int:
    """Exact on-disk size: header + N * (fixed metadata + 4*dim)."""
    return HEADER_BYTES + n_entries * (ENTRY_FIXED_BYTES + 4 * dim)
