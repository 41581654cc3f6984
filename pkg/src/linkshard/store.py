"""On-disk document store with random access by document id.

Layout (one directory per store):

    records.jsonl   canonical JSON-lines, one document per line
    index.tsv       one line per record: "<doc_id>\\t<byte_offset>\\t<byte_length>"
    meta.json       {"version", "docs", "fingerprint", "stats"}

``meta.json`` is written last and marks the store as complete; a reader
refuses to open a directory without it. The store is single-writer /
many-reader: ``write_store`` builds a fresh directory, readers never
mutate it.
"""

from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path
from typing import Iterable, Iterator

from .documents import CorpusStats, Document, document_from_json, document_to_json

STORE_VERSION = 1
RECORDS_NAME = "records.jsonl"
INDEX_NAME = "index.tsv"
META_NAME = "meta.json"


class StoreError(Exception):
    pass


class StoreIntegrityError(StoreError):
    """A store file is missing, truncated, or inconsistent with its index."""


class DocumentNotFoundError(StoreError, KeyError):
    def __init__(self, doc_id: int):
        super().__init__(f"document {doc_id} not in store")
        self.doc_id = doc_id


def write_store(
    docs: Iterable[Document],
    path: str | Path,
    stats: CorpusStats | None = None,
    overwrite: bool = False,
) -> "DocumentStore":
    """Write documents to a new store directory and return it opened.

    Refuses to overwrite an existing store unless asked; the directory is
    populated records-first so a crash never leaves a readable-but-partial
    store behind (meta.json is the completeness marker).
    """
    path = Path(path)
    if path.exists():
        if not overwrite:
            if (path / META_NAME).exists() or any(path.iterdir()):
                raise StoreError(f"refusing to overwrite existing store at {path}")
        else:
            for name in (RECORDS_NAME, INDEX_NAME, META_NAME):
                target = path / name
                if target.exists():
                    target.unlink()
    path.mkdir(parents=True, exist_ok=True)

    digest = hashlib.sha256()
    index: list[tuple[int, int, int]] = []
    offset = 0
    count = 0
    with open(path / RECORDS_NAME, "wb") as records:
        for doc in docs:
            doc.validate()
            line = (document_to_json(doc) + "\n").encode("utf-8")
            records.write(line)
            digest.update(line)
            index.append((doc.id, offset, len(line)))
            offset += len(line)
            count += 1
    seen = {entry[0] for entry in index}
    if len(seen) != count:
        raise StoreError("duplicate document ids passed to write_store")
    with open(path / INDEX_NAME, "w", encoding="utf-8", newline="\n") as handle:
        for doc_id, start, length in index:
            handle.write(f"{doc_id}\t{start}\t{length}\n")
    meta = {
        "version": STORE_VERSION,
        "docs": count,
        "fingerprint": f"sha256:{digest.hexdigest()}",
        "stats": stats.as_dict() if stats is not None else None,
    }
    with open(path / META_NAME, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return DocumentStore.open(path)


class DocumentStore:
    """Read-only view of a store directory; safe to share across readers."""

    def __init__(self, path: Path, meta: dict, index: dict[int, tuple[int, int]]):
        self.path = path
        self.meta = meta
        self._index = index
        self._records = open(path / RECORDS_NAME, "rb")
        self._lock = threading.Lock()  # seek+read on the shared handle

    @classmethod
    def open(cls, path: str | Path) -> "DocumentStore":
        path = Path(path)
        meta_path = path / META_NAME
        if not meta_path.exists():
            raise StoreIntegrityError(f"{path} is not a complete store (missing {META_NAME})")
        with open(meta_path, "r", encoding="utf-8") as handle:
            meta = json.load(handle)
        if meta.get("version") != STORE_VERSION:
            raise StoreIntegrityError(f"unsupported store version {meta.get('version')!r}")
        index: dict[int, tuple[int, int]] = {}
        with open(path / INDEX_NAME, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    doc_id, start, length = (int(part) for part in line.split("\t"))
                except ValueError as exc:
                    raise StoreIntegrityError(f"bad index line {lineno}: {line!r}") from exc
                index[doc_id] = (start, length)
        if len(index) != meta.get("docs"):
            raise StoreIntegrityError(
                f"index lists {len(index)} documents but meta says {meta.get('docs')}"
            )
        return cls(path, meta, index)

    def close(self) -> None:
        self._records.close()

    def __enter__(self) -> "DocumentStore":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, doc_id: int) -> bool:
        return doc_id in self._index

    def ids(self) -> list[int]:
        return sorted(self._index)

    @property
    def fingerprint(self) -> str:
        return self.meta["fingerprint"]

    @property
    def stats(self) -> dict | None:
        return self.meta.get("stats")

    def get(self, doc_id: int) -> Document:
        """Random access by id: one seek + one read, no scan."""
        try:
            start, length = self._index[doc_id]
        except KeyError:
            raise DocumentNotFoundError(doc_id) from None
        with self._lock:
            self._records.seek(start)
            blob = self._records.read(length)
        if len(blob) != length:
            raise StoreIntegrityError(f"record {doc_id}: truncated read at offset {start}")
        try:
            doc = document_from_json(blob.decode("utf-8"))
        except ValueError as exc:
            raise StoreIntegrityError(f"record {doc_id}: {exc}") from exc
        if doc.id != doc_id:
            raise StoreIntegrityError(f"record {doc_id}: payload carries id {doc.id}")
        return doc

    def __iter__(self) -> Iterator[Document]:
        """Scan all documents in records-file order (independent handle, so
        interleaved ``get`` calls stay safe)."""
        by_offset = {start: (doc_id, length) for doc_id, (start, length) in self._index.items()}
        position = 0
        with open(self.path / RECORDS_NAME, "rb") as records:
            for line in records:
                entry = by_offset.get(position)
                position += len(line)
                if entry is None:
                    raise StoreIntegrityError(f"record at offset {position - len(line)} not in index")
                doc_id, length = entry
                if len(line) != length:
                    raise StoreIntegrityError(f"record {doc_id}: length mismatch")
                doc = document_from_json(line.decode("utf-8"))
                if doc.id != doc_id:
                    raise StoreIntegrityError(f"record {doc_id}: payload carries id {doc.id}")
                yield doc

    def verify(self) -> int:
        """Full integrity scan; returns the number of records checked.

        Checks the records/index correspondence, the recorded fingerprint,
        and every document's structural invariants (including that each
        anchor surface equals its span's text slice).
        """
        digest = hashlib.sha256()
        with self._lock:
            self._records.seek(0)
            digest.update(self._records.read())
        actual = f"sha256:{digest.hexdigest()}"
        if actual != self.fingerprint:
            raise StoreIntegrityError(
                f"fingerprint mismatch: meta says {self.fingerprint}, records hash to {actual}"
            )
        count = 0
        for doc in self:
            doc.validate()
            count += 1
        return count
