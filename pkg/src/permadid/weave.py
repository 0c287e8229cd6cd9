"""Simulated blockweave: permanent, content-addressed transaction storage.

Every block links to its predecessor and to one older "recall" block whose
index is derived from the previous block id, so replaying the chain from
genesis checks both linkage and the recall rule.

Ids are base64url(SHA-256(...)) and always 43 characters. A transaction id
covers the canonical serialization of (owner, tags, data):

    u32 len(owner) || owner || u32 tag count
    || (u32 len(name) || name || u32 len(value) || value)*
    || u64 len(data) || data

Snapshot file layout (append-only, one record per block in height order):

    b"PWEAVE1\\n"
    ( u32 len(record) || record )*

    record = block body || u32 len(block_id) || block_id
             || (u64 len(tx) || tx canonical serialization)* for each tx
    body   = u64 height || lp(prev_id) || lp(recall_id) || u32 tx count
             || (lp(tx_id) || u64 submitted_at)*

where lp(x) is a u32 length prefix followed by ASCII x (empty for none).
"""

from __future__ import annotations

import hashlib
import os
import struct
import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

from .encoding import content_id, is_id
from .errors import (
    CorruptSnapshot,
    EmptyBundle,
    MalformedTag,
    NothingToMine,
    NotFound,
    OversizeData,
)

DEFAULT_MAX_DATA = 10 * 1024 * 1024
MAX_TAG_NAME = 64
MAX_TAG_VALUE = 1024
# recorded on each transaction, never charged
FEE_PER_BYTE = 1

SNAPSHOT_MAGIC = b"PWEAVE1\n"
BUNDLE_TAGS = (("Bundle-Format", "binary"), ("Bundle-Version", "1.0.0"))


@dataclass(frozen=True)
class Tag:
    name: str
    value: str

    def __post_init__(self):
        if not isinstance(self.name, str) or not isinstance(self.value, str):
            raise MalformedTag("tag name and value must be strings")
        if not self.name:
            raise MalformedTag("tag name must be non-empty")
        if len(self.name.encode("utf-8")) > MAX_TAG_NAME:
            raise MalformedTag(f"tag name longer than {MAX_TAG_NAME} bytes")
        if len(self.value.encode("utf-8")) > MAX_TAG_VALUE:
            raise MalformedTag(f"tag value longer than {MAX_TAG_VALUE} bytes")


def as_tags(tags: Iterable) -> tuple[Tag, ...]:
    out = []
    for t in tags:
        if isinstance(t, Tag):
            out.append(t)
        else:
            try:
                name, value = t
            except (TypeError, ValueError):
                raise MalformedTag(f"tag must be a (name, value) pair, got {t!r}") from None
            out.append(Tag(name, value))
    return tuple(out)


def _lp32(b: bytes) -> bytes:
    return struct.pack(">I", len(b)) + b


def serialize_item(owner: str, tags: Sequence[Tag], data: bytes) -> bytes:
    out = bytearray(_lp32(owner.encode("ascii")))
    out += struct.pack(">I", len(tags))
    for t in tags:
        out += _lp32(t.name.encode("utf-8")) + _lp32(t.value.encode("utf-8"))
    out += struct.pack(">Q", len(data)) + data
    return bytes(out)


def item_id(owner: str, tags: Sequence[Tag], data: bytes) -> str:
    return content_id(serialize_item(owner, tags, data))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.buf):
            raise CorruptSnapshot("truncated record")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def lp32(self) -> bytes:
        return self.take(self.u32())

    def done(self) -> bool:
        return self.pos == len(self.buf)


def parse_item(raw: bytes) -> tuple[str, tuple[Tag, ...], bytes]:
    """Inverse of serialize_item; raises ValueError on malformed input."""
    r = _Reader(raw)
    try:
        owner = r.lp32().decode("ascii")
        tags = []
        for _ in range(r.u32()):
            name = r.lp32().decode("utf-8")
            value = r.lp32().decode("utf-8")
            tags.append(Tag(name, value))
        data = r.take(r.u64())
    except (CorruptSnapshot, UnicodeDecodeError, MalformedTag) as exc:
        raise ValueError(f"malformed item: {exc}") from None
    if not r.done():
        raise ValueError("trailing bytes after item")
    return owner, tuple(tags), bytes(data)


@dataclass(frozen=True)
class Transaction:
    id: str
    owner: str
    tags: tuple[Tag, ...]
    data: bytes
    submitted_at: int

    @property
    def fee(self) -> int:
        return FEE_PER_BYTE * len(serialize_item(self.owner, self.tags, self.data))

    def tag(self, name: str) -> str | None:
        for t in self.tags:
            if t.name == name:
                return t.value
        return None

    def has_tags(self, wanted: Iterable[Tag]) -> bool:
        return all(w in self.tags for w in wanted)

    def to_json(self) -> dict:
        from .encoding import b64url

        return {
            "id": self.id,
            "owner": self.owner,
            "tags": [{"name": t.name, "value": t.value} for t in self.tags],
            "data": b64url(self.data),
            "data_size": len(self.data),
            "submitted_at": self.submitted_at,
            "fee": self.fee,
        }


@dataclass(frozen=True)
class Block:
    height: int
    prev_id: str | None
    recall_id: str | None
    tx_ids: tuple[str, ...]
    submitted_at: tuple[int, ...]
    block_id: str

    def body(self) -> bytes:
        return block_body(self.height, self.prev_id, self.recall_id, self.tx_ids, self.submitted_at)

    def to_json(self) -> dict:
        return {
            "height": self.height,
            "block_id": self.block_id,
            "prev_id": self.prev_id,
            "recall_id": self.recall_id,
            "tx_ids": list(self.tx_ids),
        }


def block_body(height, prev_id, recall_id, tx_ids, submitted_at) -> bytes:
    out = bytearray(struct.pack(">Q", height))
    out += _lp32((prev_id or "").encode("ascii"))
    out += _lp32((recall_id or "").encode("ascii"))
    out += struct.pack(">I", len(tx_ids))
    for tid, ts in zip(tx_ids, submitted_at):
        out += _lp32(tid.encode("ascii")) + struct.pack(">Q", ts)
    return bytes(out)


def recall_index(prev_id: str, height: int) -> int:
    """Index (0..height-1) of the recall block for a block at ``height`` >= 2."""
    h = hashlib.sha256(prev_id.encode("ascii")).digest()
    return int.from_bytes(h, "big") % height


@dataclass(frozen=True)
class Violation:
    height: int
    reason: str


@dataclass
class WeaveStats:
    height: int
    blocks: int
    sealed_transactions: int
    pending_transactions: int
    data_bytes: int
    bundled_items: int = 0

    def to_json(self) -> dict:
        return dict(self.__dict__)


class Weave:
    """In-memory weave, optionally persisted to an append-only snapshot file.

    All mutations go through one lock; reads see append-only structures.
    """

    def __init__(
        self,
        path: str | os.PathLike | None = None,
        *,
        max_data: int = DEFAULT_MAX_DATA,
        allow_empty_blocks: bool = False,
    ):
        self.max_data = max_data
        self.allow_empty_blocks = allow_empty_blocks
        self.path = os.fspath(path) if path is not None else None
        self._reset()
        if self.path and os.path.exists(self.path) and os.path.getsize(self.path) > 0:
            with open(self.path, "rb") as fh:
                self._load(fh.read())
        else:
            self._seal_block([])

    def _reset(self) -> None:
        self._lock = threading.RLock()
        self._blocks: list[Block] = []
        self._txs: dict[str, Transaction] = {}
        self._location: dict[str, tuple[int, int]] = {}
        self._pending: dict[str, Transaction] = {}
        self._items: dict[str, tuple[str, int]] = {}
        self._order: list[str] = []
        self._tag_index: dict[Tag, list[str]] = {}
        self._item_tags: dict[str, tuple[Tag, ...]] = {}
        self._clock = 0

    # ---- writes

    def submit(self, owner: str, tags: Iterable = (), data: bytes = b"") -> str:
        if not is_id(owner):
            raise MalformedTag("owner must be a 43-character base64url address")
        tags = as_tags(tags)
        data = bytes(data)
        if len(data) > self.max_data:
            raise OversizeData(f"{len(data)} bytes exceeds limit {self.max_data}")
        tid = item_id(owner, tags, data)
        with self._lock:
            if tid in self._txs or tid in self._pending:
                return tid
            self._clock += 1
            self._pending[tid] = Transaction(tid, owner, tags, data, self._clock)
            return tid

    def bundle_submit(self, owner: str, items: Sequence) -> tuple[str, list[str]]:
        if not items:
            raise EmptyBundle("a bundle needs at least one item")
        blobs, ids = [], []
        for tags, data in items:
            tags = as_tags(tags)
            raw = serialize_item(owner, tags, bytes(data))
            blobs.append(raw)
            ids.append(content_id(raw))
        payload = struct.pack(">I", len(blobs)) + b"".join(struct.pack(">Q", len(b)) + b for b in blobs)
        if len(payload) > self.max_data:
            raise OversizeData(f"bundle of {len(payload)} bytes exceeds limit {self.max_data}")
        return self.submit(owner, BUNDLE_TAGS, payload), ids

    def mine_block(self) -> Block:
        with self._lock:
            if not self._pending and not self.allow_empty_blocks:
                raise NothingToMine("no pending transactions")
            pending = list(self._pending.values())
            block = self._seal_block(pending)
            self._pending.clear()
            return block

    def _seal_block(self, txs: list[Transaction]) -> Block:
        height = len(self._blocks)
        prev = self._blocks[-1].block_id if self._blocks else None
        recall = self._blocks[recall_index(prev, height)].block_id if height >= 2 else None
        tx_ids = tuple(t.id for t in txs)
        stamps = tuple(t.submitted_at for t in txs)
        body = block_body(height, prev, recall, tx_ids, stamps)
        block = Block(height, prev, recall, tx_ids, stamps, content_id(body))
        self._index_block(block, txs)
        if self.path:
            with open(self.path, "ab") as fh:
                if height == 0:
                    fh.write(SNAPSHOT_MAGIC)
                fh.write(self._record(block))
        return block

    def _index_entry(self, entry_id: str, tags: tuple[Tag, ...]) -> None:
        self._order.append(entry_id)
        self._item_tags[entry_id] = tags
        for t in set(tags):
            self._tag_index.setdefault(t, []).append(entry_id)

    def _index_block(self, block: Block, txs: list[Transaction]) -> None:
        for i, tx in enumerate(txs):
            self._txs[tx.id] = tx
            self._location[tx.id] = (block.height, i)
            self._index_entry(tx.id, tx.tags)
            if tx.tags == _BUNDLE_TAGS:
                try:
                    items = unbundle(tx)
                except ValueError:
                    continue
                for j, (o, t, d) in enumerate(items):
                    iid = item_id(o, t, d)
                    if iid in self._items or iid in self._txs:
                        continue
                    self._items[iid] = (tx.id, j)
                    self._index_entry(iid, t)
        self._blocks.append(block)

    # ---- reads

    def get(self, tx_id: str) -> Transaction:
        tx = self._txs.get(tx_id)
        if tx is not None:
            return tx
        with self._lock:
            tx = self._pending.get(tx_id)
        if tx is not None:
            return tx
        loc = self._items.get(tx_id)
        if loc is not None:
            parent = self._txs[loc[0]]
            owner, tags, data = unbundle(parent)[loc[1]]
            return Transaction(tx_id, owner, tags, data, parent.submitted_at)
        raise NotFound(f"no transaction {tx_id!r}")

    def is_sealed(self, tx_id: str) -> bool:
        return tx_id in self._txs or tx_id in self._items

    def location(self, tx_id: str) -> tuple[int, int]:
        """(block height, intra-block index) of a sealed transaction."""
        if tx_id in self._location:
            return self._location[tx_id]
        if tx_id in self._items:
            return self._location[self._items[tx_id][0]]
        raise NotFound(f"{tx_id!r} is not sealed")

    def query(self, filter: Iterable = (), *, include_bundled: bool = True) -> list[str]:
        """Ids of sealed transactions carrying every tag in ``filter``, in seal order.

        Items packed in bundles are listed right after their bundle.
        """
        wanted = as_tags(filter)
        with self._lock:
            candidates = list(self._tag_index.get(wanted[0], ())) if wanted else list(self._order)
        out = []
        for eid in candidates:
            if not include_bundled and eid in self._items:
                continue
            tags = self._item_tags[eid]
            if all(w in tags for w in wanted):
                out.append(eid)
        return out

    @property
    def blocks(self) -> tuple[Block, ...]:
        return tuple(self._blocks)

    @property
    def height(self) -> int:
        return len(self._blocks) - 1

    def pending(self) -> list[str]:
        with self._lock:
            return list(self._pending)

    def __len__(self) -> int:
        return len(self._txs) + len(self._pending)

    def stats(self) -> WeaveStats:
        with self._lock:
            return WeaveStats(
                height=self.height,
                blocks=len(self._blocks),
                sealed_transactions=len(self._txs),
                pending_transactions=len(self._pending),
                data_bytes=sum(len(t.data) for t in self._txs.values()),
                bundled_items=len(self._items),
            )

    # ---- integrity

    def violations(self) -> list[Violation]:
        """Replay from genesis and list every broken invariant."""
        out: list[Violation] = []
        blocks = list(self._blocks)
        for h, b in enumerate(blocks):
            if b.height != h:
                out.append(Violation(h, f"stored height {b.height}"))
            if content_id(b.body()) != b.block_id:
                out.append(Violation(h, "block_id does not match block body"))
            expected_prev = blocks[h - 1].block_id if h else None
            if b.prev_id != expected_prev:
                out.append(Violation(h, "prev_id does not link to previous block"))
            if h >= 2:
                expected_recall = blocks[recall_index(blocks[h - 1].block_id, h)].block_id
            else:
                expected_recall = None
            if b.recall_id != expected_recall:
                out.append(Violation(h, "recall_id violates recall rule"))
            for tid in b.tx_ids:
                tx = self._txs.get(tid)
                if tx is None or item_id(tx.owner, tx.tags, tx.data) != tid:
                    out.append(Violation(h, f"transaction {tid} does not match its id"))
        return out

    def verify_weave(self) -> bool:
        return not self.violations()

    # ---- persistence

    def _record(self, block: Block) -> bytes:
        rec = bytearray(block.body())
        rec += _lp32(block.block_id.encode("ascii"))
        for tid in block.tx_ids:
            tx = self._txs[tid]
            raw = serialize_item(tx.owner, tx.tags, tx.data)
            rec += struct.pack(">Q", len(raw)) + raw
        return _lp32(bytes(rec))

    def snapshot_bytes(self) -> bytes:
        with self._lock:
            return SNAPSHOT_MAGIC + b"".join(self._record(b) for b in self._blocks)

    def snapshot_hash(self) -> str:
        return content_id(self.snapshot_bytes())

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "wb") as fh:
            fh.write(self.snapshot_bytes())

    @classmethod
    def load(cls, path: str | os.PathLike, **kwargs) -> "Weave":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read(), **kwargs)

    @classmethod
    def from_bytes(cls, raw: bytes, **kwargs) -> "Weave":
        weave = cls.__new__(cls)
        weave.max_data = kwargs.get("max_data", DEFAULT_MAX_DATA)
        weave.allow_empty_blocks = kwargs.get("allow_empty_blocks", False)
        weave.path = None
        weave._reset()
        weave._load(raw)
        return weave

    def _load(self, raw: bytes) -> None:
        if not raw.startswith(SNAPSHOT_MAGIC):
            raise CorruptSnapshot("missing snapshot header")
        outer = _Reader(raw[len(SNAPSHOT_MAGIC) :])
        try:
            while not outer.done():
                r = _Reader(outer.lp32())
                height = r.u64()
                prev = r.lp32().decode("ascii") or None
                recall = r.lp32().decode("ascii") or None
                n = r.u32()
                tx_ids, stamps = [], []
                for _ in range(n):
                    tx_ids.append(r.lp32().decode("ascii"))
                    stamps.append(r.u64())
                block_id = r.lp32().decode("ascii")
                txs = []
                for tid, ts in zip(tx_ids, stamps):
                    owner, tags, data = parse_item(r.take(r.u64()))
                    txs.append(Transaction(tid, owner, tags, data, ts))
                if not r.done():
                    raise CorruptSnapshot(f"trailing bytes in block record {height}")
                block = Block(height, prev, recall, tuple(tx_ids), tuple(stamps), block_id)
                self._index_block(block, txs)
                self._clock = max([self._clock, *stamps])
        except (UnicodeDecodeError, ValueError) as exc:
            raise CorruptSnapshot(str(exc)) from None
        if not self._blocks:
            raise CorruptSnapshot("snapshot has no genesis block")


_BUNDLE_TAGS = as_tags(BUNDLE_TAGS)


def unbundle(tx: Transaction) -> list[tuple[str, tuple[Tag, ...], bytes]]:
    """Split a bundle transaction into its (owner, tags, data) items."""
    r = _Reader(tx.data)
    try:
        count = r.u32()
        items = [parse_item(r.take(r.u64())) for _ in range(count)]
    except CorruptSnapshot as exc:
        raise ValueError(f"malformed bundle: {exc}") from None
    if not r.done():
        raise ValueError("trailing bytes after bundle")
    return items
