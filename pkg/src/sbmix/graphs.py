"""Directed binary networks without self-loops, and collections thereof.

Vertex indices are 0-based both in memory and in all file formats. Two
formats are supported:

* edge-list-dir: a directory with one ``*.edges`` file per network. First
  line is the vertex count ``n``; each further line is ``i j`` meaning an
  edge i -> j. Networks are ordered lexicographically by filename and the
  filename stem becomes the network id.
* ndjson: one JSON object per line, ``{"id": optional str, "n": int,
  "edges": [[i, j], ...]}``, in file order. This format round-trips ids
  exactly (including absent ones) and is the lossless choice.

Duplicate edges collapse to a single edge with a warning; self-loops and
out-of-range endpoints are errors.
"""

from __future__ import annotations

import hashlib
import json
import re
import warnings
from pathlib import Path

import numpy as np

from .validation import as_adjacency, as_edge_array

__all__ = ["Network", "NetworkCollection", "load_collection", "save_collection"]

DENSE_THRESHOLD = 2048  # cache a dense adjacency only below this vertex count

_SAFE_ID = re.compile(r"[A-Za-z0-9._-]+\Z")


class Network:
    """One directed binary graph. Immutable after construction.

    Stores a lexicographically sorted, deduplicated (E, 2) edge array as the
    source of truth; dense adjacency and CSR-style neighbor arrays are built
    lazily. Dense caching is limited to n <= DENSE_THRESHOLD so very large
    graphs stay in adjacency-list form.
    """

    __slots__ = ("n", "_edges", "_dense", "_out", "_in", "_digest")

    def __init__(self, n: int, edges=None):
        n = int(n)
        if n < 1:
            raise ValueError(f"vertex count must be >= 1, got {n}")
        self.n = n
        arr = as_edge_array(edges if edges is not None else [], n)
        if arr.size:
            arr = np.unique(arr, axis=0)  # sorts lexicographically and dedupes
        arr.setflags(write=False)
        self._edges = arr
        self._dense = None
        self._out = None
        self._in = None
        self._digest = None

    @classmethod
    def from_dense(cls, adjacency) -> "Network":
        arr = as_adjacency(adjacency)
        return cls(arr.shape[0], np.argwhere(arr != 0))

    @property
    def edges(self) -> np.ndarray:
        """Sorted (E, 2) int64 edge array, read-only."""
        return self._edges

    @property
    def n_edges(self) -> int:
        return self._edges.shape[0]

    def dense(self) -> np.ndarray:
        """Dense uint8 adjacency (cached for small n)."""
        if self._dense is not None:
            return self._dense
        a = np.zeros((self.n, self.n), dtype=np.uint8)
        if self._edges.size:
            a[self._edges[:, 0], self._edges[:, 1]] = 1
        a.setflags(write=False)
        if self.n <= DENSE_THRESHOLD:
            self._dense = a
        return a

    def _out_csr(self):
        if self._out is None:
            e = self._edges
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(np.bincount(e[:, 0], minlength=self.n), out=indptr[1:])
            self._out = (indptr, e[:, 1].copy())
        return self._out

    def _in_csr(self):
        if self._in is None:
            e = self._edges
            order = np.lexsort((e[:, 0], e[:, 1]))
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(np.bincount(e[:, 1], minlength=self.n), out=indptr[1:])
            self._in = (indptr, e[order, 0])
        return self._in

    def out_neighbors(self, i: int) -> np.ndarray:
        indptr, indices = self._out_csr()
        return indices[indptr[i]:indptr[i + 1]]

    def in_neighbors(self, i: int) -> np.ndarray:
        indptr, indices = self._in_csr()
        return indices[indptr[i]:indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        if self._dense is not None:
            return bool(self._dense[i, j])
        row = self.out_neighbors(i)
        pos = np.searchsorted(row, j)
        return bool(pos < row.size and row[pos] == j)

    def content_digest(self) -> bytes:
        """sha256 over (n, sorted edges); used to derive content-based seeds."""
        if self._digest is None:
            h = hashlib.sha256()
            h.update(self.n.to_bytes(8, "little"))
            h.update(np.ascontiguousarray(self._edges).tobytes())
            self._digest = h.digest()
        return self._digest

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._edges, other._edges)

    def __hash__(self):
        return hash((self.n, self.content_digest()))

    def __repr__(self):
        return f"Network(n={self.n}, n_edges={self.n_edges})"


class NetworkCollection:
    """Ordered list of networks with optional per-network string ids.

    Non-None ids must be unique: they key the per-network sections of the
    output files.
    """

    def __init__(self, networks, ids=None):
        networks = list(networks)
        if len(networks) < 1:
            raise ValueError("empty collection")
        for g in networks:
            if not isinstance(g, Network):
                raise TypeError(f"expected Network, got {type(g).__name__}")
        if ids is None:
            ids = [None] * len(networks)
        ids = [None if i is None else str(i) for i in ids]
        if len(ids) != len(networks):
            raise ValueError("ids length must match number of networks")
        named = [i for i in ids if i is not None]
        if len(set(named)) != len(named):
            raise ValueError("duplicate network ids")
        self.networks = networks
        self.ids = ids
        self.duplicate_edge_count = 0  # set by load_collection

    @property
    def m_count(self) -> int:
        return len(self.networks)

    def id_of(self, m: int) -> str:
        """Network id, falling back to the index for unnamed networks."""
        return self.ids[m] if self.ids[m] is not None else str(m)

    def __len__(self):
        return len(self.networks)

    def __getitem__(self, m: int) -> Network:
        return self.networks[m]

    def __iter__(self):
        return iter(self.networks)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkCollection):
            return NotImplemented
        return self.ids == other.ids and self.networks == other.networks

    def __repr__(self):
        return f"NetworkCollection(M={self.m_count})"


def _parse_edge_file(path: Path):
    lines = path.read_text().splitlines()
    n = None
    edges = []
    n_dup = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if n is None:
            try:
                n = int(line)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected vertex count, got {line!r}") from None
            if n < 1:
                raise ValueError(f"{path}:{lineno}: vertex count must be >= 1, got {n}")
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'i j', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: expected 'i j', got {line!r}") from None
        if i == j:
            raise ValueError(f"{path}:{lineno}: self-loop at vertex {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"{path}:{lineno}: vertex index out of range for n={n}: {i} {j}")
        edges.append((i, j))
    if n is None:
        raise ValueError(f"{path}: empty file, expected vertex count on first line")
    net = Network(n, np.array(edges, dtype=np.int64).reshape(-1, 2))
    n_dup = len(edges) - net.n_edges
    return net, n_dup


def _parse_ndjson_line(obj, where: str):
    if not isinstance(obj, dict):
        raise ValueError(f"{where}: expected a JSON object")
    try:
        n = int(obj["n"])
    except (KeyError, TypeError, ValueError):
        raise ValueError(f"{where}: missing or invalid 'n'") from None
    edges = obj.get("edges", [])
    if not isinstance(edges, list):
        raise ValueError(f"{where}: 'edges' must be a list of [i, j] pairs")
    try:
        net = Network(n, np.array(edges, dtype=np.int64).reshape(-1, 2))
    except (ValueError, TypeError) as exc:
        raise ValueError(f"{where}: {exc}") from None
    nid = obj.get("id")
    if nid is not None and not isinstance(nid, str):
        raise ValueError(f"{where}: 'id' must be a string")
    return net, nid, len(edges) - net.n_edges


def load_collection(path, format: str | None = None) -> NetworkCollection:
    """Load a collection from disk.

    format is "edge-list-dir", "ndjson", or None to infer from the path
    (directory vs. file).
    """
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such path: {p}")
    if format is None:
        format = "edge-list-dir" if p.is_dir() else "ndjson"
    if format == "edge-list-dir":
        if not p.is_dir():
            raise ValueError(f"edge-list-dir format needs a directory, got file {p}")
        files = sorted(f for f in p.iterdir() if f.name.endswith(".edges"))
        if not files:
            raise ValueError(f"empty collection: no .edges files in {p}")
        nets, ids, dup = [], [], 0
        for f in files:
            net, d = _parse_edge_file(f)
            nets.append(net)
            ids.append(f.name[: -len(".edges")])
            dup += d
    elif format == "ndjson":
        if p.is_dir():
            raise ValueError(f"ndjson format needs a file, got directory {p}")
        nets, ids, dup = [], [], 0
        with p.open() as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line:
                    continue
                where = f"{p}:{lineno}"
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{where}: invalid JSON: {exc}") from None
                net, nid, d = _parse_ndjson_line(obj, where)
                nets.append(net)
                ids.append(nid)
                dup += d
        if not nets:
            raise ValueError(f"empty collection: no records in {p}")
    else:
        raise ValueError(f"unknown format {format!r}")
    if dup:
        warnings.warn(f"{p}: collapsed {dup} duplicate edge(s)", stacklevel=2)
    coll = NetworkCollection(nets, ids)
    coll.duplicate_edge_count = dup
    return coll


def _file_id(coll: NetworkCollection, m: int) -> str:
    nid = coll.ids[m]
    if nid is None:
        return f"net-{m:05d}"
    if not _SAFE_ID.match(nid):
        raise ValueError(f"network id {nid!r} is not filesystem-safe "
                         "(allowed: letters, digits, '.', '_', '-')")
    return nid


def save_collection(coll: NetworkCollection, path, format: str = "ndjson") -> None:
    """Write a collection to disk; load(save(c)) == c.

    For edge-list-dir, unnamed networks get default ids ("net-00000", ...),
    which the loader will then report as their ids.
    """
    p = Path(path)
    if format == "edge-list-dir":
        p.mkdir(parents=True, exist_ok=True)
        names = [_file_id(coll, m) for m in range(coll.m_count)]
        if sorted(names) != names:
            raise ValueError("edge-list-dir loads files in lexicographic order; "
                             "ids must already sort in collection order to round-trip")
        for m, name in enumerate(names):
            net = coll[m]
            lines = [str(net.n)]
            lines += [f"{i} {j}" for i, j in net.edges]
            (p / f"{name}.edges").write_text("\n".join(lines) + "\n")
    elif format == "ndjson":
        p.parent.mkdir(parents=True, exist_ok=True)
        with p.open("w") as fh:
            for m in range(coll.m_count):
                net = coll[m]
                obj = {}
                if coll.ids[m] is not None:
                    obj["id"] = coll.ids[m]
                obj["n"] = net.n
                obj["edges"] = [[int(i), int(j)] for i, j in net.edges]
                fh.write(json.dumps(obj, separators=(",", ":")) + "\n")
    else:
        raise ValueError(f"unknown format {format!r}")
