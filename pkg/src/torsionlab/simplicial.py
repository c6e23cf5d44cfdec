"""Face combinatorics for d-complexes with complete (d-1)-skeleton.

Vertices are 0-indexed internally; text I/O is 1-indexed. All face
orderings are colexicographic, fixed once and globally: the k-face
{v_0 < ... < v_k} has rank sum_i C(v_i, i+1) (combinatorial number
system), and enumeration is by increasing rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator

import numpy as np

Simplex = tuple[int, ...]


def validate_simplex(vertices: Iterable[int]) -> Simplex:
    """Return the simplex as a tuple, requiring strictly increasing vertices."""
    s = tuple(int(v) for v in vertices)
    if not s:
        raise ValueError("empty simplex")
    if any(v < 0 for v in s):
        raise ValueError(f"negative vertex in {s}")
    if any(a >= b for a, b in zip(s, s[1:])):
        raise ValueError(f"vertices not strictly increasing: {s}")
    return s


@dataclass(frozen=True)
class ComplexState:
    """A d-complex on n vertices given by its d-faces.

    The (d-1)-skeleton is implicitly complete and never stored.
    """

    n: int
    d: int
    faces: frozenset[Simplex]

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError(f"top dimension must be >= 2, got {self.d}")
        if self.n < self.d + 1:
            raise ValueError(f"need n >= d+1, got n={self.n}, d={self.d}")
        for f in self.faces:
            s = validate_simplex(f)
            if len(s) != self.d + 1:
                raise ValueError(f"face {s} is not {self.d}-dimensional")
            if s[-1] >= self.n:
                raise ValueError(f"vertex out of range in {s} (n={self.n})")

    @classmethod
    def from_faces(cls, n: int, d: int, faces: Iterable[Iterable[int]]) -> "ComplexState":
        return cls(n, d, frozenset(validate_simplex(f) for f in faces))

    def sorted_faces(self) -> tuple[Simplex, ...]:
        """Faces in colexicographic order (the canonical column order)."""
        return tuple(sorted(self.faces, key=lambda s: s[::-1]))


def enumerate_faces(n: int, k: int) -> list[Simplex]:
    """All C(n, k+1) k-simplices on [0, n) in colexicographic order."""
    if k < 0 or k >= n:
        raise ValueError(f"need 0 <= k < n, got k={k}, n={n}")
    return sorted(combinations(range(n), k + 1), key=lambda s: s[::-1])


def face_rank(s: Iterable[int], n: int) -> int:
    """Colexicographic rank of a simplex among same-dimension faces on [0, n)."""
    t = validate_simplex(s)
    if t[-1] >= n:
        raise ValueError(f"vertex out of range in {t} (n={n})")
    return sum(math.comb(v, i + 1) for i, v in enumerate(t))


def face_unrank(r: int, n: int, k: int) -> Simplex:
    """Inverse of face_rank for k-simplices on [0, n)."""
    if k < 0 or k >= n:
        raise ValueError(f"need 0 <= k < n, got k={k}, n={n}")
    if r < 0 or r >= math.comb(n, k + 1):
        raise ValueError(f"rank {r} out of range for C({n},{k + 1})")
    out = []
    rem = r
    v = n - 1
    for i in range(k, -1, -1):
        # largest v with C(v, i+1) <= rem
        while math.comb(v, i + 1) > rem:
            v -= 1
        rem -= math.comb(v, i + 1)
        out.append(v)
        v -= 1
    return tuple(reversed(out))


def boundary_matrix(state: ComplexState, k: int):
    """Boundary map from k-chains to (k-1)-chains as a SparseIntMatrix.

    Rows index (k-1)-faces of the complete skeleton in colex order. For
    k < d the columns index the complete set of k-faces; for k = d they
    index state.faces in colex order. The column of {v_0 < ... < v_k}
    has entry (-1)^i at the face omitting v_i.
    """
    from .homology import SparseIntMatrix

    if k < 1 or k > state.d:
        raise ValueError(f"need 1 <= k <= d, got k={k}")
    if k < state.d:
        cols = enumerate_faces(state.n, k)
    else:
        cols = state.sorted_faces()
    entries = []
    for j, face in enumerate(cols):
        for i in range(len(face)):
            sub = face[:i] + face[i + 1 :]
            entries.append((face_rank(sub, state.n), j, (-1) ** i))
    return SparseIntMatrix(
        rows=math.comb(state.n, k), cols=len(cols), entries=tuple(entries)
    )


def face_degrees(state: ComplexState, k: int) -> dict[Simplex, int]:
    """For each k-face of the complete skeleton, its number of incident d-faces."""
    if k < 0 or k >= state.d:
        raise ValueError(f"need 0 <= k < d, got k={k}")
    degrees: dict[Simplex, int] = {f: 0 for f in enumerate_faces(state.n, k)}
    for face in state.faces:
        for sub in combinations(face, k + 1):
            degrees[sub] += 1
    return degrees


# ---------------------------------------------------------------------------
# Serialization: one face per line, comma-separated, 1-indexed vertices.


def format_faces(faces: Iterable[Simplex]) -> str:
    return "".join(
        ",".join(str(v + 1) for v in f) + "\n"
        for f in sorted(faces, key=lambda s: s[::-1])
    )


def parse_faces(text: str) -> list[Simplex]:
    faces = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        faces.append(validate_simplex(int(tok) - 1 for tok in line.split(",")))
    return faces


def write_faces(path, faces: Iterable[Simplex]) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_faces(faces))


def read_faces(path) -> list[Simplex]:
    with open(path, "r", encoding="ascii") as fh:
        return parse_faces(fh.read())


# ---------------------------------------------------------------------------
# Cached numpy face tables. These back the heavy paths (rank streams,
# collapse, shadow); the list-returning operations above stay exact and
# simple for small inputs.


def comb_table(n: int, kmax: int) -> np.ndarray:
    """C(v, j) for 0 <= v <= n, 0 <= j <= kmax, as int64."""
    t = np.zeros((n + 1, kmax + 1), dtype=np.int64)
    t[:, 0] = 1
    for v in range(1, n + 1):
        for j in range(1, kmax + 1):
            t[v, j] = t[v - 1, j] + t[v - 1, j - 1]
    return t


@dataclass(frozen=True)
class FaceTable:
    """Colex-ordered d-faces of [0, n) with facet ranks and boundary signs.

    combos[r] is the face of rank r; facet_ranks[r, i] is the rank of
    that face minus its i-th vertex among (d-1)-faces; signs[i] = (-1)^i.
    """

    n: int
    d: int
    combos: np.ndarray
    facet_ranks: np.ndarray
    signs: np.ndarray

    @property
    def num_faces(self) -> int:
        return self.combos.shape[0]

    @property
    def num_facets(self) -> int:
        return math.comb(self.n, self.d)


_FACE_TABLE_CACHE: dict[tuple[int, int], FaceTable] = {}


def face_table(n: int, d: int) -> FaceTable:
    key = (n, d)
    tab = _FACE_TABLE_CACHE.get(key)
    if tab is not None:
        return tab
    combos = np.array(list(combinations(range(n), d + 1)), dtype=np.int32)
    combos = combos[np.lexsort(combos.T)]  # primary key = last vertex: colex
    ct = comb_table(n, d + 1)
    k1 = combos.shape[1]
    facet_ranks = np.zeros((combos.shape[0], k1), dtype=np.int64)
    for i in range(k1):
        acc = np.zeros(combos.shape[0], dtype=np.int64)
        for j in range(k1):
            if j == i:
                continue
            pos = j if j < i else j - 1  # position of vertex j inside the facet
            acc += ct[combos[:, j], pos + 1]
        facet_ranks[:, i] = acc
    signs = np.array([(-1) ** i for i in range(k1)], dtype=np.int8)
    if len(_FACE_TABLE_CACHE) >= 6:
        _FACE_TABLE_CACHE.pop(next(iter(_FACE_TABLE_CACHE)))
    _FACE_TABLE_CACHE[key] = FaceTable(n, d, combos, facet_ranks, signs)
    return _FACE_TABLE_CACHE[key]


def ranks_of_faces(n: int, faces: Iterable[Simplex]) -> np.ndarray:
    """Vectorized face_rank for same-dimension faces, in input order."""
    arr = np.asarray(list(faces), dtype=np.int64)
    if arr.size == 0:
        return np.zeros(0, dtype=np.int64)
    ct = comb_table(n, arr.shape[1])
    out = np.zeros(arr.shape[0], dtype=np.int64)
    for j in range(arr.shape[1]):
        out += ct[arr[:, j], j + 1]
    return out
