"""Case-base policy storage.

A case is a ``<state, action, value>`` triple. The case-base keeps them in
insertion order inside contiguous numpy buffers so that retrieval can run
over a single 2-D array; :class:`Case` objects are materialised on access.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Iterator, Optional

import numpy as np

from ._kernels import nearest_scan

MAGIC = "PISRL-CB 1"


class DimensionError(ValueError):
    """A vector does not have the length the case-base was declared with."""


class CaseBaseFormatError(ValueError):
    """A case-base file could not be parsed."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


@dataclass
class Case:
    state: np.ndarray
    action: np.ndarray
    value: float = 0.0
    use_count: int = 0
    insert_seq: int = 0

    def __eq__(self, other):
        if not isinstance(other, Case):
            return NotImplemented
        return (
            np.array_equal(self.state, other.state)
            and np.array_equal(self.action, other.action)
            and self.value == other.value
            and self.use_count == other.use_count
            and self.insert_seq == other.insert_seq
        )


@dataclass(frozen=True)
class NearestResult:
    case_index: int
    distance: float


def distance(a, b) -> float:
    """Euclidean distance between two state vectors."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    total = 0.0
    for x, y in zip(a.tolist(), b.tolist()):
        diff = x - y
        total += diff * diff
    return math.sqrt(total)


def _as_vector(values, length, what):
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size != length:
        raise DimensionError(f"{what} has length {arr.size}, expected {length}")
    return arr


@dataclass
class CaseBase:
    """Bounded set of cases with nearest-neighbour retrieval.

    ``theta`` is the density threshold separating known from unknown states
    and ``capacity`` the maximum number of cases kept after eviction.
    """

    theta: float
    capacity: int
    n: int
    m: int
    next_seq: int = 0
    _states: np.ndarray = field(init=False, repr=False)
    _actions: np.ndarray = field(init=False, repr=False)
    _values: np.ndarray = field(init=False, repr=False)
    _uses: np.ndarray = field(init=False, repr=False)
    _seqs: np.ndarray = field(init=False, repr=False)
    _size: int = field(init=False, default=0, repr=False)
    # bumped by insert / replace / evict; use-count bookkeeping is excluded
    mutations: int = field(init=False, default=0, repr=False)

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if int(self.capacity) < 1:
            raise ValueError(f"capacity must be a positive integer, got {self.capacity}")
        if self.n < 1 or self.m < 1:
            raise ValueError("state and action dimensions must be positive")
        self.capacity = int(self.capacity)
        self._allocate(16)

    def _allocate(self, rows):
        self._states = np.zeros((rows, self.n))
        self._actions = np.zeros((rows, self.m))
        self._values = np.zeros(rows)
        self._uses = np.zeros(rows, dtype=np.int64)
        self._seqs = np.zeros(rows, dtype=np.int64)

    def _grow(self):
        rows = 2 * self._states.shape[0]
        k = self._size
        old = (self._states, self._actions, self._values, self._uses, self._seqs)
        self._allocate(rows)
        self._states[:k] = old[0][:k]
        self._actions[:k] = old[1][:k]
        self._values[:k] = old[2][:k]
        self._uses[:k] = old[3][:k]
        self._seqs[:k] = old[4][:k]

    # -- container protocol ------------------------------------------------

    def __len__(self):
        return self._size

    def __getitem__(self, index) -> Case:
        i = self._check_index(index)
        return Case(
            state=self._states[i].copy(),
            action=self._actions[i].copy(),
            value=float(self._values[i]),
            use_count=int(self._uses[i]),
            insert_seq=int(self._seqs[i]),
        )

    def __iter__(self) -> Iterator[Case]:
        for i in range(self._size):
            yield self[i]

    @property
    def cases(self) -> list[Case]:
        return list(self)

    @property
    def states(self) -> np.ndarray:
        """Read-only view of the stored states, one row per case."""
        view = self._states[: self._size]
        view.flags.writeable = False
        return view

    @property
    def actions(self) -> np.ndarray:
        view = self._actions[: self._size]
        view.flags.writeable = False
        return view

    @property
    def values(self) -> np.ndarray:
        view = self._values[: self._size]
        view.flags.writeable = False
        return view

    @property
    def use_counts(self) -> np.ndarray:
        view = self._uses[: self._size]
        view.flags.writeable = False
        return view

    @property
    def insert_seqs(self) -> np.ndarray:
        view = self._seqs[: self._size]
        view.flags.writeable = False
        return view

    def _check_index(self, index):
        i = int(index)
        if not 0 <= i < self._size:
            raise IndexError(f"case index {index} out of range for {self._size} cases")
        return i

    def copy(self) -> "CaseBase":
        other = CaseBase(self.theta, self.capacity, self.n, self.m, self.next_seq)
        other._states = self._states.copy()
        other._actions = self._actions.copy()
        other._values = self._values.copy()
        other._uses = self._uses.copy()
        other._seqs = self._seqs.copy()
        other._size = self._size
        other.mutations = self.mutations
        return other

    def __eq__(self, other):
        if not isinstance(other, CaseBase):
            return NotImplemented
        k = self._size
        return (
            self.theta == other.theta
            and self.capacity == other.capacity
            and self.n == other.n
            and self.m == other.m
            and k == other._size
            and np.array_equal(self._states[:k], other._states[:k])
            and np.array_equal(self._actions[:k], other._actions[:k])
            and np.array_equal(self._values[:k], other._values[:k])
            and np.array_equal(self._uses[:k], other._uses[:k])
            and np.array_equal(self._seqs[:k], other._seqs[:k])
        )

    # -- retrieval ---------------------------------------------------------

    def nearest(self, query) -> Optional[NearestResult]:
        q = _as_vector(query, self.n, "query")
        row, dist = nearest_scan(self._states, self._seqs, self._size, q)
        if row < 0:
            return None
        return NearestResult(int(row), float(dist))

    def is_known(self, result: Optional[NearestResult]) -> bool:
        return result is not None and result.distance <= self.theta

    def classify_risk(self, query) -> int:
        """0 when the query lies within ``theta`` of a stored state, else 1."""
        return 0 if self.is_known(self.nearest(query)) else 1

    # -- mutation ----------------------------------------------------------

    def insert(self, case_or_state, action=None, value=0.0) -> int:
        """Append a case and return its index.

        Accepts either a :class:`Case` or ``(state, action, value)``. The new
        case always starts with a zero use count and a fresh insertion number.
        """
        if isinstance(case_or_state, Case):
            state, action, value = case_or_state.state, case_or_state.action, case_or_state.value
        else:
            state = case_or_state
        s = _as_vector(state, self.n, "state")
        a = _as_vector(action, self.m, "action")
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"case value must be finite, got {value}")
        if self._size == self._states.shape[0]:
            self._grow()
        i = self._size
        self._states[i] = s
        self._actions[i] = a
        self._values[i] = value
        self._uses[i] = 0
        self._seqs[i] = self.next_seq
        self.next_seq += 1
        self._size += 1
        self.mutations += 1
        return i

    def record_use(self, index):
        self._uses[self._check_index(index)] += 1

    def replace(self, index, new_action, new_value):
        i = self._check_index(index)
        a = _as_vector(new_action, self.m, "action")
        new_value = float(new_value)
        if not math.isfinite(new_value):
            raise ValueError(f"case value must be finite, got {new_value}")
        self._actions[i] = a
        self._values[i] = new_value
        self.mutations += 1

    def set_value(self, index, value):
        i = self._check_index(index)
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"case value must be finite, got {value}")
        self._values[i] = value

    def evict_to_capacity(self) -> int:
        """Drop the least-frequently-used cases until ``len <= capacity``.

        Ties on use count go to the oldest insertion. Survivors keep their
        relative order.
        """
        excess = self._size - self.capacity
        if excess <= 0:
            return 0
        k = self._size
        order = np.lexsort((self._seqs[:k], self._uses[:k]))
        keep = np.ones(k, dtype=bool)
        keep[order[:excess]] = False
        kept = np.flatnonzero(keep)
        m = kept.size
        self._states[:m] = self._states[kept]
        self._actions[:m] = self._actions[kept]
        self._values[:m] = self._values[kept]
        self._uses[:m] = self._uses[kept]
        self._seqs[:m] = self._seqs[kept]
        self._size = m
        self.mutations += 1
        return excess

    # -- persistence -------------------------------------------------------

    def save(self, sink):
        """Write the case-base in the ``PISRL-CB 1`` text format.

        ``sink`` is a path or a text stream.
        """
        if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
            with open(sink, "w", encoding="utf-8", newline="\n") as fh:
                self._write(fh)
        else:
            self._write(sink)

    def _write(self, fh: IO[str]):
        fh.write(MAGIC + "\n")
        fh.write(f"theta {self.theta!r} capacity {self.capacity} n {self.n} m {self.m}\n")
        for i in range(self._size):
            fields = [repr(float(x)) for x in self._states[i]]
            fields += [repr(float(x)) for x in self._actions[i]]
            fields.append(repr(float(self._values[i])))
            fields.append(str(int(self._uses[i])))
            fields.append(str(int(self._seqs[i])))
            fh.write(" ".join(fields) + "\n")

    @classmethod
    def load(cls, source) -> "CaseBase":
        if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
            with open(source, encoding="utf-8") as fh:
                return cls._read(fh)
        return cls._read(source)

    @classmethod
    def _read(cls, fh) -> "CaseBase":
        text = fh.read()
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines or lines[0].strip() != MAGIC:
            raise CaseBaseFormatError(f"expected header {MAGIC!r}", 1)
        if len(lines) < 2:
            raise CaseBaseFormatError("missing parameter line", 2)
        tokens = lines[1].split()
        if len(tokens) != 8 or tokens[0::2] != ["theta", "capacity", "n", "m"]:
            raise CaseBaseFormatError("malformed parameter line", 2)
        try:
            theta = float(tokens[1])
            capacity, n, m = int(tokens[3]), int(tokens[5]), int(tokens[7])
            base = cls(theta, capacity, n, m)
        except ValueError as exc:
            raise CaseBaseFormatError(str(exc), 2) from None
        if not text.endswith("\n"):
            raise CaseBaseFormatError("truncated file (no final newline)", len(lines))
        width = n + m + 3
        max_seq = -1
        for lineno, line in enumerate(lines[2:], start=3):
            fields = line.split()
            if len(fields) != width:
                raise CaseBaseFormatError(f"expected {width} fields, found {len(fields)}", lineno)
            try:
                reals = [float(x) for x in fields[: n + m + 1]]
                uses, seq = int(fields[-2]), int(fields[-1])
            except ValueError as exc:
                raise CaseBaseFormatError(str(exc), lineno) from None
            if not all(math.isfinite(x) for x in reals):
                raise CaseBaseFormatError("non-finite number", lineno)
            if uses < 0 or seq < 0:
                raise CaseBaseFormatError("negative counter", lineno)
            i = base.insert(reals[:n], reals[n : n + m], reals[-1])
            base._uses[i] = uses
            base._seqs[i] = seq
            max_seq = max(max_seq, seq)
        base.next_seq = max_seq + 1
        base.mutations = 0
        return base


def nearest(base: CaseBase, query) -> Optional[NearestResult]:
    return base.nearest(query)


def classify_risk(base: CaseBase, query) -> int:
    return base.classify_risk(query)
