"""Operation counting for group arithmetic.

Counts are grouped in classes:

* ``H`` - hash to group / hash to scalar
* ``S`` - scalar multiplication in G1 or G2
* ``P`` - pairing evaluation
* ``A`` - point addition (not part of the complexity table)
* ``E`` - envelope work (KEM scalar multiplications and AEAD calls)

A counter only sees operations performed while it is active::

    with OperationCounter() as c:
        with c.phase("signing"):
            ...
    c.table("signing")   # {"H": 1, "S": 2, "P": 0}

Activation is tracked in a :mod:`contextvars` variable, so threads and
asyncio tasks each get their own stack.
"""

from __future__ import annotations

import contextvars
from collections import Counter
from contextlib import contextmanager
from typing import Iterator

TABLE_CLASSES = ("H", "S", "P")
ALL_CLASSES = ("H", "S", "P", "A", "E")

_active: contextvars.ContextVar[tuple["OperationCounter", ...]] = contextvars.ContextVar(
    "clas_mhcs_active_counters", default=()
)
_envelope_mode: contextvars.ContextVar[bool] = contextvars.ContextVar(
    "clas_mhcs_envelope_mode", default=False
)


def record(kind: str, n: int = 1) -> None:
    """Charge ``n`` operations of class ``kind`` to every active counter."""
    counters = _active.get()
    if not counters:
        return
    if _envelope_mode.get():
        kind = "E"
    for c in counters:
        c._charge(kind, n)


@contextmanager
def envelope_ops() -> Iterator[None]:
    """Reclassify every operation in the block as envelope work (class ``E``)."""
    token = _envelope_mode.set(True)
    try:
        yield
    finally:
        _envelope_mode.reset(token)


class OperationCounter:
    """Hierarchical counter of H/S/P (plus A and E) operations.

    ``total`` holds everything charged while the counter was active.  Named
    phases opened with :meth:`phase` additionally receive the charges made
    inside them; nested phases are addressed with ``/`` paths
    (``"verification/localization"``), and a parent phase always includes
    the counts of its children.
    """

    def __init__(self) -> None:
        self.total: Counter[str] = Counter()
        self.phases: dict[str, Counter[str]] = {}
        self._stack: list[str] = []
        self._token: contextvars.Token | None = None

    def __enter__(self) -> "OperationCounter":
        self._token = _active.set(_active.get() + (self,))
        return self

    def __exit__(self, *exc) -> None:
        _active.reset(self._token)
        self._token = None

    def _charge(self, kind: str, n: int) -> None:
        self.total[kind] += n
        for i in range(len(self._stack)):
            self.phases["/".join(self._stack[: i + 1])][kind] += n

    @contextmanager
    def phase(self, label: str) -> Iterator["OperationCounter"]:
        self._stack.append(label)
        self.phases.setdefault("/".join(self._stack), Counter())
        try:
            yield self
        finally:
            self._stack.pop()

    def add(self, counts: dict[str, int], phase: str | None = None) -> None:
        """Merge counts measured elsewhere (e.g. in a worker) into this counter."""
        for kind, n in counts.items():
            self.total[kind] += n
            if phase is not None:
                parts = phase.split("/")
                for i in range(len(parts)):
                    self.phases.setdefault("/".join(parts[: i + 1]), Counter())[kind] += n

    def counts(self, phase: str | None = None) -> dict[str, int]:
        src = self.total if phase is None else self.phases.get(phase, Counter())
        return {k: src[k] for k in ALL_CLASSES if src[k]}

    def table(self, phase: str | None = None) -> dict[str, int]:
        """Counts restricted to the complexity-table classes, zeros included."""
        src = self.total if phase is None else self.phases.get(phase, Counter())
        return {k: src[k] for k in TABLE_CLASSES}

    def __getitem__(self, kind: str) -> int:
        return self.total[kind]

    def __repr__(self) -> str:
        return f"OperationCounter({self.counts()})"
