"""Lookup table of precomputed maximin view spaces, keyed by view count.

Solving the maximin spread problem is the slow part of configuring a view
space, so the table is built once for the supported view-count range and
loaded at planning time.  A miss falls back to solving on demand and is
flagged so callers can tell cached from computed results.
"""

from dataclasses import dataclass, field

from . import jsonio
from .errors import FormatError, InvalidArgumentError
from .geometry import ViewSpace
from .tammes import DEFAULT_ITERS, DEFAULT_RESTARTS, tammes_hemisphere

DEFAULT_TABLE_RANGE = (13, 58)


@dataclass(eq=False)
class TableLookup:
    """Result of a table query: the view space plus how it was obtained."""

    view_space: ViewSpace
    computed: bool  # True when the entry was absent and solved on demand


@dataclass(eq=False)
class ViewSpaceTable:
    radius: float
    entries: dict = field(default_factory=dict)  # n -> ViewSpace
    seed: int = 0

    def __len__(self):
        return len(self.entries)

    def get(self, n: int, restarts: int = DEFAULT_RESTARTS, iters: int = DEFAULT_ITERS) -> TableLookup:
        """Fetch the n-view space, solving (and caching) on a miss."""
        if n < 1:
            raise InvalidArgumentError("table lookup needs n >= 1")
        vs = self.entries.get(int(n))
        if vs is not None:
            return TableLookup(view_space=vs, computed=False)
        vs = tammes_hemisphere(n, radius=self.radius, seed=self.seed,
                               restarts=restarts, iters=iters)
        self.entries[int(n)] = vs
        return TableLookup(view_space=vs, computed=True)

    def to_dict(self) -> dict:
        return {
            "radius": float(self.radius),
            "entries": {str(n): self.entries[n].to_dict() for n in sorted(self.entries)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ViewSpaceTable":
        for key in ("radius", "entries"):
            if key not in d:
                raise FormatError(f"table object missing {key!r}")
        if not isinstance(d["entries"], dict):
            raise FormatError("table entries must be an object keyed by view count")
        entries = {}
        for key, value in d["entries"].items():
            try:
                n = int(key)
            except ValueError as exc:
                raise FormatError(f"non-integer table key {key!r}") from exc
            entries[n] = ViewSpace.from_dict(value)
        return cls(radius=float(d["radius"]), entries=entries)


def build_table(n_values, radius: float = 0.3, seed: int = 0,
                restarts: int = DEFAULT_RESTARTS, iters: int = DEFAULT_ITERS) -> ViewSpaceTable:
    """Solve every requested view count and collect the results."""
    table = ViewSpaceTable(radius=radius, seed=seed)
    for n in n_values:
        table.entries[int(n)] = tammes_hemisphere(int(n), radius=radius, seed=seed,
                                                  restarts=restarts, iters=iters)
    return table


def save_table(table: ViewSpaceTable, path) -> None:
    jsonio.dump_file(table.to_dict(), path)


def load_table(path) -> ViewSpaceTable:
    data = jsonio.load_file(path)
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected a table object")
    return ViewSpaceTable.from_dict(data)
