"""Sites, rectangular windows, spin configurations and boundary semantics.

Coordinates are signed; x grows to the east, y to the north.  A site may
flip only when its south and west nearest neighbors both carry spin 1, so
the southwest partial order (coordinatewise <=) organizes every dependency
in the model.  Windows are rectangles; anything outside a window is
resolved through an explicit :class:`BoundaryRule`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np


class Site(NamedTuple):
    x: int
    y: int

    def __add__(self, other):
        return Site(self.x + other[0], self.y + other[1])


def sw_neighbors(s: Site) -> tuple[Site, Site]:
    """South and west nearest neighbors of a site."""
    return Site(s[0], s[1] - 1), Site(s[0] - 1, s[1])


class BoundaryRule(enum.Enum):
    """How spin lookups outside a window resolve.

    GHOST_ONES pins every exterior site at spin 1 (the default for
    equilibrium runs: it keeps the finite chain irreducible).  GHOST_ZEROS
    pins them at 0, which freezes the whole window and serves as a
    negative control.  PERIODIC wraps constraint lookups on the torus.
    HALF_PLANE marks a window as a view into a lazily evaluated plane and
    is meaningful only to the backward engine.
    """

    GHOST_ONES = "ghost-ones"
    GHOST_ZEROS = "ghost-zeros"
    PERIODIC = "periodic"
    HALF_PLANE = "half-plane"


@dataclass(frozen=True)
class Region:
    """Rectangular window: ``origin`` is its southwest corner."""

    origin: Site
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("region must be at least 1x1")

    def __contains__(self, s) -> bool:
        return (self.origin.x <= s[0] < self.origin.x + self.width
                and self.origin.y <= s[1] < self.origin.y + self.height)

    def __len__(self) -> int:
        return self.width * self.height

    def sites(self) -> Iterator[Site]:
        """All sites, row by row from the south, west to east."""
        for iy in range(self.height):
            for ix in range(self.width):
                yield Site(self.origin.x + ix, self.origin.y + iy)

    def index(self, s) -> int:
        """Flat row-major index of a member site."""
        if s not in self:
            raise ValueError(f"site {s} outside region")
        return ((s[1] - self.origin.y) * self.width
                + (s[0] - self.origin.x))

    def site(self, flat: int) -> Site:
        iy, ix = divmod(flat, self.width)
        return Site(self.origin.x + ix, self.origin.y + iy)


def sw_exterior_boundary(r: Region) -> set[Site]:
    """Sites outside ``r`` adjacent to it from the south or west."""
    x0, y0 = r.origin
    south = {Site(x0 + ix, y0 - 1) for ix in range(r.width)}
    west = {Site(x0 - 1, y0 + iy) for iy in range(r.height)}
    return south | west


def cone_sets(s: Site, r: Region) -> tuple[set[Site], set[Site]]:
    """Sites of ``r`` below ``s`` in the southwest order, and sites
    whose reset times ``s`` cannot influence.

    Returns ``(below, unaffected)`` with ``below = {y : y <= s}`` and
    ``unaffected = {y : not s <= y}`` (coordinatewise order).
    """
    if s not in r:
        raise ValueError(f"site {s} outside region")
    below = {y for y in r.sites() if y.x <= s.x and y.y <= s.y}
    unaffected = {y for y in r.sites() if not (s.x <= y.x and s.y <= y.y)}
    return below, unaffected


class Configuration:
    """Spin assignment on a window plus a ghost-boundary rule.

    Spins are stored densely as an int8 array of shape (height, width),
    row 0 being the southernmost row.  Lookups outside the window resolve
    through the boundary rule; for HALF_PLANE windows an ``exterior``
    callable may be attached by the backward engine.
    """

    def __init__(self, region: Region, spins=None,
                 boundary: BoundaryRule = BoundaryRule.GHOST_ONES,
                 exterior=None):
        self.region = region
        self.boundary = boundary
        self.exterior = exterior
        if spins is None:
            self.spins = np.zeros((region.height, region.width), np.int8)
        else:
            spins = np.asarray(spins, np.int8)
            if spins.shape != (region.height, region.width):
                raise ValueError("spin array shape does not match region")
            if not np.all((spins == 0) | (spins == 1)):
                raise ValueError("spins must be 0 or 1")
            self.spins = spins.copy()

    def copy(self) -> "Configuration":
        return Configuration(self.region, self.spins, self.boundary,
                             self.exterior)

    def spin(self, s) -> int:
        """Spin at a site, resolving the boundary rule outside the window."""
        r = self.region
        if s in r:
            return int(self.spins[s[1] - r.origin.y, s[0] - r.origin.x])
        if self.boundary is BoundaryRule.GHOST_ONES:
            return 1
        if self.boundary is BoundaryRule.GHOST_ZEROS:
            return 0
        if self.boundary is BoundaryRule.PERIODIC:
            ix = (s[0] - r.origin.x) % r.width
            iy = (s[1] - r.origin.y) % r.height
            return int(self.spins[iy, ix])
        if self.exterior is not None:
            return self.exterior(Site(s[0], s[1]))
        raise ValueError(
            "half-plane configuration has no exterior resolver attached")

    def set_spin(self, s, value: int) -> None:
        r = self.region
        self.spins[s[1] - r.origin.y, s[0] - r.origin.x] = value

    def __eq__(self, other) -> bool:
        return (isinstance(other, Configuration)
                and self.region == other.region
                and self.boundary == other.boundary
                and np.array_equal(self.spins, other.spins))


def is_flip_eligible(c: Configuration, s) -> bool:
    """True iff both southwest neighbors read spin 1 through the boundary.

    Never depends on the spin at ``s`` itself.
    """
    if s not in c.region:
        raise ValueError(f"site {s} outside region")
    south, west = sw_neighbors(Site(s[0], s[1]))
    return c.spin(south) == 1 and c.spin(west) == 1


def write_pgm(config: Configuration, path, t: float | None = None) -> None:
    """Write the configuration as a binary PGM (P5), spin 1 -> 255.

    Row 0 of the image is the northernmost row.  A comment line records
    the region origin and, when given, the simulation time.
    """
    r = config.region
    stamp = "" if t is None else f" t={t!r}"
    header = (f"P5\n# origin=({r.origin.x},{r.origin.y}){stamp}\n"
              f"{r.width} {r.height}\n255\n")
    data = (config.spins[::-1, :] * np.uint8(255)).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(data.tobytes())


def write_pgm_gray(array, origin: Site, path, t: float | None = None) -> None:
    """Write an arbitrary uint8 array (row 0 = southernmost) as PGM P5."""
    array = np.asarray(array, np.uint8)
    h, w = array.shape
    stamp = "" if t is None else f" t={t!r}"
    header = f"P5\n# origin=({origin.x},{origin.y}){stamp}\n{w} {h}\n255\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(array[::-1, :].tobytes())


def read_pgm(path) -> tuple[np.ndarray, str]:
    """Read a P5 PGM written by this module.

    Returns the array with row 0 southernmost, plus the comment line.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if not raw.startswith(b"P5"):
        raise ValueError("not a binary PGM file")
    parts = raw.split(b"\n", 4)
    comment = parts[1].decode("ascii").lstrip("# ")
    w, h = (int(v) for v in parts[2].split())
    data = np.frombuffer(parts[4][: w * h], np.uint8).reshape(h, w)
    return data[::-1, :].copy(), comment
