"""Planar aperture geometry: grids, granularity partitions, candidate configurations.

Element indices and unit indices are row-major. Element (r, c) of a grid with
pitch ``spacing`` sits at ``(c * spacing, r * spacing)``; all coordinates are
in wavelengths.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from frisim.serialize import format_float, parse_key_value

ELEMENT = "element"
GROUP = "group"
BLOCK = "block"

# Exhaustive candidate enumeration is used below these sizes; larger spaces are sampled.
EXHAUSTIVE_UNIT_LIMIT = 24
EXHAUSTIVE_COMBO_LIMIT = 100_000

# Rejection sampling gives up after this many draws per requested sample.
_ATTEMPTS_PER_SAMPLE = 200
_MIN_ATTEMPTS = 10_000


class InfeasibleConstraintError(ValueError):
    """No candidate configuration satisfies the active generation constraints."""


@dataclass(frozen=True)
class GranularityMode:
    """Actuation granularity: independent elements or rectangular tiles.

    ``group`` and ``block`` both partition the grid into contiguous
    ``unit_rows x unit_cols`` tiles; they differ only in intent (blocks are
    coarse). ``element`` is the degenerate 1x1 tile.
    """

    kind: str
    unit_rows: int = 1
    unit_cols: int = 1

    def __post_init__(self) -> None:
        if self.kind not in (ELEMENT, GROUP, BLOCK):
            raise ValueError(f"unknown granularity kind: {self.kind!r}")
        if self.unit_rows < 1 or self.unit_cols < 1:
            raise ValueError("unit tile dimensions must be >= 1")
        if self.kind == ELEMENT and (self.unit_rows, self.unit_cols) != (1, 1):
            raise ValueError("element mode has a fixed 1x1 unit tile")

    @classmethod
    def element(cls) -> "GranularityMode":
        return cls(ELEMENT)

    @classmethod
    def group(cls, unit_rows: int, unit_cols: int) -> "GranularityMode":
        return cls(GROUP, unit_rows, unit_cols)

    @classmethod
    def block(cls, unit_rows: int, unit_cols: int) -> "GranularityMode":
        return cls(BLOCK, unit_rows, unit_cols)

    @property
    def label(self) -> str:
        if self.kind == ELEMENT:
            return ELEMENT
        return f"{self.kind}:{self.unit_rows}x{self.unit_cols}"

    @classmethod
    def parse(cls, text: str) -> "GranularityMode":
        """Parse a mode label such as ``element``, ``group:2x2`` or ``block:4x4``."""
        text = text.strip()
        if text == ELEMENT:
            return cls.element()
        kind, _, shape = text.partition(":")
        if kind in (GROUP, BLOCK) and shape:
            rows_txt, _, cols_txt = shape.partition("x")
            try:
                return cls(kind, int(rows_txt), int(cols_txt))
            except ValueError:
                pass
        raise ValueError(f"cannot parse granularity mode {text!r}")


@dataclass(frozen=True)
class ApertureGrid:
    """Rectangular reflecting aperture with uniform element pitch (wavelengths)."""

    rows: int
    cols: int
    spacing: float

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    @cached_property
    def positions(self) -> np.ndarray:
        """(N, 2) element coordinates in row-major element order."""
        r, c = np.divmod(np.arange(self.n_elements), self.cols)
        pos = np.column_stack((c * self.spacing, r * self.spacing)).astype(float)
        pos.flags.writeable = False
        return pos


def build_grid(rows: int, cols: int, spacing: float) -> ApertureGrid:
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be >= 1, got {rows}x{cols}")
    if not (spacing > 0):
        raise ValueError(f"element spacing must be positive, got {spacing}")
    return ApertureGrid(rows=rows, cols=cols, spacing=float(spacing))


@dataclass(frozen=True)
class UnitPartition:
    """Disjoint cover of a grid by same-shape actuation units, row-major tile order."""

    grid: ApertureGrid
    mode: GranularityMode
    units: tuple[frozenset[int], ...]
    unit_count: int

    @property
    def unit_size(self) -> int:
        return len(self.units[0])

    @cached_property
    def unit_of_element(self) -> np.ndarray:
        """(N,) lookup mapping element index to its unit index."""
        lut = np.empty(self.grid.n_elements, dtype=np.int64)
        for u, members in enumerate(self.units):
            lut[list(members)] = u
        lut.flags.writeable = False
        return lut


def partition(grid: ApertureGrid, mode: GranularityMode) -> UnitPartition:
    """Split the grid into contiguous rectangular tiles of the mode's unit shape."""
    gr, gc = mode.unit_rows, mode.unit_cols
    if grid.rows % gr or grid.cols % gc:
        raise ValueError(
            f"unit tile {gr}x{gc} does not divide grid {grid.rows}x{grid.cols}")
    units: list[frozenset[int]] = []
    for tile_r in range(grid.rows // gr):
        for tile_c in range(grid.cols // gc):
            members = frozenset(
                (tile_r * gr + dr) * grid.cols + (tile_c * gc + dc)
                for dr in range(gr)
                for dc in range(gc))
            units.append(members)
    return UnitPartition(grid=grid, mode=mode, units=tuple(units), unit_count=len(units))


def unit_centroids(part: UnitPartition) -> np.ndarray:
    """(U, 2) centroid coordinates of every unit."""
    pos = part.grid.positions
    return np.array([pos[sorted(members)].mean(axis=0) for members in part.units])


def default_min_unit_spacing(mode: GranularityMode) -> float:
    """Spacing-rule default: off for element mode, half a wavelength otherwise."""
    return 0.0 if mode.kind == ELEMENT else 0.5


@dataclass(frozen=True)
class Configuration:
    """One surface configuration: the set of simultaneously active units."""

    active_units: frozenset[int]
    active_elements: frozenset[int]
    n_act: int

    def __post_init__(self) -> None:
        if not self.active_units:
            raise ValueError("a configuration must activate at least one unit")
        if len(self.active_elements) != self.n_act:
            raise ValueError("n_act must equal the number of active elements")


def config_from_units(part: UnitPartition, unit_indices) -> Configuration:
    units = frozenset(int(u) for u in unit_indices)
    if not units:
        raise ValueError("a configuration must activate at least one unit")
    for u in units:
        if not 0 <= u < part.unit_count:
            raise ValueError(f"unit index {u} out of range for {part.unit_count} units")
    elements = frozenset(itertools.chain.from_iterable(part.units[u] for u in units))
    return Configuration(active_units=units, active_elements=elements, n_act=len(elements))


def activation_mask(config: Configuration, n_elements: int) -> np.ndarray:
    """(N,) 0/1 float mask of active elements."""
    mask = np.zeros(n_elements)
    idx = sorted(config.active_elements)
    if idx and idx[-1] >= n_elements:
        raise ValueError("configuration references elements outside the grid")
    mask[idx] = 1.0
    return mask


@dataclass(frozen=True)
class CandidateSet:
    """Deterministically generated pool of candidate configurations.

    Candidate ids are positions in ``configurations``.
    """

    grid: ApertureGrid
    partition: UnitPartition
    configurations: tuple[Configuration, ...]
    seed: int
    min_unit_spacing: float

    def __len__(self) -> int:
        return len(self.configurations)

    def masks(self) -> np.ndarray:
        """(M, N) 0/1 activation masks, one row per candidate id."""
        out = np.zeros((len(self.configurations), self.grid.n_elements))
        for i, cfg in enumerate(self.configurations):
            out[i, sorted(cfg.active_elements)] = 1.0
        return out


def _centroid_distances(part: UnitPartition) -> np.ndarray:
    cent = unit_centroids(part)
    diff = cent[:, None, :] - cent[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def _spacing_ok(unit_tuple, bad_pairs: np.ndarray | None) -> bool:
    if bad_pairs is None or len(unit_tuple) < 2:
        return True
    sub = bad_pairs[np.ix_(unit_tuple, unit_tuple)]
    return not sub.any()


def _exhaustive_feasible(unit_count: int, n_units: int, bad_pairs: np.ndarray | None):
    combos = itertools.combinations(range(unit_count), n_units)
    if bad_pairs is None:
        return list(combos)
    return [c for c in combos if _spacing_ok(c, bad_pairs)]


def enumerate_candidates(
    part: UnitPartition,
    n_act: int,
    m_samples: int,
    min_unit_spacing: float,
    seed: int,
) -> CandidateSet:
    """Generate up to ``m_samples`` distinct feasible configurations.

    A configuration activates ``n_act / unit_size`` units whose pairwise
    centroid distances are all >= ``min_unit_spacing``. Small unit spaces are
    enumerated exhaustively (and subsampled uniformly if more than
    ``m_samples`` sets are feasible); large spaces use seeded rejection
    sampling. Output is sorted by active-unit tuple, so candidate ids are
    stable for a given argument/seed combination.
    """
    if m_samples < 1:
        raise ValueError(f"m_samples must be >= 1, got {m_samples}")
    if min_unit_spacing < 0:
        raise ValueError(f"min_unit_spacing must be >= 0, got {min_unit_spacing}")
    unit_size = part.unit_size
    if n_act < 1 or n_act % unit_size:
        raise ValueError(
            f"n_act={n_act} is not a positive multiple of the unit size {unit_size}")
    n_units = n_act // unit_size
    if n_units > part.unit_count:
        raise InfeasibleConstraintError(
            f"n_act={n_act} needs {n_units} active units but the partition has "
            f"only {part.unit_count}")

    bad_pairs = None
    if min_unit_spacing > 0 and n_units >= 2:
        dists = _centroid_distances(part)
        bad = dists < min_unit_spacing
        np.fill_diagonal(bad, False)
        if bad.any():
            bad_pairs = bad

    total_combos = math.comb(part.unit_count, n_units)
    exhaustive = (part.unit_count <= EXHAUSTIVE_UNIT_LIMIT
                  and total_combos <= EXHAUSTIVE_COMBO_LIMIT)

    if exhaustive:
        feasible = _exhaustive_feasible(part.unit_count, n_units, bad_pairs)
        if not feasible:
            raise InfeasibleConstraintError(
                f"min_unit_spacing={min_unit_spacing} rejects all {total_combos} "
                f"{n_units}-unit subsets; the spacing rule is the binding constraint")
        if len(feasible) > m_samples:
            rng = np.random.default_rng(seed)
            picks = rng.choice(len(feasible), size=m_samples, replace=False)
            feasible = [feasible[i] for i in picks]
        chosen = sorted(feasible)
    else:
        rng = np.random.default_rng(seed)
        found: set[tuple[int, ...]] = set()
        budget = max(_MIN_ATTEMPTS, _ATTEMPTS_PER_SAMPLE * m_samples)
        attempts = 0
        while len(found) < m_samples and attempts < budget:
            attempts += 1
            draw = tuple(sorted(rng.choice(part.unit_count, size=n_units, replace=False).tolist()))
            if draw in found:
                continue
            if _spacing_ok(draw, bad_pairs):
                found.add(draw)
        if not found:
            raise InfeasibleConstraintError(
                f"min_unit_spacing={min_unit_spacing} rejected every one of "
                f"{attempts} sampled {n_units}-unit subsets; the spacing rule is "
                f"the binding constraint")
        chosen = sorted(found)

    configs = tuple(config_from_units(part, units) for units in chosen)
    return CandidateSet(
        grid=part.grid,
        partition=part,
        configurations=configs,
        seed=int(seed),
        min_unit_spacing=float(min_unit_spacing),
    )


def min_pairwise_spacing(config: Configuration, grid: ApertureGrid,
                         part: UnitPartition) -> float:
    """Smallest centroid distance between distinct active units (inf if only one)."""
    if part.grid != grid:
        raise ValueError("partition does not belong to the given grid")
    active = sorted(config.active_units)
    if active[-1] >= part.unit_count:
        raise ValueError("configuration references units outside the partition")
    if len(active) < 2:
        return math.inf
    cent = unit_centroids(part)[active]
    diff = cent[:, None, :] - cent[None, :, :]
    dists = np.sqrt((diff ** 2).sum(axis=-1))
    iu = np.triu_indices(len(active), k=1)
    return float(dists[iu].min())


def layout_distance(a: Configuration, b: Configuration) -> int:
    """Number of elements active in exactly one of the two configurations."""
    # Same partition implies the same unit size; that much is checkable here.
    if a.n_act * len(b.active_units) != b.n_act * len(a.active_units):
        raise ValueError("configurations have different unit sizes; partitions differ")
    return len(a.active_elements ^ b.active_elements)


def save_candidate_set(candidates: CandidateSet, path) -> None:
    """Write the structured text form consumed by the harness."""
    grid = candidates.grid
    lines = [
        "# frisim candidate-set v1",
        f"rows={grid.rows}",
        f"cols={grid.cols}",
        f"spacing={format_float(grid.spacing)}",
        f"mode={candidates.partition.mode.label}",
        f"min_unit_spacing={format_float(candidates.min_unit_spacing)}",
        f"seed={candidates.seed}",
        f"count={len(candidates.configurations)}",
    ]
    for cfg in candidates.configurations:
        lines.append("config=" + ",".join(str(e) for e in sorted(cfg.active_elements)))
    Path(path).write_text("\n".join(lines) + "\n")


def load_candidate_set(path) -> CandidateSet:
    header: dict[str, str] = {}
    element_lists: list[list[int]] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, value = parse_key_value(line)
        if key == "config":
            element_lists.append([int(tok) for tok in value.split(",") if tok])
        else:
            header[key] = value
    try:
        grid = build_grid(int(header["rows"]), int(header["cols"]), float(header["spacing"]))
        mode = GranularityMode.parse(header["mode"])
        min_spacing = float(header["min_unit_spacing"])
        seed = int(header["seed"])
        count = int(header["count"])
    except KeyError as missing:
        raise ValueError(f"candidate-set file is missing key {missing}") from None
    if count != len(element_lists):
        raise ValueError(
            f"candidate-set file declares {count} configurations but lists "
            f"{len(element_lists)}")
    part = partition(grid, mode)
    lut = part.unit_of_element
    configs = []
    for elements in element_lists:
        if any(not 0 <= e < grid.n_elements for e in elements):
            raise ValueError("configuration references elements outside the grid")
        units = sorted({int(lut[e]) for e in elements})
        cfg = config_from_units(part, units)
        if cfg.active_elements != frozenset(elements):
            raise ValueError("configuration elements do not cover whole units")
        configs.append(cfg)
    return CandidateSet(
        grid=grid,
        partition=part,
        configurations=tuple(configs),
        seed=seed,
        min_unit_spacing=min_spacing,
    )
