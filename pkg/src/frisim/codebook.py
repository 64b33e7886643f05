"""Codebook selection by max-min separation in the response or layout domain.

The design metric between candidates i and j is the squared Euclidean norm of
their response difference. Selection maximizes the minimum pairwise metric
over the chosen members (max-min dispersion).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from frisim.channel import ResponseMap
from frisim.geometry import CandidateSet
from frisim.serialize import format_float, parse_key_value

DOMAIN_RESPONSE = "response"
DOMAIN_LAYOUT = "layout"

METHOD_GREEDY = "response_maxmin_greedy"
METHOD_EXACT = "response_maxmin_exact"
METHOD_LAYOUT = "layout_maxmin"
METHOD_RANDOM = "random"
METHOD_FIXED_RIS = "fixed_ris"
SELECTION_METHODS = (METHOD_GREEDY, METHOD_EXACT, METHOD_LAYOUT, METHOD_RANDOM,
                     METHOD_FIXED_RIS)

# Exhaustive search refuses instances with more subsets than this.
EXACT_SUBSET_LIMIT = 10_000_000


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric nonnegative pairwise metric over candidate ids 0..M-1."""

    values: np.ndarray
    domain_tag: str

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {v.shape}")
        if self.domain_tag not in (DOMAIN_RESPONSE, DOMAIN_LAYOUT):
            raise ValueError(f"unknown distance domain {self.domain_tag!r}")

    @property
    def size(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Codebook:
    """Selected candidate ids in selection order, plus the design summary."""

    members: tuple[int, ...]
    selection_method: str
    d_min: float
    bit_width: float
    seed: int | None = None


def response_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Squared Euclidean norm of the complex response difference."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"response shapes differ: {a.shape} vs {b.shape}")
    diff = a - b
    # real**2 + imag**2 avoids the sqrt round-trip of abs()**2, so distances
    # with exact integer values come out exact.
    return float(np.sum(diff.real ** 2 + diff.imag ** 2))


def pairwise_distances(response_map: ResponseMap) -> DistanceMatrix:
    """All-pairs response distances, computed by direct differencing.

    Direct differencing (rather than a Gram-matrix expansion) keeps each entry
    bit-identical to response_distance on the same rows.
    """
    values = response_map.values
    m = len(response_map)
    out = np.empty((m, m))
    # Bound the broadcast temporary to a few hundred MB regardless of M.
    chunk = max(1, (1 << 22) // max(1, m * values.shape[1]))
    for start in range(0, m, chunk):
        stop = min(m, start + chunk)
        diff = values[start:stop, None, :] - values[None, :, :]
        out[start:stop] = np.sum(diff.real ** 2 + diff.imag ** 2, axis=-1)
    np.fill_diagonal(out, 0.0)
    return DistanceMatrix(values=out, domain_tag=DOMAIN_RESPONSE)


def layout_distances(candidates: CandidateSet) -> DistanceMatrix:
    """All-pairs symmetric-difference cardinalities between candidate layouts."""
    masks = candidates.masks().astype(np.int64)
    sizes = masks.sum(axis=1)
    overlap = masks @ masks.T
    out = (sizes[:, None] + sizes[None, :] - 2 * overlap).astype(float)
    return DistanceMatrix(values=out, domain_tag=DOMAIN_LAYOUT)


def _subset_d_min(values: np.ndarray, members) -> float:
    idx = list(members)
    sub = values[np.ix_(idx, idx)]
    iu = np.triu_indices(len(idx), k=1)
    return float(sub[iu].min())


def _greedy_members(values: np.ndarray, k: int) -> list[int]:
    """Farthest-point greedy; all ties resolve to the lowest candidate id."""
    m = values.shape[0]
    masked = values.copy()
    masked[np.tril_indices(m)] = -np.inf
    first, second = np.unravel_index(int(np.argmax(masked)), masked.shape)
    members = [int(first), int(second)]
    gap = np.minimum(values[first], values[second])
    gap[members] = -np.inf
    while len(members) < k:
        nxt = int(np.argmax(gap))
        members.append(nxt)
        gap = np.minimum(gap, values[nxt])
        gap[nxt] = -np.inf
    return members


def _check_k(k: int, m: int) -> None:
    if k < 2:
        raise ValueError(f"a codebook needs at least 2 members, got k={k}")
    if k > m:
        raise ValueError(f"cannot select k={k} members from {m} candidates")


def _require_domain(distances: DistanceMatrix, domain: str) -> None:
    if distances.domain_tag != domain:
        raise ValueError(
            f"expected a {domain}-domain distance matrix, got {distances.domain_tag}")


def select_maxmin_greedy(distances: DistanceMatrix, k: int) -> Codebook:
    """Greedy max-min selection seeded with the globally farthest pair."""
    _require_domain(distances, DOMAIN_RESPONSE)
    _check_k(k, distances.size)
    members = _greedy_members(distances.values, k)
    return Codebook(
        members=tuple(members),
        selection_method=METHOD_GREEDY,
        d_min=_subset_d_min(distances.values, members),
        bit_width=math.log2(k),
    )


def select_maxmin_exact(distances: DistanceMatrix, k: int) -> Codebook:
    """Exhaustive max-min optimum; ties go to the lexicographically smallest set."""
    _require_domain(distances, DOMAIN_RESPONSE)
    m = distances.size
    _check_k(k, m)
    n_subsets = math.comb(m, k)
    if n_subsets > EXACT_SUBSET_LIMIT:
        raise ValueError(
            f"exhaustive search over {n_subsets} subsets exceeds the "
            f"{EXACT_SUBSET_LIMIT} limit; use select_maxmin_greedy instead")
    values = distances.values
    best_members: tuple[int, ...] | None = None
    best_d = -np.inf
    for combo in itertools.combinations(range(m), k):
        d = _subset_d_min(values, combo)
        if d > best_d:
            best_d = d
            best_members = combo
    assert best_members is not None
    return Codebook(
        members=best_members,
        selection_method=METHOD_EXACT,
        d_min=float(best_d),
        bit_width=math.log2(k),
    )


def select_random(distances: DistanceMatrix, k: int, seed: int) -> Codebook:
    """Uniform k-subset baseline; members are reported in ascending id order."""
    _require_domain(distances, DOMAIN_RESPONSE)
    _check_k(k, distances.size)
    rng = np.random.default_rng(seed)
    members = tuple(sorted(int(i) for i in
                           rng.choice(distances.size, size=k, replace=False)))
    return Codebook(
        members=members,
        selection_method=METHOD_RANDOM,
        d_min=_subset_d_min(distances.values, members),
        bit_width=math.log2(k),
        seed=int(seed),
    )


def select_layout_maxmin(layout: DistanceMatrix, response_map: ResponseMap,
                         k: int) -> Codebook:
    """Greedy max-min on layout distances; d_min is still reported in the
    response domain so codebooks stay comparable across selectors."""
    _require_domain(layout, DOMAIN_LAYOUT)
    if layout.size != len(response_map):
        raise ValueError("layout matrix and response map cover different candidates")
    _check_k(k, layout.size)
    members = _greedy_members(layout.values, k)
    d_min = min(
        response_distance(response_map.values[a], response_map.values[b])
        for i, a in enumerate(members) for b in members[i + 1:])
    return Codebook(
        members=tuple(members),
        selection_method=METHOD_LAYOUT,
        d_min=d_min,
        bit_width=math.log2(k),
    )


def effective_size(codebook: Codebook, distances: DistanceMatrix, delta: float) -> int:
    """Count members surviving greedy prefix pruning at threshold ``delta``.

    Members are visited in codebook order; one is kept only when its response
    distance to every already-kept member is at least ``delta``.
    """
    _require_domain(distances, DOMAIN_RESPONSE)
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    values = distances.values
    kept: list[int] = []
    for member in codebook.members:
        if all(values[member, other] >= delta for other in kept):
            kept.append(member)
    return len(kept)


def save_codebook(codebook: Codebook, path) -> None:
    lines = [
        "# frisim codebook v1",
        f"method={codebook.selection_method}",
        f"seed={'none' if codebook.seed is None else codebook.seed}",
        "members=" + ",".join(str(m) for m in codebook.members),
        f"d_min={format_float(codebook.d_min)}",
        f"bit_width={format_float(codebook.bit_width)}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_codebook(path) -> Codebook:
    header: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, value = parse_key_value(line)
        header[key] = value
    try:
        method = header["method"]
        seed_txt = header["seed"]
        members = tuple(int(tok) for tok in header["members"].split(",") if tok)
        d_min = float(header["d_min"])
        bit_width = float(header["bit_width"])
    except KeyError as missing:
        raise ValueError(f"codebook file is missing key {missing}") from None
    if method not in SELECTION_METHODS:
        raise ValueError(f"unknown selection method {method!r}")
    return Codebook(
        members=members,
        selection_method=method,
        d_min=d_min,
        bit_width=bit_width,
        seed=None if seed_txt == "none" else int(seed_txt),
    )
