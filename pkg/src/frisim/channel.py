"""Cascaded channel draws, near-field coupling, and effective configuration responses.

The receive-side response of a configuration with activation mask ``s`` is

    u = C s                (coupling leaks drive into neighbouring elements)
    h[r] = sum_m u[m] * cascaded[m, r]

where ``C`` is the coupling operator and ``cascaded[m, r]`` is the product of
the transmitter-to-element-m gain and the element-m-to-antenna-r gain.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from frisim.geometry import ApertureGrid, CandidateSet, Configuration, activation_mask
from frisim.serialize import format_float, parse_key_value

RAYLEIGH = "rayleigh"
LOS = "los"
FADING_MODES = (RAYLEIGH, LOS)

KERNEL_SINC = "sinc"
KERNEL_EXPONENTIAL = "exponential"
KERNEL_NONE = "none"
KERNELS = (KERNEL_SINC, KERNEL_EXPONENTIAL, KERNEL_NONE)

_EXP_RANGE = 0.25  # e-folding distance of the exponential kernel, wavelengths


@dataclass(frozen=True)
class ChannelParams:
    """Propagation and calibration parameters.

    Positions are 3D coordinates in wavelengths and are only used in ``los``
    mode; receive antennas form a line along +x starting at ``rx_position``
    with pitch ``rx_spacing``.
    """

    rx_antennas: int = 4
    fading: str = RAYLEIGH
    tx_position: tuple[float, float, float] = (0.0, 0.0, 50.0)
    rx_position: tuple[float, float, float] = (20.0, 0.0, 30.0)
    rx_spacing: float = 0.5
    coupling_strength: float = 0.6
    estimation_error_var: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rx_antennas < 1:
            raise ValueError(f"rx_antennas must be >= 1, got {self.rx_antennas}")
        if self.fading not in FADING_MODES:
            raise ValueError(f"unknown fading mode {self.fading!r}")
        if not 0.0 <= self.coupling_strength <= 1.0:
            raise ValueError(
                f"coupling_strength must lie in [0, 1], got {self.coupling_strength}")
        if self.estimation_error_var < 0:
            raise ValueError("estimation_error_var must be >= 0")
        if not (self.rx_spacing > 0):
            raise ValueError("rx_spacing must be positive")
        for name in ("tx_position", "rx_position"):
            if len(getattr(self, name)) != 3:
                raise ValueError(f"{name} must have 3 coordinates")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One draw of the cascaded transmitter-surface-receiver gains, shape (N, R)."""

    cascaded: np.ndarray
    seed: int

    @property
    def n_elements(self) -> int:
        return self.cascaded.shape[0]

    @property
    def rx_antennas(self) -> int:
        return self.cascaded.shape[1]


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Linear leakage operator with unit self-coupling on the diagonal."""

    entries: np.ndarray
    kernel: str
    rho: float

    @property
    def n_elements(self) -> int:
        return self.entries.shape[0]


def draw_channel(grid: ApertureGrid, params: ChannelParams) -> ChannelRealization:
    """Draw the (N, R) cascaded gain matrix for one coherence interval."""
    n, r = grid.n_elements, params.rx_antennas
    if params.fading == RAYLEIGH:
        rng = np.random.default_rng(params.seed)
        tx_gain = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        rx_gain = (rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))) / np.sqrt(2)
        cascaded = tx_gain[:, None] * rx_gain
    else:
        pos = np.column_stack((grid.positions, np.zeros(n)))
        tx = np.asarray(params.tx_position, dtype=float)
        antennas = (np.asarray(params.rx_position, dtype=float)[None, :]
                    + np.outer(np.arange(r) * params.rx_spacing, np.array([1.0, 0.0, 0.0])))
        d_tx = np.sqrt(((pos - tx) ** 2).sum(axis=1))
        d_rx = np.sqrt(((pos[:, None, :] - antennas[None, :, :]) ** 2).sum(axis=-1))
        # Reduce the path length modulo one wavelength first so that integer
        # totals map to a phase of exactly zero.
        total = np.mod(d_tx[:, None] + d_rx, 1.0)
        cascaded = np.exp(-2j * np.pi * total)
    return ChannelRealization(cascaded=cascaded, seed=int(params.seed))


def coupling_matrix(grid: ApertureGrid, rho: float, kernel: str) -> CouplingMatrix:
    """Build the element-to-element coupling operator for the grid."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"coupling strength must lie in [0, 1], got {rho}")
    if kernel not in KERNELS:
        raise ValueError(f"unknown coupling kernel {kernel!r}")
    n = grid.n_elements
    if kernel == KERNEL_NONE:
        entries = np.eye(n)
    else:
        pos = grid.positions
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((diff ** 2).sum(axis=-1))
        if kernel == KERNEL_SINC:
            x = 2.0 * dist
            entries = rho * np.sinc(x)
            # sin(k*pi) is exactly zero for integer k; pin the float result too.
            exact_zero = (x > 0) & (x == np.round(x))
            entries[exact_zero] = 0.0
        else:
            entries = rho * np.exp(-dist / _EXP_RANGE)
        np.fill_diagonal(entries, 1.0)
    return CouplingMatrix(entries=entries, kernel=kernel, rho=float(rho))


def _mask_response(mask: np.ndarray, realization: ChannelRealization,
                   coupling: CouplingMatrix) -> np.ndarray:
    drive = coupling.entries @ mask
    return drive @ realization.cascaded


def effective_response(config: Configuration, realization: ChannelRealization,
                       coupling: CouplingMatrix) -> np.ndarray:
    """(R,) receive-side response of a configuration under coupling leakage."""
    n = coupling.n_elements
    if realization.n_elements != n:
        raise ValueError("realization and coupling matrix have different element counts")
    return _mask_response(activation_mask(config, n), realization, coupling)


def group_equivalent_response(unit: frozenset[int], realization: ChannelRealization,
                              coupling: CouplingMatrix) -> np.ndarray:
    """Response of activating exactly one unit; the unit-level channel entry."""
    n = coupling.n_elements
    mask = np.zeros(n)
    idx = sorted(unit)
    if not idx:
        raise ValueError("unit has no elements")
    if idx[-1] >= n:
        raise ValueError("unit references elements outside the grid")
    mask[idx] = 1.0
    return _mask_response(mask, realization, coupling)


@dataclass(frozen=True)
class MapProvenance:
    channel_seed: int
    rho: float
    kernel: str


@dataclass(frozen=True, eq=False)
class ResponseMap:
    """Per-candidate receive responses; row i belongs to candidate id i."""

    values: np.ndarray  # (M, R) complex
    provenance: MapProvenance

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def rx_antennas(self) -> int:
        return self.values.shape[1]

    def response(self, candidate_id: int) -> np.ndarray:
        return self.values[candidate_id]


def build_response_map(candidates: CandidateSet, realization: ChannelRealization,
                       coupling: CouplingMatrix, estimation_error_var: float,
                       seed: int) -> ResponseMap:
    """Compute every candidate's response, optionally with calibration noise.

    The perturbation stream is partitioned by candidate id, so the map is
    identical no matter how construction is ordered or distributed.
    """
    if estimation_error_var < 0:
        raise ValueError("estimation_error_var must be >= 0")
    m = len(candidates)
    r = realization.rx_antennas
    values = np.empty((m, r), dtype=complex)
    scale = np.sqrt(estimation_error_var / 2.0)
    for i, cfg in enumerate(candidates.configurations):
        h = effective_response(cfg, realization, coupling)
        if estimation_error_var > 0:
            rng = np.random.default_rng([seed, i])
            h = h + scale * (rng.standard_normal(r) + 1j * rng.standard_normal(r))
        values[i] = h
    provenance = MapProvenance(channel_seed=realization.seed, rho=coupling.rho,
                               kernel=coupling.kernel)
    return ResponseMap(values=values, provenance=provenance)


def save_response_map(response_map: ResponseMap, path) -> None:
    prov = response_map.provenance
    lines = [
        "# frisim response-map v1",
        f"seed={prov.channel_seed}",
        f"rho={format_float(prov.rho)}",
        f"kernel={prov.kernel}",
        f"rx_antennas={response_map.rx_antennas}",
        f"count={len(response_map)}",
    ]
    for i in range(len(response_map)):
        parts = [str(i)]
        for z in response_map.values[i]:
            parts.append(format_float(z.real))
            parts.append(format_float(z.imag))
        lines.append(" ".join(parts))
    Path(path).write_text("\n".join(lines) + "\n")


def load_response_map(path) -> ResponseMap:
    header: dict[str, str] = {}
    records: list[tuple[int, list[float]]] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:
            key, value = parse_key_value(line)
            header[key] = value
        else:
            tokens = line.split()
            records.append((int(tokens[0]), [float(tok) for tok in tokens[1:]]))
    try:
        seed = int(header["seed"])
        rho = float(header["rho"])
        kernel = header["kernel"]
        r = int(header["rx_antennas"])
        count = int(header["count"])
    except KeyError as missing:
        raise ValueError(f"response-map file is missing key {missing}") from None
    if count != len(records):
        raise ValueError(f"response-map file declares {count} records, found {len(records)}")
    values = np.empty((count, r), dtype=complex)
    seen = set()
    for cid, comps in records:
        if cid in seen or not 0 <= cid < count:
            raise ValueError(f"bad candidate id {cid} in response-map file")
        seen.add(cid)
        if len(comps) != 2 * r:
            raise ValueError(f"candidate {cid} has {len(comps)} components, expected {2 * r}")
        arr = np.asarray(comps).reshape(r, 2)
        values[cid] = arr[:, 0] + 1j * arr[:, 1]
    return ResponseMap(values=values,
                       provenance=MapProvenance(channel_seed=seed, rho=rho, kernel=kernel))
