"""Experiment orchestration: validated runs, CSV result tables, built-in scenarios.

Every random consumer draws from its own derived stream, so reruns of the same
configuration are byte-identical, including aggregated CSV artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from frisim._version import __version__
from frisim.channel import (ChannelParams, build_response_map, coupling_matrix,
                            draw_channel, save_response_map)
from frisim.codebook import (METHOD_EXACT, METHOD_FIXED_RIS, METHOD_GREEDY,
                             METHOD_LAYOUT, METHOD_RANDOM, Codebook, DistanceMatrix,
                             layout_distances, pairwise_distances, save_codebook,
                             select_layout_maxmin, select_maxmin_exact,
                             select_maxmin_greedy, select_random)
from frisim.config import ConfigError, ExperimentConfig, config_hash, require_valid
from frisim.detection import BerEstimate, SignalModel, noise_for_snr_db, simulate_ber
from frisim.geometry import (CandidateSet, GranularityMode, InfeasibleConstraintError,
                             build_grid, default_min_unit_spacing, enumerate_candidates,
                             partition, save_candidate_set)
from frisim.seeding import derive_seed
from frisim.serialize import format_float
from frisim.throughput import OverheadParams, granularity_sweep

# Seed-path tags; distinct tags give independent streams for each consumer.
TAG_CHANNEL = 1
TAG_MAP = 2
TAG_SELECT = 3
TAG_BER = 4
TAG_CANDIDATES = 5
TAG_SWEEP_SEEDS = 7

_METHOD_SEED_IDS = {
    METHOD_FIXED_RIS: 1,
    METHOD_RANDOM: 2,
    METHOD_LAYOUT: 3,
    METHOD_GREEDY: 4,
    METHOD_EXACT: 5,
}
_FIXED_MODE_INDEX = 255  # pseudo-mode slot for the fixed-quadrant baseline

SCHEMA_BER_PER_SEED = "ber_per_seed_v1"
SCHEMA_BER_AGGREGATE = "ber_aggregate_v1"
SCHEMA_CODEBOOKS = "codebooks_v1"
SCHEMA_SWEEP = "granularity_sweep_v1"
SCHEMA_ERRORS = "error_manifest_v1"

BER_PER_SEED_COLUMNS = ("seed", "method", "K", "n_act", "mode", "snr_db", "trials",
                        "errors", "p_hat", "ci95")
BER_AGGREGATE_COLUMNS = ("method", "K", "n_act", "mode", "snr_db", "trials",
                         "errors", "p_hat", "ci95")
CODEBOOK_COLUMNS = ("seed", "method", "K", "mode", "d_min")
SWEEP_COLUMNS = ("mode", "unit_count", "K", "K_eff", "raw_bits",
                 "overhead_fraction", "p_e", "net_bits")
ERROR_COLUMNS = ("stage", "mode", "method", "seed", "message")


@dataclass(frozen=True)
class ResultTable:
    """Schema-tagged rows plus run metadata, emitted as commented CSV."""

    schema: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    metadata: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(
                    f"row arity {len(row)} does not match {len(self.columns)} columns")


def _format_cell(value) -> str:
    if isinstance(value, bool):
        raise TypeError("boolean cells are not part of any schema")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    text = str(value)
    if "," in text or "\n" in text or "#" in text:
        raise ValueError(f"cell value {text!r} would corrupt the CSV")
    return text


def emit_table(table: ResultTable, path) -> None:
    """Write the table as CSV with ``#`` metadata lines; 17 significant digits."""
    lines = [f"# schema={table.schema}"]
    for key, value in table.metadata:
        lines.append(f"# {key}={value}")
    lines.append(",".join(table.columns))
    for row in table.rows:
        lines.append(",".join(_format_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_cell(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_table(path) -> ResultTable:
    """Parse a table written by emit_table; numeric cells round-trip exactly."""
    schema = ""
    metadata: list[tuple[str, str]] = []
    columns: tuple[str, ...] | None = None
    rows: list[tuple] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key == "schema":
                schema = value
            else:
                metadata.append((key, value))
            continue
        if columns is None:
            columns = tuple(line.split(","))
            continue
        rows.append(tuple(_parse_cell(tok) for tok in line.split(",")))
    if columns is None:
        raise ValueError(f"{path} contains no column header")
    return ResultTable(schema=schema, columns=columns, rows=tuple(rows),
                       metadata=tuple(metadata))


def _base_metadata(config: ExperimentConfig,
                   extra: tuple[tuple[str, str], ...] = ()) -> tuple[tuple[str, str], ...]:
    return extra + (
        ("config_hash", config_hash(config)),
        ("seeds", ",".join(str(s) for s in config.seeds)),
        ("trials", str(config.trials)),
        ("tool_version", __version__),
    )


def _channel_params(config: ExperimentConfig, seed: int) -> ChannelParams:
    return ChannelParams(
        rx_antennas=config.rx_antennas,
        fading=config.fading,
        tx_position=config.tx_position,
        rx_position=config.rx_position,
        rx_spacing=config.rx_spacing,
        coupling_strength=config.rho,
        estimation_error_var=config.estimation_error_var,
        seed=seed,
    )


def _spacing_rule(config: ExperimentConfig, mode: GranularityMode) -> float:
    if config.min_unit_spacing is None:
        return default_min_unit_spacing(mode)
    return config.min_unit_spacing


def _d_min_of(distances: DistanceMatrix, members) -> float:
    idx = list(members)
    sub = distances.values[np.ix_(idx, idx)]
    iu = np.triu_indices(len(idx), k=1)
    return float(sub[iu].min())


def _select_codebook(method: str, distances: DistanceMatrix,
                     layout: DistanceMatrix | None, design_map, k: int,
                     seed: int) -> Codebook:
    if method == METHOD_GREEDY:
        return select_maxmin_greedy(distances, k)
    if method == METHOD_EXACT:
        return select_maxmin_exact(distances, k)
    if method == METHOD_RANDOM:
        return select_random(distances, k, seed)
    if method == METHOD_LAYOUT:
        assert layout is not None
        return select_layout_maxmin(layout, design_map, k)
    raise ValueError(f"method {method!r} has no selector")


@dataclass(frozen=True)
class _ModeContext:
    index: int
    mode: GranularityMode
    candidates: CandidateSet
    layout: DistanceMatrix | None


def run_ber(config: ExperimentConfig) -> dict[str, ResultTable]:
    """BER-vs-SNR sweep over (mode, method, seed); returns the result tables.

    Returns keys ``ber_per_seed``, ``ber_aggregate``, ``codebooks`` and, when
    any stage failed, ``errors``. Completed combinations are always reported.
    """
    require_valid(config, for_ber=True)
    grid = build_grid(config.grid_rows, config.grid_cols, config.grid_spacing)
    coupling = coupling_matrix(grid, config.rho, config.kernel)
    mode_methods = tuple(m for m in config.methods if m != METHOD_FIXED_RIS)

    error_rows: list[tuple] = []
    contexts: list[_ModeContext] = []
    for mode_idx, mode in enumerate(config.modes):
        part = partition(grid, mode)
        try:
            candidates = enumerate_candidates(
                part, config.n_act, config.m_samples, _spacing_rule(config, mode),
                seed=derive_seed(config.candidate_seed, TAG_CANDIDATES, mode_idx))
        except (InfeasibleConstraintError, ValueError) as exc:
            error_rows.append(("candidates", mode.label, "", -1, str(exc)))
            continue
        layout = (layout_distances(candidates)
                  if METHOD_LAYOUT in mode_methods else None)
        contexts.append(_ModeContext(mode_idx, mode, candidates, layout))

    fixed_candidates = None
    fixed_mode_label = ""
    if METHOD_FIXED_RIS in config.methods:
        quad_mode = GranularityMode.block(grid.rows // 2, grid.cols // 2)
        quad_part = partition(grid, quad_mode)
        fixed_candidates = enumerate_candidates(quad_part, config.n_act, 4, 0.0, seed=0)
        fixed_mode_label = quad_mode.label

    per_seed_rows: list[tuple] = []
    codebook_rows: list[tuple] = []
    # (method, K, mode_label, snr_index) -> [trials, errors, snr_db]
    totals: dict[tuple, list] = {}

    def run_cell(seed: int, mode_idx: int, mode_label: str, method: str,
                 codebook: Codebook, design_map, truth) -> None:
        codebook_rows.append((seed, method, len(codebook.members), mode_label,
                              codebook.d_min))
        if config.trials < 1:
            return
        mid = _METHOD_SEED_IDS[method]
        for snr_idx, snr in enumerate(config.snr_db):
            n0 = noise_for_snr_db(codebook, design_map, snr)
            est = simulate_ber(
                codebook, design_map, SignalModel(noise_n0=n0), config.trials,
                seed=derive_seed(seed, TAG_BER, mode_idx, mid, snr_idx), truth=truth)
            per_seed_rows.append((seed, method, len(codebook.members), config.n_act,
                                  mode_label, snr, est.trials, est.errors, est.p_hat,
                                  est.ci95_half_width))
            key = (method, len(codebook.members), mode_label, snr_idx)
            cell = totals.setdefault(key, [0, 0, snr])
            cell[0] += est.trials
            cell[1] += est.errors

    for seed in config.seeds:
        params = _channel_params(config, derive_seed(seed, TAG_CHANNEL))
        realization = draw_channel(grid, params)
        for ctx in contexts:
            design_map = build_response_map(
                ctx.candidates, realization, coupling, config.estimation_error_var,
                seed=derive_seed(seed, TAG_MAP, ctx.index))
            truth = None
            if config.estimation_error_var > 0:
                truth = build_response_map(ctx.candidates, realization, coupling,
                                           0.0, seed=0)
            distances = pairwise_distances(design_map)
            for method in mode_methods:
                try:
                    codebook = _select_codebook(
                        method, distances, ctx.layout, design_map, config.k,
                        seed=derive_seed(seed, TAG_SELECT, ctx.index))
                except ValueError as exc:
                    error_rows.append(("codebook", ctx.mode.label, method, seed,
                                       str(exc)))
                    continue
                run_cell(seed, ctx.index, ctx.mode.label, method, codebook,
                         design_map, truth)
        if fixed_candidates is not None:
            fixed_map = build_response_map(
                fixed_candidates, realization, coupling, config.estimation_error_var,
                seed=derive_seed(seed, TAG_MAP, _FIXED_MODE_INDEX))
            fixed_truth = None
            if config.estimation_error_var > 0:
                fixed_truth = build_response_map(fixed_candidates, realization,
                                                 coupling, 0.0, seed=0)
            fixed_distances = pairwise_distances(fixed_map)
            members = tuple(range(len(fixed_candidates)))
            fixed_codebook = Codebook(
                members=members,
                selection_method=METHOD_FIXED_RIS,
                d_min=_d_min_of(fixed_distances, members),
                bit_width=float(np.log2(len(members))),
            )
            run_cell(seed, _FIXED_MODE_INDEX, fixed_mode_label, METHOD_FIXED_RIS,
                     fixed_codebook, fixed_map, fixed_truth)

    aggregate_rows: list[tuple] = []
    for method in config.methods:
        labels = ([fixed_mode_label] if method == METHOD_FIXED_RIS
                  else [ctx.mode.label for ctx in contexts])
        for mode_label in labels:
            for snr_idx in range(len(config.snr_db)):
                for key, cell in totals.items():
                    if key[0] == method and key[2] == mode_label and key[3] == snr_idx:
                        est = BerEstimate.from_counts(cell[0], cell[1])
                        aggregate_rows.append((method, key[1], config.n_act, mode_label,
                                               cell[2], est.trials, est.errors,
                                               est.p_hat, est.ci95_half_width))

    meta = _base_metadata(config)
    tables = {
        "ber_per_seed": ResultTable(SCHEMA_BER_PER_SEED, BER_PER_SEED_COLUMNS,
                                    tuple(per_seed_rows), meta),
        "ber_aggregate": ResultTable(SCHEMA_BER_AGGREGATE, BER_AGGREGATE_COLUMNS,
                                     tuple(aggregate_rows), meta),
        "codebooks": ResultTable(SCHEMA_CODEBOOKS, CODEBOOK_COLUMNS,
                                 tuple(codebook_rows), meta),
    }
    if error_rows:
        tables["errors"] = ResultTable(SCHEMA_ERRORS, ERROR_COLUMNS,
                                       tuple(error_rows), meta)
    return tables


def run_sweep(config: ExperimentConfig) -> dict[str, ResultTable]:
    """Granularity sweep at the reference SNR; returns ``sweep`` (+ ``errors``)."""
    require_valid(config, for_ber=False)
    grid = build_grid(config.grid_rows, config.grid_cols, config.grid_spacing)
    params = _channel_params(config, derive_seed(config.seeds[0], TAG_CHANNEL))
    overhead = OverheadParams(alpha_unit=config.alpha_unit,
                              beta_codeword=config.beta_codeword,
                              coherence_symbols=config.coherence_symbols)
    entries = granularity_sweep(
        grid, config.modes, config.n_act, config.k, params, overhead,
        snr_db=config.sweep_snr_db, trials=config.trials,
        seeds=[derive_seed(s, TAG_SWEEP_SEEDS) for s in config.seeds],
        m_samples=config.m_samples, min_unit_spacing=config.min_unit_spacing,
        kernel=config.kernel, delta_frac=config.keff_delta_frac,
        candidate_seed=config.candidate_seed)

    sweep_rows: list[tuple] = []
    error_rows: list[tuple] = []
    for entry in entries:
        if entry.report is not None:
            rep = entry.report
            sweep_rows.append((entry.mode.label, rep.unit_count, rep.k, rep.k_eff,
                               rep.raw_bits, rep.overhead_fraction, rep.p_e,
                               rep.net_bits))
        else:
            error_rows.append(("sweep", entry.mode.label, METHOD_GREEDY, -1,
                               entry.error))
    meta = _base_metadata(config)
    tables = {"sweep": ResultTable(SCHEMA_SWEEP, SWEEP_COLUMNS,
                                   tuple(sweep_rows), meta)}
    if error_rows:
        tables["errors"] = ResultTable(SCHEMA_ERRORS, ERROR_COLUMNS,
                                       tuple(error_rows), meta)
    return tables


def run_pipeline(config: ExperimentConfig, include_ber: bool = True,
                 include_sweep: bool = True) -> list[ResultTable]:
    """Run the requested stages in workflow order and return every table."""
    tables: list[ResultTable] = []
    if include_ber:
        ber = run_ber(config)
        tables.extend(ber[name] for name in ("ber_per_seed", "ber_aggregate",
                                             "codebooks") if name in ber)
        if "errors" in ber:
            tables.append(ber["errors"])
    if include_sweep:
        sweep = run_sweep(config)
        tables.append(sweep["sweep"])
        if "errors" in sweep:
            tables.append(sweep["errors"])
    return tables


def design_artifacts(config: ExperimentConfig, out_dir) -> list[Path]:
    """Produce the design-stage artifacts: candidates, response map, codebooks."""
    require_valid(config, for_ber=True)
    if METHOD_FIXED_RIS in config.methods:
        raise ConfigError("fixed_ris is a baseline without a designable codebook; "
                          "remove it from codebook.methods for the design command")
    grid = build_grid(config.grid_rows, config.grid_cols, config.grid_spacing)
    coupling = coupling_matrix(grid, config.rho, config.kernel)
    mode = config.modes[0]
    part = partition(grid, mode)
    candidates = enumerate_candidates(
        part, config.n_act, config.m_samples, _spacing_rule(config, mode),
        seed=derive_seed(config.candidate_seed, TAG_CANDIDATES, 0))
    seed = config.seeds[0]
    params = _channel_params(config, derive_seed(seed, TAG_CHANNEL))
    realization = draw_channel(grid, params)
    design_map = build_response_map(candidates, realization, coupling,
                                    config.estimation_error_var,
                                    seed=derive_seed(seed, TAG_MAP, 0))
    distances = pairwise_distances(design_map)
    layout = (layout_distances(candidates)
              if METHOD_LAYOUT in config.methods else None)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "candidates.txt", out / "response_map.txt"]
    save_candidate_set(candidates, paths[0])
    save_response_map(design_map, paths[1])
    for method in config.methods:
        codebook = _select_codebook(method, distances, layout, design_map, config.k,
                                    seed=derive_seed(seed, TAG_SELECT, 0))
        path = out / f"codebook_{method}.txt"
        save_codebook(codebook, path)
        paths.append(path)
    return paths


# Built-in scenarios. Scenario A sweeps BER vs SNR for four selection methods
# on an element-mode candidate pool; scenario B compares granularities at a
# fixed reference SNR.

SCENARIO_A_SNR = tuple(-5.0 + 2.5 * i for i in range(11))
SCENARIO_A_SEED_COUNT = 200
SCENARIO_A_TRIALS = 10_000
SCENARIO_B_TRIALS = 5_000
SCENARIO_B_ESTIMATION_SEEDS = 4


def scenario_a_config(*, seed_count: int = SCENARIO_A_SEED_COUNT,
                      trials: int = SCENARIO_A_TRIALS, base_seed: int = 1,
                      out_dir: str = "out") -> ExperimentConfig:
    return ExperimentConfig(
        grid_rows=8, grid_cols=8, grid_spacing=0.5,
        modes=(GranularityMode.element(),),
        n_act=16, m_samples=512, min_unit_spacing=0.0,
        candidate_seed=derive_seed(base_seed, TAG_CANDIDATES),
        fading="rayleigh", rx_antennas=4, rho=0.6, kernel="sinc",
        estimation_error_var=0.0,
        methods=(METHOD_FIXED_RIS, METHOD_RANDOM, METHOD_LAYOUT, METHOD_GREEDY),
        k=8, snr_db=SCENARIO_A_SNR, trials=trials,
        seeds=tuple(base_seed + i for i in range(seed_count)),
        out_dir=out_dir,
    )


def reproduce_scenario_a(out_dir, *, seed_count: int = SCENARIO_A_SEED_COUNT,
                         trials: int = SCENARIO_A_TRIALS,
                         base_seed: int = 1) -> dict[str, ResultTable]:
    """Run scenario A and write its CSV artifacts; returns the tables."""
    config = scenario_a_config(seed_count=seed_count, trials=trials,
                               base_seed=base_seed, out_dir=str(out_dir))
    tables = run_ber(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_table(tables["ber_aggregate"], out / "scenario_a_ber.csv")
    emit_table(tables["ber_per_seed"], out / "scenario_a_ber_per_seed.csv")
    emit_table(tables["codebooks"], out / "scenario_a_codebooks.csv")
    if "errors" in tables:
        emit_table(tables["errors"], out / "scenario_a_errors.csv")
    return tables


def scenario_b_config(*, base_seed: int = 7, trials: int = SCENARIO_B_TRIALS,
                      out_dir: str = "out") -> ExperimentConfig:
    return ExperimentConfig(
        grid_rows=8, grid_cols=8, grid_spacing=0.5,
        modes=(GranularityMode.element(), GranularityMode.group(2, 2),
               GranularityMode.block(4, 4)),
        n_act=16, m_samples=512, min_unit_spacing=None,
        candidate_seed=derive_seed(base_seed, TAG_CANDIDATES),
        fading="rayleigh", rx_antennas=4, rho=0.6, kernel="sinc",
        estimation_error_var=0.0,
        methods=(METHOD_GREEDY,), k=8,
        snr_db=(10.0,), sweep_snr_db=10.0, trials=trials,
        seeds=tuple(derive_seed(base_seed, TAG_SWEEP_SEEDS, i)
                    for i in range(SCENARIO_B_ESTIMATION_SEEDS)),
        alpha_unit=1.0, beta_codeword=2.0, coherence_symbols=256.0,
        keff_delta_frac=0.1, out_dir=out_dir,
    )


def reproduce_scenario_b(out_dir, *, base_seed: int = 7,
                         trials: int = SCENARIO_B_TRIALS) -> dict[str, ResultTable]:
    """Run scenario B and write its CSV artifact; returns the tables."""
    config = scenario_b_config(base_seed=base_seed, trials=trials,
                               out_dir=str(out_dir))
    tables = run_sweep(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_table(tables["sweep"], out / "scenario_b_sweep.csv")
    if "errors" in tables:
        emit_table(tables["errors"], out / "scenario_b_errors.csv")
    return tables
