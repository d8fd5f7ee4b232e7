"""CSV and JSON interchange for matrices, tensors, spectra and run outputs.

All floats are written with 17 significant digits so parsing an emitted file
reproduces the binary doubles exactly.  Site labels and permutations are
1-based in files, 0-based in memory.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .experiments import EnsembleStats, MethodStats, build_state
from .spectra import CutSpectrum
from .tensor import CorrelatedState, OccupationTensor, PartialIsometry

FLOAT_FORMAT = ".17g"

ZERO_FLOOR_NOTE = "exact zeros floored at 1e-300 for log statistics; see zero_count"

STATS_HEADER = ("index", "mean_log10", "std_log10", "median_log10",
                "q25_log10", "q75_log10", "zero_count")


def fmt(value: float) -> str:
    return format(float(value), FLOAT_FORMAT)


def _parse_float(text: str, line: int, column: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line=line, column=column) from None


def write_matrix_csv(path, matrix) -> None:
    """Write a bare numeric matrix, one CSV row per matrix row, no header."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        for row in matrix:
            writer.writerow([fmt(x) for x in row])


def read_matrix_csv(path) -> np.ndarray:
    """Read a bare numeric matrix; malformed cells raise ParseError with location."""
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not row:
                continue
            rows.append((lineno, [_parse_float(cell.strip(), lineno, col + 1)
                                  for col, cell in enumerate(row)]))
    if not rows:
        raise ParseError(f"{path}: empty matrix file")
    width = len(rows[0][1])
    for lineno, row in rows:
        if len(row) != width:
            raise ParseError(f"expected {width} columns, got {len(row)}", line=lineno)
    return np.array([row for _, row in rows], dtype=np.float64)


def read_isometry_csv(path, **kwargs) -> PartialIsometry:
    return PartialIsometry(read_matrix_csv(path), **kwargs)


def write_tensor_csv(path, tensor: OccupationTensor) -> None:
    """Debug dump: one (bitstring, coefficient) row per basis state."""
    l = tensor.n_modes
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bitstring", "coefficient"])
        for idx, value in enumerate(tensor.coefficients):
            writer.writerow([format(idx, f"0{l}b"), fmt(value)])


def read_tensor_csv(path, n_particles: int) -> OccupationTensor:
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or header[:2] != ["bitstring", "coefficient"]:
            raise ParseError(f"{path}: missing 'bitstring,coefficient' header", line=1)
        entries = {}
        n_modes = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError("expected two columns", line=lineno)
            bits = row[0].strip()
            if n_modes is None:
                n_modes = len(bits)
            if len(bits) != n_modes or set(bits) - {"0", "1"}:
                raise ParseError(f"bad bitstring {bits!r}", line=lineno, column=1)
            entries[int(bits, 2)] = _parse_float(row[1], lineno, 2)
    if n_modes is None:
        raise ParseError(f"{path}: no data rows")
    coeffs = np.zeros(1 << n_modes)
    for idx, value in entries.items():
        coeffs[idx] = value
    return OccupationTensor(coeffs, n_particles)


def write_spectrum_csv(path, spectra) -> None:
    """Write cut spectra as rows (k, j, sigma, prefactor); one row per value.

    The prefactor column is empty for spectra that do not carry one.
    """
    if isinstance(spectra, CutSpectrum):
        spectra = [spectra]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["k", "j", "sigma", "prefactor"])
        for spec in spectra:
            pref = "" if spec.prefactor is None else fmt(spec.prefactor)
            for j, sigma in enumerate(spec.values, start=1):
                writer.writerow([spec.k, j, fmt(sigma), pref])


def read_spectrum_csv(path) -> dict[int, np.ndarray]:
    """Back-parse a spectrum CSV into {cut: descending value array}."""
    out: dict[int, list[float]] = {}
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or header[:3] != ["k", "j", "sigma"]:
            raise ParseError(f"{path}: missing 'k,j,sigma' header", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            k = int(_parse_float(row[0], lineno, 1))
            out.setdefault(k, []).append(_parse_float(row[2], lineno, 3))
    return {k: np.array(v) for k, v in out.items()}


def write_stats_csv(path, stats: MethodStats) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(STATS_HEADER)
        for i in range(stats.n_values):
            writer.writerow([
                i + 1,
                fmt(stats.mean_log10[i]),
                fmt(stats.std_log10[i]),
                fmt(stats.median_log10[i]),
                fmt(stats.q25_log10[i]),
                fmt(stats.q75_log10[i]),
                int(stats.zero_count[i]),
            ])


def read_stats_csv(path) -> dict[str, np.ndarray]:
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != STATS_HEADER:
            raise ParseError(f"{path}: unexpected stats header {header!r}", line=1)
        columns = {name: [] for name in STATS_HEADER}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(STATS_HEADER):
                raise ParseError("wrong column count", line=lineno)
            for name, cell in zip(STATS_HEADER, row):
                columns[name].append(_parse_float(cell, lineno, 1))
    return {name: np.array(vals) for name, vals in columns.items()}


def load_state_json(path) -> CorrelatedState:
    """Read a correlated-state spec from JSON.

    Two forms are accepted: an explicit state with 1-based "index_sets",
    "amplitudes" and either an "orbitals" matrix inline or an "orbitals_csv"
    path (relative paths resolve against the JSON file), or a generator form
    with "family", "n_particles", "n_orbitals" and "seed".
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    if "family" in data:
        for key in ("n_particles", "n_orbitals", "seed"):
            if key not in data:
                raise ParseError(f"{path}: generator form needs {key!r}")
        return build_state(data["family"], int(data["n_particles"]),
                           int(data["n_orbitals"]), int(data["seed"]))
    for key in ("amplitudes", "index_sets"):
        if key not in data:
            raise ParseError(f"{path}: missing {key!r}")
    if "orbitals" in data:
        orbitals = PartialIsometry(np.asarray(data["orbitals"], dtype=np.float64))
    elif "orbitals_csv" in data:
        csv_path = Path(data["orbitals_csv"])
        if not csv_path.is_absolute():
            csv_path = path.parent / csv_path
        orbitals = read_isometry_csv(csv_path)
    else:
        raise ParseError(f"{path}: need 'orbitals' or 'orbitals_csv'")
    amps = [float(a) for a in data["amplitudes"]]
    sets = [tuple(int(i) - 1 for i in s) for s in data["index_sets"]]
    if len(amps) != len(sets):
        raise ParseError(f"{path}: {len(amps)} amplitudes but {len(sets)} index sets")
    return CorrelatedState(orbitals, list(zip(amps, sets)))


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _count_rows(path: Path) -> int:
    with open(path, "r", newline="", encoding="utf-8") as handle:
        return sum(1 for row in csv.reader(handle) if row)


def write_manifest(path, stats: EnsembleStats, files: dict[str, Path],
                   master_seed: int, version: str) -> dict:
    """Write the run manifest and return the payload.

    Every referenced CSV is recorded with its on-disk row count (data rows,
    header excluded); `check_manifest` re-verifies those claims.
    """
    path = Path(path)
    methods = {}
    for name, ms in stats.methods.items():
        file_path = Path(files[name])
        methods[name] = {
            "csv": file_path.name,
            "rows": _count_rows(file_path) - 1,
            "wall_time_s": ms.wall_time_s,
        }
    payload = {
        "config": stats.config.to_dict(),
        "master_seed": master_seed,
        "methods": methods,
        "library_version": version,
        "warnings": list(stats.warnings),
        "block_fallbacks": stats.block_fallbacks,
        "zero_floor": ZERO_FLOOR_NOTE,
    }
    write_json(path, payload)
    return payload


def check_manifest(path) -> None:
    """Verify that files referenced by a manifest exist with the declared row counts."""
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    for name, entry in data.get("methods", {}).items():
        file_path = path.parent / entry["csv"]
        if not file_path.exists():
            raise ValidationError(f"manifest references missing file {file_path}")
        rows = _count_rows(file_path) - 1
        if rows != entry["rows"]:
            raise ValidationError(
                f"{file_path} has {rows} data rows, manifest declares {entry['rows']}"
            )
