"""Random-state ensembles and the ordering-method benchmark harness.

A run draws per-trial random states (a single determinant or one of two
fixed superposition families), reorders each by the configured schemes,
computes the cut spectrum, and aggregates per-index statistics of
log10(sigma) across trials.  Everything is deterministic given the master
seed, independent of the number of worker processes.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegeneracyError, ValidationError
from .ordering import (AnnealConfig, anneal_prefactor_order, best_prefactor_order,
                       best_weighted_prefactor_order, canonical_order, fiedler_order)
from .rdm import mutual_information
from .spectra import cut_spectrum, slater_cut_spectrum
from .tensor import CorrelatedState, PartialIsometry, correlated_tensor, reorder_modes

FAMILIES = ("slater", "weak_correlated", "strong_correlated")

METHODS = ("canonical", "fiedler", "prefactor_exact", "prefactor_anneal",
           "weighted_prefactor")

#: Exact zeros are floored here before taking log10 and counted separately.
ZERO_FLOOR = 1e-300

_FAMILY_ALIASES = {"weak": "weak_correlated", "strong": "strong_correlated"}


def canonical_family(name: str) -> str:
    name = _FAMILY_ALIASES.get(str(name), str(name))
    if name not in FAMILIES:
        raise ValidationError(f"unknown family {name!r}; expected one of {FAMILIES}")
    return name


def family_orbital_rows(family: str, n_particles: int) -> int:
    """Number of orthonormal orbitals each family draws."""
    family = canonical_family(family)
    if family == "slater":
        return n_particles
    if family == "weak_correlated":
        return n_particles + 2
    return 2 * n_particles - 2


def family_terms(family: str, n_particles: int) -> list[tuple[float, tuple[int, ...]]]:
    """Amplitudes and orbital index sets defining each ensemble family."""
    family = canonical_family(family)
    n = int(n_particles)
    if family == "slater":
        return [(1.0, tuple(range(n)))]
    excited = tuple(range(n - 2)) + (n, n + 1)
    if family == "weak_correlated":
        if n < 2:
            raise ValidationError("the weakly correlated family needs n_particles >= 2")
        return [(math.sqrt(0.9), tuple(range(n))), (math.sqrt(0.1), excited)]
    # The excited term reaches orbital n+1, so 2n-2 rows require n >= 4.
    if n < 4:
        raise ValidationError("the strongly correlated family needs n_particles >= 4")
    return [
        (math.sqrt(0.4), tuple(range(n))),
        (math.sqrt(0.3), excited),
        (math.sqrt(0.3), tuple(range(n - 2, 2 * n - 2))),
    ]


def random_partial_isometry(rows: int, n_orbitals: int, seed, *, mode_cap=None) -> PartialIsometry:
    """First `rows` rows of the Q factor of a random Gaussian L x L matrix.

    The QR sign gauge is fixed by making the diagonal of R nonnegative, so a
    given seed reproduces the same matrix everywhere.
    """
    rng = np.random.default_rng(seed)
    gauss = rng.standard_normal((n_orbitals, n_orbitals))
    q, r = np.linalg.qr(gauss)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs[None, :]
    kwargs = {} if mode_cap is None else {"mode_cap": mode_cap}
    return PartialIsometry(q[:rows, :], **kwargs)


def build_state(family: str, n_particles: int, n_orbitals: int, seed) -> CorrelatedState:
    """Draw one random state of the given ensemble family."""
    rows = family_orbital_rows(family, n_particles)
    if rows > n_orbitals:
        raise ValidationError(
            f"family {family!r} needs {rows} orbitals but only {n_orbitals} modes exist"
        )
    orbitals = random_partial_isometry(rows, n_orbitals, seed)
    return CorrelatedState(orbitals, family_terms(family, n_particles))


def default_methods(family: str) -> tuple[str, ...]:
    if canonical_family(family) == "slater":
        return ("canonical", "fiedler", "prefactor_exact", "prefactor_anneal")
    return ("canonical", "fiedler", "prefactor_exact", "weighted_prefactor")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one ensemble run.

    `cut` defaults to L/2 (requiring even L); `methods` defaults per family;
    `anneal.seed` is ignored because annealing seeds are derived per trial
    from the master seed.  For correlated families, "prefactor_exact" ranks
    by the dominant determinant alone.
    """

    family: str
    n_particles: int
    n_orbitals: int
    trials: int
    master_seed: int
    cut: int | None = None
    methods: tuple[str, ...] | None = None
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    spectrum_method: str = "dense"
    exhaustive_cap: int = 10 ** 6

    def __post_init__(self):
        object.__setattr__(self, "family", canonical_family(self.family))
        if self.trials < 1:
            raise ValidationError("trials must be at least 1")
        if self.cut is None and self.n_orbitals % 2:
            raise ValidationError("cut defaults to L/2, which needs an even mode count")
        if self.cut is not None and not 1 <= self.cut <= self.n_orbitals - 1:
            raise ValidationError(f"cut {self.cut} outside 1..{self.n_orbitals - 1}")
        rows = family_orbital_rows(self.family, self.n_particles)
        if rows > self.n_orbitals:
            raise ValidationError(
                f"family {self.family!r} draws {rows} orbitals, more than "
                f"{self.n_orbitals} modes"
            )
        if self.methods is not None:
            methods = tuple(str(m) for m in self.methods)
            for m in methods:
                if m not in METHODS:
                    raise ValidationError(f"unknown method {m!r}; expected one of {METHODS}")
            object.__setattr__(self, "methods", methods)
        if self.spectrum_method not in ("dense", "block"):
            raise ValidationError("spectrum_method must be 'dense' or 'block'")

    @property
    def cut_index(self) -> int:
        return self.n_orbitals // 2 if self.cut is None else self.cut

    @property
    def method_list(self) -> tuple[str, ...]:
        return default_methods(self.family) if self.methods is None else self.methods

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "n_particles": self.n_particles,
            "n_orbitals": self.n_orbitals,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "cut": self.cut_index,
            "methods": list(self.method_list),
            "anneal": {"tau0": self.anneal.tau0, "decay": self.anneal.decay,
                       "max_iter": self.anneal.max_iter},
            "spectrum_method": self.spectrum_method,
            "exhaustive_cap": self.exhaustive_cap,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        anneal = data.get("anneal") or {}
        return cls(
            family=data["family"],
            n_particles=int(data["n_particles"]),
            n_orbitals=int(data["n_orbitals"]),
            trials=int(data["trials"]),
            master_seed=int(data["master_seed"]),
            cut=None if data.get("cut") is None else int(data["cut"]),
            methods=None if data.get("methods") is None else tuple(data["methods"]),
            anneal=AnnealConfig(
                tau0=float(anneal.get("tau0", 1.0)),
                decay=float(anneal.get("decay", 0.99)),
                max_iter=None if anneal.get("max_iter") is None else int(anneal["max_iter"]),
            ),
            spectrum_method=str(data.get("spectrum_method", "dense")),
            exhaustive_cap=int(data.get("exhaustive_cap", 10 ** 6)),
        )


@dataclass(frozen=True)
class MethodStats:
    """Per-index statistics of log10(sigma) across trials for one scheme."""

    method: str
    mean_log10: np.ndarray
    std_log10: np.ndarray
    median_log10: np.ndarray
    q25_log10: np.ndarray
    q75_log10: np.ndarray
    zero_count: np.ndarray
    n_trials: int
    wall_time_s: float

    @property
    def n_values(self) -> int:
        return self.mean_log10.size


@dataclass(frozen=True)
class EnsembleStats:
    """Aggregated output of run_ensemble."""

    config: ExperimentConfig
    methods: dict
    block_fallbacks: int
    warnings: tuple[str, ...]


def trial_seeds(master_seed: int, trials: int) -> np.ndarray:
    """(trials, 4) array of derived 32-bit seeds: state, anneal, two spares."""
    words = np.random.SeedSequence(int(master_seed)).generate_state(trials * 4)
    return words.reshape(trials, 4)


def _trial_spectra(cfg: ExperimentConfig, state_seed: int, anneal_seed: int):
    state = build_state(cfg.family, cfg.n_particles, cfg.n_orbitals, state_seed)
    tensor = correlated_tensor(state)
    k = cfg.cut_index
    methods = cfg.method_list
    need_im = "fiedler" in methods or "prefactor_anneal" in methods
    im = mutual_information(tensor) if need_im else None
    fiedler = fiedler_order(im) if need_im else None
    dominant = state.term_isometry(state.dominant_term())
    anneal_cfg = replace(cfg.anneal, seed=int(anneal_seed))

    values = {}
    times = {}
    fallbacks = 0
    warn = []
    for name in methods:
        start = time.perf_counter()
        if name == "canonical":
            result = canonical_order(cfg.n_orbitals)
        elif name == "fiedler":
            result = fiedler
        elif name == "prefactor_exact":
            result = best_prefactor_order(dominant, cap=cfg.exhaustive_cap)
        elif name == "prefactor_anneal":
            warm = sorted(int(i) for i in fiedler.order[:cfg.n_particles])
            result = anneal_prefactor_order(dominant, anneal_cfg, start=warm)
        else:
            result = best_weighted_prefactor_order(state, cut=k, cap=cfg.exhaustive_cap,
                                                   anneal=anneal_cfg)
        if result.degenerate:
            warn.append(f"degenerate Fiedler vector in method {name}")
        spec = None
        if cfg.spectrum_method == "block" and state.n_terms == 1:
            try:
                spec = slater_cut_spectrum(state.term_isometry(0).permuted(result.order),
                                           k, method="block")
            except DegeneracyError:
                fallbacks += 1
        if spec is None:
            spec = cut_spectrum(reorder_modes(tensor, result.order), k)
        values[name] = spec.values
        times[name] = time.perf_counter() - start
    return values, times, fallbacks, warn


def _trial_worker(payload):
    cfg, state_seed, anneal_seed = payload
    return _trial_spectra(cfg, state_seed, anneal_seed)


def run_ensemble(cfg: ExperimentConfig, workers: int = 1) -> EnsembleStats:
    """Run all trials of `cfg` and aggregate log10-spectrum statistics.

    `workers` > 1 distributes whole trials over processes; outputs are
    identical for any worker count because every trial is seeded from the
    master seed and aggregation runs in trial order.
    """
    seeds = trial_seeds(cfg.master_seed, cfg.trials)
    payloads = [(cfg, int(seeds[t, 0]), int(seeds[t, 1])) for t in range(cfg.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_trial_worker, payloads, chunksize=1))
    else:
        outcomes = [_trial_worker(p) for p in payloads]

    width = min(1 << cfg.cut_index, 1 << (cfg.n_orbitals - cfg.cut_index))
    per_method = {name: np.empty((cfg.trials, width)) for name in cfg.method_list}
    times = {name: 0.0 for name in cfg.method_list}
    fallbacks = 0
    warn: list[str] = []
    for t, (values, trial_times, trial_fallbacks, trial_warn) in enumerate(outcomes):
        for name in cfg.method_list:
            vals = values[name]
            if vals.size != width:
                padded = np.zeros(width)
                padded[:min(width, vals.size)] = vals[:width]
                vals = padded
            per_method[name][t] = vals
            times[name] += trial_times[name]
        fallbacks += trial_fallbacks
        warn.extend(trial_warn)

    stats = {}
    for name, mat in per_method.items():
        floored = mat < ZERO_FLOOR
        logs = np.log10(np.maximum(mat, ZERO_FLOOR))
        stats[name] = MethodStats(
            method=name,
            mean_log10=logs.mean(axis=0),
            std_log10=logs.std(axis=0),
            median_log10=np.median(logs, axis=0),
            q25_log10=np.quantile(logs, 0.25, axis=0),
            q75_log10=np.quantile(logs, 0.75, axis=0),
            zero_count=floored.sum(axis=0).astype(np.int64),
            n_trials=cfg.trials,
            wall_time_s=times[name],
        )
    return EnsembleStats(config=cfg, methods=stats, block_fallbacks=fallbacks,
                         warnings=tuple(warn))


def figure_preset(figure: int, trials: int | None = None, master_seed: int = 0,
                  **overrides) -> ExperimentConfig:
    """Desk-scale configurations mirroring the three benchmark figures.

    Figure 2 benchmarks a random determinant, figure 3 the weakly and
    figure 4 the strongly correlated family, all with 8 particles in 16
    orbitals at the middle cut.
    """
    families = {2: "slater", 3: "weak_correlated", 4: "strong_correlated"}
    if figure not in families:
        raise ValidationError(f"unknown figure {figure}; expected 2, 3 or 4")
    return ExperimentConfig(
        family=families[figure],
        n_particles=8,
        n_orbitals=16,
        trials=400 if trials is None else int(trials),
        master_seed=int(master_seed),
        **overrides,
    )
