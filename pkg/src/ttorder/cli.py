"""Command-line interface: spectrum, order, rdm, experiment, selftest.

Exit codes: 0 success, 2 malformed input, 3 invariant violation,
4 exhaustive cap exceeded without --anneal.  Diagnostics go to stderr;
stdout carries data only when --stdout is given.  TTORDER_THREADS sets the
number of worker processes for experiments (trials are seeded, so the output
bytes do not depend on it).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (CapacityError, CapExceededError, ConsistencyError,
                     DegeneracyError, ParseError, ValidationError)
from .experiments import (ExperimentConfig, build_state, figure_preset,
                          random_partial_isometry, run_ensemble)
from .ordering import (AnnealConfig, anneal_prefactor_order, best_prefactor_order,
                       best_weighted_prefactor_order, canonical_order, fiedler_order)
from .rdm import (mutual_information, one_orbital_rdm, slater_mutual_information,
                  slater_one_orbital_rdm, slater_two_orbital_rdm, two_orbital_rdm)
from .spectra import cut_spectrum, inversion_residual, slater_cut_spectrum
from .tensor import CorrelatedState, correlated_tensor, reorder_modes
from . import serialize


def _err(message: str) -> None:
    print(f"ttorder: {message}", file=sys.stderr)


def _info(message: str) -> None:
    print(message, file=sys.stderr)


def _write_or_stdout(writer, path, use_stdout: bool):
    """Run `writer(path)`; with use_stdout, echo the file to stdout as well."""
    writer(path)
    if use_stdout:
        sys.stdout.write(Path(path).read_text(encoding="utf-8"))


def _add_input_args(parser, state_forms: bool = False):
    group = parser.add_argument_group("input")
    group.add_argument("--input", type=Path, help="partial isometry as CSV (N rows, L columns)")
    group.add_argument("--seed", type=int, help="draw a random isometry from this seed")
    group.add_argument("--n", type=int, help="particle count for --seed")
    group.add_argument("--l", type=int, help="orbital count for --seed")
    if state_forms:
        group.add_argument("--state", type=Path, help="correlated state spec (JSON)")
        group.add_argument("--family", help="state family for --seed "
                                            "(slater, weak_correlated, strong_correlated)")


def _load_state(args) -> CorrelatedState:
    if getattr(args, "state", None) is not None:
        return serialize.load_state_json(args.state)
    if args.input is not None:
        orbitals = serialize.read_isometry_csv(args.input)
        return CorrelatedState(orbitals, [(1.0, tuple(range(orbitals.n_particles)))])
    if args.seed is None or args.n is None or args.l is None:
        raise ParseError("need --input, --state, or all of --seed/--n/--l")
    family = getattr(args, "family", None) or "slater"
    return build_state(family, args.n, args.l, args.seed)


def _cmd_spectrum(args) -> int:
    if args.input is not None:
        orbitals = serialize.read_isometry_csv(args.input)
    elif args.seed is not None and args.n is not None and args.l is not None:
        orbitals = random_partial_isometry(args.n, args.l, args.seed)
    else:
        raise ParseError("need --input or all of --seed/--n/--l")
    l = orbitals.n_orbitals
    cuts = list(range(1, l)) if args.all_cuts else [args.cut]
    if cuts == [None]:
        raise ParseError("need --cut K or --all-cuts")
    spectra = []
    for k in cuts:
        spec = slater_cut_spectrum(orbitals, k, method=args.method)
        spectra.append(spec)
        residual = inversion_residual(spec)
        _info(f"cut {k}: rank {spec.rank}, prefactor {spec.prefactor:.6e}, "
              f"inversion residual {residual:.3e}")
    _write_or_stdout(lambda p: serialize.write_spectrum_csv(p, spectra),
                     args.output, args.stdout)
    return 0


def _anneal_config(args) -> AnnealConfig:
    return AnnealConfig(tau0=args.tau0, decay=args.decay, max_iter=args.imax,
                        seed=args.anneal_seed)


def _cmd_order(args) -> int:
    state = _load_state(args)
    l = state.n_orbitals
    tensor = None
    if args.method == "canonical":
        result = canonical_order(l)
    elif args.method == "fiedler":
        if state.n_terms == 1:
            im = slater_mutual_information(state.term_isometry(0))
        else:
            tensor = correlated_tensor(state)
            im = mutual_information(tensor)
        result = fiedler_order(im)
    elif args.method in ("prefactor", "anneal"):
        dominant = state.term_isometry(state.dominant_term())
        if args.method == "anneal":
            result = anneal_prefactor_order(dominant, _anneal_config(args))
        else:
            try:
                result = best_prefactor_order(dominant, subset_size=args.subset_size,
                                              cap=args.cap)
            except CapExceededError:
                if not args.anneal:
                    raise
                result = anneal_prefactor_order(dominant, _anneal_config(args))
    elif args.method == "weighted":
        anneal = _anneal_config(args) if args.anneal else None
        result = best_weighted_prefactor_order(state, cut=args.cut, cap=args.cap,
                                               anneal=anneal)
    else:
        raise ParseError(f"unknown method {args.method!r}")
    payload = result.to_dict()
    _write_or_stdout(lambda p: serialize.write_json(p, payload), args.output, args.stdout)
    _info(f"method {result.method}: permutation {payload['permutation']}"
          + (f", objective {result.objective:.6e}" if result.objective is not None else ""))
    if args.compare:
        if tensor is None:
            tensor = correlated_tensor(state)
        k = args.cut or l // 2
        single = state.n_terms == 1
        before = (slater_cut_spectrum(state.term_isometry(0), k) if single
                  else cut_spectrum(tensor, k))
        after_orbitals = state.orbitals.permuted(result.order)
        after = (slater_cut_spectrum(CorrelatedState(after_orbitals, state.terms)
                                     .term_isometry(0), k) if single
                 else cut_spectrum(reorder_modes(tensor, result.order), k))
        stem = Path(args.output)
        before_path = stem.with_name(stem.stem + "_before.csv")
        after_path = stem.with_name(stem.stem + "_after.csv")
        serialize.write_spectrum_csv(before_path, before)
        serialize.write_spectrum_csv(after_path, after)
        _info(f"spectra written to {before_path} and {after_path}")
    return 0


def _cmd_rdm(args) -> int:
    if args.input is not None:
        orbitals = serialize.read_isometry_csv(args.input)
    elif args.seed is not None and args.n is not None and args.l is not None:
        orbitals = random_partial_isometry(args.n, args.l, args.seed)
    else:
        raise ParseError("need --input or all of --seed/--n/--l")
    use_brute = args.method == "brute"
    tensor = None
    if use_brute:
        from .tensor import slater_tensor
        tensor = slater_tensor(orbitals)
    if args.site is not None:
        i = args.site - 1
        matrix = one_orbital_rdm(tensor, i) if use_brute else slater_one_orbital_rdm(orbitals, i)
    elif args.pair is not None:
        i, j = args.pair[0] - 1, args.pair[1] - 1
        matrix = two_orbital_rdm(tensor, i, j) if use_brute else slater_two_orbital_rdm(orbitals, i, j)
    else:
        matrix = (mutual_information(tensor) if use_brute
                  else slater_mutual_information(orbitals))
    _write_or_stdout(lambda p: serialize.write_matrix_csv(p, matrix), args.output, args.stdout)
    return 0


def _cmd_experiment(args) -> int:
    if args.config is not None:
        import json
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{args.config}: {exc.msg}", line=exc.lineno,
                             column=exc.colno) from None
        if args.trials is not None:
            data["trials"] = args.trials
        if args.seed is not None:
            data["master_seed"] = args.seed
        cfg = ExperimentConfig.from_dict(data)
    elif args.figure is not None:
        cfg = figure_preset(args.figure, trials=args.trials,
                            master_seed=args.seed if args.seed is not None else 0,
                            spectrum_method=args.spectrum_method)
    else:
        raise ParseError("need --config or --figure")
    workers = args.workers or int(os.environ.get("TTORDER_THREADS", "1"))
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stats = run_ensemble(cfg, workers=max(1, workers))
    files = {}
    for name, method_stats in stats.methods.items():
        path = outdir / f"stats_{name}.csv"
        serialize.write_stats_csv(path, method_stats)
        files[name] = path
    manifest_path = outdir / "manifest.json"
    serialize.write_manifest(manifest_path, stats, files, cfg.master_seed, __version__)
    serialize.check_manifest(manifest_path)
    _info(f"{cfg.trials} trials of family {cfg.family} at cut {cfg.cut_index}; "
          f"outputs in {outdir}")
    for name in cfg.method_list:
        tail = stats.methods[name].mean_log10[-1]
        _info(f"  {name}: final mean log10 sigma = {tail:.3f}, "
              f"wall {stats.methods[name].wall_time_s:.2f}s")
    if stats.warnings:
        _info(f"  warnings: {len(stats.warnings)} (see manifest)")
    if args.plot:
        from .plot import plot_stats
        svg = plot_stats(files, outdir / "figure.svg", band=args.band,
                         title=f"{cfg.family}, N={cfg.n_particles}, L={cfg.n_orbitals}")
        _info(f"plot written to {svg}")
    return 0


def _selftest_suites(seed: int, trials: int):
    """Deterministic oracle suites: each yields (name, passed, detail)."""
    from .spectra import partitioned_cauchy_binet
    from .rdm import two_orbital_rdm as rdm2_brute
    from .tensor import slater_tensor

    rng = np.random.default_rng(seed)

    worst = 0.0
    for _ in range(trials):
        m = int(rng.integers(1, 5))
        n = int(rng.integers(m, 7))
        a = rng.standard_normal((m, n))
        b = rng.standard_normal((n, m))
        j = int(rng.integers(0, m + 1))
        tset = sorted(int(x) for x in rng.choice(n, size=j, replace=False))
        uset = sorted(set(range(n)) - set(tset))
        lhs, rhs = partitioned_cauchy_binet(a, b, tset, uset)
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(lhs)))
    yield "cauchy-binet identity", worst < 1e-10, f"max relative defect {worst:.3e}"

    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 5))
        l = int(rng.integers(n + 1, 10))
        k = int(rng.integers(1, l))
        if not (k <= l - n or k >= n):
            continue
        u = random_partial_isometry(n, l, rng.integers(2 ** 32))
        try:
            block = slater_cut_spectrum(u, k, method="block").values
        except DegeneracyError:
            continue
        dense = slater_cut_spectrum(u, k, method="dense").values
        worst = max(worst, float(np.max(np.abs(block - dense))))
    yield "block vs dense spectra", worst < 1e-9, f"max multiset distance {worst:.3e}"

    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 5))
        l = int(rng.integers(n + 1, 9))
        u = random_partial_isometry(n, l, rng.integers(2 ** 32))
        tensor = slater_tensor(u)
        i, j = sorted(int(x) for x in rng.choice(l, size=2, replace=False))
        closed = slater_two_orbital_rdm(u, i, j, formula="general")
        brute = rdm2_brute(tensor, i, j)
        worst = max(worst, float(np.max(np.abs(closed - brute))))
    yield "closed-form two-orbital RDM", worst < 1e-10, f"max entry defect {worst:.3e}"

    theta = rng.uniform(0.2, 1.3, size=2)
    c, s = np.cos(theta[0]), np.sin(theta[0])
    cp, sp = np.cos(theta[1]), np.sin(theta[1])
    from .tensor import PartialIsometry
    h2 = PartialIsometry([[c, 0.0, s, 0.0], [0.0, cp, 0.0, sp]])
    best = best_prefactor_order(h2)
    spec = slater_cut_spectrum(h2.permuted(best.order), 2)
    ok = (abs(best.objective) < 1e-15 and abs(spec.values[0] - 1.0) < 1e-12
          and float(np.max(spec.values[1:])) < 1e-12)
    yield "minimal-basis worked example", ok, f"optimized spectrum {np.round(spec.values, 12)}"


def _cmd_selftest(args) -> int:
    failures = 0
    for name, passed, detail in _selftest_suites(args.seed or 0, args.trials):
        tag = "PASS" if passed else "FAIL"
        _info(f"{tag} {name}: {detail}")
        failures += 0 if passed else 1
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttorder",
        description="Occupation-tensor spectra and orbital ordering toolkit",
    )
    parser.add_argument("--version", action="version", version=f"ttorder {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="singular values of matricization cuts")
    _add_input_args(p)
    p.add_argument("--cut", type=int, help="cut index k (1..L-1)")
    p.add_argument("--all-cuts", action="store_true", help="compute every cut")
    p.add_argument("--method", choices=("dense", "block"), default="dense")
    p.add_argument("--output", type=Path, default=Path("spectrum.csv"))
    p.add_argument("--stdout", action="store_true", help="echo the CSV to stdout")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("order", help="compute an orbital ordering")
    _add_input_args(p, state_forms=True)
    p.add_argument("--method", required=True,
                   choices=("canonical", "fiedler", "prefactor", "anneal", "weighted"))
    p.add_argument("--subset-size", type=int, help="left-block size (default: particles)")
    p.add_argument("--cut", type=int, help="bipartition cut for --method weighted / --compare")
    p.add_argument("--cap", type=int, default=10 ** 6, help="exhaustive search cap")
    p.add_argument("--anneal", action="store_true",
                   help="fall back to annealing when the cap is exceeded")
    p.add_argument("--tau0", type=float, default=1.0)
    p.add_argument("--decay", type=float, default=0.99)
    p.add_argument("--imax", type=int, default=None)
    p.add_argument("--anneal-seed", type=int, default=0)
    p.add_argument("--compare", action="store_true",
                   help="also write before/after spectra at the cut")
    p.add_argument("--output", type=Path, default=Path("ordering.json"))
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=_cmd_order)

    p = sub.add_parser("rdm", help="reduced density matrices and mutual information")
    _add_input_args(p)
    p.add_argument("--site", type=int, help="one-orbital RDM of this site (1-based)")
    p.add_argument("--pair", type=int, nargs=2, metavar=("I", "J"),
                   help="two-orbital RDM of sites I < J (1-based)")
    p.add_argument("--im", action="store_true", help="mutual information matrix (default)")
    p.add_argument("--method", choices=("closed", "brute"), default="closed")
    p.add_argument("--output", type=Path, default=Path("rdm.csv"))
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=_cmd_rdm)

    p = sub.add_parser("experiment", help="ensemble benchmark of ordering methods")
    p.add_argument("--config", type=Path, help="ExperimentConfig as JSON")
    p.add_argument("--figure", type=int, choices=(2, 3, 4),
                   help="preset: 2 determinant, 3 weakly, 4 strongly correlated")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--spectrum-method", choices=("dense", "block"), default="dense")
    p.add_argument("--outdir", type=Path, default=Path("."))
    p.add_argument("--workers", type=int, help="worker processes (default TTORDER_THREADS)")
    p.add_argument("--plot", action="store_true", help="render figure.svg from the CSVs")
    p.add_argument("--band", choices=("std", "quartile"), default="std")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("selftest", help="run the built-in oracle suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=60)
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        _err(str(exc))
        return 2
    except FileNotFoundError as exc:
        _err(f"file not found: {exc.filename or exc}")
        return 2
    except (ValidationError, CapacityError, ConsistencyError, DegeneracyError) as exc:
        _err(str(exc))
        return 3
    except CapExceededError as exc:
        _err(str(exc))
        return 4


if __name__ == "__main__":
    sys.exit(main())
