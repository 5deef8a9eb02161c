"""Command-line front end: reproducible experiments emitted as CSV.

Subcommands: ``theory capacity``, ``theory quantum``, ``saddle``,
``empirical``, ``volume``, ``circuit verify``, ``selfavg``.  Shared flags:
``--seed``, ``--out``, ``--threads``, ``--config``.  Column sets are
documented in FORMATS.md; all reals are serialized with 17 significant
digits so files round-trip losslessly.  Exit codes: 0 success, 1
acceptance/consistency failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from contextlib import nullcontext

import numpy as np

from . import capacity, percep, qsim, volume
from .config import (
    ConfigError,
    ExperimentConfig,
    build_config,
    echo_metadata,
    format_real,
    read_config_file,
)
from .errors import DivergedError, PercapError, StageFailureError
from .rng import stream, substream_seed

#: KS acceptance factor at the 1% level: D <= 1.63 / sqrt(shots)
KS_FACTOR_1PCT = 1.63


def _write_csv(cfg: ExperimentConfig, header: list[str], rows: list[list]) -> None:
    ctx = (open(cfg.out, "w", newline="") if cfg.out != "-"
           else nullcontext(sys.stdout))
    with ctx as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_real(value)
    return str(value)


def _params(cfg: ExperimentConfig) -> capacity.TheoryParams:
    return capacity.TheoryParams(kappa=cfg.kappa, epsilon=cfg.epsilon,
                                 sigma=cfg.sigma)


def _threshold(cfg: ExperimentConfig) -> float:
    return (capacity.effective_stability(_params(cfg)) if cfg.quantum
            else cfg.kappa)


def _theory_f(alpha: float, kappa_eff: float) -> str:
    if alpha == 0.0:
        return format_real(0.0)  # no constraints: the whole sphere survives
    try:
        return format_real(capacity.free_energy(alpha, kappa_eff).free_energy)
    except DivergedError:
        return "diverged"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_theory_capacity(cfg: ExperimentConfig) -> int:
    rows = [[_fmt(k), _fmt(capacity.classical_capacity(k))] for k in cfg.kappa_grid]
    _write_csv(cfg, ["kappa", "alpha_c"], rows)
    return 0


def cmd_theory_quantum(cfg: ExperimentConfig) -> int:
    if any(not (0.0 < e <= 0.5) for e in cfg.epsilon_grid):
        raise ConfigError("epsilon_grid must lie inside (0, 0.5]")
    rows = []
    for k in cfg.kappa_grid:
        alpha_cl = capacity.classical_capacity(k)
        for e in cfg.epsilon_grid:
            for s in cfg.sigma_grid:
                params = capacity.TheoryParams(kappa=k, epsilon=e, sigma=s)
                kt = capacity.effective_stability(params)
                acq = capacity.quantum_capacity(params)
                rows.append([_fmt(k), _fmt(e), _fmt(s), _fmt(kt), _fmt(acq),
                             _fmt(alpha_cl), _fmt(acq / alpha_cl)])
    _write_csv(cfg, ["kappa", "epsilon", "sigma", "kappa_tilde", "alpha_c_q",
                     "alpha_c_classical", "ratio"], rows)
    return 0


def cmd_saddle(cfg: ExperimentConfig) -> int:
    kappa_eff = capacity.effective_stability(_params(cfg))
    rows = []
    for alpha in cfg.alpha_grid:
        try:
            sp = capacity.free_energy(alpha, kappa_eff)
            rows.append([_fmt(alpha), _fmt(sp.q), _fmt(sp.free_energy), "0"])
        except DivergedError:
            rows.append([_fmt(alpha), "", "", "1"])
    _write_csv(cfg, ["alpha", "q", "free_energy", "diverged"], rows)
    return 0


def cmd_empirical(cfg: ExperimentConfig) -> int:
    if cfg.n < 10:
        raise ConfigError(f"empirical requires n >= 10, got {cfg.n}")
    if cfg.trials < 50:
        raise ConfigError(f"empirical requires trials >= 50, got {cfg.trials}")
    result = percep.empirical_capacity(
        n=cfg.n, params=_params(cfg), quantum=cfg.quantum, trials=cfg.trials,
        seed=cfg.seed, dist=cfg.dist, probes=cfg.probes, tol=cfg.tol,
        threads=cfg.threads,
    )
    header = ["record", "alpha", "p", "sat_count", "trials", "p_sat",
              "ci_low", "ci_high", "failures"]
    rows = []
    for pr in result.probes:
        lo, hi = percep._wilson_interval(pr.sat, pr.trials - pr.failures)
        rows.append(["probe", _fmt(pr.alpha), str(pr.p), str(pr.sat),
                     str(pr.trials), _fmt(pr.p_sat), _fmt(lo), _fmt(hi),
                     str(pr.failures)])
    rows.append(["estimate", _fmt(result.alpha_hat), "", "", "", "",
                 _fmt(result.alpha_hat - result.ci_halfwidth),
                 _fmt(result.alpha_hat + result.ci_halfwidth),
                 str(result.total_failures)])
    _write_csv(cfg, header, rows)
    if result.total_failures > 0.05 * result.total_trials:
        print(f"error: {result.total_failures}/{result.total_trials} solver "
              "failures exceed the 5% budget", file=sys.stderr)
        return 1
    return 0


def cmd_volume(cfg: ExperimentConfig) -> int:
    if cfg.method == "sequential" and cfg.samples < 100:
        raise ConfigError(
            f"sequential volume requires samples >= 100, got {cfg.samples}")
    p = round(cfg.alpha * cfg.n)
    threshold = _threshold(cfg)
    if p == 0:
        ps = percep.PatternSet(
            n_features=cfg.n, n_patterns=0, patterns=np.zeros((0, cfg.n)),
            labels=np.zeros(0), distribution_tag=cfg.dist, seed=cfg.seed)
    else:
        ps = percep.generate_patterns(cfg.n, p, cfg.dist, substream_seed(cfg.seed, 1))
    rng = stream(cfg.seed, 2)
    diagnostics = ""
    log_v = std_err = None
    try:
        if cfg.method == "hit_or_miss":
            est = volume.hit_or_miss(ps, threshold, cfg.samples, rng)
            if est.bound_only:
                diagnostics = "zero_hits_upper_bound"
        else:
            est = volume.sequential_volume(ps, threshold, cfg.samples, rng)
        log_v, std_err = est.log_v_over_n, est.std_error
    except StageFailureError as exc:
        diagnostics = f"stage_failure:constraint={exc.constraint}"
    rows = [[str(cfg.n), str(p), _fmt(cfg.alpha), cfg.method, _fmt(log_v),
             _fmt(std_err), _theory_f(p / cfg.n, threshold), diagnostics]]
    _write_csv(cfg, ["n", "p", "alpha", "method", "log_v_over_n", "std_error",
                     "theory_f", "diagnostics"], rows)
    return 0


def cmd_circuit_verify(cfg: ExperimentConfig) -> int:
    if cfg.n > 12:
        raise ConfigError(f"circuit verify supports n <= 12, got {cfg.n}")
    rows = []
    exact_ok = True
    for trial in range(cfg.trials):
        g = stream(cfg.seed, 3, trial)
        x = g.standard_normal(cfg.n)
        w = g.standard_normal(cfg.n)
        w[w == 0.0] = 1.0
        sigma = 0.2 + 0.8 * g.random()
        mean_sim, var_sim, state = qsim.run_perceptron_circuit(
            x, w, np.full(cfg.n, sigma))
        mean_th = float(w @ x)
        var_th = float(sigma**2 * np.sum(w**2))
        samples = qsim.homodyne_sample(state, cfg.n - 1, g, cfg.shots)
        ks = qsim.ks_statistic(samples, mean_sim, var_sim)
        ks_pass = ks <= KS_FACTOR_1PCT / math.sqrt(cfg.shots)
        if (abs(mean_sim - mean_th) > 1e-10 * max(1.0, abs(mean_th))
                or abs(var_sim - var_th) > 1e-10 * max(1.0, var_th)):
            exact_ok = False
        rows.append([str(cfg.n), str(trial), _fmt(mean_sim), _fmt(mean_th),
                     _fmt(var_sim), _fmt(var_th), _fmt(ks),
                     "1" if ks_pass else "0"])
    _write_csv(cfg, ["n", "trial", "mean_sim", "mean_theory", "var_sim",
                     "var_theory", "ks_stat", "ks_pass"], rows)
    if not exact_ok:
        print("error: simulated marginal deviates from the closed form",
              file=sys.stderr)
        return 1
    return 0


def cmd_selfavg(cfg: ExperimentConfig) -> int:
    if len(cfg.n_list) < 2:
        raise ConfigError("selfavg needs at least two entries in n_list")
    table = volume.self_averaging_probe(
        cfg.n_list, cfg.alpha, cfg.kappa, cfg.draws, cfg.seed,
        samples_per_stage=cfg.samples, dist=cfg.dist, threads=cfg.threads,
    )
    rows = []
    for row in table:
        p = max(1, round(cfg.alpha * row.n))
        rows.append([str(row.n), str(row.draws), _fmt(row.mean),
                     "na" if row.std is None else _fmt(row.std),
                     _theory_f(p / row.n, cfg.kappa),
                     f"failures:{row.failures}" if row.failures else ""])
    _write_csv(cfg, ["n", "draws", "mean_log_v_over_n", "std", "theory_f",
                     "diagnostics"], rows)
    return 0


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

_COMMANDS = {
    "theory capacity": cmd_theory_capacity,
    "theory quantum": cmd_theory_quantum,
    "saddle": cmd_saddle,
    "empirical": cmd_empirical,
    "volume": cmd_volume,
    "circuit verify": cmd_circuit_verify,
    "selfavg": cmd_selfavg,
}


def _add_shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="master seed (uint64)")
    parser.add_argument("--out", help="output CSV path, or - for stdout")
    parser.add_argument("--threads", type=int, help="worker threads")


def _grid(text: str) -> list[float]:
    from .config import _parse_floats

    return _parse_floats(text)


def _int_list(text: str) -> list[int]:
    from .config import _parse_ints

    return _parse_ints(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="percap",
        description="Pattern-capacity experiments for classical and "
                    "homodyne-readout quantum perceptrons.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    theory = sub.add_parser("theory", help="analytic capacity tables")
    tsub = theory.add_subparsers(dest="subcommand", required=True)
    tc = tsub.add_parser("capacity", help="alpha_c(kappa) table")
    _add_shared(tc)
    tc.add_argument("--kappa-grid", dest="kappa_grid", type=_grid)

    tq = tsub.add_parser("quantum", help="quantum capacity table")
    _add_shared(tq)
    tq.add_argument("--kappa-grid", dest="kappa_grid", type=_grid)
    tq.add_argument("--epsilon-grid", dest="epsilon_grid", type=_grid)
    tq.add_argument("--sigma-grid", dest="sigma_grid", type=_grid)

    sd = sub.add_parser("saddle", help="overlap and free energy along alpha")
    _add_shared(sd)
    sd.add_argument("--alpha-grid", dest="alpha_grid", type=_grid)
    sd.add_argument("--kappa", type=float)
    sd.add_argument("--epsilon", type=float)
    sd.add_argument("--sigma", type=float)

    em = sub.add_parser("empirical", help="Monte Carlo capacity estimate")
    _add_shared(em)
    em.add_argument("--n", type=int)
    em.add_argument("--trials", type=int)
    em.add_argument("--probes", type=int)
    em.add_argument("--kappa", type=float)
    em.add_argument("--epsilon", type=float)
    em.add_argument("--sigma", type=float)
    em.add_argument("--tol", type=float)
    em.add_argument("--dist", choices=["binary", "gaussian"])
    em.add_argument("--quantum", action="store_const", const=True, default=None)

    vo = sub.add_parser("volume", help="feasible-volume estimate")
    _add_shared(vo)
    vo.add_argument("--n", type=int)
    vo.add_argument("--alpha", type=float)
    vo.add_argument("--kappa", type=float)
    vo.add_argument("--epsilon", type=float)
    vo.add_argument("--sigma", type=float)
    vo.add_argument("--samples", type=int)
    vo.add_argument("--method", choices=["hit_or_miss", "sequential"])
    vo.add_argument("--dist", choices=["binary", "gaussian"])
    vo.add_argument("--quantum", action="store_const", const=True, default=None)

    ci = sub.add_parser("circuit", help="Gaussian circuit checks")
    csub = ci.add_subparsers(dest="subcommand", required=True)
    cv = csub.add_parser("verify", help="marginal exactness and sampling KS")
    _add_shared(cv)
    cv.add_argument("--n", type=int)
    cv.add_argument("--trials", type=int)
    cv.add_argument("--shots", type=int)

    sa = sub.add_parser("selfavg", help="disorder concentration table")
    _add_shared(sa)
    sa.add_argument("--n-list", dest="n_list", type=_int_list)
    sa.add_argument("--alpha", type=float)
    sa.add_argument("--kappa", type=float)
    sa.add_argument("--draws", type=int)
    sa.add_argument("--samples", type=int)
    sa.add_argument("--dist", choices=["binary", "gaussian"])

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    command = args.command
    if getattr(args, "subcommand", None):
        command = f"{args.command} {args.subcommand}"

    flag_entries = {
        k: v for k, v in vars(args).items() if k not in ("command", "subcommand", "config")
    }
    t0 = time.perf_counter()
    try:
        file_entries = read_config_file(args.config) if args.config else {}
        cfg = build_config(command, file_entries, flag_entries)
        code = _COMMANDS[command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PercapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    echo_metadata(cfg, {"wall_time_s": f"{time.perf_counter() - t0:.3f}"})
    return code


if __name__ == "__main__":
    sys.exit(main())
