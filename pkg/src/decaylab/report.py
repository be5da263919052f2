"""Experiment orchestration: configs in, report bundles out.

A config (TOML, or an equivalent dict) declares one experiment: what to
build, what to run, and which decay claims to check on the results.  A
run writes everything a reader needs into one directory: CSV tables, an
SVG log-log plot with predicted-slope guides where rates are involved,
and ``summary.json`` with per-claim verdicts.  Verdicts depend only on
the stored tables, so re-fitting saved CSVs reproduces them.  Batches run
experiments concurrently, one directory each, and collate an index.
"""

from __future__ import annotations

import json
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .euler import linearize_damped_euler
from .fitting import (
    DecayFit,
    TheoryComparison,
    compare_with_theory,
    fit_decay,
    predicted_exponent,
)
from .dyadic import ANNULUS_INNER, ANNULUS_OUTER, lp_block, make_partition, psi_block
from .grids import Grid, lp_norm
from .inequalities import (
    band_limited_samples,
    bernstein_block_ratios,
    gns_check,
    lp_embedding_check,
    verify_interpolation_suite,
)
from .linear import NormHistory, RadialInitialData, solve_linear_radial
from .simulate import (
    SimulationConfig,
    read_trajectory,
    simulate_damped_euler,
    time_weighted_functionals,
    write_trajectory,
)
from .spectral import (
    CompensatorSynthesisError,
    build_compensator_family,
    check_sk_kernel,
    spectral_gap_fit,
    symbol,
)
from .svg import loglog_plot
from .systems import (
    make_system,
    omega_samples,
    read_system,
    validate_symmetric_dissipative,
)

__all__ = [
    "ExperimentError",
    "ExperimentReport",
    "builtin_system",
    "load_config",
    "run_experiment",
    "run_batch",
]

_KINDS = ("sk-certify", "spectrum", "linear-decay", "simulate-euler",
          "verify-inequalities")


class ExperimentError(RuntimeError):
    """An experiment stage failed; names the stage and keeps the cause."""

    def __init__(self, stage: str, cause: BaseException | str) -> None:
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


@dataclass(frozen=True)
class ExperimentReport:
    name: str
    kind: str
    out_dir: Path
    passed: bool
    comparisons: tuple[TheoryComparison, ...]
    details: dict


def load_config(source) -> dict:
    """Accept a mapping directly or load TOML from a path."""
    if isinstance(source, dict):
        return source
    with open(source, "rb") as fh:
        return tomllib.load(fh)


def builtin_system(spec: dict):
    """Resolve the [system] table to a concrete linear system."""
    if "file" in spec:
        return read_system(spec["file"])
    model = spec.get("model", "damped-euler")
    n = int(spec.get("n", 1))
    if model == "damped-euler":
        return linearize_damped_euler(
            n, float(spec.get("gamma", 1.4)), float(spec.get("rho_bar", 1.0))
        )
    if model == "decoupled":
        # Flux-free relaxation: the undamped direction never couples, the
        # canonical failure mode of the kernel criterion.
        return make_system(
            np.eye(2), np.zeros((1, 2, 2)), np.diag([0.0, 1.0]),
            name="decoupled",
        )
    if model == "wave-heat":
        # One hyperbolic and one parabolic component coupled through the
        # flux; dissipation is purely second order.
        B = np.zeros((1, 1, 2, 2))
        B[0, 0, 1, 1] = 1.0
        return make_system(
            np.eye(2), np.array([[[0.0, 1.0], [1.0, 0.0]]]),
            np.zeros((2, 2)), B, name="wave-heat",
        )
    raise ValueError(f"unknown model {model!r}")


def _parse_claims(config: dict) -> list[dict]:
    claims = []
    for raw in config.get("claims", []):
        claim = dict(raw)
        params = dict(claim.get("params", {}))
        # Resolve eagerly so a bad claim id aborts before any computation.
        predicted_exponent(claim["claim"], **params)
        claim["params"] = params
        claims.append(claim)
    return claims


def _run_claims(history: NormHistory, claims, default_window=None):
    comparisons = []
    for claim in claims:
        window = claim.get("window", default_window)
        fit = fit_decay(history, claim["quantity"], window)
        comparisons.append(
            compare_with_theory(
                claim["quantity"], fit, claim["claim"],
                claim.get("tolerance", 0.05), **claim["params"],
            )
        )
    return comparisons


def _claim_rows(comparisons):
    rows = []
    for cmp in comparisons:
        rows.append({
            "quantity": cmp.quantity,
            "predicted": cmp.predicted,
            "exponent": cmp.fit.exponent,
            "prefactor": cmp.fit.prefactor,
            "r_squared": cmp.fit.r_squared,
            "points": cmp.fit.points,
            "window": list(cmp.fit.window),
            "tolerance": cmp.tolerance,
            "verdict": cmp.verdict,
        })
    return rows


def _decay_plot(path, history: NormHistory, comparisons) -> None:
    t = history.times
    positive = t > 0
    series = []
    for name in history.names:
        v = history.column(name)
        if np.all(v[positive] > 0):
            series.append((1.0 + t[positive], v[positive], name))
    guides = []
    for cmp in comparisons:
        v = history.column(cmp.quantity)
        lo = cmp.fit.window[0]
        i0 = int(np.argmin(np.abs(t - lo)))
        if v[i0] > 0:
            guides.append(
                (cmp.predicted, 1.0 + t[i0], v[i0],
                 f"slope {cmp.predicted:+.3g}")
            )
    if series:
        loglog_plot(path, series, title="norm decay", xlabel="1 + t",
                    ylabel="norm", guides=guides)


def _certify_details(sys, omegas=None) -> dict:
    validation = validate_symmetric_dissipative(sys)
    kernel = check_sk_kernel(sys)
    gap = spectral_gap_fit(sys)
    details = {
        "system": sys.name,
        "structure_passed": bool(validation.passed),
        "kernel_passed": bool(kernel.passed),
        "witnesses": [
            {"omega": list(map(float, w.omega)),
             "eigenvalue": float(w.eigenvalue)}
            for w in kernel.witnesses
        ],
        "c_star": float(gap.c_star),
        "gap_passed": bool(gap.passed),
    }
    try:
        family = build_compensator_family(sys, omegas=omegas)
        details["kappa"] = float(family.kappa)
        details["per_omega_achieved_min_eig"] = [
            float(m.achieved_min_eig) for m in family.members
        ]
    except CompensatorSynthesisError as exc:
        details["kappa"] = None
        details["per_omega_achieved_min_eig"] = []
        details["compensator_error"] = str(exc)
    details["passed"] = (details["structure_passed"]
                         and details["kernel_passed"] and details["gap_passed"])
    return details


def _run_sk_certify(config, out, sys):
    details = _certify_details(sys, config.get("omegas"))
    gap = spectral_gap_fit(sys)
    with open(out / "gap.csv", "w", newline="") as fh:
        fh.write("xi_radius,worst_real_part,ratio\n")
        for i, r in enumerate(gap.radii):
            wr = float(gap.worst_real_parts[i].max())
            ratio = float(gap.ratios[i].min())
            fh.write(f"{r:.12g},{wr:.12g},{ratio:.12g}\n")
    return details, []


def _run_spectrum(config, out, sys):
    table = config.get("spectrum", {})
    r_lo = float(table.get("r_min", 1e-2))
    r_hi = float(table.get("r_max", 1e2))
    count = int(table.get("points", 81))
    radii = np.logspace(np.log10(r_lo), np.log10(r_hi), count)
    omegas = omega_samples(sys.n)
    worst_ratio = np.inf
    with open(out / "spectrum.csv", "w", newline="") as fh:
        fh.write("xi_radius,omega_index,k,re_lambda,im_lambda,ratio\n")
        for a, omega in enumerate(omegas):
            for r in radii:
                sym = symbol(sys, r * omega)
                rho = r * r / (1.0 + r * r)
                for k, lam in enumerate(sym.eigenvalues):
                    ratio = -lam.real / rho
                    worst_ratio = min(worst_ratio, ratio)
                    fh.write(
                        f"{r:.12g},{a},{k},{lam.real:.12g},"
                        f"{lam.imag:.12g},{ratio:.12g}\n"
                    )
    return {"min_ratio": float(worst_ratio),
            "passed": bool(worst_ratio > 0)}, []


def _run_linear_decay(config, out, sys, claims):
    table = config["radial"]
    data = RadialInitialData(
        n=sys.n,
        s=float(table["s"]),
        component=np.asarray(table["component"], dtype=np.float64),
        amplitude=float(table.get("amplitude", 1.0)),
    )
    t_lo = float(table.get("t_min", 1.0))
    t_hi = float(table.get("t_max", 1e4))
    count = int(table.get("points", 25))
    times = np.logspace(np.log10(t_lo), np.log10(t_hi), count)
    history = solve_linear_radial(
        sys, data, times,
        ells=tuple(float(x) for x in table.get("ells", (0.0,))),
        besov_sigmas=tuple(float(x) for x in table.get("besov_sigmas", ())),
    )
    history.to_csv(out / "history.csv")
    comparisons = _run_claims(history, claims)
    _decay_plot(out / "decay.svg", history, comparisons)
    details = {"series": history.names, "times": [float(t) for t in times]}
    return details, comparisons


def _run_simulate(config, out, claims, resume):
    sim = dict(config["simulation"])
    for key in ("sample_times", "ell_grid"):
        if key in sim and sim[key] is not None:
            sim[key] = tuple(sim[key])
    sim_config = SimulationConfig(**sim)
    traj_dir = out / "trajectory"
    if resume and (traj_dir / "meta.json").exists():
        traj = read_trajectory(traj_dir)
    else:
        traj = simulate_damped_euler(sim_config)
        write_trajectory(traj_dir, traj)
    traj.history.to_csv(out / "history.csv")
    functionals = time_weighted_functionals(traj)
    functionals.to_csv(out / "functionals.csv")
    model = sim_config.make_model()
    recurrence = 0.2 * sim_config.box / model.c
    t_hi = min(0.95 * float(traj.times.max()), recurrence)
    comparisons = _run_claims(traj.history, claims,
                              default_window=(t_hi / 10.0, t_hi))
    _decay_plot(out / "decay.svg", traj.history, comparisons)
    details = {
        "mass_drift": float(np.max(np.abs(traj.mass - traj.mass[0]))),
        "energy_initial": float(traj.energy[0]) if traj.energy.size else 0.0,
        "energy_final": float(traj.energy[-1]) if traj.energy.size else 0.0,
        "functional_names": functionals.names,
    }
    return details, comparisons


def _run_inequalities(config, out, seed):
    table = config.get("inequalities", {})
    n = int(table.get("n", 1))
    resolution = int(table.get("resolution", 128))
    box = float(table.get("box", 2.0 * np.pi))
    count = int(table.get("samples", 20))
    ncomp = int(table.get("ncomp", 1))
    seed = int(table.get("seed", seed if seed is not None else 0))
    grid = Grid((resolution,) * n, (box,) * n)
    samples = band_limited_samples(grid, ncomp, count, seed)

    partition = make_partition(grid)
    # Homogeneous identity: the annular masks alone resolve 1 away from
    # the zero mode; psi enters only the inhomogeneous split (blocks q >= 0).
    acc = np.zeros_like(partition.psi_mask)
    for q in partition.q_range:
        acc = acc + partition.mask(q)
    nonzero = grid.frequency_magnitude() > 0.0
    partition_dev = float(np.max(np.abs(acc[nonzero] - 1.0)))

    recon = 0.0
    bern_ok = True
    bern_margin = np.inf
    for f in samples:
        back = psi_block(f, partition)
        for q in partition.q_range:
            if q < 0:
                continue
            back = back + lp_block(f, partition, q)
        scale = max(lp_norm(f, 2.0), 1e-300)
        recon = max(recon, lp_norm(back - f, 2.0) / scale)
        for q, ratio in bernstein_block_ratios(f, partition).items():
            lo, hi = ANNULUS_INNER * 2.0**q, ANNULUS_OUTER * 2.0**q
            bern_ok = bern_ok and lo <= ratio <= hi
            bern_margin = min(bern_margin, ratio - lo, hi - ratio)

    interp = verify_interpolation_suite(
        samples,
        float(table.get("interp_k", 0.0)),
        float(table.get("interp_m", 1.0)),
        float(table.get("interp_rho", 1.0)),
    )
    gns = gns_check(
        samples,
        float(table.get("gns_k", 1.0)), 2.0,
        float(table.get("gns_m", 2.0)),
        float(table.get("gns_rho", 0.5)), 2.0,
    )
    embed = {p: lp_embedding_check(samples, p) for p in (1, 2)}

    details = {
        "partition_deviation": partition_dev,
        "reconstruction_error": recon,
        "bernstein_in_bounds": bool(bern_ok),
        "bernstein_margin": float(bern_margin),
        "interpolation": {
            "max_ratio": interp.max_ratio,
            "dilation_max_dev": interp.dilation_max_dev,
            "skipped": interp.skipped,
        },
        "gns": {
            "max_ratio": gns.max_ratio,
            "dilation_max_dev": gns.dilation_max_dev,
            "skipped": gns.skipped,
        },
        "embedding": {
            str(p): {"max_ratio": r.max_ratio,
                     "block_constant": r.block_constant}
            for p, r in embed.items()
        },
        "samples": count,
        "seed": seed,
    }
    details["passed"] = bool(
        partition_dev < 1e-10
        and recon < 1e-8
        and bern_ok
        and interp.dilation_max_dev < 1e-6
        and gns.dilation_max_dev < 1e-6
        and np.isfinite(interp.max_ratio)
    )

    reports = [interp, gns] + [embed[p] for p in sorted(embed)]
    with open(out / "ratios.csv", "w", newline="") as fh:
        fh.write("family,sample,ratio\n")
        for rep in reports:
            for i, val in enumerate(rep.ratios):
                fh.write(f"{rep.label},{i},{val:.12g}\n")
    return details, []


def run_experiment(
    source,
    out_dir,
    seed: int | None = None,
    keep_partial: bool = False,
    resume: bool = False,
) -> ExperimentReport:
    """Execute one declared experiment and write its report bundle."""
    config = load_config(source)
    kind = config.get("kind")
    if kind not in _KINDS:
        raise ExperimentError("config", f"unknown kind {kind!r}")
    name = config.get("name", kind)
    try:
        claims = _parse_claims(config)
    except (KeyError, ValueError) as exc:
        raise ExperimentError("config", exc) from exc

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stage = "setup"
    try:
        if kind in ("sk-certify", "spectrum", "linear-decay"):
            stage = "system"
            sys = builtin_system(config.get("system", {}))
        stage = kind
        if kind == "sk-certify":
            details, comparisons = _run_sk_certify(config, out, sys)
        elif kind == "spectrum":
            details, comparisons = _run_spectrum(config, out, sys)
        elif kind == "linear-decay":
            details, comparisons = _run_linear_decay(config, out, sys, claims)
        elif kind == "simulate-euler":
            details, comparisons = _run_simulate(config, out, claims, resume)
        else:
            details, comparisons = _run_inequalities(config, out, seed)
        stage = "summary"
        passed = details.get("passed", True) and all(
            c.verdict for c in comparisons
        )
        expect_pass = bool(config.get("expect_pass", True))
        final = passed if expect_pass else not passed
        summary = {
            "name": name,
            "kind": kind,
            "expect_pass": expect_pass,
            "passed": final,
            "claims": _claim_rows(comparisons),
            "details": details,
            "artifacts": sorted(
                p.name for p in out.iterdir() if p.name != "summary.json"
            ),
        }
        (out / "summary.json").write_text(json.dumps(summary, indent=1))
    except ExperimentError:
        if not keep_partial:
            shutil.rmtree(out, ignore_errors=True)
        raise
    except Exception as exc:
        if not keep_partial:
            shutil.rmtree(out, ignore_errors=True)
        raise ExperimentError(stage, exc) from exc
    return ExperimentReport(name, kind, out, final, tuple(comparisons), details)


def run_batch(
    sources,
    out_root,
    threads: int = 1,
    seed: int | None = None,
    keep_partial: bool = False,
) -> list[ExperimentReport]:
    """Run several experiments concurrently and collate an index."""
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    configs = [load_config(s) for s in sources]
    names = [c.get("name", c.get("kind", f"exp{i}")) for i, c in enumerate(configs)]
    if len(set(names)) != len(names):
        raise ExperimentError("config", "duplicate experiment names in batch")

    def job(pair):
        cfg, nm = pair
        return run_experiment(cfg, out_root / nm, seed=seed,
                              keep_partial=keep_partial)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(job, zip(configs, names)))
    else:
        reports = [job(p) for p in zip(configs, names)]

    index = {
        "experiments": [
            {"name": r.name, "kind": r.kind, "passed": r.passed,
             "dir": r.out_dir.name}
            for r in reports
        ],
        "passed": all(r.passed for r in reports),
    }
    (out_root / "index.json").write_text(json.dumps(index, indent=1))
    return reports
