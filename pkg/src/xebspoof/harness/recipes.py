"""Experiment runners: spoof runs, scaling scans, theory checks, Bayesian
checks, and the figure-reproduction presets that wire them together."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from ..kernels import Seed, haar_unitary
from ..metrics import (
    Normalization,
    bayesian_score,
    exact_xe,
    heaviness_profile,
    linear_xe_estimate,
    log_xe_estimate,
    normalization_for_sector,
    xe_difference,
)
from ..mockups import (
    TABLE_PATH_CAP,
    exact_sampler_from_scores,
    fs_dpp_sampler,
    h_marginal_product,
    sample_uniform,
)
from ..models import (
    FermionSampling,
    FockBosonSampling,
    GaussianBosonSampling,
    Sector,
    sector_probabilities,
)
from ..samples import write_sample_csv
from ..spoofer import SpoofConfig, allocate_largest_remainder, spoof_sector
from ..theory import (
    closed_form_xe_id,
    closed_form_xe_idp,
    mc_gaussian_permanent_moments,
    mc_h_power_ratio,
    mc_xe_id,
    pd_bound,
    pd_exact_xe_expectation,
)
from .config import ConfigError, ExperimentConfig, config_hash
from .manifest import RunManifest, new_manifest, write_manifest
from .parallel import parallel_map
from .plotdata import emit_plotdata

# fixed stream tags so every task's randomness has a stable derivation path
STREAM_CIRCUIT = 1
STREAM_UNIFORM = 2
STREAM_SPOOF = 3
STREAM_IDEAL = 4
STREAM_BAYES = 5


class ResourceCapError(RuntimeError):
    """A sector exceeded an enumeration cap; maps to exit code 4."""


class ToleranceError(RuntimeError):
    """A tolerance check failed; maps to exit code 3."""


def build_model(config: ExperimentConfig):
    circuit_seed = Seed(config.seed).child(STREAM_CIRCUIT)
    u = haar_unitary(config.modes, circuit_seed)
    if config.family == "fbs":
        return FockBosonSampling(u, config.particles)
    if config.family == "fs":
        return FermionSampling(u, config.particles)
    if config.squeezing is not None:
        squeezing = np.asarray(config.squeezing, dtype=float)
    else:
        # equal squeezing with the requested total mean photon number
        per_mode = config.mean_photons / config.modes
        squeezing = np.full(config.modes, math.asinh(math.sqrt(per_mode)))
    return GaussianBosonSampling(u, squeezing)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


XE_HEADER = [
    "sector", "source", "rate", "variant", "estimate", "std_error",
    "n_samples", "normalization", "config_hash",
]


def _estimate(variant, samples, model, norm, table):
    fn = log_xe_estimate if variant == "log" else linear_xe_estimate
    return fn(samples, model, norm, probability_table=table)


def run_spoof(
    config: ExperimentConfig,
    out_dir: str | Path,
    threads: int = 1,
    max_sector: int = TABLE_PATH_CAP,
) -> RunManifest:
    """Spoof, reference, and report every configured sector."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_model(config)
    root = Seed(config.seed)
    manifest = new_manifest("spoof-run", config)
    chash = manifest.config_hash

    if config.family == "gbs":
        if not config.sectors:
            raise ConfigError("gbs runs need explicit `sectors`")
        sectors = list(config.sectors)
    else:
        sectors = [config.particles]

    if config.multisector:
        if config.family != "gbs":
            raise ConfigError("multisector allocation requires the gbs family")
        dist = model.total_photon_distribution(max(sectors))
        weights = {n: float(dist[n]) for n in sectors}
        counts = allocate_largest_remainder(weights, config.n_samples)
    else:
        counts = {n: config.n_samples for n in sectors}

    xe_rows: list[list] = []
    outputs: list[str] = []
    for total in sectors:
        n_s = counts.get(total, 0)
        if n_s == 0:
            continue
        sector = Sector(config.modes, total, model.statistics)
        enumerable = sector.cardinality <= min(TABLE_PATH_CAP, max_sector)
        if not enumerable and config.family != "fs":
            raise ResourceCapError(
                f"sector N={total} has {sector.cardinality} outcomes; exact references "
                f"need enumeration <= {min(TABLE_PATH_CAP, max_sector)}"
            )
        norm = normalization_for_sector(model, sector) if config.normalize else Normalization.unit()
        table = sector_probabilities(model, sector) if enumerable else None

        uniform_ss = sample_uniform(sector, n_s, root.child(STREAM_UNIFORM, total))
        for variant in config.xe_variants:
            rep = _estimate(variant, uniform_ss, model, norm, table)
            xe_rows.append([total, "uniform", 1, variant, rep.estimate, rep.std_error,
                            rep.n_samples, rep.normalization, chash])

        if enumerable:
            conditional = table / math.fsum(table)
            for variant in config.xe_variants:
                value = exact_xe(table, conditional, variant, norm)
                xe_rows.append([total, "ideal-exact", 0, variant, value, 0.0,
                                sector.cardinality, norm.value, chash])
        else:
            ideal_ss = fs_dpp_sampler(model, n_s, root.child(STREAM_IDEAL, total))
            for variant in config.xe_variants:
                rep = _estimate(variant, ideal_ss, model, norm, None)
                xe_rows.append([total, "ideal-dpp", 0, variant, rep.estimate, rep.std_error,
                                rep.n_samples, rep.normalization, chash])

        for rate in config.rates:
            spoof_cfg = SpoofConfig(
                rate=rate, n_samples=n_s, sampler=config.sampler,
                indicator=config.indicator, variant=config.variant,
                seed=root.child(STREAM_SPOOF, total, rate),
            )
            ss = spoof_sector(spoof_cfg, sector, model)
            if table is not None and ss.indices is not None:
                with np.errstate(divide="ignore"):
                    log_p = np.log(table)[ss.indices]
            else:
                log_p = model.log_probabilities(ss.occupancy)
            sample_file = out / f"samples_N{total}_k{rate}.csv"
            write_sample_csv(ss, sample_file, log_p=log_p)
            outputs.append(sample_file.name)
            for variant in config.xe_variants:
                rep = _estimate(variant, ss, model, norm, table)
                xe_rows.append([total, "spoofer", rate, variant, rep.estimate, rep.std_error,
                                rep.n_samples, rep.normalization, chash])
            if enumerable:
                profile = heaviness_profile(ss, table)
                edges, hist = profile.histogram(bins=min(50, sector.cardinality))
                files = emit_plotdata(
                    out / f"rank_hist_N{total}_k{rate}",
                    ["rank_bin_left", "rank_bin_right", "count"],
                    [[float(edges[i]), float(edges[i + 1]), int(hist[i])] for i in range(len(hist))],
                    x_label="outcome rank under descending ideal probability",
                    y_label="samples",
                    title=f"N={total}, k={rate}",
                )
                outputs.extend(f.name for f in files)

    xe_path = out / "xe_report.csv"
    _write_csv(xe_path, XE_HEADER, xe_rows)
    outputs.append(xe_path.name)

    spoof_rows = [r for r in xe_rows if r[1] == "spoofer" and r[3] == config.xe_variants[0]]
    if spoof_rows:
        files = emit_plotdata(
            out / "xe_vs_rate",
            ["sector", "rate", "estimate", "std_error"],
            [[r[0], r[2], r[4], r[5]] for r in spoof_rows],
            x_label="post-selection rate k",
            y_label=f"{config.xe_variants[0]} XE",
            error_columns={"estimate": "std_error"},
        )
        outputs.extend(f.name for f in files)

    manifest.outputs = sorted(outputs)
    manifest.seeds = {"circuit": [config.seed, [STREAM_CIRCUIT]]}
    write_manifest(manifest, out)
    return manifest


# ---------------------------------------------------------------------------
# fermion-sampling scaling scan
# ---------------------------------------------------------------------------


def _fs_scale_task(args: tuple) -> dict:
    seed_value, particles, modes, rates, n_samples, trial = args
    root = Seed(seed_value).child(STREAM_SPOOF, particles, trial)
    u = haar_unitary(modes, root.child(0))
    model = FermionSampling(u, particles)
    ideal_ss = fs_dpp_sampler(model, n_samples, root.child(1))
    xe_id = log_xe_estimate(ideal_ss, model)
    result = {"particles": particles, "modes": modes, "trial": trial,
              "xe_id": xe_id.estimate, "rates": {}}
    for j, rate in enumerate(rates):
        cfg = SpoofConfig(rate=rate, n_samples=n_samples, sampler="uniform",
                          indicator="marginal", seed=root.child(2 + j))
        ss = spoof_sector(cfg, model.sector(), model)
        xe_sp = log_xe_estimate(ss, model)
        diff = xe_difference(xe_sp, xe_id)
        result["rates"][rate] = {
            "xe_spoof": xe_sp.estimate,
            "delta": diff.delta,
            "delta_se_within": diff.std_error,
        }
    return result


def run_fs_scale(config: ExperimentConfig, out_dir: str | Path, threads: int = 1) -> RunManifest:
    """XE difference of the spoofer against the exact sampler across system sizes."""
    if not config.particle_grid:
        raise ConfigError("fs-scale needs `particle_grid`")
    factor = config.modes_factor or 10
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = new_manifest("fs-scale", config)

    tasks = [
        (config.seed, n, factor * n, tuple(config.rates), config.n_samples, t)
        for n in config.particle_grid
        for t in range(config.trials)
    ]
    results = parallel_map(_fs_scale_task, tasks, threads)

    rows: list[list] = []
    for n in config.particle_grid:
        per_n = [r for r in results if r["particles"] == n]
        for rate in config.rates:
            deltas = np.array([r["rates"][rate]["delta"] for r in per_n])
            spoofs = np.array([r["rates"][rate]["xe_spoof"] for r in per_n])
            ids = np.array([r["xe_id"] for r in per_n])
            std = float(deltas.std(ddof=1)) if len(deltas) > 1 else 0.0
            rows.append([
                n, factor * n, rate,
                float(deltas.mean()), std / math.sqrt(len(deltas)), std,
                len(deltas), float(spoofs.mean()), float(ids.mean()),
            ])
    csv_path = out / "fs_scale.csv"
    _write_csv(
        csv_path,
        ["particles", "modes", "rate", "delta_xe_mean", "delta_xe_se",
         "delta_xe_std", "trials", "xe_spoof_mean", "xe_id_mean"],
        rows,
    )
    files = emit_plotdata(
        out / "delta_xe_vs_n",
        ["particles", "rate", "delta_xe_mean", "delta_xe_se"],
        [[r[0], r[2], r[3], r[4]] for r in rows],
        x_label="particle number N",
        y_label="XE difference (spoofer - ideal)",
        error_columns={"delta_xe_mean": "delta_xe_se"},
    )
    manifest.outputs = sorted([csv_path.name] + [f.name for f in files])
    write_manifest(manifest, out)
    return manifest


# ---------------------------------------------------------------------------
# theory checks
# ---------------------------------------------------------------------------

THEORY_DEFAULTS = {
    "seed": 90210,
    "moment_draws": 100_000,
    "moment_photons": 4,
    "xe_trials": 1000,
    "xe_photons": 3,
    "xe_modes": 300,
    "ratio_trials": 100_000,
    "ratio_photons": 4,
    "ratio_powers": [1, 2],
}


def run_theory_checks(params: dict, out_dir: str | Path) -> tuple[list[dict], bool]:
    """Validate the closed-form XE expectations against Monte Carlo.

    Returns the result rows and whether every row passed (variance warnings
    count as failures, since they mean the estimate cannot be trusted).
    """
    cfg = dict(THEORY_DEFAULTS)
    unknown = set(params) - set(cfg)
    if unknown:
        raise ConfigError(f"unknown theory-check keys: {sorted(unknown)}")
    cfg.update(params)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = Seed(int(cfg["seed"]))
    rows: list[dict] = []

    def add(check, params_text, closed, estimate, stderr, tol, trials, warn=False):
        rel = abs(estimate - closed) / abs(closed) if closed else abs(estimate)
        status = "pass" if rel <= tol else "fail"
        if warn:
            status = "warn-variance"
        rows.append({
            "check": check, "params": params_text, "closed_form": closed,
            "estimate": estimate, "std_error": stderr, "rel_err": rel,
            "tolerance": tol, "trials": trials, "status": status,
        })

    n4 = int(cfg["moment_photons"])
    m2, m4 = mc_gaussian_permanent_moments(n4, int(cfg["moment_draws"]), seed.child(1))
    add("gaussian-permanent-m2", f"N={n4}", m2.closed_form, m2.estimate, m2.std_error,
        0.05, m2.trials, warn=m2.variance_warning)
    add("gaussian-permanent-m4", f"N={n4}", m4.closed_form, m4.estimate, m4.std_error,
        0.10, m4.trials, warn=m4.variance_warning)

    nxe, mxe = int(cfg["xe_photons"]), int(cfg["xe_modes"])
    xe = mc_xe_id(nxe, mxe, int(cfg["xe_trials"]), seed.child(2))
    add("ideal-xe-haar", f"N={nxe},M={mxe}", xe.closed_form, xe.estimate, xe.std_error,
        0.10, xe.trials, warn=xe.variance_warning)
    idp = closed_form_xe_idp(nxe, mxe)
    add("ideal-over-independent", f"N={nxe},M={mxe}", float(nxe + 1), xe.estimate / idp,
        xe.std_error / idp, 0.10, xe.trials)

    nr = int(cfg["ratio_photons"])
    for s in cfg["ratio_powers"]:
        res = mc_h_power_ratio(nr, int(s), int(cfg["ratio_trials"]), seed.child(3, int(s)))
        add(f"h-power-ratio-s{s}", f"N={nr},s={s}", res.closed_form, res.estimate,
            res.std_error, 0.10, res.trials, warn=res.variance_warning)

    # distinguishability bound, checked exactly (no Monte Carlo)
    for n in range(3, 9):
        worst = 0.0
        for rho in [i / 10 for i in range(10)]:
            ratio = pd_exact_xe_expectation(rho, n, 10 * n) / closed_form_xe_idp(n, 10 * n)
            worst = max(worst, ratio / pd_bound(rho, n))
        rows.append({
            "check": "pd-bound", "params": f"N={n},rho=0..0.9", "closed_form": 1.0,
            "estimate": worst, "std_error": 0.0, "rel_err": 0.0, "tolerance": 1.0,
            "trials": 0, "status": "pass" if worst <= 1.0 else "fail",
        })
        exact_id, _ = closed_form_xe_id(n, 10 * n)
        recovered = pd_exact_xe_expectation(1.0, n, 10 * n)
        rel = abs(recovered - exact_id) / exact_id
        rows.append({
            "check": "pd-ideal-recovery", "params": f"N={n},rho=1", "closed_form": exact_id,
            "estimate": recovered, "std_error": 0.0, "rel_err": rel, "tolerance": 1e-12,
            "trials": 0, "status": "pass" if rel <= 1e-12 else "fail",
        })

    header = ["check", "params", "closed_form", "estimate", "std_error",
              "rel_err", "tolerance", "trials", "status"]
    _write_csv(out / "theory_check.csv", header, [[r[h] for h in header] for r in rows])
    all_pass = all(r["status"] == "pass" for r in rows)

    manifest = RunManifest(
        command="theory-check", config=cfg, config_hash=config_hash(cfg),
        tool_version=_tool_version(), created_utc=_utc_now(),
        outputs=["theory_check.csv"],
    )
    write_manifest(manifest, out)
    return rows, all_pass


def _tool_version() -> str:
    from .. import __version__

    return __version__


def _utc_now() -> str:
    import datetime

    return datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0).isoformat()


# ---------------------------------------------------------------------------
# Bayesian check
# ---------------------------------------------------------------------------


def run_bayes(config: ExperimentConfig, out_dir: str | Path) -> RunManifest:
    """Bayesian test of named mock-ups against samples from the ideal model.

    Ideal samples stand in for experimental data (no hardware sample files
    are bundled); scores and exact sector XEs are reported side by side so
    the heavy-outcome/score contrast is visible in one table.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_model(config)
    if config.family == "gbs":
        sector = model.sector(config.sectors[0] if config.sectors else 4)
    else:
        sector = model.sector()
    if sector.cardinality > TABLE_PATH_CAP:
        raise ResourceCapError("bayes-check needs an enumerable sector")
    manifest = new_manifest("bayes-check", config)

    table = sector_probabilities(model, sector)
    conditional = table / math.fsum(table)
    samples = exact_sampler_from_scores(
        sector, table, config.n_samples, Seed(config.seed).child(STREAM_BAYES)
    )
    ideal_xe = exact_xe(conditional, conditional, "log")

    indicator = h_marginal_product(model, sector.total)
    marginal_scores = np.exp(indicator.log_score_table(sector))
    mockups = [
        ("ideal-pow:2", table**2),
        ("uniform", np.ones(sector.cardinality)),
        ("marginal", marginal_scores),
        ("ideal", table.copy()),
    ]
    rows = []
    for name, scores in mockups:
        q = scores / math.fsum(scores)
        score, se = bayesian_score(samples, conditional, q, normalized_over_sector=False)
        xe_q = exact_xe(conditional, q, "log")
        rows.append([name, score, se, score / se if se else math.inf, xe_q, ideal_xe,
                     config.n_samples, manifest.config_hash])
    csv_path = out / "bayes_check.csv"
    _write_csv(
        csv_path,
        ["mockup", "score", "score_se", "score_sigmas", "exact_xe_mockup",
         "exact_xe_ideal", "n_samples", "config_hash"],
        rows,
    )
    manifest.outputs = [csv_path.name]
    write_manifest(manifest, out)
    return manifest


# ---------------------------------------------------------------------------
# figure-reproduction presets
# ---------------------------------------------------------------------------


def reproduction_config(figure: str, seed: int, scale: str = "paper"):
    """Named presets; `scale="smoke"` shrinks everything for quick runs."""
    smoke = scale == "smoke"
    if scale not in ("paper", "smoke"):
        raise ConfigError(f"unknown scale {scale!r}")

    def spoof(name, **kw):
        base = dict(
            name=name, seed=seed, n_samples=400 if smoke else 10_000,
            rates=(1, 16) if smoke else (1, 10, 100, 1000),
            sampler="uniform", indicator="marginal", xe_variants=("log",),
        )
        base.update(kw)
        return "spoof-run", ExperimentConfig(**base)

    if figure == "fig2":
        return spoof("fig2", family="gbs", modes=16, mean_photons=4.0,
                     sectors=(4,), normalize=True)
    if figure == "figS6":
        return spoof("figS6", family="gbs", modes=16, mean_photons=4.0,
                     sectors=(4,), normalize=True, xe_variants=("linear",))
    if figure == "figS2":
        return spoof("figS2", family="fbs", modes=16, particles=4)
    if figure == "figS3":
        return spoof("figS3", family="fbs", modes=16, particles=4,
                     indicator="multinomial-mixed")
    if figure == "figS4":
        return spoof("figS4", family="fbs", modes=16, particles=4,
                     indicator="multinomial-sup")
    if figure == "figS5":
        return spoof("figS5", family="fs", modes=16, particles=4)
    if figure == "fig3":
        return spoof("fig3", family="gbs", modes=16, squeezing=(0.89,) * 16,
                     sectors=(2, 4, 6, 8), multisector=True, normalize=True,
                     n_samples=400 if smoke else 4000,
                     rates=(1, 10) if smoke else (1, 10, 100))
    if figure == "fig4":
        return "fs-scale", ExperimentConfig(
            name="fig4", seed=seed, family="fs", modes=0,
            particle_grid=(6, 10) if smoke else (10, 30, 60),
            modes_factor=8 if smoke else 10,
            rates=(1, 10) if smoke else (1, 100),
            n_samples=200 if smoke else 1000,
            trials=3 if smoke else 50,
        )
    if figure == "fig5":
        return "bayes-check", ExperimentConfig(
            name="fig5", seed=seed, family="fbs", modes=16, particles=4,
            n_samples=1000 if smoke else 10_000,
        )
    raise ConfigError(f"unknown figure {figure!r}")


REPRODUCIBLE_FIGURES = (
    "fig2", "fig3", "fig4", "fig5", "figS2", "figS3", "figS4", "figS5", "figS6",
)


def run_reproduce(figure: str, out_dir: str | Path, seed: int, scale: str,
                  threads: int = 1) -> RunManifest:
    kind, config = reproduction_config(figure, seed, scale)
    if kind == "spoof-run":
        return run_spoof(config, out_dir, threads=threads)
    if kind == "fs-scale":
        return run_fs_scale(config, out_dir, threads=threads)
    return run_bayes(config, out_dir)
