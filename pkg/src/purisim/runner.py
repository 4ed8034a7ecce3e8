"""End-to-end pipeline: state, baseline, errors, purification, analyses.

A Scenario describes one reconfiguration of the chip; run() executes the
fixed pipeline order

    initial state -> baseline noise -> error mixture at Bob
    -> [Hadamard bank on both sides, phase-flip runs with purification]
    -> [purification permutation on both sides -> post-selection]
    -> reduced states -> exact and sampled analyses

and produces a RunReport that serializes byte-identically for a fixed
scenario and seed.  Timestamps are the simulated experiment timeline
(seconds of integration), not wall-clock, so reports are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import circuits, noise, tomography
from .bell import ChshResult, canonical_settings, chsh_from_counts, chsh_value, \
    optimize_settings, sample_chsh
from .states import (
    HyperState, POLARIZATION, SPATIAL, TwoQubitState, bell_phi_plus,
    density_to_json, fidelity, make_initial_state, mix, post_select, reduced,
    save_density_json, trace_distance,
)
from .tomography import DetectionParams, fidelity_standard_error, \
    linear_inversion, mle_reconstruct, sample_tomography, write_records_csv

ERROR_KINDS = ("none", "bit_flip", "phase_flip")
COLLECTIONS = ("modes01", "modes23", "both")
ANALYSES = ("tomography_pol", "tomography_spa", "chsh")

COLLECTION_MODES = {"modes01": frozenset({0, 1}), "modes23": frozenset({2, 3})}

# Chip/link constants quoted with the source experiment; they feed only the
# pair-rate helper below and never touch the quantum state.
HARDWARE_METADATA = {
    "grating_coupler_db": -5.4,
    "waveguide_loss_db_per_cm": 4.5,
    "pump_power_dbm": 19.2,
    "pump_repetition_ghz": 9.95,
    "spd_efficiency": 0.25,
}


class ConfigError(ValueError):
    """Raised for malformed scenario configuration."""


def detected_rate_from_generated(generated_hz: float,
                                 grating_coupler_db: float = -5.4,
                                 spd_efficiency: float = 0.25) -> float:
    """Rough link budget: each photon passes one grating coupler and one SPD."""
    per_photon = 10.0 ** (grating_coupler_db / 10.0) * spd_efficiency
    return generated_hz * per_photon**2


@dataclass(frozen=True)
class Scenario:
    name: str = "run"
    error_kind: str = "none"
    p_pol: float = 0.2
    p_spa: float = 0.2
    weights: tuple[float, float, float, float] | None = None
    purify: bool = False
    collection: str = "modes01"
    baseline: noise.BaselineNoise = field(default_factory=noise.BaselineNoise)
    detection: DetectionParams = field(default_factory=DetectionParams)
    integration_s: float = 60.0
    analyses: tuple[str, ...] = ANALYSES
    egc_override: str | None = None

    def __post_init__(self):
        if self.error_kind not in ERROR_KINDS:
            raise ConfigError(f"error_kind must be one of {ERROR_KINDS}, "
                              f"got {self.error_kind!r}")
        if self.collection not in COLLECTIONS:
            raise ConfigError(f"collection must be one of {COLLECTIONS}, "
                              f"got {self.collection!r}")
        if self.collection == "both" and not self.purify:
            raise ConfigError("collection='both' requires purify=true")
        bad = [a for a in self.analyses if a not in ANALYSES]
        if bad:
            raise ConfigError(f"unknown analyses {bad}; allowed: {ANALYSES}")
        if self.integration_s < 0:
            raise ConfigError("integration_s must be non-negative")
        if self.egc_override is not None:
            key = str(self.egc_override).strip().upper()
            if key not in circuits.CONFIG_NAMES:
                raise ConfigError(f"unknown egc_override {self.egc_override!r}")
            object.__setattr__(self, "egc_override", key)
        object.__setattr__(self, "analyses", tuple(self.analyses))

    def error_distribution(self) -> noise.ErrorDistribution | None:
        if self.error_kind == "none" or self.egc_override is not None:
            return None
        if self.weights is not None:
            return noise.ErrorDistribution(kind=self.error_kind, weights=self.weights)
        return noise.independent_rates(self.p_pol, self.p_spa, kind=self.error_kind)


@dataclass(frozen=True)
class RunReport:
    scenario: Scenario
    seed: int
    success_probability: float
    no_coincidence: bool
    exact: dict
    sampled: dict
    rho: dict
    timestamps: dict
    records: dict = field(repr=False, default_factory=dict)  # not serialized


def _scenario_to_dict(sc: Scenario) -> dict:
    return {
        "name": sc.name,
        "error_kind": sc.error_kind,
        "p_pol": sc.p_pol,
        "p_spa": sc.p_spa,
        "weights": list(sc.weights) if sc.weights is not None else None,
        "purify": sc.purify,
        "collection": sc.collection,
        "baseline": {"visibility_pol": sc.baseline.visibility_pol,
                     "visibility_spa": sc.baseline.visibility_spa},
        "detection": {"pair_rate": sc.detection.pair_rate,
                      "efficiency": sc.detection.efficiency,
                      "dark_coincidence_rate": sc.detection.dark_coincidence_rate,
                      "seed": sc.detection.seed,
                      "pair_rate_is_generated": sc.detection.pair_rate_is_generated},
        "integration_s": sc.integration_s,
        "analyses": list(sc.analyses),
        "egc_override": sc.egc_override,
    }


_TOP_KEYS = ("name", "error_kind", "p_pol", "p_spa", "purify", "collection",
             "baseline", "detection", "integration_s", "analyses", "egc_override",
             "w_none", "w_pol", "w_spa", "w_both")
_BASELINE_KEYS = ("visibility_pol", "visibility_spa")
_DETECTION_KEYS = ("pair_rate", "efficiency", "dark_coincidence_rate", "seed",
                   "pair_rate_is_generated")


def scenario_from_dict(cfg: dict) -> Scenario:
    """Strict config parsing; unknown keys are rejected."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(cfg) - set(_TOP_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    weight_keys = [k for k in ("w_none", "w_pol", "w_spa", "w_both") if k in cfg]
    if weight_keys and len(weight_keys) != 4:
        raise ConfigError("explicit weights need all of w_none, w_pol, w_spa, w_both")
    if weight_keys and ("p_pol" in cfg or "p_spa" in cfg):
        raise ConfigError("give either p_pol/p_spa or explicit weights, not both")

    kwargs: dict = {}
    for key in ("name", "error_kind", "p_pol", "p_spa", "purify", "collection",
                "integration_s", "egc_override"):
        if key in cfg:
            kwargs[key] = cfg[key]
    if "analyses" in cfg:
        kwargs["analyses"] = tuple(cfg["analyses"])
    if weight_keys:
        kwargs["weights"] = (cfg["w_none"], cfg["w_pol"], cfg["w_spa"], cfg["w_both"])
    try:
        if "baseline" in cfg:
            sub = cfg["baseline"]
            unknown = sorted(set(sub) - set(_BASELINE_KEYS))
            if unknown:
                raise ConfigError(f"unknown baseline keys: {unknown}")
            kwargs["baseline"] = noise.BaselineNoise(**sub)
        if "detection" in cfg:
            sub = cfg["detection"]
            unknown = sorted(set(sub) - set(_DETECTION_KEYS))
            if unknown:
                raise ConfigError(f"unknown detection keys: {unknown}")
            kwargs["detection"] = DetectionParams(**sub)
        return Scenario(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return scenario_from_dict(cfg)


# ---------------------------------------------------------------------------
# Pipeline

def _propagate(sc: Scenario) -> tuple[HyperState | None, float]:
    state = make_initial_state()
    state = noise.apply_baseline(state, sc.baseline)
    if sc.egc_override is not None:
        state = noise.apply_error_branch(state, sc.egc_override, side=circuits.BOB)
    else:
        dist = sc.error_distribution()
        if dist is not None:
            state = noise.apply_error_mixture(state, dist, side=circuits.BOB)
    if sc.purify:
        if sc.error_kind == "phase_flip":
            state = circuits.apply_unitary(
                state, circuits.compile_config("HADAMARD_BANK", side=circuits.BOTH))
        state = circuits.apply_unitary(
            state, circuits.compile_config("PURIFY_ON", side=circuits.BOTH))
        if sc.collection == "both":
            s01, p01 = post_select(state, COLLECTION_MODES["modes01"])
            s23, p23 = post_select(state, COLLECTION_MODES["modes23"])
            total = p01 + p23
            if total < 1e-15:
                return None, total
            parts = [(s, p / total) for s, p in ((s01, p01), (s23, p23)) if s is not None]
            return mix(parts), total
        return post_select(state, COLLECTION_MODES[sc.collection])
    return state, 1.0


def _chsh_to_dict(res: ChshResult) -> dict:
    out = {"S": res.S, "correlations": list(res.correlations)}
    if res.standard_error:
        out["standard_error"] = res.standard_error
    return out


def run(scenario: Scenario) -> RunReport:
    """Execute one scenario and assemble its report."""
    state, success = _propagate(scenario)
    if state is None:
        return RunReport(
            scenario=scenario, seed=scenario.detection.seed,
            success_probability=success, no_coincidence=True,
            exact={}, sampled={}, rho={},
            timestamps={"simulated_start_s": 0.0, "simulated_duration_s": 0.0,
                        "per_analysis_s": {}},
        )

    rho_pol = reduced(state, POLARIZATION)
    rho_spa = reduced(state, SPATIAL)
    target = bell_phi_plus()
    settings = canonical_settings()
    opt_settings, opt_result = optimize_settings(rho_pol)

    exact = {
        "fidelity_pol": fidelity(rho_pol, target),
        "fidelity_spa": fidelity(rho_spa, target),
        "chsh_canonical": _chsh_to_dict(chsh_value(rho_pol, settings)),
        "chsh_optimized": {
            **_chsh_to_dict(opt_result),
            "settings": {k: list(v) for k, v in
                         zip(("a", "a_prime", "b", "b_prime"),
                             (opt_settings.a, opt_settings.a_prime,
                              opt_settings.b, opt_settings.b_prime))},
        },
    }

    rho_json = {"exact_pol": density_to_json(rho_pol),
                "exact_spa": density_to_json(rho_spa)}
    sampled: dict = {}
    records: dict = {}
    per_analysis: dict = {}

    for analysis in scenario.analyses:
        if analysis == "chsh":
            recs = sample_chsh(rho_pol, settings, scenario.detection,
                               scenario.integration_s, rate_scale=success)
            records["chsh"] = list(recs.values())
            sampled["chsh"] = _chsh_to_dict(chsh_from_counts(recs))
            per_analysis[analysis] = 4 * scenario.integration_s
        else:
            dof = POLARIZATION if analysis == "tomography_pol" else SPATIAL
            rho_dof = rho_pol if dof == POLARIZATION else rho_spa
            recs = sample_tomography(rho_dof, dof, scenario.detection,
                                     scenario.integration_s, rate_scale=success)
            records[analysis] = recs
            mle = mle_reconstruct(recs)
            lin = linear_inversion(recs)
            sampled[analysis] = {
                "method": "mle",
                "fidelity": fidelity(mle.rho_hat, target),
                "fidelity_se": fidelity_standard_error(recs, target),
                "fidelity_linear_inversion": fidelity(lin.rho_hat, target),
                "iterations": mle.iterations,
                "converged": mle.converged,
                "log_likelihood": mle.log_likelihood,
                "trace_distance_to_exact": trace_distance(mle.rho_hat, rho_dof),
            }
            rho_json[f"mle_{'pol' if dof == POLARIZATION else 'spa'}"] = \
                density_to_json(mle.rho_hat)
            per_analysis[analysis] = 9 * scenario.integration_s

    timestamps = {
        "simulated_start_s": 0.0,
        "simulated_duration_s": float(sum(per_analysis.values())),
        "per_analysis_s": per_analysis,
    }
    return RunReport(scenario=scenario, seed=scenario.detection.seed,
                     success_probability=success, no_coincidence=False,
                     exact=exact, sampled=sampled, rho=rho_json,
                     timestamps=timestamps, records=records)


def report_to_dict(report: RunReport) -> dict:
    return {
        "scenario": _scenario_to_dict(report.scenario),
        "seed": report.seed,
        "success_probability": report.success_probability,
        "no_coincidence": report.no_coincidence,
        "exact": report.exact,
        "sampled": report.sampled,
        "rho": report.rho,
        "timestamps": report.timestamps,
    }


def report_json_bytes(report: RunReport) -> bytes:
    return (json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n").encode()


def write_report(report: RunReport, outdir) -> Path:
    """Write report.json plus counts/*.csv and rho/*.json side files."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "report.json"
    path.write_bytes(report_json_bytes(report))
    if report.records:
        counts_dir = outdir / "counts"
        counts_dir.mkdir(exist_ok=True)
        for name, recs in report.records.items():
            write_records_csv(recs, counts_dir / f"{name}.csv")
    if report.rho:
        rho_dir = outdir / "rho"
        rho_dir.mkdir(exist_ok=True)
        for name, obj in report.rho.items():
            with open(rho_dir / f"{name}.json", "w", encoding="utf-8") as fh:
                json.dump(obj, fh, sort_keys=True)
                fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# The reference experiment matrix

PAPER_VALUES = {
    "baseline_fidelity_pol": 0.90,
    "baseline_fidelity_spa": 0.90,
    "bf_before_fidelity_pol": 0.71,
    "bf_before_fidelity_spa": 0.72,
    "bf_after_fidelity_pol": 0.82,
    "bf_chsh_before": 1.87,
    "bf_chsh_after": 2.17,
    "pf_before_fidelity_pol": 0.72,
    "pf_before_fidelity_spa": 0.74,
    "pf_after_fidelity_pol": 0.83,
    "pf_chsh_before": 1.94,
    "pf_chsh_after": 2.19,
}


def paper_suite_scenarios(seed: int = 20250809) -> list[Scenario]:
    """The eight chip reconfigurations behind the reported quantities."""
    v = noise.calibrate_visibility(0.90)
    base = noise.BaselineNoise(visibility_pol=v, visibility_spa=v)

    def det(i: int) -> DetectionParams:
        return DetectionParams(pair_rate=40.0, efficiency=0.25, seed=seed + i)

    return [
        Scenario(name="baseline_pol", error_kind="none", baseline=base,
                 detection=det(0), analyses=("tomography_pol",)),
        Scenario(name="baseline_spa", error_kind="none", baseline=base,
                 detection=det(1), analyses=("tomography_spa",)),
        Scenario(name="bf_before", error_kind="bit_flip", baseline=base,
                 detection=det(2)),
        Scenario(name="bf_after", error_kind="bit_flip", purify=True,
                 baseline=base, detection=det(3),
                 analyses=("tomography_pol", "chsh")),
        Scenario(name="pf_before", error_kind="phase_flip", baseline=base,
                 detection=det(4)),
        Scenario(name="pf_after", error_kind="phase_flip", purify=True,
                 baseline=base, detection=det(5),
                 analyses=("tomography_pol", "chsh")),
        Scenario(name="ideal_purify_pooled", error_kind="none", purify=True,
                 collection="both", baseline=base, detection=det(6),
                 analyses=("tomography_pol",)),
        Scenario(name="bf_after_alt_collection", error_kind="bit_flip",
                 purify=True, collection="modes23", baseline=base,
                 detection=det(7), analyses=("tomography_pol",)),
    ]


def run_paper_suite(seed: int = 20250809) -> tuple[list[RunReport], list[dict]]:
    """Run the reference matrix and build the comparison table."""
    reports = {sc.name: run(sc) for sc in paper_suite_scenarios(seed)}

    def row(quantity: str, report: RunReport, exact_key: str, sampled_path=None):
        exact_val = (report.exact[exact_key]["S"]
                     if exact_key.startswith("chsh") else report.exact[exact_key])
        sampled_val = None
        if sampled_path is not None and sampled_path[0] in report.sampled:
            entry = report.sampled[sampled_path[0]]
            sampled_val = entry[sampled_path[1]]
        return {"quantity": quantity, "paper_value": PAPER_VALUES[quantity],
                "simulated_exact": exact_val, "simulated_sampled": sampled_val}

    table = [
        row("baseline_fidelity_pol", reports["baseline_pol"], "fidelity_pol",
            ("tomography_pol", "fidelity")),
        row("baseline_fidelity_spa", reports["baseline_spa"], "fidelity_spa",
            ("tomography_spa", "fidelity")),
        row("bf_before_fidelity_pol", reports["bf_before"], "fidelity_pol",
            ("tomography_pol", "fidelity")),
        row("bf_before_fidelity_spa", reports["bf_before"], "fidelity_spa",
            ("tomography_spa", "fidelity")),
        row("bf_after_fidelity_pol", reports["bf_after"], "fidelity_pol",
            ("tomography_pol", "fidelity")),
        row("bf_chsh_before", reports["bf_before"], "chsh_canonical", ("chsh", "S")),
        row("bf_chsh_after", reports["bf_after"], "chsh_canonical", ("chsh", "S")),
        row("pf_before_fidelity_pol", reports["pf_before"], "fidelity_pol",
            ("tomography_pol", "fidelity")),
        row("pf_before_fidelity_spa", reports["pf_before"], "fidelity_spa",
            ("tomography_spa", "fidelity")),
        row("pf_after_fidelity_pol", reports["pf_after"], "fidelity_pol",
            ("tomography_pol", "fidelity")),
        row("pf_chsh_before", reports["pf_before"], "chsh_canonical", ("chsh", "S")),
        row("pf_chsh_after", reports["pf_after"], "chsh_canonical", ("chsh", "S")),
    ]
    return list(reports.values()), table


def format_comparison_table(table: list[dict]) -> str:
    lines = [f"{'quantity':<28} {'paper':>8} {'exact':>10} {'sampled':>10}"]
    for row in table:
        sampled = f"{row['simulated_sampled']:.4f}" if row["simulated_sampled"] is not None else "-"
        lines.append(f"{row['quantity']:<28} {row['paper_value']:>8.2f} "
                     f"{row['simulated_exact']:>10.4f} {sampled:>10}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Plot emission

def emit_plots(report_dict: dict, outdir) -> list[Path]:
    """Bar-chart SVGs (real/imaginary 4x4 grids) plus exact CSVs of heights."""
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "purisim"
    import matplotlib.pyplot as plt

    rho_entries = report_dict.get("rho", {})
    if not rho_entries:
        raise ValueError("report contains no reconstructed density matrices")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    from .states import density_from_json

    for name, obj in sorted(rho_entries.items()):
        rho = density_from_json(obj)
        if rho.shape != (4, 4):
            continue
        labels = ["HH", "HV", "VH", "VV"] if "pol" in name else ["00", "01", "10", "11"]

        fig = plt.figure(figsize=(9, 4))
        for k, (part, title) in enumerate(((rho.real, "Re"), (rho.imag, "Im"))):
            ax = fig.add_subplot(1, 2, k + 1, projection="3d")
            xs, ys = np.meshgrid(np.arange(4), np.arange(4), indexing="ij")
            ax.bar3d(xs.ravel() - 0.4, ys.ravel() - 0.4, np.zeros(16),
                     0.8, 0.8, part.ravel(), shade=True, color="#4878cf")
            ax.set_zlim(-0.5, 0.5)
            ax.set_xticks(range(4), labels, fontsize=7)
            ax.set_yticks(range(4), labels, fontsize=7)
            ax.set_title(f"{title}({name})", fontsize=9)
        svg_path = outdir / f"{name}.svg"
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(svg_path)

        csv_path = outdir / f"{name}_bars.csv"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write("row,col,real,imag\n")
            for r in range(4):
                for c in range(4):
                    fh.write(f"{r},{c},{rho[r, c].real!r},{rho[r, c].imag!r}\n")
        written.append(csv_path)
    return written
