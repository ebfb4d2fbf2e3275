# qevar/runner.py
# ───────────────────────────────────────────────────────────────────
# Orchestrates one experiment command: build spectra/shells, run the
# closed forms, oracles and Monte-Carlo estimators, assemble a report
# whose every number carries its provenance, and export it.

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from qevar.config import ExperimentConfig
from qevar.haar import GENERATOR_NAME, HaarSampler, mc_moment, mc_weingarten_spotcheck
from qevar.orbit import (
    MomentReport,
    SpectrumVector,
    beta4_candidates,
    beta4_ratio,
    beta4_resolved,
    center_spectrum,
    moment2_exact,
    moment4_exact,
    variance_Y,
)
from qevar.qe import slln_run
from qevar.sympoly import laplacian_at_zero, monomial_laplacian_oracle, partitions_of, printed_laplacian_at_zero
from qevar.torus import (
    SphereMultiplier,
    TorusObservable,
    direction_equidistribution,
    harmonic_test_functions,
    lattice_shell,
    local_weyl_check,
    multiplicity_sequence,
    qe_experiment,
)
from qevar.weingarten import entry_moment, exact_m2, exact_m4
from utils.report import ReportExporter

ORACLE_TOLERANCE = 1e-10
SIGMAS = 4.0

# CSV columns per command
CSV_COLUMNS: Dict[str, List[str]] = {
    "moments": ["d", "m2_exact", "m2_weingarten", "m2_mc", "m2_mc_stderr",
                "m4_exact", "m4_weingarten", "m4_mc", "m4_mc_stderr", "variance_exact"],
    "mc-verify": ["check", "d", "spectrum_index", "expected", "estimate", "stderr", "sigmas", "passed"],
    "beta4-adjudicate": ["d", "oracle", "recomputed_series", "lemma_statement", "final_display",
                         "rel_recomputed_series", "rel_lemma_statement", "rel_final_display"],
    "slln": ["level", "d", "y_value", "y_expected", "y_variance", "increment", "partial_sum", "cesaro_average"],
    "torus-shells": ["dim", "n", "multiplicity", "enumerated"],
    "torus-qe": ["dim", "n", "d", "trace_deviation", "v_trace_mean", "v_trace_stderr", "v_trace_expected",
                 "v_liouville_mean", "y_value", "y_expected", "partial_sum"],
}


@dataclass
class RunOutcome:
    command: str
    report: Dict[str, Any]
    rows: List[Dict[str, Any]]
    passed: Optional[bool]
    paths: List[str] = field(default_factory=list)
    headline: Dict[str, Any] = field(default_factory=dict)


def claim(value: Any, provenance: str) -> Dict[str, Any]:
    return {"value": value, "provenance": provenance}


def grid_spectrum(d: int) -> SpectrumVector:
    """Equally spaced eigenvalues on [-1, 1] (a single 0 for d = 1)."""
    if d == 1:
        return center_spectrum([0.0])
    return center_spectrum(np.linspace(-1.0, 1.0, d))


class ExperimentRunner:
    """
    Runs one command of the experiment CLI:
      moments, mc-verify, beta4-adjudicate, slln, torus-shells, torus-qe
    """

    def __init__(self, config: ExperimentConfig):
        """
        Args:
          config – validated ExperimentConfig (see qevar.config.build_config)
        """
        self.config = config
        self.logger = logging.getLogger(__name__)
        self.sampler = HaarSampler(seed=config.seed, d=1)

    def run(self, export: bool = True) -> RunOutcome:
        """
        Execute the command and write the report.
        Raises exception on any step failure.
        """
        command = self.config.command
        self.logger.info(f"Starting qevar {command} (seed {self.config.seed}, {self.config.seed_source})")
        steps = {
            "moments": self._moments,
            "mc-verify": self._mc_verify,
            "beta4-adjudicate": self._beta4_adjudicate,
            "slln": self._slln,
            "torus-shells": self._torus_shells,
            "torus-qe": self._torus_qe,
        }
        try:
            results, rows, passed, headline = steps[command]()
        except ValueError as e:
            self.logger.error(f"{command} rejected its input: {str(e)}")
            raise
        except Exception as e:
            self.logger.error(f"{command} failed: {str(e)}")
            raise RuntimeError(f"{command} failed: {str(e)}") from e

        report = {
            "command": command,
            "config": self.config.resolved(),
            "generator": GENERATOR_NAME,
            "results": results,
            "passed": passed,
        }
        outcome = RunOutcome(command=command, report=report, rows=rows, passed=passed, headline=headline)
        if export:
            outcome.paths = self._export(outcome)
        if passed is False:
            self.logger.warning(f"{command}: verification failed")
        else:
            self.logger.info(f"✓ {command} completed")
        return outcome

    # ─── spectra ────────────────────────────────────────────────────

    def _spectra_for(self, d: int) -> List[SpectrumVector]:
        source = self.config.spectrum_source
        if source == "explicit":
            return [center_spectrum(self.config.spectrum)]
        if source == "uniform-grid":
            return [grid_spectrum(d)]
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.config.seed, spawn_key=(0, d))))
        return [center_spectrum(rng.uniform(-1.0, 1.0, d)) for _ in range(self.config.spectra_count)]

    def _mc_sampler(self, d: int, index: int) -> HaarSampler:
        return HaarSampler(seed=self.config.seed, d=d, stream_index=index, path=(1, d))

    # ─── commands ───────────────────────────────────────────────────

    def _moments(self):
        self.logger.info("Step 1: Closed forms, Weingarten oracle and Monte-Carlo moments")
        results, rows = [], []
        for d in self.config.d:
            for index, s in enumerate(self._spectra_for(d)):
                sampler = self._mc_sampler(d, index)
                m2_mc = mc_moment(s, 2, self.config.samples, sampler, self.config.batch_size, self.config.progress)
                m4_mc = mc_moment(s, 4, self.config.samples, sampler.spawn(1), self.config.batch_size,
                                  self.config.progress)
                report = MomentReport(
                    d=d,
                    m2_exact=moment2_exact(s),
                    m4_exact=moment4_exact(s),
                    variance_exact=variance_Y(s),
                    m2_weingarten=float(exact_m2(s)),
                    m4_weingarten=float(exact_m4(s)),
                    m2_mc=m2_mc,
                    m4_mc=m4_mc,
                    sample_count=self.config.samples,
                    seed=self.config.seed,
                    generator=GENERATOR_NAME,
                )
                entry = report.to_dict()
                entry["spectrum"] = s.to_dict()
                results.append(entry)
                rows.append({
                    "d": d, "m2_exact": report.m2_exact, "m2_weingarten": report.m2_weingarten,
                    "m2_mc": m2_mc.mean, "m2_mc_stderr": m2_mc.stderr,
                    "m4_exact": report.m4_exact, "m4_weingarten": report.m4_weingarten,
                    "m4_mc": m4_mc.mean, "m4_mc_stderr": m4_mc.stderr,
                    "variance_exact": report.variance_exact,
                })
                self.logger.info(f"d={d}: m2={report.m2_exact:.6g} (MC {m2_mc.mean:.6g} ± {m2_mc.stderr:.2g}), "
                                 f"m4={report.m4_exact:.6g}")
        passed = all(entry["agrees"] for entry in results)
        headline = {"m2_exact": rows[0]["m2_exact"], "m4_exact": rows[0]["m4_exact"], "agrees": passed}
        return results, rows, passed, headline

    def _mc_verify(self):
        self.logger.info("Step 1: Monte-Carlo verification of closed forms and entry moments")
        checks = []
        for d in self.config.d:
            self.logger.info(f"Monte-Carlo verification at d={d}")
            for index, s in enumerate(self._spectra_for(d)):
                sampler = self._mc_sampler(d, index)
                for k, exact in ((2, moment2_exact(s)), (4, moment4_exact(s))):
                    estimate = mc_moment(s, k, self.config.samples, sampler.spawn(k),
                                         self.config.batch_size, self.config.progress)
                    checks.append(self._check(f"m{k}", d, index, exact, "closed-form", estimate))
            entry_sampler = self._mc_sampler(d, 1000)
            for name, rows_idx, cols_idx in (("E|U00|^2", (0,), (0,)),
                                             ("E|U00|^4", (0, 0), (0, 0)),
                                             ("E|U00|^2|U01|^2", (0, 0), (0, 1))):
                exact = float(entry_moment(rows_idx, cols_idx, d))
                estimate = mc_weingarten_spotcheck(rows_idx, cols_idx, self.config.samples,
                                                   entry_sampler.spawn(len(checks)), self.config.batch_size,
                                                   self.config.progress)
                checks.append(self._check(name, d, None, exact, "weingarten", estimate))
        passed = all(check["passed"] for check in checks)
        headline = {"checks": len(checks), "failed": sum(1 for c in checks if not c["passed"]), "passed": passed}
        return checks, checks, passed, headline

    def _check(self, name, d, index, exact, provenance, estimate) -> Dict[str, Any]:
        gap = abs(estimate.mean - exact)
        sigmas = gap / estimate.stderr if estimate.stderr > 0 else (0.0 if gap == 0 else math.inf)
        return {
            "check": name,
            "d": d,
            "spectrum_index": index,
            "expected": exact,
            "expected_provenance": provenance,
            "estimate": estimate.mean,
            "stderr": estimate.stderr,
            "estimate_provenance": estimate.to_dict()["provenance"],
            "sigmas": sigmas,
            "passed": sigmas <= SIGMAS,
        }

    def _beta4_adjudicate(self):
        self.logger.info("Step 1: Adjudicating the degree-4 coefficient against the Weingarten oracle")
        per_d, rows = [], []
        matching = {"recomputed_series": True, "lemma_statement": True, "final_display": True}
        for d in self.config.d:
            for s in self._spectra_for(d):
                oracle = float(exact_m4(s))
                candidates = beta4_candidates(s)
                residuals = {name: abs(value - oracle) / max(abs(oracle), 1e-300) for name, value in candidates.items()}
                for name in matching:
                    if residuals.get(name, math.inf) > ORACLE_TOLERANCE:
                        matching[name] = False
                per_d.append({
                    "d": d,
                    "p2": s.p2,
                    "p4": s.p4,
                    "oracle": claim(oracle, "weingarten"),
                    "candidates": {name: claim(value, "closed-form") for name, value in candidates.items()},
                    "relative_residuals": residuals,
                })
                row = {"d": d, "oracle": oracle}
                row.update(candidates)
                row.update({f"rel_{name}": value for name, value in residuals.items()})
                rows.append(row)
                self.logger.info(f"d={d}: oracle m4={oracle:.10g}; residuals "
                                 + ", ".join(f"{k}={v:.2e}" for k, v in sorted(residuals.items())))

        self.logger.info("Step 2: Laplacian-at-zero table against the symbolic oracle")
        tables = []
        for d in sorted({d for d in self.config.d if d <= 6} or {4}):
            for weight in (2, 4):
                for mu in partitions_of(weight, weight):
                    tables.append({
                        "d": d,
                        "mu": list(mu.parts),
                        "symbolic": claim(monomial_laplacian_oracle(mu, d), "enumeration"),
                        "certified": laplacian_at_zero(mu, d),
                        "printed": printed_laplacian_at_zero(mu, d),
                    })

        self.logger.info("Step 3: Asymptotic constants")
        asymptotics = []
        for d in (100, 400, 1000):
            s = grid_spectrum(d)
            m2, m4 = moment2_exact(s), moment4_exact(s)
            asymptotics.append({
                "d": d,
                "variance_d3_over_p2sq": claim(variance_Y(s) * d ** 3 / s.p2 ** 2, "closed-form"),
                "m4_over_m2sq": claim(m4 / m2 ** 2, "closed-form"),
                "beta4_resolved_d2": claim(beta4_resolved(d) * d * d, "closed-form"),
                "beta4_statement_over_resolved": claim(beta4_ratio(d), "closed-form"),
            })

        names = [name for name, ok in matching.items() if ok]
        if names:
            self.logger.info(f"Matching form(s): {', '.join(names)}")
        else:
            self.logger.error("No candidate form matches the Weingarten oracle")
        results = {
            "per_d": per_d,
            "matching_forms": names,
            "laplacian_table": tables,
            "asymptotics": asymptotics,
            "tolerance": ORACLE_TOLERANCE,
        }
        headline = {"matching_forms": ", ".join(names) or "none",
                    "table_mismatches": sum(1 for t in tables if t["symbolic"]["value"] != t["certified"])}
        return results, rows, bool(names), headline

    def _slln(self):
        n_max = self.config.n_max
        self.logger.info(f"Step 1: SLLN partial sums over d_n = n, n = 2..{n_max}")
        spectra = [grid_spectrum(n) for n in range(2, n_max + 1)]
        run = slln_run(spectra, self.sampler.spawn(2), labels=list(range(2, n_max + 1)),
                       progress=self.config.progress)
        results = run.to_dict()
        within = abs(run.final_ratio()) <= run.variance_band()
        results["within_band"] = within
        headline = {"S_N/N": run.final_ratio(), "3-sigma band": run.variance_band(),
                    "within_band": within, "borel_cantelli_summable": run.borel_cantelli.summable}
        return results, run.to_records(), None, headline

    def _torus_shells(self):
        dim, n_max = self.config.dim, self.config.n_max
        self.logger.info(f"Step 1: Lattice shells in dimension {dim} up to n = {n_max}")
        sequence = multiplicity_sequence(dim, n_max, self.config.min_multiplicity)
        rows = []
        mismatches = 0
        for n, multiplicity in sequence.entries:
            enumerated = lattice_shell(dim, n).multiplicity if dim <= 3 or n <= 64 else None
            if enumerated is not None and enumerated != multiplicity:
                mismatches += 1
                self.logger.error(f"n={n}: theta count {multiplicity} != enumeration {enumerated}")
            rows.append({"dim": dim, "n": n, "multiplicity": multiplicity, "enumerated": enumerated})
        results = {
            "dim": dim,
            "n_max": n_max,
            "shells": [dict(row, provenance="enumeration") for row in rows],
            "slope": claim(sequence.slope, "enumeration"),
            "expected_slope": dim - 2 if dim >= 5 else None,
            "mismatches": mismatches,
        }
        headline = {"shells": len(rows), "slope": sequence.slope, "mismatches": mismatches}
        return results, rows, mismatches == 0, headline

    def _observable(self, dim: int) -> TorusObservable:
        settings = self.config.observable or {}
        multiplier_name = settings.get("multiplier", "constant")
        if multiplier_name == "constant":
            multiplier = SphereMultiplier.constant(dim)
        else:
            multiplier = getattr(SphereMultiplier, multiplier_name)(dim)
        coeffs: Dict[Tuple[int, ...], complex] = {(0,) * dim: 1.0}
        for key, value in (settings.get("potential") or {}).items():
            frequency = tuple(int(v) for v in str(key).split(","))
            re, im = (value, 0.0) if isinstance(value, (int, float)) else value
            coeffs[frequency] = complex(re, im)
        return TorusObservable(dim, coeffs, multiplier)

    def _torus_qe(self):
        dim = self.config.dim
        obs = self._observable(dim)
        self.logger.info(f"Step 1: Building shells n = {self.config.n_values} in dimension {dim}")
        shells = [lattice_shell(dim, n) for n in self.config.n_values]
        self.logger.info("Step 2: Local Weyl and direction checks")
        weyl = local_weyl_check(shells, obs)
        tests = harmonic_test_functions(dim)
        directions = {shell.n: dict(zip([g.name for g in tests], direction_equidistribution(shell, tests)))
                      for shell in shells}
        self.logger.info(f"Step 3: {self.config.draws} random ONBs per shell")
        run = qe_experiment(shells, obs, self.config.draws, self.sampler.spawn(5), self.config.progress)
        rows = []
        passed = True
        for record, deviation in zip(run.levels, weyl.deviations):
            gap = abs(record.v_trace_mean - record.v_trace_expected)
            ok = gap <= SIGMAS * record.v_trace_stderr or gap <= 1e-15
            passed = passed and ok
            rows.append({
                "dim": dim, "n": record.level, "d": record.d, "trace_deviation": deviation,
                "v_trace_mean": record.v_trace_mean, "v_trace_stderr": record.v_trace_stderr,
                "v_trace_expected": record.v_trace_expected, "v_liouville_mean": record.v_liouville_mean,
                "y_value": record.y_value, "y_expected": record.y_expected, "partial_sum": record.partial_sum,
            })
        results = {
            "observable": obs.describe(),
            "local_weyl": asdict(weyl),
            "direction_equidistribution": {str(n): values for n, values in directions.items()},
            "sequence": run.to_dict(),
            "provenance": {"v_trace_mean": f"monte-carlo(samples={self.config.draws})",
                           "v_trace_expected": "closed-form", "trace_deviation": "enumeration"},
        }
        headline = {"shells": len(shells), "within_4_sigma": passed}
        return results, rows, passed, headline

    # ─── export ─────────────────────────────────────────────────────

    def _export(self, outcome: RunOutcome) -> List[str]:
        self.logger.info(f"Step 4: Exporting {outcome.command} report to {self.config.out}")
        try:
            exporter = ReportExporter(output_dir=self.config.out, name=outcome.command)
            columns = CSV_COLUMNS[outcome.command]
            if self.config.format == "csv":
                paths = [exporter.export_csv(outcome.rows, columns)]
            else:
                paths = [exporter.export_json(outcome.report)]
            paths.append(exporter.export_markdown(f"qevar {outcome.command}", outcome.headline, outcome.rows, columns))
            return paths
        except Exception as e:
            self.logger.error(f"Export failed: {str(e)}")
            raise RuntimeError(f"Export failed: {str(e)}") from e
