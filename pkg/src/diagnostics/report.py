"""
Assemble every check over one run's persisted artifacts into a report.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from src.errors import MissingArtifacts
from src.nonlinearity import coefficient_table
from src.selfsimilar import EnergyRecord, LedgerRow, SelfSimilarFrame
from src.solver.estimate import BlowupEstimate
from src.solver.grid import Snapshot
from src.store.codec import plain
from . import checks
from .checks import CheckResult, Verdict


logger = logging.getLogger(__name__)


@dataclass
class RunArtifacts:
    """Everything a report is computed from, as read back from disk."""
    config: Any
    snapshots: List[Snapshot] = field(default_factory=list)
    probes: List[Snapshot] = field(default_factory=list)
    estimate: Optional[BlowupEstimate] = None
    frames: List[SelfSimilarFrame] = field(default_factory=list)
    records: List[EnergyRecord] = field(default_factory=list)
    ledger: List[LedgerRow] = field(default_factory=list)
    run_stats: Dict[str, Any] = field(default_factory=dict)

    def missing(self) -> List[str]:
        absent = []
        for name in ("snapshots", "probes", "frames", "records", "ledger"):
            if not getattr(self, name):
                absent.append("energy" if name == "records" else name)
        if self.estimate is None:
            absent.append("estimate")
        return absent


@dataclass
class DiagnosticsReport:
    run_id: str
    checks: List[CheckResult]
    provenance: Dict[str, Any]

    @property
    def failed(self) -> List[CheckResult]:
        return [c for c in self.checks if c.verdict is Verdict.FAIL]

    def to_dict(self) -> Dict[str, Any]:
        return plain({
            "run_id": self.run_id,
            "checks": [c.to_dict() for c in self.checks],
            "provenance": self.provenance,
            "summary": {v.value: sum(c.verdict is v for c in self.checks) for v in Verdict},
        })

    def to_markdown(self) -> str:
        lines = [
            f"# Diagnostics report {self.run_id}",
            "",
            f"config hash `{self.provenance.get('config_hash', '')}`, code version "
            f"{self.provenance.get('code_version', '')}",
            "",
            "| check | anchor | statistic | threshold | verdict |",
            "|---|---|---|---|---|",
        ]
        for c in self.checks:
            mark = {"pass": "✓ pass", "fail": "✗ fail", "info": "info"}[c.verdict.value]
            lines.append(f"| {c.name} | {c.paper_anchor} | {_fmt(c.statistic)} | {_fmt(c.threshold)} | {mark} |")
        lines.append("")
        lines.append(f"{len(self.checks)} checks, {len(self.failed)} failed.")
        return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "-"
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def assemble_report(artifacts: RunArtifacts, code_version: str) -> DiagnosticsReport:
    """
    Run every check in a fixed order.

    Raises:
        MissingArtifacts: listing each absent input
    """
    absent = artifacts.missing()
    if absent:
        raise MissingArtifacts(absent)

    config = artifacts.config
    nl, grid = config.nl(), config.radial_grid()
    snaps = artifacts.snapshots
    log_gaps = artifacts.estimate.log_gaps
    top = max(s.phi_max for s in snaps) + max(f.s for f in artifacts.frames)
    table = coefficient_table(nl, max(top, config.solver.phi_stop) * 1.25 + 20.0)

    results: List[CheckResult] = []
    _, main = checks.main_theorem_check(artifacts.frames, config.analysis.C_compact)
    results.append(main)
    _, h_alpha = checks.h_alpha_check(snaps, log_gaps, config.alpha, grid, nl, table)
    results.append(h_alpha)
    _, derivative = checks.derivative_estimate_check(snaps, log_gaps, grid, table)
    results.extend(derivative)
    results.extend(checks.quasiscaling_check(artifacts.probes, grid, nl, table, config.analysis.lambdas,
                                             config.analysis.boundary_layer))
    results.append(checks.localization_check(snaps, grid, table))
    results.append(checks.type_i_witness(snaps, log_gaps, nl))
    results.append(checks.ode_lower_bound_check(snaps, log_gaps))
    results.append(checks.centre_monotonicity_check(snaps, bool(artifacts.run_stats.get("center_monotone", True)),
                                                    nl))
    results.append(checks.positivity_check(artifacts.frames))
    results.append(checks.lipschitz_check(artifacts.frames))
    results.append(checks.vs_bound_check(artifacts.frames))
    results.append(checks.h_integrability_check(artifacts.records))
    results.append(checks.energy_ledger_check(artifacts.ledger))
    results.append(checks.stationary_trend_check(artifacts.frames))
    results.extend(checks.leibniz_checks(config.alpha, grid.n))
    _, veq = checks.veq_residual_check(artifacts.frames, nl, table)
    results.append(veq)
    results.extend(checks.suite_checks(nl))

    if not config.in_theorem_scope:
        for result in results:
            result.detail["scope"] = "out of theorem scope (n > 2)"

    for result in results:
        logger.info(f"{result.name}: {result.verdict.value} ({_fmt(result.statistic)} vs {_fmt(result.threshold)})")

    provenance = {
        "config_hash": config.config_hash(),
        "code_version": code_version,
        "estimate_method": artifacts.estimate.method,
        "T_est": artifacts.estimate.T_est,
    }
    return DiagnosticsReport(config.run_id, results, provenance)
