# Diagnostics package
from .checks import CheckResult, Verdict
from .report import DiagnosticsReport, RunArtifacts, assemble_report
