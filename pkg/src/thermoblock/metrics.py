"""Per-step benchmark records, CSV output and the per-run summary."""
import csv
import os
from collections import OrderedDict
from dataclasses import asdict, dataclass, fields


@dataclass
class MetricsRecord:
    case: str
    precond: str
    schur: str
    grid: str
    step: int
    time: float
    dt: float
    newton: int
    linear: int
    converged: bool
    reason: str = ""
    t_assembly: float = 0.0
    t_setup: float = 0.0
    t_krylov: float = 0.0


COLUMNS = [f.name for f in fields(MetricsRecord)]
GROUP_KEYS = ("case", "precond", "schur", "grid")
AVERAGE_LABEL = "Average linear iterations per nonlinear iteration"


def records_from_stats(stats, case, precond_config, grid):
    """One MetricsRecord per solve attempt in a SolverStats."""
    schur = precond_config.schur if precond_config.kind == "block" else "-"
    grid = "x".join(str(n) for n in grid) if not isinstance(grid, str) else grid
    out = []
    for r in stats.records:
        t = r.timings
        out.append(MetricsRecord(case, precond_config.kind, schur, grid, r.step, r.time, r.dt,
                                 r.newton_iterations, r.total_linear, r.converged, r.reason,
                                 t.get("assembly", 0.0), t.get("setup", 0.0), t.get("krylov", 0.0)))
    return out


def emit_metrics(records, path, append=False):
    """Write records as CSV with a fixed header. With ``append`` the header is written only for a new file."""
    new = not append or not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS)
        if new:
            w.writeheader()
        for rec in records:
            w.writerow(asdict(rec))


def read_metrics(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty metrics file")
        missing = set(COLUMNS) - set(reader.fieldnames)
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        return list(reader)


def summarize(rows):
    """Group rows by run and compute total linear / total Newton iterations.

    ``rows`` are MetricsRecords or dicts as returned by ``read_metrics``.
    Returns an ordered list of dicts (first-seen group order).
    """
    groups = OrderedDict()
    for row in rows:
        row = asdict(row) if isinstance(row, MetricsRecord) else row
        key = tuple(str(row[k]) for k in GROUP_KEYS)
        g = groups.setdefault(key, {"steps": 0, "newton": 0, "linear": 0, "failed": 0})
        g["steps"] += 1
        g["newton"] += int(row["newton"])
        g["linear"] += int(row["linear"])
        if str(row["converged"]) not in ("True", "true", "1"):
            g["failed"] += 1
    out = []
    for key, g in groups.items():
        avg = g["linear"] / g["newton"] if g["newton"] else float("nan")
        out.append({**dict(zip(GROUP_KEYS, key)), **g, "average": avg})
    return out


def format_summary(summary):
    head = f"{'case':<14}{'precond':<8}{'schur':<11}{'grid':<10}{'steps':>6}{'failed':>7}{'newton':>8}{'linear':>8}  {AVERAGE_LABEL}"
    lines = [head]
    for s in summary:
        lines.append(f"{s['case']:<14}{s['precond']:<8}{s['schur']:<11}{s['grid']:<10}{s['steps']:>6}"
                     f"{s['failed']:>7}{s['newton']:>8}{s['linear']:>8}  {s['average']:.4g}")
    return "\n".join(lines)
