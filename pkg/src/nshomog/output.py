"""CSV artifacts with stable schemas, written atomically.

Schemas (headers are exact; the plotting front end refuses anything else):

  trajectory.csv  t,norm0,norm1,norm2[,obs_<s1>_<s2>_re,obs_<s1>_<s2>_im ...]
  stats.csv       statistic,estimate,half_width,eps,mode
  sweep.csv       eps,observable,distance,p_value,pathwise_l2
  hoelder.csv     dt,value,ratio

Floats are rendered with repr (shortest round-trip form), so identical
runs produce byte-identical files.
"""

import os
import tempfile
from pathlib import Path

STATS_HEADER = ["statistic", "estimate", "half_width", "eps", "mode"]
SWEEP_HEADER = ["eps", "observable", "distance", "p_value", "pathwise_l2"]
HOELDER_HEADER = ["dt", "value", "ratio"]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def atomic_write_text(path, text: str):
    """Write via a temp file in the target directory plus rename, so an
    interrupted run never leaves a partial file behind."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: list[str], rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def trajectory_rows(traj):
    header = ["t", "norm0", "norm1", "norm2"]
    for s1, s2 in traj.observable_modes:
        header.append(f"obs_{s1}_{s2}_re")
        header.append(f"obs_{s1}_{s2}_im")
    rows = []
    for i in range(len(traj.times)):
        row = [float(traj.times[i]), float(traj.norm0[i]), float(traj.norm1[i]), float(traj.norm2[i])]
        for j in range(len(traj.observable_modes)):
            z = traj.observables[i, j]
            row.extend([float(z.real), float(z.imag)])
        rows.append(row)
    return header, rows


def write_trajectory(path, traj):
    header, rows = trajectory_rows(traj)
    write_csv(path, header, rows)


def write_stats(path, stats_rows):
    write_csv(path, STATS_HEADER, stats_rows)


def write_sweep(path, sweep_rows):
    write_csv(
        path,
        SWEEP_HEADER,
        [(r.eps, r.observable, r.distance, r.p_value, r.pathwise_l2) for r in sweep_rows],
    )


def write_hoelder(path, rows):
    write_csv(path, HOELDER_HEADER, rows)
