"""Regenerate every figure dataset as CSV under ``results/`` (or ``--out-dir``).

Each job is one CLI invocation on a file from ``configs/``; plotting is left
to any external tool.
"""
import argparse
import contextlib
import sys
from pathlib import Path

from duoscale.cli import main as cli

ROOT = Path(__file__).resolve().parent.parent
JOBS = [
    ("modes", "modes_9dof", "modes_9dof"),
    ("backbone", "backbone_1dof", "backbone_1dof"),
    ("backbone", "backbone_9dof", "backbone_9dof"),
    ("frf", "frf_1dof", "frf_1dof"),
    ("simulate", "resonant_u0197", "sim_resonant_u0197"),
    ("spectrum", "resonant_u0197", "spectrum_resonant_u0197"),
    ("simulate", "decay_u079", "sim_decay_u079"),
    ("simulate", "growth_u004", "sim_growth_u004"),
    ("simulate", "offres_u003_w05", "sim_offres_u003_w05"),
    ("spectrum", "offres_u003_w05", "spectrum_offres_u003_w05"),
    ("simulate", "offres_u0001_w2", "sim_offres_u0001_w2"),
    ("spectrum", "offres_u0001_w2", "spectrum_offres_u0001_w2"),
    ("verify", "verify_free", "verify_free"),
    ("verify", "verify_linear", "verify_linear"),
    ("verify", "verify_forced", "verify_forced"),
]


def run(out_dir: Path, only: str | None) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    worst = 0
    for verb, config, name in JOBS:
        if only and only not in name:
            continue
        target = out_dir / f"{name}.csv"
        log = out_dir / f"{name}.log"
        with open(log, "w") as err, contextlib.redirect_stderr(err):
            code = cli([verb, "--config", str(ROOT / "configs" / f"{config}.ini"),
                        "--out", str(target)])
        print(f"{name:28s} exit {code}  -> {target.relative_to(out_dir.parent)}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=ROOT / "results")
    parser.add_argument("--only", help="run only jobs whose name contains this text")
    args = parser.parse_args()
    sys.exit(run(args.out_dir, args.only))
