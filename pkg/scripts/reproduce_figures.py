"""Write every preset figure sweep to results/<fig>.csv.

    python3 scripts/reproduce_figures.py [--realizations N] [--trials N] [fig ...]
"""
import argparse
from pathlib import Path

from mmcovert.cli import main

FIGURES = ["fig3", "fig4", "fig6", "fig7", "fig8", "fig9"]


def run():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("figures", nargs="*", default=FIGURES)
    ap.add_argument("--realizations", type=int, default=100)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(exist_ok=True)
    for fig in args.figures:
        code = main(["--realizations", str(args.realizations), "--trials", str(args.trials),
                     "--threads", str(args.threads), "--out", str(out / f"{fig}.csv"),
                     "reproduce", fig])
        print(f"{fig}: exit {code} -> {out / f'{fig}.csv'}")
        if code:
            return code
    return 0


if __name__ == "__main__":
    raise SystemExit(run())
