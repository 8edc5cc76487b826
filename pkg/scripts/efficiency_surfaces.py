"""Generate the expert precision and matched-sample-size trade-off surfaces.

Writes two CSV grids (with JSON sidecars): the expert spread required to
reach a target efficiency at each sample size, and the sample size an
expert needs to match an exact-information study of a given size.

Usage: python scripts/efficiency_surfaces.py [--xi0 0.5] [--out-dir surfaces]
"""

import argparse
from pathlib import Path

from measurefit.cli import run


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--xi0", type=float, default=0.5)
    parser.add_argument("--out-dir", default="surfaces")
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    status = run([
        "surface", "--kind", "sigma", "--xi0", str(args.xi0),
        "--e-grid", "1.1:50:30", "--n-grid", "10:10000:30:log",
        "--out", str(out / "required_spread.csv"),
    ])
    status |= run([
        "surface", "--kind", "n", "--xi0", str(args.xi0),
        "--n0-grid", "5:100:30", "--sigma-grid", "0:0.5:30",
        "--out", str(out / "matched_sample_size.csv"),
    ])
    print(f"surfaces written under {out}/")
    raise SystemExit(status)


if __name__ == "__main__":
    main()
