"""Sweep gamma_r and the iteration count on the default scene.

For every distance and gamma_r value the filter runs once up to --max-iters
and every intermediate iterate is scored, giving ERR_glob, ERR_edge and ENL
curves against the number of iterations.

    python scripts/param_sweep.py --size 256 --out sweep.csv --plot sweep.png
"""
import argparse
import csv
import time

from polsarblf import defaults
from polsarblf.bilateral import FilterConfig, iterate_filter
from polsarblf.metrics import edge_mask, err_edge, err_glob, mean_enl
from polsarblf.speckle import build_scene, default_scene

GRID = {"ai": (0.7, 1.0, 1.33, 1.6, 2.0), "le": (0.7, 1.0, 1.33, 1.6, 2.0), "kl": (1.5, 2.3, 3.11, 4.0, 5.0)}


def sweep(size, seed, max_iters, kinds, threads=None, log=print):
    labels = default_scene(size)
    truth = labels.truth(defaults.LOOKS)
    mask = edge_mask(labels)
    noisy, _ = build_scene(labels, defaults.LOOKS, seed)
    rows = []
    for kind in kinds:
        for gamma_r in GRID[kind]:
            t0 = time.perf_counter()
            cfg = FilterConfig.for_distance(kind, gamma_r=gamma_r, n_iter=max_iters)
            for it, out in enumerate(iterate_filter(noisy, cfg, threads), 1):
                rows.append({
                    "distance": kind, "gamma_r": gamma_r, "iters": it,
                    "err_glob": err_glob(truth, out), "err_edge": err_edge(truth, out, mask),
                    "enl": mean_enl(out, labels.zones),
                })
            log(f"{kind} gamma_r={gamma_r}: {time.perf_counter() - t0:.1f} s")
    return rows


def plot(rows, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    kinds = sorted({r["distance"] for r in rows})
    measures = ("err_glob", "err_edge", "enl")
    fig, axes = plt.subplots(len(measures), len(kinds), figsize=(4 * len(kinds), 9), squeeze=False)
    for col, kind in enumerate(kinds):
        for gamma_r in sorted({r["gamma_r"] for r in rows if r["distance"] == kind}):
            sel = [r for r in rows if r["distance"] == kind and r["gamma_r"] == gamma_r]
            for row, m in enumerate(measures):
                axes[row, col].plot([r["iters"] for r in sel], [r[m] for r in sel], marker="o", label=f"{gamma_r:g}")
        axes[0, col].set_title(f"d_{kind}")
        for row, m in enumerate(measures):
            axes[row, col].set_ylabel(m)
            axes[row, col].set_xlabel("iterations")
        axes[0, col].legend(title="gamma_r", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=defaults.SCENE_SIZE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=8)
    p.add_argument("--distances", default="ai,le,kl")
    p.add_argument("--threads", type=int)
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--plot")
    args = p.parse_args()
    rows = sweep(args.size, args.seed, args.max_iters, args.distances.split(","), args.threads)
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    if args.plot:
        plot(rows, args.plot)


if __name__ == "__main__":
    main()
