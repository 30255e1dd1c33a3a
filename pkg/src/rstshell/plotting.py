"""Matplotlib figures written next to the CSV outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PARAMS = {
    "font.size": 8,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "lines.linewidth": 1.2,
    "figure.dpi": 150,
}
LABELS = {"u": r"$\check{u}$", "u2": r"$u_2$", "psi2": r"$\psi_2$", "N": r"$N$", "minus_M": r"$-M$", "Q": r"$Q$"}
STYLES = {"rst2d": "-", "rst1d": "--", "cst1d": ":", "ring2d": "-."}


def section_figure(x2, tables, path, keys=("u", "psi2", "N", "minus_M", "Q")):
    """One panel per field; ``tables`` maps a theory name to its section table."""
    with plt.rc_context(PARAMS):
        fig, axes = plt.subplots(1, len(keys), figsize=(2.4 * len(keys), 2.4), constrained_layout=True)
        for ax, key in zip(np.atleast_1d(axes), keys):
            for name, tab in tables.items():
                if key in tab and np.all(np.isfinite(tab[key])):
                    ax.plot(x2, tab[key], STYLES.get(name, "-"), label=name)
            ax.set_xlabel(r"$x_2$")
            ax.set_ylabel(LABELS.get(key, key))
        np.atleast_1d(axes)[0].legend()
        fig.savefig(path)
        plt.close(fig)


def convergence_figure(report, path, label=""):
    with plt.rc_context(PARAMS):
        fig, ax = plt.subplots(figsize=(3.2, 2.6), constrained_layout=True)
        ax.loglog(report.h_elem, report.errors, "o-", label=f"{label} slope {report.slope:.2f}")
        ax.set_xlabel("element size (rescaled)")
        ax.set_ylabel("relative L2 error")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)
