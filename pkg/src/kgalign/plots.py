"""Figure rendering for the report path. Uses the Agg backend so runs work
headless; every figure lands next to its delimited counterpart."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_loss_curve(curve: list[float], path: str, title: str = "training loss") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(curve) + 1), curve, lw=1.2)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_hits_bars(metrics: dict[str, float], path: str,
                   title: str = "alignment accuracy") -> None:
    names = sorted(metrics, key=lambda m: int(m.split("@")[1]))
    values = [metrics[m] for m in names]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(names, values, color="tab:blue", width=0.5)
    ax.set_ylim(0, 1.0)
    ax.set_ylabel("fraction of test sources")
    ax.set_title(title)
    for x, v in enumerate(values):
        ax.text(x, v + 0.02, f"{v:.3f}", ha="center", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_metric_sweep(xs: list[float], series: dict[str, list[float]],
                      xlabel: str, path: str, title: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, ys in sorted(series.items()):
        ax.plot(xs, ys, marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("Hits@K")
    ax.set_ylim(0, 1.0)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
