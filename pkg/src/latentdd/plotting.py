"""Static SVG figures for the reduced cloud, curve, stretched manifold and predictions."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection  # noqa: E402

from .errors import EmptyInput  # noqa: E402

# fixed id salt and no timestamp so repeated runs write identical files
_SVG_RC = {"svg.hashsalt": "latentdd", "svg.fonttype": "none"}
_META = {"Date": None, "Creator": None}


def _save(fig, path):
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def _check(points):
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or len(P) == 0:
        raise EmptyInput("nothing to plot")
    return P


def plot_triangulation(points, edges, path):
    P = _check(points)
    fig, ax = plt.subplots(figsize=(5, 4))
    E = np.asarray(edges, dtype=int).reshape(-1, 2)
    if len(E):
        ax.add_collection(LineCollection(P[E], colors="0.5", linewidths=0.5))
    ax.plot(P[:, 0], P[:, 1], ".", ms=3, color="C0")
    ax.set_xlabel("x~")
    ax.set_ylabel("y~")
    ax.set_title(f"Triangulation ({len(E)} edges)")
    return _save(fig, path)


def plot_curve(curve, path):
    P = _check(curve.points)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(P[:, 0], P[:, 1], "-", lw=0.7, color="C0")
    ax.plot(P[0, 0], P[0, 1], "o", color="C3", label="start")
    ax.set_xlabel("x~")
    ax.set_ylabel("y~")
    ax.set_title(f"Connected curve ({curve.jumps} jumps)")
    ax.legend(loc="best")
    return _save(fig, path)


def plot_stretched(sm, path, decomposition=None):
    P = _check(sm.points)
    fig, ax = plt.subplots(figsize=(6, 4))
    if decomposition is None:
        ax.plot(P[:, 0], P[:, 1], "-", lw=0.8)
    else:
        for sid, (s, e) in enumerate(decomposition.segments):
            ax.plot(P[s:e + 1, 0], P[s:e + 1, 1], "-", lw=0.8, color=f"C{sid % 10}",
                    label=f"domain {sid}")
        ax.legend(loc="best", fontsize="small")
    for c in sm.reflection_centers:
        ax.axvline(c, color="0.8", lw=0.5, zorder=0)
    ax.set_xlabel("x bar")
    ax.set_ylabel("y bar")
    ax.set_title(f"Stretched manifold ({len(sm.branches)} branches)")
    return _save(fig, path)


def plot_prediction(Y, Y_hat, path, sample=0):
    """Reference and prediction of one test sample, with the absolute error."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float).reshape(len(Y), -1))
    Y_hat = np.atleast_2d(np.asarray(Y_hat, dtype=float).reshape(len(Y_hat), -1))
    if Y.size == 0:
        raise EmptyInput("nothing to plot")
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    if Y.shape[1] == 1:
        # scalar output: show every test sample instead of one profile
        idx = np.arange(len(Y))
        ref, est = Y[:, 0], Y_hat[:, 0]
        bottom.set_xlabel("test sample")
    else:
        idx = np.arange(Y.shape[1])
        ref, est = Y[sample], Y_hat[sample]
        bottom.set_xlabel("output component")
    top.plot(idx, ref, "-", lw=0.8, label="reference")
    top.plot(idx, est, "--", lw=0.8, label="prediction")
    top.legend(loc="best")
    bottom.plot(idx, np.abs(ref - est), "-", lw=0.8, color="C3")
    bottom.set_ylabel("absolute error")
    top.set_title("References and predictions")
    return _save(fig, path)
