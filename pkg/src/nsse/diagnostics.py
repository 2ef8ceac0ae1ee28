"""Empirical check of the separation-versus-regularity generalization condition.

For a trained model the condition reads::

    L * delta + sqrt(d) * epsilon + A_delta <= gamma / 2

with ``gamma`` the smallest embedded distance between training samples of
different classes, ``A_delta`` the largest embedded distance between
same-class training samples at most ``2 * delta`` apart in input space, and
``L`` the interpolator's Lipschitz bound.
"""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .graph import sq_distances

__all__ = ["DiagnosticsReport", "diagnose", "margin_and_spread"]


@dataclass(frozen=True)
class DiagnosticsReport:
    gamma: float
    A_delta: float
    L: float
    delta: float
    epsilon: float
    d: int
    lhs: float
    slack: float
    satisfied: bool
    vacuous_spread: bool

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def summary(self):
        lines = [
            f"margin gamma          {self.gamma:.6g}",
            f"spread A_delta        {self.A_delta:.6g}" + (
                "  (no same-class pair within 2*delta)" if self.vacuous_spread else ""),
            f"Lipschitz bound L     {self.L:.6g}",
            f"delta, epsilon        {self.delta:.6g}, {self.epsilon:.6g}",
            f"L*delta + sqrt(d)*eps + A_delta = {self.lhs:.6g}",
            f"gamma/2 = {self.gamma / 2:.6g}",
            f"slack                 {self.slack:.6g}",
            f"condition satisfied   {'yes' if self.satisfied else 'no'}",
        ]
        return "\n".join(lines)


def margin_and_spread(anchors, Y, labels, delta):
    """``(gamma, A_delta, empty)`` by an exhaustive pairwise scan.

    ``empty`` is true when no same-class pair lies within ``2 * delta``.
    """
    labels = np.asarray(labels)
    same = labels[:, None] == labels[None, :]
    emb = np.sqrt(sq_distances(Y))
    diff = ~same
    if not diff.any():
        raise ValueError("need at least two classes")
    gamma = float(emb[diff].min())
    amb = np.sqrt(sq_distances(anchors))
    close = same & (amb <= 2 * delta)
    np.fill_diagonal(close, False)
    if not close.any():
        return gamma, 0.0, True
    return gamma, float(emb[close].max()), False


def diagnose(model, delta, epsilon):
    """Evaluate the generalization condition on the model's training data."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not epsilon >= 0:
        raise ValueError("epsilon must be non-negative")
    if np.unique(model.labels).size < 2:
        raise ValueError("diagnostics need a model trained on at least two classes")
    gamma, spread, empty = margin_and_spread(model.anchors, model.Y, model.labels, delta)
    L = model.lipschitz_bound()
    d = model.dim
    lhs = L * delta + math.sqrt(d) * epsilon + spread
    slack = gamma / 2 - lhs
    return DiagnosticsReport(gamma, spread, L, float(delta), float(epsilon), d,
                             lhs, slack, slack >= 0, empty)
