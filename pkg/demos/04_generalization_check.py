"""Margin versus regularity: when does the embedding certify 1-NN accuracy?

A test point within delta of a training point lands within L*delta of its
image. If the classes sit further apart than that (plus the spread of each
class), nearest neighbour in the embedding cannot confuse them.
"""

import numpy as np

from nsse import TrainConfig, diagnose, synth_blobs, train

ds = synth_blobs(n_classes=3, per_class=15, n_features=4, spread=0.2, separation=20.0, seed=1)
model, _ = train(ds, TrainConfig(d=2, k=3))
print(f"Lipschitz bound L = {model.lipschitz_bound():.4g}")

for delta in (1e-4, 1e-3, 1e-2, 1e-1):
    rep = diagnose(model, delta=delta, epsilon=0.0)
    flag = "  (no same-class pair this close)" if rep.vacuous_spread else ""
    print(f"delta={delta:<7g} gamma={rep.gamma:.4f} A_delta={rep.A_delta:.4f} "
          f"slack={rep.slack:+.4f} satisfied={rep.satisfied}{flag}")

# the bound is loose but valid: check it on random pairs
rng = np.random.default_rng(0)
U, V = rng.normal(size=(2, 2000, 4)) * 5
ratio = (np.linalg.norm(model.embed_batch(U) - model.embed_batch(V), axis=1)
         / np.linalg.norm(U - V, axis=1))
print(f"\nlargest observed |f(u)-f(v)|/|u-v| = {ratio.max():.4g}  <=  L")
