"""Compare against supervised Laplacian eigenmaps and plain nearest neighbour.

SUPLAP solves only the graph part of the problem and fits its RBF extension
afterwards; the smooth embedding learns both together. Averaged over a
handful of random splits.
"""

import numpy as np

from nsse import (SplitSpec, TrainConfig, ambient_nn, evaluate, split, synth_moons,
                  train, train_suplap)

errs = {"nsse": [], "suplap": [], "nn": []}
for seed in range(10):
    ds = synth_moons(230, noise=0.15, seed=seed)
    tr, te = split(ds, SplitSpec(30, seed))
    cfg = TrainConfig(d=2)
    errs["nsse"].append(evaluate(train(tr, cfg)[0], te).error_rate)
    errs["suplap"].append(evaluate(train_suplap(tr, 2, mu=cfg.mu1), te).error_rate)
    errs["nn"].append(ambient_nn(tr, te).error_rate)

for name, e in errs.items():
    e = 100 * np.asarray(e)
    print(f"{name:7s} {e.mean():5.2f} ± {e.std():.2f} %")
