"""Two moons: train an embedding, look at the objective, classify new points.

Run with ``python3 demos/01_two_moons.py``.
"""

import numpy as np

from nsse import SplitSpec, TrainConfig, evaluate, split, synth_moons, train

# Two interleaved half circles; not linearly separable in the plane.
ds = synth_moons(per_class=150, noise=0.15, seed=0)
train_ds, test_ds = split(ds, SplitSpec(per_class_train=30, seed=0))
print(f"train {train_ds.n_samples} points, test {test_ds.n_samples} points")

model, trace = train(train_ds, TrainConfig(d=2))

# every iteration is a global minimization over one block, so this column
# should never go up
print("\niter  objective        sigma")
for r in trace.records:
    print(f"{r.iter:4d}  {r.objective:14.6f}  {r.sigma:.4f}")
print("converged" if trace.converged else "hit max_iter")

# the interpolator passes (almost) through the training embedding
print(f"\ninterpolation residual {model.interpolation_residual():.2e} (ridge {model.ridge:g})")

report = evaluate(model, test_ds)
print(f"test error {100 * report.error_rate:.2f}%")
print("confusion (rows: true class)")
print(report.confusion)

# the map is defined everywhere, far-away queries collapse to the origin
print("\nf(far point) =", model.embed_point(np.array([50.0, 50.0])))
