"""Pick mu1, mu2, mu3 by sequential hold-out validation on the training set.

Each weight is tuned in turn with the others held fixed. Candidates share the
same random 70/30 splits so their scores are comparable.
"""

from nsse import SplitSpec, TrainConfig, cross_validate, evaluate, split, synth_moons, train

ds = synth_moons(200, noise=0.15, seed=4)
tr, te = split(ds, SplitSpec(30, seed=4))

base = TrainConfig(d=2)
best, scores = cross_validate(tr, base, folds=5, seed=4, return_scores=True)

for name, table in scores.items():
    cells = "  ".join(f"{v:g}: {100 * e:.1f}%" for v, e in table.items())
    print(f"{name}  {cells}")
print(f"\nselected mu1={best.mu1:g} mu2={best.mu2:g} mu3={best.mu3:g}")

for label, cfg in (("defaults", base), ("cross-validated", best)):
    err = evaluate(train(tr, cfg)[0], te).error_rate
    print(f"{label:16s} test error {100 * err:.2f}%")
