"""
Plausibility and soft identifiability
=====================================

Both benchmarks plant ground-truth directions. Plausibility asks whether each
true direction has a well-aligned atom; identifiability asks whether a single
thresholded concept predicts each object label on held-out rows.

The budgets here are short. With longer training the free TopK SAE closes most
of the gap on these planted surrogates (see the acceptance section of the README).
"""

from adl import (
    BenchSettings,
    TrainConfig,
    gen_identifiability,
    gen_plausibility,
    run_identifiability,
    run_plausibility,
)

methods = ["topk", "a-sae", "ra-sae", "seminmf", "pca", "kmeans", "oracle"]

# 12 objects, 4 per sample; the dictionary gets exactly 12 atoms
ds = gen_identifiability(c=12, d=64, n=4000, objects_per_image=4, noise_std=0.05, rng=0)
settings = BenchSettings(train=TrainConfig(epochs=40, k_active=4), nmf_iters=300)
table = run_identifiability(ds, methods, settings)
print("identifiability (mean accuracy over 12 objects)")
for m, (per_class, mean) in table.items():
    print(f"  {m:10s} {mean:.4f}   worst object {per_class.min():.3f}")

X, V = gen_plausibility(c=32, d=64, n=4000, sparsity=4, noise_std=0.05, rng=0)
settings = BenchSettings(train=TrainConfig(epochs=15, k_active=4), nmf_iters=300)
scores = run_plausibility(X, V, methods, [64], settings)
print("plausibility (k = 64)")
for m, by_k in scores.items():
    print(f"  {m:10s} {by_k[64]:.4f}")
