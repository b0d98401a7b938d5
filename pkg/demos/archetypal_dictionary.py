"""
Archetypal dictionaries on planted data
=======================================

Distill a cloud of activations into K-Means centroids, train a free TopK SAE
and its archetypal counterparts on the same rows, and compare the report cards.
"""

from dataclasses import replace

import numpy as np

from adl import (
    DistillConfig,
    TrainConfig,
    distill,
    gen_planted,
    model_report,
    standardize_fit,
    train,
)

# 3000 rows mixing 4 of 48 unit directions in 32 dimensions
X, V, _ = gen_planted(n=3000, d=32, c=48, sparsity=4, noise_std=0.05, rng=0)

# candidate archetypes live in the standardized coordinates used for training
_, Xs = standardize_fit(X)
C, labels = distill(Xs, DistillConfig(n_prime=256, seed=0), return_labels=True)
print("centroids:", C.shape)

# every centroid is the plain mean of its cluster, i.e. inside conv(X)
j = 7
members = Xs[labels == j]
print("centroid 7 rebuilt from its", len(members), "members:",
      np.allclose(C[j], members.mean(axis=0)))

cfg = TrainConfig(epochs=30, n_atoms=96, k_active=4, seed=0)
runs = {
    "topk": train(X, cfg, "topk", "free"),
    "a-sae": train(X, cfg, "topk", "archetypal", C=C),
    "ra-sae": train(X, replace(cfg, delta=0.1), "topk", "archetypal", C=C),
}

# with delta = 0 each atom is an explicit convex combination of centroids
W = runs["a-sae"].dictionary.W
print("A-SAE mixing rows: min", W.min(), " row sums within",
      np.abs(W.sum(axis=1) - 1).max(), "of 1")
print("A-SAE atoms equal W @ C:", np.allclose(runs["a-sae"].atoms(), W @ C))

# RA-SAE may step off the hull, but never by more than delta per atom
Lam = runs["ra-sae"].dictionary.Lambda
print("RA-SAE largest relaxation norm:", np.linalg.norm(Lam, axis=1).max())

print()
print(f"{'method':8s} {'r2':>7s} {'dead':>6s} {'ood':>6s} {'coher':>6s} {'eff.rank':>8s}")
for name, model in runs.items():
    rep = model_report(model, X)
    print(f"{name:8s} {rep.r2:7.4f} {rep.dead_codes:6.3f} {rep.ood_score:6.3f} "
          f"{rep.coherence:6.3f} {rep.effective_rank:8.2f}")
