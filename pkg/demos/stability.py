"""
Seed stability of free and archetypal SAEs
==========================================

Train each model family with four seeds on unchanged data and compare the
mean pairwise stability (best signed matching of atoms, mean cosine).
"""

from dataclasses import replace

from adl import (
    DistillConfig,
    TrainConfig,
    distill,
    gen_planted,
    stability_protocol,
    standardize_fit,
)

X, _, _ = gen_planted(n=4000, d=32, c=48, sparsity=4, noise_std=0.05, rng=1)
C = distill(standardize_fit(X)[1], DistillConfig(n_prime=256, seed=0))

seeds = [0, 1, 2, 3]
base = TrainConfig(n_atoms=64, k_active=4, batch_size=256)

# stability depends on how long the models train: print a few budgets
for epochs in (5, 20, 60):
    cfg = replace(base, epochs=epochs)
    row = [f"epochs={epochs:3d}"]
    for name, kind, delta in [("topk", "free", 0.0), ("a-sae", "archetypal", 0.0),
                              ("ra-sae", "archetypal", 0.1)]:
        res = stability_protocol(X, replace(cfg, delta=delta), "topk", kind, seeds=seeds,
                                 C=C if kind == "archetypal" else None)
        row.append(f"{name} {res.mean:.3f}")
    print("  ".join(row))
