"""Compare quantile bucket grids against equal-width grids.

Residuals concentrate near zero with long tails, so equal-width buckets
waste most of their range on rare values. Quantile buckets put boundaries
where the mass is.
"""
import numpy as np

import multivec as mv


def uniform_grid(values, b):
    edges = np.linspace(values.min(), values.max(), (1 << b) + 1, dtype=np.float32)
    return mv.BucketWeights(
        b=b,
        boundaries=edges[1:-1],
        representatives=((edges[:-1] + edges[1:]) / 2).astype(np.float32),
    )


def mse(values, weights):
    codes = mv.quantize_residuals(values, weights)
    return float(np.mean((weights.representatives[codes] - values) ** 2))


rng = np.random.default_rng(0)
skewed = rng.lognormal(mean=0.0, sigma=1.0, size=200_000).astype(np.float32)
print("log-normal sample, mean squared reconstruction error per value:")
print(f"{'b':>3} {'quantile':>10} {'uniform':>10}")
for b in (2, 4):
    q = mse(skewed, mv.compute_bucket_weights(skewed, b))
    u = mse(skewed, uniform_grid(skewed, b))
    print(f"{b:>3} {q:>10.4f} {u:>10.4f}")

# same comparison on real index residuals: quantize each token's residual
# through both grids and measure distance to the original embedding
col = mv.synth_corpus(seed=9, n_docs=1_500)
print(f"\nindex residuals ({col.n_tokens} tokens), mean per-token L2 error:")
print(f"{'b':>3} {'quantile':>10} {'uniform':>10} {'bytes/token':>12}")
for b in (2, 4):
    index = mv.build_index(col, mv.IndexConfig(b=b, n_centroids=128, kmeans_iters=6, seed=0))
    assigned = np.argmax(col.vectors @ index.centroids.T, axis=1)
    residuals = col.vectors - index.centroids[assigned]
    row = []
    for weights in (index.buckets, uniform_grid(residuals.ravel(), b)):
        codes = mv.quantize_residuals(residuals, weights)
        reconstructed = index.centroids[assigned] + weights.representatives[codes]
        row.append(float(np.linalg.norm(reconstructed - col.vectors, axis=1).mean()))
    print(f"{b:>3} {row[0]:>10.4f} {row[1]:>10.4f} {16 * b:>12}")
