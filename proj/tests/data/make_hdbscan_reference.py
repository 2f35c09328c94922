# Regenerates hdbscan_reference.txt with scikit-learn's HDBSCAN.
# Each case: "mcs ms n d", n rows of coordinates, then n reference labels
# (-1 is noise).
import numpy as np
from sklearn.cluster import HDBSCAN

rng = np.random.default_rng(11)
with open("hdbscan_reference.txt", "w") as out:
    for _ in range(60):
        k = rng.integers(1, 5)
        n = rng.integers(8, 50)
        d = rng.integers(1, 5)
        centers = rng.normal(0, rng.uniform(1, 15), (k, d))
        x = np.round(centers[rng.integers(0, k, n)] + rng.normal(0, 1, (n, d)), 6)
        mcs = int(rng.integers(2, 7))
        labels = HDBSCAN(min_cluster_size=mcs, min_samples=1).fit(x).labels_
        out.write(f"{mcs} 1 {n} {d}\n")
        for row in x:
            out.write(" ".join(repr(float(v)) for v in row) + "\n")
        out.write(" ".join(str(int(v)) for v in labels) + "\n")
