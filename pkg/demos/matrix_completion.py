# Matrix completion with graph regularization.
#
# A low-rank matrix of smooth graph signals is observed on half its
# entries.  Three recoveries: exact interpolation with a nuclear-norm
# penalty (gmcm), the noise-tolerant variant that also penalizes the
# graph variation (gmcr), and gmcr with the variation weight switched
# off, which reduces it to plain nuclear-norm completion.  The graph
# term is what pulls the hidden entries toward the truth.

import numpy as np

from gsrec import (GraphBuildSpec, SolverConfig, SyntheticSpec,
                   build_knn_graph, evaluate, gmcm, gmcr, random_features,
                   sample_mask, synth_instance)

n, l = 50, 20
shift = build_knn_graph(random_features(n, 2, 7), GraphBuildSpec(k=6))
inst = synth_instance(shift, SyntheticSpec(n=n, l=l, rank=3, noise_sigma=0.05),
                      8)
mask = sample_mask((n, l), 0.3, 9)
hidden = ~mask
print(f"matrix {n}x{l}, rank 3, observed entries {mask.sum()}/{mask.size}")

runs = [
    ("interpolating + nuclear", gmcm(inst.observed, mask, shift,
                                     SolverConfig(beta=0.05))),
    ("graph + nuclear", gmcr(inst.observed, mask, shift,
                             SolverConfig(alpha=1.0, beta=0.5,
                                          max_outer=4000))),
    ("nuclear only", gmcr(inst.observed, mask, shift,
                          SolverConfig(alpha=0.0, beta=0.5,
                                       max_outer=4000))),
]

for name, res in runs:
    rep = evaluate(inst.x0[hidden], res.x[hidden])
    print(f"{name:>23}: hidden rmse {rep.rmse:.4f}  "
          f"({res.iterations} iterations, converged={res.converged})")

sv = np.linalg.svd(runs[1][1].x, compute_uv=False)
print("top singular values of the graph-regularized estimate:",
      np.array2string(sv[:5], precision=3))
