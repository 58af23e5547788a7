"""Pick a diverse answer subset from hand-made importance and similarity scores.

Answers 0 and 1 are both strong but nearly identical, so the most probable
subset keeps only one of them and adds the distinct answer 2 instead.
"""

import numpy as np

from dppanswer import build_kernel, map_exhaustive, map_greedy, project_psd, subset_log_prob

imp = np.array([2.0, 1.9, 1.4, 0.3])
sim = np.array([
    [1.00, 0.95, 0.10, 0.20],
    [0.95, 1.00, 0.15, 0.20],
    [0.10, 0.15, 1.00, 0.05],
    [0.20, 0.20, 0.05, 1.00],
])
k = project_psd(build_kernel(imp, sim))

for y in [(0,), (0, 1), (0, 2), (0, 1, 2)]:
    print(f"P({y}) = {np.exp(subset_log_prob(k, y)):.4f}")

print("exhaustive MAP:", map_exhaustive(k))
print("greedy MAP:    ", map_greedy(k))
