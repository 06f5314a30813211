"""
GP surrogate and expected improvement on a 1-d toy
==================================================

"""

import numpy as np

from bsdesign.bo import expected_improvement
from bsdesign.gp import GPModel, fit_mle

rng = np.random.default_rng(1)
f = lambda x: np.sin(6 * x) + 0.5 * x

X = rng.uniform(0, 1, (6, 1))
y = f(X[:, 0])

# hyperparameters by maximum likelihood (multi-start Nelder-Mead in log space)
res = fit_mle(X, y, seed=0)
print("fitted:", res.hp, "lml", round(res.lml, 3))

model = GPModel(X, y, res.hp)
grid = np.linspace(0, 1, 11)[:, None]
post = model.predict(grid)
ei = expected_improvement(post.mean, post.variance, y.max())
for x, m, s, e in zip(grid[:, 0], post.mean, post.std, ei):
    print(f"x={x:.1f}  mean {m:+.3f}  std {s:.3f}  EI {e:.4f}   true {f(x):+.3f}")

# far below the incumbent EI is tiny but stays positive
print("EI at z = -10:", expected_improvement(-10.0, 1.0, 0.0))
