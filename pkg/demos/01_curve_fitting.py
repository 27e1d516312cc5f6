"""Fit a wiggly 1D curve without any iterative training.

The sigmoid network gets 50 neurons, each solved from a cluster of two
points, and a least-squares output layer. The RBF network interpolates each
cluster exactly and combines the cluster interpolants the same way. We then
add uniform noise to the training targets and check that the fit follows the
signal rather than the noise.

Run:  python demos/01_curve_fitting.py
"""
import numpy as np

from annbn import RbfConfig, SigmoidConfig, fit, fit_rbf, select_shape
from annbn.benchmarks import f1d, gen_1d

train = gen_1d(100, seed=0)
xt = np.linspace(train.X.min(), train.X.max(), 1000)[:, None]
truth = f1d(xt[:, 0])

net = fit(train, SigmoidConfig(neurons=50, cluster="balanced"))
print(f"sigmoid, 50 neurons      train MAE {net.info['train_mae']:.2e}  "
      f"test MAE {np.mean(np.abs(net.predict(xt) - truth)):.2e}")
t = net.info["timings"]
print(f"  phases: cluster {t['cluster'] * 1e3:.1f} ms, local {t['local_solve'] * 1e3:.1f} ms, "
      f"output {t['output_solve'] * 1e3:.1f} ms")

# a very narrow kernel barely reaches the next cluster; letting a validation
# split pick the width does much better
for label, c in (("c = 0.01", 0.01), ("validated c", None)):
    cfg = RbfConfig("gaussian", c=1.0, neurons=50)
    if c is None:
        c, _ = select_shape(train, cfg, grid=np.logspace(-2.5, 0, 11))
    rbf = fit_rbf(train, RbfConfig("gaussian", c=c, neurons=50))
    print(f"rbf gaussian, {label:<11} train MAE {rbf.info['train_mae']:.2e}  "
          f"test MAE {np.mean(np.abs(rbf.predict(xt) - truth)):.2e}  (c = {c:.3g})")

noisy = gen_1d(100, noise_halfwidth=1 / 20, seed=0)
net = fit(noisy, SigmoidConfig(neurons=50, cluster="kmeans"))
print(f"sigmoid on noisy targets test MAE {np.mean(np.abs(net.predict(xt) - truth)):.2e} "
      f"(noise half-width {1 / 20:.2e})")
