"""Average several fits on random subsamples, then save and reload.

Each member sees 80% of the rows and is scored on the rest. Members with
smaller held-out errors get larger weights.

Run:  python demos/04_ensembles_and_files.py
"""
import tempfile
from pathlib import Path

import numpy as np

from annbn import SigmoidConfig, fit, fit_ensemble
from annbn.benchmarks import f1d, gen_1d
from annbn.persistence import load_model, save_model

xt = np.linspace(0.01, 0.99, 1000)[:, None]
truth = f1d(xt[:, 0])
cfg = SigmoidConfig(neurons=50, cluster="kmeans")
for seed in range(3):
    ds = gen_1d(100, noise_halfwidth=1 / 20, seed=seed)
    single = np.mean(np.abs(fit(ds, cfg).predict(xt) - truth))
    ens = fit_ensemble(ds, cfg, n_f=10, alpha=0.8, seed=seed)
    both = np.mean(np.abs(ens.predict(xt) - truth))
    print(f"seed {seed}: single {single:.2e}, ensemble of 10 {both:.2e}, "
          f"weights {np.round(ens.weights.min(), 3)}..{np.round(ens.weights.max(), 3)}")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "ensemble.annbn"
    save_model(path, ens)
    back = load_model(path)
    print(f"model file: {path.stat().st_size} bytes, kind {back.kind}, "
          f"identical predictions: {np.array_equal(back.predict(xt), ens.predict(xt))}")
