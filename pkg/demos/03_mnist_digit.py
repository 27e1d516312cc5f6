"""One-vs-rest digit detector on MNIST, shallow and deep.

No clustering here: consecutive blocks of training rows form the
neighbourhoods, so each of the 1000 neurons comes from one small least-squares
problem. The deep variant keeps that first layer and solves nine more.

Run:  python demos/03_mnist_digit.py [mnist-dir]
"""
import sys
import time

import numpy as np

from annbn import Dataset, SigmoidConfig, deepen, fit, load_mnist_idx
from annbn.sigmoid_net import binary_accuracy

d = sys.argv[1] if len(sys.argv) > 1 else "/root/data/mnist"
train = load_mnist_idx(f"{d}/train-images-idx3-ubyte", f"{d}/train-labels-idx1-ubyte")
test = load_mnist_idx(f"{d}/t10k-images-idx3-ubyte", f"{d}/t10k-labels-idx1-ubyte")
train = train.take(np.arange(10_000))
ds = Dataset(train.X, (train.y == 0).astype(float))

t0 = time.perf_counter()
net = fit(ds, SigmoidConfig(neurons=1000, cluster="ascending", lo=0.01, hi=0.99))
print(f"shallow, 1000 neurons: {binary_accuracy(net, test.X, test.y, 0):.2f}% "
      f"on the 10k test images ({time.perf_counter() - t0:.1f} s)")

t0 = time.perf_counter()
deep = deepen(net, ds, 10)
print(f"deep, 10 x 1000:       {binary_accuracy(deep, test.X, test.y, 0):.2f}% "
      f"({time.perf_counter() - t0:.1f} s)")
