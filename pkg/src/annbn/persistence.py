"""Versioned text format for fitted models.

A file starts with ``annbn-model <version>`` and holds ``key value`` lines
and array records::

    array <name> <dim> [<dim> ...]
    <row of values>
    ...

Floats are written with 17 significant digits, which round-trips IEEE
doubles exactly, so ``save -> load -> save`` reproduces the same bytes.
Ensembles nest their members between ``begin member`` and ``end member``.
Optional ``attr`` lines carry free-form string metadata and an optional
``scaling`` pair of arrays stores min-max input scaling.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .dataset import FeatureScaling, NormParams
from .deep import DeepNet
from .ensemble import Ensemble
from .errors import FormatVersionError, ParseError
from .kernels import Kernel
from .rbf_net import RbfCluster, RbfNet
from .sigmoid_net import Activation, SigmoidNet

MAGIC = "annbn-model"
FORMAT_VERSION = 1
KINDS = ("sigmoid", "rbf", "deep", "ensemble")


@dataclass(eq=False)
class ModelFile:
    """A model plus the input scaling and metadata stored beside it."""

    model: object
    scaling: FeatureScaling | None = None
    attrs: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @property
    def kind(self) -> str:
        return model_kind(self.model)

    @property
    def n_features(self) -> int:
        return self.model.n_features

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if self.scaling is not None:
            X = self.scaling.apply(X)
        return self.model.predict(X)


def model_kind(model):
    if isinstance(model, SigmoidNet):
        return "sigmoid"
    if isinstance(model, RbfNet):
        return "rbf"
    if isinstance(model, DeepNet):
        return "deep"
    if isinstance(model, Ensemble):
        return "ensemble"
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _f(x):
    return format(float(x), ".17g")


# --- writing ----------------------------------------------------------------

def _array(out, name, a):
    a = np.asarray(a, dtype=float)
    out.write(f"array {name} {' '.join(str(d) for d in a.shape)}\n")
    rows = a.reshape(1, -1) if a.ndim <= 1 else a.reshape(a.shape[0], -1)
    for r in rows:
        out.write(" ".join(_f(v) for v in r) + "\n")


def _norm(out, norm):
    if norm is None:
        out.write("norm none\n")
    else:
        out.write(f"norm {_f(norm.y_min)} {_f(norm.y_max)} {_f(norm.lo)} {_f(norm.hi)}\n")


def _write_model(out, model):
    kind = model_kind(model)
    out.write(f"kind {kind}\n")
    if kind == "ensemble":
        out.write(f"alpha {_f(model.alpha)}\n")
        out.write(f"members {len(model.members)}\n")
        _array(out, "fold_errors", model.fold_errors)
        for m in model.members:
            out.write("begin member\n")
            _write_model(out, m)
            out.write("end member\n")
        return
    out.write(f"n_features {model.n_features}\n")
    _norm(out, model.norm)
    if kind == "rbf":
        out.write(f"kernel {model.kernel.kind} {_f(model.kernel.c)}\n")
        out.write(f"clusters {len(model.clusters)}\n")
        for k, cl in enumerate(model.clusters):
            _array(out, f"centers{k}", cl.centers)
            _array(out, f"w{k}", cl.w)
        _array(out, "v", model.v)
        return
    out.write(f"activation {model.activation.kind} {_f(model.activation.clamp_eps)}\n")
    if kind == "sigmoid":
        _array(out, "W", model.W)
    else:
        out.write(f"layers {len(model.layers)}\n")
        for i, W in enumerate(model.layers):
            _array(out, f"layer{i}", W)
    _array(out, "v", model.v)


def dumps(model, scaling=None, attrs=None):
    """Serialize ``model`` (or a :class:`ModelFile`) to text."""
    if isinstance(model, ModelFile):
        scaling = model.scaling if scaling is None else scaling
        attrs = model.attrs if attrs is None else attrs
        model = model.model
    out = io.StringIO()
    out.write(f"{MAGIC} {FORMAT_VERSION}\n")
    for k in sorted(attrs or {}):
        v = str(attrs[k])
        if not k or any(ch.isspace() for ch in k) or "\n" in v:
            raise ValueError(f"attribute {k!r} cannot be stored on one line")
        out.write(f"attr {k} {v}\n")
    if scaling is not None:
        _array(out, "scaling_shift", scaling.shift)
        _array(out, "scaling_scale", scaling.scale)
    _write_model(out, model)
    out.write("end\n")
    return out.getvalue()


def save_model(path, model, scaling=None, attrs=None):
    text = dumps(model, scaling, attrs)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# --- reading ----------------------------------------------------------------

class _Lines:
    def __init__(self, text):
        self.lines = text.split("\n")
        if self.lines and self.lines[-1] == "":
            self.lines.pop()
        self.i = 0

    def peek(self):
        return self.lines[self.i] if self.i < len(self.lines) else None

    def next(self):
        if self.i >= len(self.lines):
            raise ParseError("unexpected end of model file", line=self.i + 1)
        self.i += 1
        return self.lines[self.i - 1]

    def fail(self, msg):
        raise ParseError(msg, line=self.i)

    def key(self, name, count=None):
        parts = self.next().split()
        if not parts or parts[0] != name:
            self.fail(f"expected {name!r}")
        if count is not None and len(parts) != count + 1:
            self.fail(f"{name!r} takes {count} value(s)")
        return parts[1:]

    def array(self, name):
        head = self.key("array")
        if not head or head[0] != name:
            self.fail(f"expected array {name!r}")
        try:
            shape = tuple(int(d) for d in head[1:])
        except ValueError:
            self.fail("bad array shape")
        nrows = 1 if len(shape) <= 1 else shape[0]
        vals = []
        for _ in range(nrows):
            line = self.next()
            try:
                vals.extend(float(t) for t in line.split())
            except ValueError:
                self.fail("bad number in array")
        a = np.array(vals, dtype=float)
        if a.size != int(np.prod(shape)):
            self.fail(f"array {name!r} has {a.size} values for shape {shape}")
        return a.reshape(shape)


def _read_norm(r):
    vals = r.key("norm")
    if vals == ["none"]:
        return None
    if len(vals) != 4:
        r.fail("norm takes 4 values or 'none'")
    return NormParams(*(float(v) for v in vals))


def _read_model(r):
    (kind,) = r.key("kind", 1)
    if kind not in KINDS:
        r.fail(f"unknown model kind {kind!r}")
    if kind == "ensemble":
        alpha = float(r.key("alpha", 1)[0])
        count = int(r.key("members", 1)[0])
        errors = r.array("fold_errors")
        members = []
        for _ in range(count):
            if r.next() != "begin member":
                r.fail("expected 'begin member'")
            members.append(_read_model(r))
            if r.next() != "end member":
                r.fail("expected 'end member'")
        return Ensemble(members, errors, alpha)

    n_features = int(r.key("n_features", 1)[0])
    norm = _read_norm(r)
    if kind == "rbf":
        kk, c = r.key("kernel", 2)
        count = int(r.key("clusters", 1)[0])
        clusters = [RbfCluster(r.array(f"centers{k}"), r.array(f"w{k}")) for k in range(count)]
        return RbfNet(Kernel(kk, float(c)), clusters, r.array("v"), norm, n_features)
    ak, eps = r.key("activation", 2)
    act = Activation(ak, float(eps))
    if kind == "sigmoid":
        return SigmoidNet(r.array("W"), r.array("v"), act, norm, n_features)
    count = int(r.key("layers", 1)[0])
    layers = [r.array(f"layer{i}") for i in range(count)]
    return DeepNet(layers, r.array("v"), act, norm, n_features)


def loads(text):
    r = _Lines(text)
    head = r.next().split()
    if len(head) != 2 or head[0] != MAGIC:
        r.fail("not an annbn model file")
    try:
        version = int(head[1])
    except ValueError:
        r.fail("bad format version")
    if version > FORMAT_VERSION:
        raise FormatVersionError(f"model format version {version} is newer than the "
                                 f"supported version {FORMAT_VERSION}")
    attrs = {}
    while r.peek() is not None and r.peek().startswith("attr "):
        _, k, *rest = r.next().split(" ", 2)
        attrs[k] = rest[0] if rest else ""
    scaling = None
    if r.peek() is not None and r.peek().startswith("array scaling_shift"):
        scaling = FeatureScaling(r.array("scaling_shift"), r.array("scaling_scale"))
    model = _read_model(r)
    if r.next() != "end":
        r.fail("expected 'end'")
    if r.peek() is not None:
        r.fail("trailing content after 'end'")
    return ModelFile(model, scaling, attrs, version)


def load_model(path):
    """Read a model file; returns a :class:`ModelFile`."""
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
