"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor


@dataclass
class GradCheckReport:
    name: str
    max_rel_error: float
    tolerance: float
    passed: bool
    probes: int = 0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<32s} max_rel_err={self.max_rel_error:.3e}  tol={self.tolerance:.1e}  probes={self.probes}"


def rel_error(a, b):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)


def _scalarize(out, projection):
    if out.size == 1:
        return out.sum()
    return (out * projection).sum()


def grad_check(fn, inputs, name="op", h=1e-5, tol=1e-4, wrt=None, probes=None, seed=0):
    """Compare analytic and central-difference gradients of ``fn``.

    ``inputs`` is a list of float64 arrays. Non-scalar outputs are reduced
    with a fixed random projection. ``wrt`` selects which inputs to check
    (default all); ``probes`` limits the number of checked entries per input.
    """
    rng = np.random.default_rng(seed)
    inputs = [np.array(a, dtype=np.float64) for a in inputs]
    wrt = range(len(inputs)) if wrt is None else wrt
    tensors = [Tensor(a.copy(), requires_grad=(i in wrt)) for i, a in enumerate(inputs)]
    out = fn(*tensors)
    projection = rng.standard_normal(out.shape)
    _scalarize(out, projection).backward()

    def value(arrs):
        o = fn(*[Tensor(a) for a in arrs])
        return float(_scalarize(o, projection).data)

    worst = 0.0
    count = 0
    for i in wrt:
        analytic = tensors[i].grad
        if analytic is None:
            analytic = np.zeros_like(inputs[i])
        flat = np.arange(inputs[i].size)
        if probes is not None and probes < flat.size:
            flat = rng.choice(flat, size=probes, replace=False)
        for k in flat:
            idx = np.unravel_index(k, inputs[i].shape)
            plus = [a.copy() for a in inputs]
            minus = [a.copy() for a in inputs]
            plus[i][idx] += h
            minus[i][idx] -= h
            numeric = (value(plus) - value(minus)) / (2 * h)
            worst = max(worst, float(rel_error(analytic[idx], numeric)))
            count += 1
    return GradCheckReport(name, worst, tol, worst <= tol, count)
