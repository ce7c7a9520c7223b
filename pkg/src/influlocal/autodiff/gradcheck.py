"""Central finite-difference gradient checking."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


@dataclass
class GradCheckReport:
    max_rel_error: float
    passed: bool
    per_input: list = field(default_factory=list)
    message: str = ""


def grad_check(f, inputs, h: float = 1e-5, tol: float = 1e-4, floor: float = 1e-6) -> GradCheckReport:
    """Compare analytic gradients of scalar ``f(*inputs)`` with central differences.

    Relative error per element is |a - n| / max(|a|, |n|, floor_eff), where
    floor_eff = max(floor, 10 eps max(|f|, 1) / (h tol)).  The second term is
    the central difference's rounding noise (with slack for the rounding
    accumulated inside f) scaled so that entries too small
    to resolve to relative ``tol`` (e.g. exact structural zeros) cannot fail
    on noise alone.
    """
    inputs = list(inputs)
    for t in inputs:
        t.grad = None
    out = f(*inputs)
    if out.data.size != 1:
        return GradCheckReport(np.inf, False, message="function is not scalar-valued")
    if not np.isfinite(out.data).all():
        return GradCheckReport(np.inf, False, message="non-finite function value")
    out.backward()
    noise = 10 * np.finfo(np.float64).eps * max(abs(float(out.data)), 1.0) / h
    floor = max(floor, noise / tol)
    errors = []
    for t in inputs:
        if not t.requires_grad:
            errors.append(0.0)
            continue
        analytic = np.zeros_like(t.data) if t.grad is None else t.grad.copy()
        numeric = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(f(*inputs).data)
            flat[i] = orig - h
            fm = float(f(*inputs).data)
            flat[i] = orig
            numeric.reshape(-1)[i] = (fp - fm) / (2 * h)
        if not (np.isfinite(analytic).all() and np.isfinite(numeric).all()):
            return GradCheckReport(np.inf, False, errors, "non-finite gradient")
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
        errors.append(float((np.abs(analytic - numeric) / denom).max()) if t.data.size else 0.0)
    worst = max(errors) if errors else 0.0
    return GradCheckReport(worst, worst < tol, errors)


def param(a, dtype=np.float64) -> Tensor:
    """Leaf tensor that requires a gradient."""
    return Tensor(np.array(a, dtype=dtype), requires_grad=True)
