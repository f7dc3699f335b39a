"""Central-difference gradient oracle used across the tensor tests."""

import numpy as np

from riskscene.nn import Tape, Tensor, tensor_sum
from riskscene.nn import tensor as tz


def numeric_grad(fn, values, step=1e-5):
    """Central differences of a scalar-valued fn w.r.t. one numpy array."""
    values = np.asarray(values, dtype=np.float64)
    grad = np.zeros_like(values)
    flat = values.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = fn(values)
        flat[i] = orig - step
        lo = fn(values)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * step)
    return grad


def check_op(build, inputs, step=1e-5, rtol=1e-4, atol=1e-7):
    """Compare analytic and numeric gradients of sum(build(*tensors)).

    build receives Tensors (requires_grad on) and returns one output tensor;
    inputs is a list of numpy arrays. Returns the worst relative error.
    """
    tensors = [Tensor(np.array(x, dtype=np.float64), requires_grad=True) for x in inputs]
    tape = Tape()
    with tape:
        out = build(*tensors)
        loss = tensor_sum(out)
    tape.backward(loss)
    worst = 0.0
    for k, tensor in enumerate(tensors):
        def scalar_fn(values, k=k):
            args = [Tensor(t.values) for t in tensors]
            args[k] = Tensor(values)
            return float(tensor_sum(build(*args)).values)

        num = numeric_grad(scalar_fn, tensor.values.copy(), step=step)
        ana = tensor.grad if tensor.grad is not None else np.zeros_like(num)
        denom = np.maximum(np.abs(num), np.abs(ana))
        err = np.abs(ana - num) / np.maximum(denom, atol / rtol)
        worst = max(worst, float(err.max()) if err.size else 0.0)
        assert np.allclose(ana, num, rtol=rtol, atol=atol), (
            f"input {k}: analytic vs numeric gradient mismatch "
            f"(max abs diff {np.abs(ana - num).max():.3e})"
        )
    return worst
