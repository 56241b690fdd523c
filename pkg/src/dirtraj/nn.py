"""Minimal reverse-mode autodiff over numpy arrays, plus the layers used here.

Only the operations the encoder and denoiser need are implemented: matmul,
broadcast add/mul, reshape/transpose, softmax, layer norm, GELU, embedding
lookup, and axis means. Backward passes are hand-written; their correctness
is pinned by the finite-difference suite rather than by construction.
"""

from __future__ import annotations

import numpy as np


def _sum_to_shape(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the original operand shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward=None):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None

    @property
    def shape(self):
        return self.data.shape

    def _accum(self, g: np.ndarray):
        if self.grad is None:
            # copy: callers may hand the same buffer to several parents
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    # ---- graph construction -------------------------------------------------

    def __add__(self, other):
        o = other if isinstance(other, Tensor) else Tensor(np.asarray(other, self.data.dtype))
        out_data = self.data + o.data

        def backward(g):
            if self.requires_grad:
                self._accum(_sum_to_shape(g, self.data.shape))
            if o.requires_grad:
                o._accum(_sum_to_shape(g, o.data.shape))

        return Tensor(out_data, parents=(self, o), backward=backward)

    def __sub__(self, other):
        o = other if isinstance(other, Tensor) else Tensor(np.asarray(other, self.data.dtype))
        out_data = self.data - o.data

        def backward(g):
            if self.requires_grad:
                self._accum(_sum_to_shape(g, self.data.shape))
            if o.requires_grad:
                o._accum(_sum_to_shape(-g, o.data.shape))

        return Tensor(out_data, parents=(self, o), backward=backward)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            scale = float(other)
            out_data = self.data * scale

            def backward_scalar(g):
                if self.requires_grad:
                    self._accum(g * scale)

            return Tensor(out_data, parents=(self,), backward=backward_scalar)
        o = other if isinstance(other, Tensor) else Tensor(np.asarray(other, self.data.dtype))
        out_data = self.data * o.data

        def backward(g):
            if self.requires_grad:
                self._accum(_sum_to_shape(g * o.data, self.data.shape))
            if o.requires_grad:
                o._accum(_sum_to_shape(g * self.data, o.data.shape))

        return Tensor(out_data, parents=(self, o), backward=backward)

    __rmul__ = __mul__

    def __matmul__(self, other):
        o = other if isinstance(other, Tensor) else Tensor(np.asarray(other, self.data.dtype))
        a_data, b_data = self.data, o.data

        if a_data.ndim > 2 and b_data.ndim == 2:
            # flatten leading axes into one big GEMM instead of a batched loop
            lead = a_data.shape[:-1]
            a2 = a_data.reshape(-1, a_data.shape[-1])
            out_data = (a2 @ b_data).reshape(*lead, b_data.shape[1])

            def backward_flat(g):
                g2 = g.reshape(-1, g.shape[-1])
                if self.requires_grad:
                    self._accum((g2 @ b_data.T).reshape(a_data.shape))
                if o.requires_grad:
                    o._accum(a2.T @ g2)

            return Tensor(out_data, parents=(self, o), backward=backward_flat)

        out_data = a_data @ b_data

        def backward(g):
            if self.requires_grad:
                da = g @ np.swapaxes(b_data, -1, -2)
                self._accum(_sum_to_shape(da, a_data.shape))
            if o.requires_grad:
                db = np.swapaxes(a_data, -1, -2) @ g
                o._accum(_sum_to_shape(db, b_data.shape))

        return Tensor(out_data, parents=(self, o), backward=backward)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        orig = self.data.shape
        out_data = self.data.reshape(shape)

        def backward(g):
            if self.requires_grad:
                self._accum(g.reshape(orig))

        return Tensor(out_data, parents=(self,), backward=backward)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inv = tuple(np.argsort(axes))
        out_data = self.data.transpose(axes)

        def backward(g):
            if self.requires_grad:
                self._accum(g.transpose(inv))

        return Tensor(out_data, parents=(self,), backward=backward)

    def sum(self):
        out_data = self.data.sum()

        def backward(g):
            if self.requires_grad:
                self._accum(np.ones_like(self.data) * g)

        return Tensor(out_data, parents=(self,), backward=backward)

    def mean(self, axis=None):
        out_data = self.data.mean(axis=axis)
        count = self.data.size if axis is None else self.data.shape[axis]
        ax = axis

        def backward(g):
            if not self.requires_grad:
                return
            if ax is None:
                self._accum(np.full_like(self.data, 1.0 / count) * g)
            else:
                self._accum(np.expand_dims(g, ax) / count * np.ones_like(self.data))

        return Tensor(out_data, parents=(self,), backward=backward)


def softmax(t: Tensor) -> Tensor:
    """Softmax over the last axis."""
    shifted = t.data - t.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        if t.requires_grad:
            t._accum(y * (g - (g * y).sum(axis=-1, keepdims=True)))

    return Tensor(y, parents=(t,), backward=backward)


def layer_norm(t: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale-shift."""
    mu = t.data.mean(axis=-1, keepdims=True)
    var = t.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (t.data - mu) * inv
    y = xhat * gamma.data + beta.data
    d = t.data.shape[-1]

    def backward(g):
        if gamma.requires_grad:
            gamma._accum(_sum_to_shape(g * xhat, gamma.data.shape))
        if beta.requires_grad:
            beta._accum(_sum_to_shape(g, beta.data.shape))
        if t.requires_grad:
            gy = g * gamma.data
            t._accum(
                inv * (gy - gy.mean(axis=-1, keepdims=True)
                       - xhat * (gy * xhat).mean(axis=-1, keepdims=True))
            )

    return Tensor(y, parents=(t, gamma, beta), backward=backward)


def relu(t: Tensor) -> Tensor:
    y = np.maximum(t.data, 0.0)

    def backward(g):
        if t.requires_grad:
            t._accum(np.where(t.data > 0.0, g, 0.0))

    return Tensor(y, parents=(t,), backward=backward)


def scatter_rows(parts: list[Tensor], rows: list[np.ndarray], total: int) -> Tensor:
    """Assemble 2-d row groups back into one (total, d) tensor.

    parts[g] holds the rows listed in rows[g]; every output row must be
    covered exactly once.
    """
    d = parts[0].data.shape[-1]
    out = np.empty((total, d), dtype=parts[0].data.dtype)
    for part, idx in zip(parts, rows):
        out[idx] = part.data

    def backward(g):
        for part, idx in zip(parts, rows):
            if part.requires_grad:
                part._accum(g[idx])

    return Tensor(out, parents=tuple(parts), backward=backward)


_GELU_C = float(np.sqrt(2.0 / np.pi))
_GELU_A = 0.044715


def gelu(t: Tensor) -> Tensor:
    """tanh-approximation GELU."""
    x = t.data
    u = _GELU_C * (x + _GELU_A * x**3)
    th = np.tanh(u)
    y = 0.5 * x * (1.0 + th)

    def backward(g):
        if t.requires_grad:
            du = _GELU_C * (1.0 + 3.0 * _GELU_A * x**2)
            t._accum(g * (0.5 * (1.0 + th) + 0.5 * x * (1.0 - th**2) * du))

    return Tensor(y, parents=(t,), backward=backward)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather: output shape ids.shape + (d,)."""
    ids = np.asarray(ids, dtype=np.int64)
    y = table.data[ids]

    def backward(g):
        if table.requires_grad:
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(table.grad, ids.reshape(-1), g.reshape(-1, table.data.shape[-1]))

    return Tensor(y, parents=(table,), backward=backward)


def backward(loss: Tensor):
    """Reverse-topological backprop from a scalar loss."""
    topo: list[Tensor] = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    loss._accum(np.ones_like(loss.data))
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


# ---------------------------------------------------------------------------
# Parameters and optimizer


class ParameterStore(dict):
    """Named trainable tensors."""

    def add(self, name: str, data: np.ndarray) -> Tensor:
        t = Tensor(data, requires_grad=True)
        self[name] = t
        return t

    def zero_grads(self):
        for t in self.values():
            t.grad = None

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.items()}

    def load_arrays(self, arrays: dict):
        for k, t in self.items():
            src = np.asarray(arrays[k])
            if src.shape != t.data.shape:
                raise ValueError(f"shape mismatch for {k}: {src.shape} vs {t.data.shape}")
            t.data = src.astype(t.data.dtype)

    def count(self) -> int:
        return sum(t.data.size for t in self.values())


def xavier(rng: np.random.Generator, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)


class AdamW:
    """Adam with decoupled weight decay."""

    def __init__(self, params: ParameterStore, weight_decay: float = 0.0,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.weight_decay = weight_decay
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self._m = {k: np.zeros_like(v.data) for k, v in params.items()}
        self._v = {k: np.zeros_like(v.data) for k, v in params.items()}

    def step(self, lr: float):
        self.t += 1
        bc1 = 1.0 - self.b1**self.t
        bc2 = 1.0 - self.b2**self.t
        for name, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad
            m = self._m[name]
            v = self._v[name]
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay:
                update = update + self.weight_decay * p.data
            p.data = p.data - lr * update

    def grad_norm(self) -> float:
        total = 0.0
        for p in self.params.values():
            if p.grad is not None:
                total += float(np.sum(p.grad.astype(np.float64) ** 2))
        return float(np.sqrt(total))


def finite_difference_grad(loss_fn, arr: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of loss_fn() w.r.t. arr, element by element.

    loss_fn must recompute the forward pass from current array contents.
    """
    grad = np.zeros_like(arr, dtype=np.float64)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = loss_fn()
        flat[i] = orig - step
        lo = loss_fn()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * step)
    return grad
