"""Univariate Taylor jets and closed-form functions with exact derivatives.

A :class:`Jet` carries a value together with its first few derivatives with
respect to one hidden variable, so that ordinary-looking arithmetic
(``sin(t) * t**2 + 1 / (t + eps)``) propagates derivatives exactly. The same
machinery is used for warping functions, for the deformation coefficients
alpha and beta, and for parameter sensitivities of the deformation ODE.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

MAX_ORDER = 3


def _compose(u: "Jet", phi: Sequence[np.ndarray]) -> "Jet":
    # Faa di Bruno up to third order; phi[k] is the k-th derivative of the
    # outer function evaluated at u.d[0].
    d = u.d
    out = [phi[0]]
    if u.order >= 1:
        out.append(phi[1] * d[1])
    if u.order >= 2:
        out.append(phi[2] * d[1] ** 2 + phi[1] * d[2])
    if u.order >= 3:
        out.append(phi[3] * d[1] ** 3 + 3.0 * phi[2] * d[1] * d[2] + phi[1] * d[3])
    return Jet(tuple(out))


class Jet:
    """Value plus derivatives ``(f, f', f'', f''')`` truncated at ``order``."""

    __slots__ = ("d",)
    __array_priority__ = 100

    def __init__(self, d: Sequence):
        if not 1 <= len(d) <= MAX_ORDER + 1:
            raise ValueError(f"jet order must be in [0, {MAX_ORDER}]")
        self.d = tuple(np.asarray(x, dtype=float) for x in d)

    @classmethod
    def variable(cls, t, order: int = MAX_ORDER) -> "Jet":
        t = np.asarray(t, dtype=float)
        parts = [t, np.ones_like(t)] + [np.zeros_like(t)] * (order - 1)
        return cls(parts[: order + 1])

    @classmethod
    def constant(cls, c, order: int) -> "Jet":
        c = np.asarray(c, dtype=float)
        return cls([c] + [np.zeros_like(c)] * order)

    @property
    def order(self) -> int:
        return len(self.d) - 1

    @property
    def value(self) -> np.ndarray:
        return self.d[0]

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order)

    def _match(self, other: "Jet") -> tuple["Jet", "Jet"]:
        k = min(self.order, other.order)
        return Jet(self.d[: k + 1]), Jet(other.d[: k + 1])

    def __add__(self, other):
        a, b = self._match(self._lift(other))
        return Jet(tuple(x + y for x, y in zip(a.d, b.d)))

    __radd__ = __add__

    def __neg__(self):
        return Jet(tuple(-x for x in self.d))

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            return Jet(tuple(c * x for x in self.d))
        a, b = self._match(other)
        u, v = a.d, b.d
        out = [u[0] * v[0]]
        if a.order >= 1:
            out.append(u[1] * v[0] + u[0] * v[1])
        if a.order >= 2:
            out.append(u[2] * v[0] + 2.0 * u[1] * v[1] + u[0] * v[2])
        if a.order >= 3:
            out.append(
                u[3] * v[0] + 3.0 * u[2] * v[1] + 3.0 * u[1] * v[2] + u[0] * v[3]
            )
        return Jet(tuple(out))

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        x = self.d[0]
        r = 1.0 / x
        return _compose(self, (r, -(r**2), 2.0 * r**3, -6.0 * r**4))

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(np.ones_like(self.d[0]), self.order)
            for _ in range(int(p)):
                out = out * self
            return out
        p = float(p)
        x = self.d[0]
        return _compose(
            self,
            (
                x**p,
                p * x ** (p - 1),
                p * (p - 1) * x ** (p - 2),
                p * (p - 1) * (p - 2) * x ** (p - 3),
            ),
        )

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, value={self.d[0]!r})"


# Elementary functions accepting either jets or plain arrays.


def sin(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.d[0]), np.cos(x.d[0])
        return _compose(x, (s, c, -s, -c))
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.d[0]), np.cos(x.d[0])
        return _compose(x, (c, -s, -c, s))
    return np.cos(x)


def exp(x):
    if isinstance(x, Jet):
        e = np.exp(x.d[0])
        return _compose(x, (e, e, e, e))
    return np.exp(x)


def log(x):
    if isinstance(x, Jet):
        v = x.d[0]
        return _compose(x, (np.log(v), 1.0 / v, -1.0 / v**2, 2.0 / v**3))
    return np.log(x)


def sqrt(x):
    if isinstance(x, Jet):
        return x**0.5
    return np.sqrt(x)


def value(x) -> np.ndarray:
    return x.d[0] if isinstance(x, Jet) else np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Fn:
    """A smooth real function of one variable with exact derivatives.

    ``rule`` maps a :class:`Jet` (or plain array) to the same kind of object,
    written with the elementary functions of this module. Instances compose
    with ``+ - * /``, scalar constants and :meth:`compose`.
    """

    rule: Callable
    name: str = "f"

    def __call__(self, t):
        return value(self.rule(np.asarray(t, dtype=float)))

    def derivs(self, t, order: int = 2) -> tuple[np.ndarray, ...]:
        j = self.rule(Jet.variable(np.asarray(t, dtype=float), order))
        if not isinstance(j, Jet):
            j = Jet.constant(j, order)
        d = list(j.d)
        shape = np.shape(t)
        return tuple(np.broadcast_to(x, shape).astype(float) for x in d[: order + 1])

    def jet(self, u: Jet) -> Jet:
        out = self.rule(u)
        return out if isinstance(out, Jet) else Jet.constant(
            np.broadcast_to(out, np.shape(u.d[0])), u.order
        )

    def derivative(self, t, k: int = 1) -> np.ndarray:
        return self.derivs(t, k)[k]

    def compose(self, inner: "Fn") -> "Fn":
        return Fn(lambda t: self.rule(inner.rule(t)), f"{self.name}({inner.name})")

    def _bin(self, other, op, sym):
        if isinstance(other, Fn):
            return Fn(lambda t: op(self.rule(t), other.rule(t)), f"({self.name}{sym}{other.name})")
        return Fn(lambda t: op(self.rule(t), other), f"({self.name}{sym}{other!r})")

    def __add__(self, other):
        return self._bin(other, lambda a, b: a + b, "+")

    def __radd__(self, other):
        return self + other

    def __sub__(self, other):
        return self._bin(other, lambda a, b: a - b, "-")

    def __rsub__(self, other):
        return Fn(lambda t: other - self.rule(t), f"({other!r}-{self.name})")

    def __mul__(self, other):
        return self._bin(other, lambda a, b: a * b, "*")

    def __rmul__(self, other):
        return self * other

    def __truediv__(self, other):
        return self._bin(other, lambda a, b: a / b, "/")

    def __rtruediv__(self, other):
        return Fn(lambda t: other / self.rule(t), f"({other!r}/{self.name})")

    def __neg__(self):
        return Fn(lambda t: -self.rule(t), f"-{self.name}")

    @staticmethod
    def const(c: float) -> "Fn":
        c = float(c)
        return Fn(lambda t: t * 0.0 + c, repr(c))

    @staticmethod
    def identity() -> "Fn":
        return Fn(lambda t: t, "t")

    @staticmethod
    def poly(coeffs: Sequence[float]) -> "Fn":
        """Polynomial ``sum_k coeffs[k] * t**k`` (Horner form)."""
        cs = [float(c) for c in coeffs] or [0.0]

        def rule(t):
            acc = t * 0.0 + cs[-1]
            for c in reversed(cs[:-1]):
                acc = acc * t + c
            return acc

        return Fn(rule, "poly(" + ",".join(f"{c:.6g}" for c in cs) + ")")

    @staticmethod
    def shifted_reciprocal(eps: float, scale: float = 1.0) -> "Fn":
        """``scale / (t + eps)``."""
        eps, scale = float(eps), float(scale)
        return Fn(lambda t: scale / (t + eps), f"{scale:.6g}/(t+{eps:.6g})")


def smoothstep(x0: float, x1: float) -> Fn:
    """C-infinity step rising from 0 at ``x0`` to 1 at ``x1`` (flat beyond)."""
    if not x1 > x0:
        raise ValueError("smoothstep needs x1 > x0")
    width = x1 - x0

    def psi(u):
        # exp(-1/u) for u > 0, exactly 0 otherwise; jets handled componentwise
        if isinstance(u, Jet):
            pos = u.d[0] > 0
            safe = Jet(tuple(np.where(pos, x, 1.0 if k == 0 else 0.0) for k, x in enumerate(u.d)))
            e = exp(-1.0 / safe)
            return Jet(tuple(np.where(pos, x, 0.0) for x in e.d))
        u = np.asarray(u, dtype=float)
        pos = u > 0
        return np.where(pos, np.exp(-1.0 / np.where(pos, u, 1.0)), 0.0)

    def rule(t):
        u = (t - x0) / width
        a, b = psi(u), psi(1.0 - u)
        return a / (a + b)

    return Fn(rule, f"step[{x0:.4g},{x1:.4g}]")
