"""Symbolic self-maps of the disk, half-plane, ball and Siegel domain.

A map is a :class:`MapDescriptor`: a domain tag plus an expression tree of
:class:`Node` objects.  Trees are immutable, serialise to JSON, and support
batched numpy evaluation and exact forward-mode differentiation.

Scalar domains (``disk``, ``halfplane``) take complex points.  Vector domains
(``ball``, ``siegel``) take length-N complex vectors; a batch of M vector
points has shape ``(N, M)``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from functools import reduce

import numpy as np
from scipy.stats import qmc

from . import geometry, siegel
from .errors import BranchError, DescriptorError, DomainError, NotSelfMap

DOMAINS = ("disk", "halfplane", "ball", "siegel")
VECTOR_DOMAINS = ("ball", "siegel")
DOMAIN_TOL = 1e-10
VALIDATION_TOL = 1e-10

_ARITY = {
    "constant": 0, "variable": 0,
    "add": 2, "multiply": 2, "divide": 2, "compose": 2,
    "power": 1, "sqrt": 1, "mobius": 1,
    "cayley": 1, "cayley_inverse": 1, "ball_cayley": 1, "ball_cayley_inverse": 1,
    "siegel_translation": 1, "siegel_dilation": 1, "unitary": 1, "psi": 1,
    "stack": None,
}
_VECTOR_OPS = ("ball_cayley", "ball_cayley_inverse", "siegel_translation",
               "siegel_dilation", "unitary", "psi")
# ops whose output lives in a different model than their input
_MODEL_CHANGE = {
    "cayley": "halfplane", "cayley_inverse": "disk",
    "ball_cayley": "siegel", "ball_cayley_inverse": "ball",
    "siegel_translation": "siegel", "siegel_dilation": "siegel", "psi": "siegel",
}


@dataclass(frozen=True, eq=False)
class Node:
    op: str
    args: tuple = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.op not in _ARITY:
            raise DescriptorError(f"unknown primitive {self.op!r}")
        object.__setattr__(self, "args", tuple(self.args))
        arity = _ARITY[self.op]
        if arity is not None and len(self.args) != arity:
            raise DescriptorError(f"{self.op} takes {arity} arguments, got {len(self.args)}")
        if self.op == "stack" and not self.args:
            raise DescriptorError("stack needs at least one component")
        for a in self.args:
            if not isinstance(a, Node):
                raise DescriptorError("arguments must be nodes")

    # arithmetic sugar for building trees in Python
    def __add__(self, other):
        return Node("add", (self, _lift(other)))

    def __radd__(self, other):
        return Node("add", (_lift(other), self))

    def __sub__(self, other):
        return Node("add", (self, Node("multiply", (const(-1.0), _lift(other)))))

    def __rsub__(self, other):
        return Node("add", (_lift(other), Node("multiply", (const(-1.0), self))))

    def __mul__(self, other):
        return Node("multiply", (self, _lift(other)))

    def __rmul__(self, other):
        return Node("multiply", (_lift(other), self))

    def __truediv__(self, other):
        return Node("divide", (self, _lift(other)))

    def __rtruediv__(self, other):
        return Node("divide", (_lift(other), self))

    def __pow__(self, n):
        return Node("power", (self,), {"n": int(n)})

    def __neg__(self):
        return Node("multiply", (const(-1.0), self))

    def __call__(self, inner):
        """``outer(inner)`` builds a composition."""
        return Node("compose", (self, _lift(inner)))


def _lift(x) -> Node:
    return x if isinstance(x, Node) else const(x)


# --- builders ----------------------------------------------------------------

def const(value) -> Node:
    return Node("constant", (), {"value": complex(value)})


def var(index: int | None = None) -> Node:
    return Node("variable", (), {} if index is None else {"index": int(index)})


def sqrt(x) -> Node:
    return Node("sqrt", (_lift(x),))


def mobius(a, b, c, d, x=None) -> Node:
    p = {k: complex(v) for k, v in zip("abcd", (a, b, c, d))}
    if abs(p["a"] * p["d"] - p["b"] * p["c"]) == 0:
        raise DescriptorError("degenerate Mobius coefficients")
    return Node("mobius", (x if x is not None else var(),), p)


def compose(outer: Node, inner: Node) -> Node:
    return Node("compose", (outer, inner))


def stack(*components) -> Node:
    return Node("stack", tuple(_lift(c) for c in components))


def cayley(x=None) -> Node:
    return Node("cayley", (x if x is not None else var(),))


def cayley_inverse(x=None) -> Node:
    return Node("cayley_inverse", (x if x is not None else var(),))


def ball_cayley(x=None) -> Node:
    return Node("ball_cayley", (x if x is not None else var(),))


def ball_cayley_inverse(x=None) -> Node:
    return Node("ball_cayley_inverse", (x if x is not None else var(),))


def translation(b, x=None) -> Node:
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    if not siegel.on_boundary(b):
        raise DescriptorError("translation parameter must lie on the boundary of H^N")
    return Node("siegel_translation", (x if x is not None else var(),), {"b": b})


def dilation(A, x=None) -> Node:
    if not A > 0:
        raise DescriptorError("dilation factor must be positive")
    return Node("siegel_dilation", (x if x is not None else var(),), {"A": float(A)})


def unitary(U, x=None) -> Node:
    try:
        U = siegel.check_unitary(U)
    except ValueError as exc:
        raise DescriptorError(str(exc)) from exc
    return Node("unitary", (x if x is not None else var(),), {"U": U})


def psi(A, a, U=None, x=None) -> Node:
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    if U is None:
        U = np.eye(a.size - 1, dtype=complex)
    try:
        _, U = siegel._check_psi(float(A), a, U)
    except ValueError as exc:
        raise DescriptorError(str(exc)) from exc
    return Node("psi", (x if x is not None else var(),), {"A": float(A), "a": a, "U": U})


# --- structural checks ---------------------------------------------------------

def _shape(node: Node, ctx_dim, ctx_model: str):
    """Static output (dim, model) of ``node`` when its variable is a point of
    dimension ``ctx_dim`` (None for scalar) living in model ``ctx_model``."""
    op, p = node.op, node.params
    if op == "constant":
        return None, ctx_model
    if op == "variable":
        if "index" in p:
            if ctx_dim is None or not 0 <= p["index"] < ctx_dim:
                raise DescriptorError("variable index out of range")
            return None, ctx_model
        return ctx_dim, ctx_model
    if op == "compose":
        outer, inner = node.args
        d, m = _shape(inner, ctx_dim, ctx_model)
        return _shape(outer, d, m)
    shapes = [_shape(a, ctx_dim, ctx_model) for a in node.args]
    dims = [s[0] for s in shapes]
    if op == "stack":
        if any(d is not None for d in dims):
            raise DescriptorError("stack components must be scalar")
        return len(dims), ctx_model
    if op == "add":
        if dims[0] != dims[1]:
            raise DescriptorError("add needs operands of the same shape")
        return dims[0], ctx_model
    if op == "multiply":
        if dims[0] is not None and dims[1] is not None:
            raise DescriptorError("vector-vector products are not supported")
        return (dims[0] if dims[0] is not None else dims[1]), ctx_model
    if op == "divide":
        if dims[1] is not None:
            raise DescriptorError("cannot divide by a vector")
        return dims[0], ctx_model
    (d,) = dims
    if op == "sqrt":
        if ctx_model not in ("halfplane", "siegel"):
            raise DescriptorError(
                "square roots are only accepted where the branch cut lies outside "
                f"the domain (half-plane/Siegel), not in {ctx_model} coordinates")
        if d is not None:
            raise DescriptorError("sqrt takes a scalar")
        return None, ctx_model
    if op in ("power", "mobius", "cayley", "cayley_inverse"):
        if d is not None:
            raise DescriptorError(f"{op} takes a scalar")
        return None, _MODEL_CHANGE.get(op, ctx_model)
    # vector primitives
    if d is None:
        raise DescriptorError(f"{op} takes a vector")
    if op == "siegel_translation" and p["b"].size != d:
        raise DescriptorError("translation dimension mismatch")
    if op == "unitary" and p["U"].shape[0] not in (d, d - 1):
        raise DescriptorError("unitary dimension mismatch")
    if op == "psi" and p["a"].size != d:
        raise DescriptorError("psi dimension mismatch")
    return d, _MODEL_CHANGE.get(op, ctx_model)


# --- descriptor ------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    samples_tested: int
    max_boundary_violation: float
    schwarz_violation: float
    verdict: str
    seed: int = 0

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self):
        return {
            "samples_tested": self.samples_tested,
            "max_boundary_violation": self.max_boundary_violation,
            "schwarz_violation": self.schwarz_violation,
            "verdict": self.verdict,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class MapDescriptor:
    domain: str
    expr: Node
    N: int = 1
    name: str = ""
    certificate: ValidationReport | None = None

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise DescriptorError(f"unknown domain {self.domain!r}")
        if not isinstance(self.N, int) or self.N < 1:
            raise DescriptorError("N must be a positive integer")
        if self.domain not in VECTOR_DOMAINS and self.N != 1:
            raise DescriptorError("scalar domains have N = 1")
        ctx_dim = self.N if self.vector else None
        out_dim, _ = _shape(self.expr, ctx_dim, self.domain)
        if out_dim != ctx_dim:
            raise DescriptorError("map output does not match the domain dimension")

    @property
    def vector(self) -> bool:
        return self.domain in VECTOR_DOMAINS

    def __call__(self, z):
        return evaluate(self, z)

    def to_json(self) -> dict:
        return {"domain": self.domain, "N": self.N, "expr": node_to_json(self.expr)}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()[:16]

    def with_certificate(self, report: ValidationReport) -> "MapDescriptor":
        return replace(self, certificate=report)


# --- JSON ------------------------------------------------------------------------

def _cjson(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _cparse(obj) -> complex:
    if isinstance(obj, dict):
        if set(obj) - {"re", "im"}:
            raise DescriptorError(f"bad complex literal {obj!r}")
        return complex(float(obj.get("re", 0.0)), float(obj.get("im", 0.0)))
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return complex(obj)
    raise DescriptorError(f"bad complex literal {obj!r}")


def _matrix_parse(obj) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise DescriptorError("unitary must be a non-empty array")
    if isinstance(obj[0], list):
        rows = [[_cparse(x) for x in row] for row in obj]
        M = np.array(rows, dtype=complex)
    else:
        flat = np.array([_cparse(x) for x in obj], dtype=complex)
        n = math.isqrt(flat.size)
        if n * n != flat.size:
            raise DescriptorError("flat unitary must have a square number of entries")
        M = flat.reshape(n, n)
    try:
        return siegel.check_unitary(M, 1e-10)
    except ValueError as exc:
        raise DescriptorError(str(exc)) from exc


def node_to_json(node: Node) -> dict:
    params = {}
    for k, v in node.params.items():
        if isinstance(v, np.ndarray) and v.ndim == 2:
            params[k] = [[_cjson(x) for x in row] for row in v]
        elif isinstance(v, np.ndarray):
            params[k] = [_cjson(x) for x in v]
        elif isinstance(v, complex):
            params[k] = _cjson(v)
        else:
            params[k] = v
    return {"op": node.op, "args": [node_to_json(a) for a in node.args], "params": params}


def node_from_json(obj) -> Node:
    if not isinstance(obj, dict) or "op" not in obj:
        raise DescriptorError("node must be an object with an 'op' field")
    op = obj["op"]
    if op not in _ARITY:
        raise DescriptorError(f"unknown primitive {op!r}")
    args = [node_from_json(a) for a in obj.get("args", [])]
    p = obj.get("params", {}) or {}
    try:
        if op == "constant":
            return const(_cparse(p["value"]))
        if op == "variable":
            return var(p.get("index"))
        if op == "power":
            n = p["n"]
            if not isinstance(n, int) or isinstance(n, bool):
                raise DescriptorError("power exponent must be an integer")
            return Node("power", args, {"n": n})
        if op == "mobius":
            (x,) = args
            return mobius(*(_cparse(p[k]) for k in "abcd"), x=x)
        if op == "siegel_translation":
            (x,) = args
            return translation([_cparse(c) for c in p["b"]], x)
        if op == "siegel_dilation":
            (x,) = args
            return dilation(float(p["A"]), x)
        if op == "unitary":
            (x,) = args
            return unitary(_matrix_parse(p["U"]), x)
        if op == "psi":
            (x,) = args
            U = _matrix_parse(p["U"]) if "U" in p else None
            return psi(float(p["A"]), [_cparse(c) for c in p["a"]], U, x)
    except (KeyError, TypeError) as exc:
        raise DescriptorError(f"bad parameters for {op}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, DescriptorError):
            raise
        raise DescriptorError(f"bad arguments for {op}: {exc}") from exc
    return Node(op, args, {})


def from_json(obj) -> MapDescriptor:
    if isinstance(obj, (str, bytes)):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise DescriptorError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise DescriptorError("descriptor must be a JSON object")
    for key in ("domain", "expr"):
        if key not in obj:
            raise DescriptorError(f"descriptor missing {key!r}")
    N = obj.get("N", 1)
    if not isinstance(N, int) or isinstance(N, bool):
        raise DescriptorError("N must be an integer")
    return MapDescriptor(obj["domain"], node_from_json(obj["expr"]), N, obj.get("name", ""))


# --- evaluation ------------------------------------------------------------------

def _eval(node: Node, z):
    op, p, args = node.op, node.params, node.args
    if op == "variable":
        return z[p["index"]] if "index" in p else z
    if op == "constant":
        return p["value"]
    if op == "compose":
        return _eval(args[0], _eval(args[1], z))
    if op == "stack":
        vals = [_eval(a, z) for a in args]
        return np.stack(np.broadcast_arrays(*vals))
    if op == "add":
        return _eval(args[0], z) + _eval(args[1], z)
    if op == "multiply":
        return _eval(args[0], z) * _eval(args[1], z)
    if op == "divide":
        return _eval(args[0], z) / _eval(args[1], z)
    u = _eval(args[0], z)
    if op == "power":
        return u ** p["n"]
    if op == "sqrt":
        return np.sqrt(np.asarray(u, dtype=complex))
    if op == "mobius":
        return (p["a"] * u + p["b"]) / (p["c"] * u + p["d"])
    if op == "cayley":
        return 1j * (1.0 + u) / (1.0 - u)
    if op == "cayley_inverse":
        return (u - 1j) / (u + 1j)
    u = np.asarray(u, dtype=complex)
    if op == "ball_cayley":
        den = 1.0 - u[0]
        return np.concatenate([(1j * (1.0 + u[0]) / den)[None], u[1:] / den])
    if op == "ball_cayley_inverse":
        den = u[0] + 1j
        return np.concatenate([((u[0] - 1j) / den)[None], 2j * u[1:] / den])
    if op == "siegel_translation":
        b = p["b"]
        first = u[0] + b[0] + 2j * np.tensordot(b[1:].conj(), u[1:], axes=(0, 0))
        rest = u[1:] + b[1:].reshape((-1,) + (1,) * (u.ndim - 1))
        return np.concatenate([np.asarray(first)[None], rest])
    if op == "siegel_dilation":
        A = p["A"]
        return np.concatenate([(A * u[0])[None], math.sqrt(A) * u[1:]])
    if op == "unitary":
        U = p["U"]
        if U.shape[0] == u.shape[0]:
            return np.tensordot(U, u, axes=(1, 0))
        return np.concatenate([u[0][None], np.tensordot(U, u[1:], axes=(1, 0))])
    if op == "psi":
        A, a, U = p["A"], p["a"], p["U"]
        sA = math.sqrt(A)
        ap = a[1:]
        uz = np.tensordot(U, u[1:], axes=(1, 0))
        first = (A * u[0] + a[0].real + 1j * float(np.vdot(ap, ap).real)
                 + 2j * sA * np.tensordot(ap.conj(), uz, axes=(0, 0)))
        rest = sA * uz + ap.reshape((-1,) + (1,) * (u.ndim - 1))
        return np.concatenate([np.asarray(first)[None], rest])
    raise DescriptorError(f"cannot evaluate {op}")  # pragma: no cover


def _as_point(m: MapDescriptor, z):
    if m.vector:
        z = np.asarray(z, dtype=complex)
        if z.shape[0] != m.N:
            raise DomainError(f"expected a point of C^{m.N}")
        return z
    if np.ndim(z) == 0:
        return complex(z)
    return np.asarray(z, dtype=complex)


def boundary_violation(domain: str, w) -> np.ndarray | float:
    """How far ``w`` lies outside the closed domain (0 if inside); batched."""
    with np.errstate(invalid="ignore", over="ignore"):
        if domain == "disk":
            v = np.abs(w) - 1.0
        elif domain == "halfplane":
            v = -np.imag(w)
        elif domain == "ball":
            v = np.sqrt(np.sum(np.abs(w) ** 2, axis=0)) - 1.0
        else:
            v = np.sum(np.abs(w[1:]) ** 2, axis=0) - np.imag(w[0])
        finite = np.all(np.isfinite(w), axis=0) if domain in VECTOR_DOMAINS else np.isfinite(w)
        v = np.where(finite, np.maximum(v, 0.0), np.inf)
    return v if np.ndim(v) else float(v)


def inside(domain: str, w) -> bool:
    """Strict membership (open domain) of a single point."""
    if domain == "disk":
        return abs(complex(w)) < 1.0
    if domain == "halfplane":
        return complex(w).imag > 0.0
    if domain == "ball":
        return siegel.norm2(w) < 1.0
    return siegel.height(w) > 0.0


def evaluate_unchecked(m: MapDescriptor, z):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        w = _eval(m.expr, _as_point(m, z))
    if not m.vector and np.ndim(w) == 0:
        return complex(w)
    return np.asarray(w, dtype=complex)


def evaluate(m: MapDescriptor, z):
    """Image of ``z`` (or a batch of points); raises DomainError if it leaves the domain."""
    w = evaluate_unchecked(m, z)
    viol = boundary_violation(m.domain, w)
    if np.max(viol) > DOMAIN_TOL:
        raise DomainError(f"image leaves the {m.domain} by {np.max(viol):.3g}")
    return w


# --- differentiation -------------------------------------------------------------

def _on_cut(u: complex) -> bool:
    return abs(u.imag) <= 1e-15 * max(1.0, abs(u)) and u.real <= 0.0


def _dual(node: Node, z, jz):
    """Value and Jacobian w.r.t. the root variable.

    ``z`` is the context point (complex or 1-d array), ``jz`` its Jacobian
    with shape ``shape(z) + (N,)``.
    """
    op, p, args = node.op, node.params, node.args
    if op == "variable":
        if "index" in p:
            return z[p["index"]], jz[p["index"]]
        return z, jz
    if op == "constant":
        return p["value"], np.zeros(jz.shape[-1], dtype=complex)
    if op == "compose":
        v, jv = _dual(args[1], z, jz)
        return _dual(args[0], v, jv)
    if op == "stack":
        parts = [_dual(a, z, jz) for a in args]
        return (np.array([q[0] for q in parts], dtype=complex),
                np.array([q[1] for q in parts], dtype=complex))
    if op in ("add", "multiply", "divide"):
        (u, ju), (v, jv) = _dual(args[0], z, jz), _dual(args[1], z, jz)
        u_, v_ = np.asarray(u)[..., None], np.asarray(v)[..., None]
        if op == "add":
            return u + v, ju + jv
        if op == "multiply":
            return u * v, u_ * jv + v_ * ju
        return u / v, (ju * v_ - u_ * jv) / (v_ * v_)
    u, ju = _dual(args[0], z, jz)
    if op == "power":
        n = p["n"]
        return u ** n, n * u ** (n - 1) * ju
    if op == "sqrt":
        u = complex(u)
        if _on_cut(u):
            raise BranchError(f"sqrt is not differentiable on its branch cut (argument {u})")
        s = np.sqrt(u)
        return s, ju / (2.0 * s)
    if op == "mobius":
        a, b, c, d = (p[k] for k in "abcd")
        den = c * u + d
        return (a * u + b) / den, (a * d - b * c) / den ** 2 * ju
    if op == "cayley":
        return 1j * (1.0 + u) / (1.0 - u), 2j / (1.0 - u) ** 2 * ju
    if op == "cayley_inverse":
        return (u - 1j) / (u + 1j), 2j / (u + 1j) ** 2 * ju
    u = np.asarray(u, dtype=complex)
    n = u.size
    J = np.zeros((n, n), dtype=complex)
    if op == "ball_cayley":
        den = 1.0 - u[0]
        val = np.concatenate([[1j * (1.0 + u[0]) / den], u[1:] / den])
        J[0, 0] = 2j / den ** 2
        J[1:, 0] = u[1:] / den ** 2
        J[1:, 1:] = np.eye(n - 1) / den
    elif op == "ball_cayley_inverse":
        den = u[0] + 1j
        val = np.concatenate([[(u[0] - 1j) / den], 2j * u[1:] / den])
        J[0, 0] = 2j / den ** 2
        J[1:, 0] = -2j * u[1:] / den ** 2
        J[1:, 1:] = 2j * np.eye(n - 1) / den
    elif op == "siegel_translation":
        val = _eval(node, u)
        b = p["b"]
        J[:, :] = np.eye(n)
        J[0, 1:] = 2j * b[1:].conj()
    elif op == "siegel_dilation":
        val = _eval(node, u)
        J[:, :] = np.diag([p["A"]] + [math.sqrt(p["A"])] * (n - 1))
    elif op == "unitary":
        val = _eval(node, u)
        U = p["U"]
        if U.shape[0] == n:
            J[:, :] = U
        else:
            J[0, 0] = 1.0
            J[1:, 1:] = U
    elif op == "psi":
        val = _eval(node, u)
        A, a, U = p["A"], p["a"], p["U"]
        sA = math.sqrt(A)
        J[0, 0] = A
        J[0, 1:] = 2j * sA * (a[1:].conj() @ U)
        J[1:, 1:] = sA * U
    else:  # pragma: no cover
        raise DescriptorError(f"cannot differentiate {op}")
    return val, J @ ju


def derivative(m: MapDescriptor, z):
    """Complex derivative (scalar domains) or complex Jacobian (vector domains)."""
    if m.vector:
        z = np.asarray(z, dtype=complex).reshape(m.N)
        _, J = _dual(m.expr, z, np.eye(m.N, dtype=complex))
        return np.asarray(J, dtype=complex)
    _, J = _dual(m.expr, complex(z), np.ones(1, dtype=complex))
    return complex(np.asarray(J).reshape(-1)[0])


def finite_difference(m: MapDescriptor, z, h: float = 1e-6):
    """Central-difference derivative; used to cross-check :func:`derivative`."""
    if m.vector:
        z = np.asarray(z, dtype=complex)
        cols = []
        for k in range(m.N):
            e = np.zeros(m.N, complex)
            e[k] = h
            cols.append((evaluate_unchecked(m, z + e) - evaluate_unchecked(m, z - e)) / (2 * h))
        return np.array(cols).T
    z = complex(z)
    return (evaluate_unchecked(m, z + h) - evaluate_unchecked(m, z - h)) / (2 * h)


# --- iteration ---------------------------------------------------------------------

def identity(domain: str, N: int = 1) -> MapDescriptor:
    return MapDescriptor(domain, var(), N, name="identity")


def iterate_descriptor(m: MapDescriptor, n: int) -> MapDescriptor:
    """Descriptor of the n-fold composite; n = 0 gives the identity."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return identity(m.domain, m.N)
    expr = reduce(lambda acc, _: compose(m.expr, acc), range(n - 1), m.expr)
    return MapDescriptor(m.domain, expr, m.N, name=f"{m.name or 'map'}^{n}")


def iterate_point(m: MapDescriptor, z, n: int):
    for _ in range(n):
        z = evaluate(m, z)
    return z


# --- sampling and validation ---------------------------------------------------------

def _normal(u):
    from scipy.special import ndtri
    return ndtri(np.clip(u, 1e-12, 1 - 1e-12))


def sample_points(domain: str, N: int, u: np.ndarray, rmax: float = 0.999):
    """Map unit-cube samples ``u`` (shape (M, d)) to domain points.

    Needs d = 2 for scalar domains and d = 2N + 1 for vector ones.
    """
    if domain in ("disk", "halfplane"):
        r = rmax * np.sqrt(u[:, 0])
        z = r * np.exp(2j * np.pi * u[:, 1])
        return z if domain == "disk" else 1j * (1 + z) / (1 - z)
    g = _normal(u[:, : 2 * N])
    v = g[:, :N] + 1j * g[:, N:]
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = rmax * u[:, 2 * N] ** (1.0 / (2 * N))
    z = (v * r[:, None]).T
    if domain == "ball":
        return z
    den = 1.0 - z[0]
    return np.concatenate([(1j * (1 + z[0]) / den)[None], z[1:] / den])


def sample_dim(domain: str, N: int) -> int:
    return 2 if domain in ("disk", "halfplane") else 2 * N + 1


def halton(dim: int, n: int, seed: int) -> np.ndarray:
    return qmc.Halton(d=dim, scramble=True, seed=seed).random(n)


def distance(domain: str, a, b) -> float:
    """Pseudo-hyperbolic distance in any of the four models."""
    if domain == "disk":
        return geometry.pseudo_distance(a, b)
    if domain == "halfplane":
        return geometry.halfplane_pseudo_distance(a, b)
    if domain == "ball":
        return siegel.ball_distance(a, b)
    return siegel.siegel_distance(a, b)


def validate_self_map(m: MapDescriptor, n_samples: int = 1000, seed: int = 0) -> ValidationReport:
    """Sampled certificate: range containment and pseudo-distance contraction.

    Pairs come from a scrambled Halton sequence, so the report is a
    deterministic function of ``(m, n_samples, seed)``.
    """
    d = sample_dim(m.domain, m.N)
    u = halton(2 * d, n_samples, seed)
    a = sample_points(m.domain, m.N, u[:, :d])
    b = sample_points(m.domain, m.N, u[:, d:])
    fa, fb = evaluate_unchecked(m, a), evaluate_unchecked(m, b)
    va, vb = boundary_violation(m.domain, fa), boundary_violation(m.domain, fb)
    bviol = float(np.max(np.maximum(va, vb)))
    schwarz = 0.0
    for k in range(n_samples):
        if va[k] > 0 or vb[k] > 0:
            continue
        if m.vector:
            pa, pb, qa, qb = a[:, k], b[:, k], fa[:, k], fb[:, k]
        else:
            pa, pb, qa, qb = a[k], b[k], fa[k], fb[k]
        if not (inside(m.domain, qa) and inside(m.domain, qb)):
            continue
        schwarz = max(schwarz, distance(m.domain, qa, qb) - distance(m.domain, pa, pb))
    ok = bviol <= VALIDATION_TOL and schwarz <= VALIDATION_TOL
    return ValidationReport(n_samples, bviol, float(schwarz), "pass" if ok else "fail", seed)


_CERTS: dict[str, ValidationReport] = {}


def certify(m: MapDescriptor, n_samples: int = 256, seed: int = 0) -> ValidationReport:
    """Validation certificate for ``m`` (memoised per descriptor content)."""
    if m.certificate is not None:
        return m.certificate
    key = f"{m.dumps()}|{n_samples}|{seed}"
    if key not in _CERTS:
        _CERTS[key] = validate_self_map(m, n_samples, seed)
    return _CERTS[key]


def require_self_map(m: MapDescriptor) -> ValidationReport:
    rep = certify(m)
    if not rep.passed:
        raise NotSelfMap(
            f"{m.name or 'map'} failed self-map validation "
            f"(boundary {rep.max_boundary_violation:.3g}, contraction {rep.schwarz_violation:.3g})")
    return rep


# --- transport between models ------------------------------------------------------

def to_disk(m: MapDescriptor) -> MapDescriptor:
    """Conjugate a half-plane map to the disk through the Cayley transform."""
    if m.domain == "disk":
        return m
    if m.domain != "halfplane":
        raise DescriptorError("only half-plane maps can be moved to the disk")
    return MapDescriptor("disk", cayley_inverse(compose(m.expr, cayley())), 1,
                         name=f"disk({m.name})" if m.name else "")


def to_ball(m: MapDescriptor) -> MapDescriptor:
    """Conjugate a Siegel-domain map to the ball through the ball Cayley transform."""
    if m.domain == "ball":
        return m
    if m.domain != "siegel":
        raise DescriptorError("only Siegel-domain maps can be moved to the ball")
    return MapDescriptor("ball", ball_cayley_inverse(compose(m.expr, ball_cayley())), m.N,
                         name=f"ball({m.name})" if m.name else "")


def unwrap_cayley(m: MapDescriptor) -> MapDescriptor | None:
    """Inverse of :func:`to_disk` / :func:`to_ball` when ``m`` has that exact shape.

    Lets dynamics code iterate in the unbounded model, where boundary
    quantities have cancellation-free closed forms.
    """
    e = m.expr
    pairs = {"disk": ("cayley_inverse", "cayley", "halfplane"),
             "ball": ("ball_cayley_inverse", "ball_cayley", "siegel")}
    if m.domain not in pairs:
        return None
    outer_op, inner_op, target = pairs[m.domain]
    if e.op != outer_op or e.args[0].op != "compose":
        return None
    core, inner = e.args[0].args
    if inner.op != inner_op or inner.args[0].op != "variable" or inner.args[0].params:
        return None
    try:
        return MapDescriptor(target, core, m.N, name=m.name)
    except DescriptorError:
        return None


def to_halfplane(m: MapDescriptor, dw: complex = 1.0) -> MapDescriptor:
    """Half-plane form of a disk map whose Denjoy-Wolff point is ``dw``.

    Rotates ``dw`` to 1 and conjugates by the Cayley transform, so the
    Denjoy-Wolff point lands at infinity.  Maps built with :func:`to_disk` are
    unwrapped exactly instead.
    """
    if m.domain == "halfplane":
        return m
    if m.domain != "disk":
        raise DescriptorError("only disk maps can be moved to the half-plane")
    core = unwrap_cayley(m)
    if core is not None:
        return core
    p = complex(dw)
    if abs(abs(p) - 1) > 1e-9:
        raise DescriptorError("the Denjoy-Wolff point must lie on the unit circle")
    p /= abs(p)
    inner = compose(m.expr, mobius(p, 0, 0, 1, cayley_inverse()))
    expr = cayley(compose(mobius(p.conjugate(), 0, 0, 1), inner))
    return MapDescriptor("halfplane", expr, 1, name=f"halfplane({m.name})" if m.name else "")
