"""Closed-form scalar fields for scenario files.

The grammar is deliberately tiny: numbers, the names ``x`` (coordinate,
one-dimensional grids only) and ``r2`` (squared distance from the
origin), ``exp(...)``, the four arithmetic operators, ``^`` for powers
and unary minus.  Expressions are parsed once and evaluated with numpy
on whole arrays of grid points.
"""

import ast

import numpy as np

from .exceptions import InputError

__all__ = ["FieldExpr", "parse_field"]

_BINARY = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def _validate(node, source):
    if isinstance(node, ast.Constant):
        if type(node.value) not in (int, float):
            raise InputError(f"literal {node.value!r} is not a number in {source!r}")
        return
    if isinstance(node, ast.Name):
        if node.id not in ("x", "r2"):
            raise InputError(f"unknown name {node.id!r} in field expression {source!r}")
        return
    if isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, ast.USub):
            raise InputError(f"unsupported unary operator in {source!r}")
        _validate(node.operand, source)
        return
    if isinstance(node, ast.BinOp):
        if type(node.op) not in _BINARY:
            raise InputError(f"unsupported operator in {source!r}")
        _validate(node.left, source)
        _validate(node.right, source)
        return
    if isinstance(node, ast.Call):
        if (
            not isinstance(node.func, ast.Name)
            or node.func.id != "exp"
            or node.keywords
            or len(node.args) != 1
        ):
            raise InputError(f"only exp(...) calls are allowed, got {source!r}")
        _validate(node.args[0], source)
        return
    raise InputError(
        f"unsupported construct {type(node).__name__} in field expression {source!r}"
    )


def _evaluate(node, names):
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id not in names:
            raise InputError("the name 'x' is only available on one-dimensional grids; use r2")
        return names[node.id]
    if isinstance(node, ast.UnaryOp):
        return np.negative(_evaluate(node.operand, names))
    if isinstance(node, ast.BinOp):
        return _BINARY[type(node.op)](
            _evaluate(node.left, names), _evaluate(node.right, names)
        )
    # validation left only exp() calls
    return np.exp(_evaluate(node.args[0], names))


class FieldExpr:
    """A parsed scalar field, callable on an (m, dim) array of points."""

    def __init__(self, source):
        if not isinstance(source, str) or not source.strip():
            raise InputError("field expression must be a non-empty string")
        if "**" in source:
            raise InputError("write powers as '^' in field expressions")
        self.source = source
        try:
            tree = ast.parse(source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise InputError(f"cannot parse field expression {source!r}: {exc.msg}") from None
        self._root = tree.body
        _validate(self._root, source)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise InputError("points must have shape (m,) or (m, dim)")
        names = {"r2": np.sum(pts * pts, axis=1)}
        if pts.shape[1] == 1:
            names["x"] = pts[:, 0]
        values = np.asarray(_evaluate(self._root, names), dtype=float)
        return np.broadcast_to(values, (pts.shape[0],)).copy()

    def __repr__(self):
        return f"FieldExpr({self.source!r})"


def parse_field(source):
    """Parse ``source`` into a :class:`FieldExpr`."""
    return FieldExpr(source)
