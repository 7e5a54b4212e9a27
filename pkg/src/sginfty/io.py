"""File formats and report dictionaries.

Matrices travel as JSON ``{"dim": n, "re": [[..]], "im": [[..]]}`` with
the imaginary block optional, or as CSV of real entries.  Scenario files
describe the drift-diffusion demo.  Report builders turn analysis
results into plain dictionaries that serialize deterministically and
validate against the schema shipped in ``sginfty/schemas``.
"""

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .exceptions import InputError
from .infinity import converges, infinity_decomposition
from .parabolic import Grid, PotentialSpec
from .semigroups import (
    NATURALS,
    NONNEG_REALS,
    _peripheral_split,
    is_bounded,
    parse_monoid,
    SemigroupSpec,
)
from .spectral import eig_decompose, numerical_rank

__all__ = [
    "Scenario",
    "analysis_report",
    "ensemble_report",
    "json_text",
    "load_matrix",
    "load_report_schema",
    "load_scenario",
    "load_semigroup_spec",
    "matrix_from_json",
    "matrix_to_json",
    "pde_report",
    "probe_report",
    "write_csv",
    "write_json",
]


def _read_json(path):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"{p}: cannot read file: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def _numeric_block(data, key, dim, context):
    block = data.get(key)
    if block is None:
        raise InputError(f"{context}: missing matrix field {key!r}")
    try:
        arr = np.asarray(block, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{context}: matrix field {key!r} must be numeric") from None
    if arr.shape != (dim, dim):
        raise InputError(
            f"{context}: matrix field {key!r} has shape {arr.shape}, "
            f"expected ({dim}, {dim})"
        )
    return arr


def matrix_from_json(data, context="matrix"):
    """Matrix from the interchange dict {"dim", "re", "im"?}."""
    if not isinstance(data, dict):
        raise InputError(f"{context}: expected an object with 'dim' and 're'")
    dim = data.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise InputError(f"{context}: field 'dim' must be a positive integer")
    unknown = set(data) - {"dim", "re", "im"}
    if unknown:
        raise InputError(f"{context}: unknown matrix field(s) {sorted(unknown)}")
    re = _numeric_block(data, "re", dim, context)
    if "im" in data:
        return re + 1j * _numeric_block(data, "im", dim, context)
    return re


def matrix_to_json(M):
    """Interchange dict for a matrix; 'im' present only for complex data."""
    M = np.asarray(M)
    out = {"dim": int(M.shape[0]), "re": [[float(x) for x in row] for row in M.real]}
    if np.iscomplexobj(M) and float(np.max(np.abs(M.imag), initial=0.0)) != 0.0:
        out["im"] = [[float(x) for x in row] for row in M.imag]
    return out


def _load_matrix_csv(path):
    try:
        M = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: cannot parse CSV matrix: {exc}") from None
    if M.shape[0] != M.shape[1]:
        raise InputError(f"{path}: matrix must be square, got shape {M.shape}")
    return M


def load_matrix(path):
    """Load a matrix file; CSV for '.csv' paths, interchange JSON otherwise."""
    p = Path(path)
    if p.suffix.lower() == ".csv":
        return _load_matrix_csv(p)
    return matrix_from_json(_read_json(p), context=str(p))


_NORM_KEYS = {1: 1, 2: 2, "inf": np.inf}


def load_semigroup_spec(path):
    """Load a semigroup description {"mode", "matrix", "monoid"?, "norm_p"?}."""
    p = Path(path)
    data = _read_json(p)
    if not isinstance(data, dict):
        raise InputError(f"{p}: expected a JSON object")
    unknown = set(data) - {"mode", "matrix", "monoid", "norm_p"}
    if unknown:
        raise InputError(f"{p}: unknown field(s) {sorted(unknown)}")
    mode = data.get("mode")
    if mode not in ("discrete", "continuous"):
        raise InputError(f"{p}: field 'mode' must be 'discrete' or 'continuous'")
    if "matrix" not in data:
        raise InputError(f"{p}: missing field 'matrix'")
    matrix = matrix_from_json(data["matrix"], context=f"{p} field 'matrix'")
    if "monoid" in data:
        try:
            monoid = parse_monoid(data["monoid"])
        except (TypeError, ValueError) as exc:
            raise InputError(f"{p}: field 'monoid': {exc}") from None
    else:
        monoid = NATURALS if mode == "discrete" else NONNEG_REALS
    norm_key = data.get("norm_p", 2)
    if isinstance(norm_key, bool) or norm_key not in _NORM_KEYS:
        raise InputError(f"{p}: field 'norm_p' must be 1, 2 or \"inf\"")
    try:
        return SemigroupSpec(
            mode=mode, matrix=matrix, monoid=monoid, norm_p=_NORM_KEYS[norm_key]
        )
    except ValueError as exc:
        raise InputError(f"{p}: {exc}") from None


@dataclass(frozen=True)
class Scenario:
    """A loaded drift-diffusion scenario plus its normalized file echo."""

    grid: Grid
    pot: PotentialSpec
    lambda0: float
    tau: float
    scheme: str
    t_max: float
    probe: float
    params: dict


_SCENARIO_REQUIRED = ("d", "L", "h", "beta", "v", "w", "tau")
_SCENARIO_OPTIONAL = ("lambda0", "scheme", "t_max", "probe")
_SCHEMES = ("implicit_euler", "crank_nicolson")


def _scenario_number(data, key, path):
    val = data[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise InputError(f"{path}: scenario field {key!r} must be a number")
    return float(val)


def load_scenario(path):
    """Load a scenario file for the drift-diffusion demo."""
    p = Path(path)
    data = _read_json(p)
    if not isinstance(data, dict):
        raise InputError(f"{p}: expected a JSON object")
    unknown = set(data) - set(_SCENARIO_REQUIRED) - set(_SCENARIO_OPTIONAL)
    if unknown:
        raise InputError(f"{p}: unknown scenario field(s) {sorted(unknown)}")
    missing = [k for k in _SCENARIO_REQUIRED if k not in data]
    if missing:
        raise InputError(f"{p}: missing scenario field(s) {missing}")

    d = data["d"]
    if isinstance(d, bool) or not isinstance(d, int):
        raise InputError(f"{p}: scenario field 'd' must be an integer")
    L = _scenario_number(data, "L", p)
    h = _scenario_number(data, "h", p)
    beta = _scenario_number(data, "beta", p)
    tau = _scenario_number(data, "tau", p)

    fields = {}
    for key in ("v", "w"):
        val = data[key]
        if isinstance(val, bool) or not isinstance(val, (str, int, float)):
            raise InputError(
                f"{p}: scenario field {key!r} must be a number or expression string"
            )
        fields[key] = val if isinstance(val, str) else float(val)

    lambda0 = (
        _scenario_number(data, "lambda0", p) if "lambda0" in data else 2.0 * d
    )
    scheme = data.get("scheme", "implicit_euler")
    if scheme not in _SCHEMES:
        raise InputError(f"{p}: scenario field 'scheme' must be one of {_SCHEMES}")
    t_max = _scenario_number(data, "t_max", p) if "t_max" in data else 50.0
    probe = _scenario_number(data, "probe", p) if "probe" in data else 0.5

    try:
        grid = Grid(dim=d, half_width=L, spacing=h)
        pot = PotentialSpec(v=fields["v"], w=fields["w"], beta=beta)
    except (ValueError, InputError) as exc:
        raise InputError(f"{p}: {exc}") from None

    params = {
        "d": d,
        "L": L,
        "h": h,
        "beta": beta,
        "v": fields["v"],
        "w": fields["w"],
        "lambda0": lambda0,
        "tau": tau,
        "scheme": scheme,
        "t_max": t_max,
        "probe": probe,
    }
    return Scenario(
        grid=grid,
        pot=pot,
        lambda0=lambda0,
        tau=tau,
        scheme=scheme,
        t_max=t_max,
        probe=probe,
        params=params,
    )


def json_text(obj):
    """Deterministic JSON serialization (sorted keys, strict floats)."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj):
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json_text(obj))
    return p


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows):
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines.extend(",".join(_cell(c) for c in row) for row in rows)
    p.write_text("\n".join(lines) + "\n")
    return p


def load_report_schema():
    """The JSON schema all report dictionaries validate against."""
    text = (
        resources.files("sginfty").joinpath("schemas/report.schema.json").read_text()
    )
    return json.loads(text)


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def analysis_report(sg, k_max=10_000, tol=1e-9):
    """Full convergence report dictionary for a semigroup."""
    dec = infinity_decomposition(sg, k_max=k_max, tol=tol)
    rep = converges(sg)
    bounded, bound = is_bounded(sg)
    full = eig_decompose(sg.matrix)
    per_items, _ = _peripheral_split(full, sg.mode)
    peripheral = [
        {
            "re": float(it.eigenvalue.real),
            "im": float(it.eigenvalue.imag),
            "pole_order": int(it.pole_order),
        }
        for it in per_items
    ]
    group = None
    if dec.group is not None:
        group = {
            "kind": dec.group.kind,
            "order": int(dec.group.order) if dec.group.order is not None else None,
            "rank": int(dec.group.rank) if dec.group.rank is not None else None,
            "peripheral_arguments": [float(a) for a in dec.group.peripheral_arguments],
        }
    return {
        "mode": sg.mode,
        "monoid": str(sg.monoid),
        "norm_p": "inf" if np.isinf(sg.norm_p) else int(sg.norm_p),
        "dim": int(sg.dim),
        "bounded": bool(bounded),
        "bound": _finite_or_none(bound),
        "exists_compact": bool(dec.exists_compact),
        "converges": bool(rep.converges),
        "divisibility_gate": bool(rep.divisibility_gate),
        "limit_rank": int(rep.limit_rank) if rep.limit_rank is not None else None,
        "stable_spectral_radius": _finite_or_none(dec.stable_spectral_radius),
        "peripheral": peripheral,
        "group": group,
        "reasons": [
            {"tag": r.tag, "verdict": r.verdict, "anchor": r.anchor}
            for r in rep.reasons
        ],
        "p_inf": matrix_to_json(dec.P_inf) if dec.P_inf is not None else None,
        "detail": dec.reason,
    }


def probe_report(result, lam):
    """Report dictionary for a resolvent pole probe."""
    lam = complex(lam)
    has_p = result.projection is not None
    return {
        "classification": result.classification,
        "lambda": {"re": lam.real, "im": lam.imag},
        "final_norm": float(result.final_norm),
        "schedule": [{"re": m.real, "im": m.imag} for m in result.schedule],
        "norms": [float(x) for x in result.norms],
        "projection_rank": numerical_rank(result.projection, 1e-8) if has_p else None,
        "projection": matrix_to_json(result.projection) if has_p else None,
    }


def pde_report(scenario, op, dissipativity, lyapunov, measurement):
    """Report dictionary for a drift-diffusion demo run."""
    d_ok, d_worst = dissipativity
    l_ok, l_worst = lyapunov
    rows = measurement.rows
    return {
        "scenario": scenario.params,
        "dissipativity": {"ok": bool(d_ok), "worst": float(d_worst)},
        "lyapunov": {"ok": bool(l_ok), "worst": float(l_worst)},
        "drift_warning": op.drift_warning,
        "reached": bool(measurement.reached),
        "t_star": _finite_or_none(measurement.t_star),
        "rank_at_t_star": (
            int(measurement.rank_at_t_star)
            if measurement.rank_at_t_star is not None
            else None
        ),
        "limit_rank": (
            int(measurement.limit_rank) if measurement.limit_rank is not None else None
        ),
        "idempotency_defect": _finite_or_none(measurement.idempotency_defect),
        "max_op_norm": max((float(r.op_norm) for r in rows), default=None),
        "n_unknowns": int(op.matrix.shape[0]),
        "probes": len(rows),
    }


def ensemble_report(stats):
    """Report dictionary for a seeded ensemble run."""
    dims = [m.dim for m in stats.members]
    return {
        "kind": stats.kind,
        "count": int(stats.count),
        "seed": int(stats.seed),
        "rng": stats.rng,
        "passes": int(stats.passes),
        "failures": int(stats.failures),
        "pass_rate": stats.passes / stats.count,
        "worst": _finite_or_none(stats.worst),
        "margin_label": stats.margin_label,
        "dims": {"min": min(dims), "max": max(dims)},
    }
