"""JSON and CSV encodings of the package's value types.

Complex arrays are stored as separate real and imaginary parts, e.g. a
quadratic symbol is ``{"n": 1, "A_re": [[...]], "A_im": [[...]]}``.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .fbi import FBIField, GridFunction
from .quadform import QuadraticSymbol
from .spectra import EigenResult, PotentialSpec
from .symplectic import CanonicalMap, FBIPhase, WeightForm


def _split(name: str, M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {f"{name}_re": M.real.tolist(), f"{name}_im": M.imag.tolist()}


def _join(obj: dict, name: str, shape=None, imag_optional=True) -> np.ndarray:
    try:
        re = np.asarray(obj[f"{name}_re"], dtype=float)
    except KeyError as exc:
        raise SchemaError(f"missing field {name}_re") from exc
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"field {name}_re is not numeric") from exc
    im_raw = obj.get(f"{name}_im")
    if im_raw is None:
        if not imag_optional:
            raise SchemaError(f"missing field {name}_im")
        im = np.zeros_like(re)
    else:
        try:
            im = np.asarray(im_raw, dtype=float)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"field {name}_im is not numeric") from exc
    if re.shape != im.shape:
        raise SchemaError(f"{name}_re and {name}_im differ in shape")
    if shape is not None and re.shape != shape:
        raise SchemaError(f"{name} must have shape {shape}, got {re.shape}")
    return re + 1j * im


def _require_dict(obj) -> dict:
    if not isinstance(obj, dict):
        raise SchemaError("expected a JSON object")
    return obj


def _n(obj: dict) -> int:
    n = obj.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise SchemaError("field n must be a positive integer")
    return n


def symbol_to_json(q: QuadraticSymbol) -> dict:
    return {"n": q.n, **_split("A", q.A)}


def symbol_from_json(obj) -> QuadraticSymbol:
    obj = _require_dict(obj)
    n = _n(obj)
    A = _join(obj, "A", (2 * n, 2 * n))
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise SchemaError("A is not symmetric")
    return QuadraticSymbol(n, A)


def phase_to_json(phi: FBIPhase) -> dict:
    return {"n": phi.n, **_split("Czz", phi.Czz), **_split("Czy", phi.Czy), **_split("Cyy", phi.Cyy)}


def phase_from_json(obj) -> FBIPhase:
    obj = _require_dict(obj)
    n = _n(obj)
    return FBIPhase(*(_join(obj, k, (n, n)) for k in ("Czz", "Czy", "Cyy")))


def weight_to_json(Phi: WeightForm) -> dict:
    return {"n": Phi.n, **_split("a", Phi.a), **_split("b", Phi.b)}


def weight_from_json(obj) -> WeightForm:
    obj = _require_dict(obj)
    n = _n(obj)
    return WeightForm(_join(obj, "a", (n, n)), _join(obj, "b", (n, n)))


def canonical_to_json(K: CanonicalMap) -> dict:
    return {"n": K.n, **_split("K", K.K)}


def canonical_from_json(obj) -> CanonicalMap:
    obj = _require_dict(obj)
    n = _n(obj)
    return CanonicalMap(_join(obj, "K", (2 * n, 2 * n)))


def potential_to_json(V: PotentialSpec) -> dict:
    c = np.array(V.coeffs)
    p = np.array(V.p1)
    return {
        "coeffs_re": c.real.tolist(),
        "coeffs_im": c.imag.tolist(),
        "p1_re": p.real.tolist(),
        "p1_im": p.imag.tolist(),
    }


def potential_from_json(obj) -> PotentialSpec:
    obj = _require_dict(obj)
    c = _join(obj, "coeffs")
    if c.ndim != 1 or c.size == 0:
        raise SchemaError("coeffs must be a nonempty list")
    p1 = _join(obj, "p1") if "p1_re" in obj else np.zeros(1)
    if p1.ndim != 1 or p1.size == 0:
        raise SchemaError("p1 must be a nonempty list")
    return PotentialSpec(tuple(c), tuple(p1))


def grid_header(u: GridFunction) -> dict:
    return {"n": u.n, "L": u.L, "N": u.N, "h": u.h}


def grid_to_csv(u: GridFunction) -> str:
    """Rows ``(x_1, ..., x_n, re, im)`` in node order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{k + 1}" for k in range(u.n)] + ["re", "im"])
    for node, v in zip(u.nodes(), u.values.ravel()):
        w.writerow([repr(float(x)) for x in node] + [repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def grid_from_csv(header: dict, text: str) -> GridFunction:
    header = _require_dict(header)
    try:
        n, L, N, h = int(header["n"]), float(header["L"]), int(header["N"]), float(header["h"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError("grid header needs n, L, N, h") from exc
    rows = list(csv.reader(io.StringIO(text)))[1:]
    try:
        vals = np.array([float(r[n]) + 1j * float(r[n + 1]) for r in rows])
    except (IndexError, ValueError) as exc:
        raise SchemaError("grid CSV rows must be (x_1..x_n, re, im)") from exc
    if vals.size != N**n:
        raise SchemaError(f"grid CSV has {vals.size} rows, header implies {N**n}")
    return GridFunction(n, L, N, vals, h)


def write_grid(u: GridFunction, stem: Path) -> None:
    stem = Path(stem)
    stem.with_suffix(".json").write_text(json.dumps(grid_header(u), indent=2, sort_keys=True) + "\n")
    stem.with_suffix(".csv").write_text(grid_to_csv(u))


def read_grid(stem: Path) -> GridFunction:
    stem = Path(stem)
    return grid_from_csv(json.loads(stem.with_suffix(".json").read_text()), stem.with_suffix(".csv").read_text())


def field_to_csv(T: FBIField, Phi: WeightForm | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re_z", "im_z", "weighted_abs"])
    for row in T.dump_rows(Phi):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def eigen_to_json(res: EigenResult, sidecar: str | None = None) -> dict:
    out = {
        "eigenvalue_re": float(res.eigenvalue.real),
        "eigenvalue_im": float(res.eigenvalue.imag),
        "residual": float(res.residual),
        "h": float(res.h),
        "method": res.method,
        "in_lowlying_disc": res.in_lowlying_disc,
        "grid": grid_header(res.eigenfunction),
    }
    if sidecar is not None:
        out["eigenfunction_csv"] = sidecar
    return out


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, fixed indentation)."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
