"""Command-line entry point.

Subcommands::

    doublechar analyze-quadform --input q.json
    doublechar good-time --input q.json [--T0 0.5] [--rho 0.1]
    doublechar verify-lp --input oscillator [--h-scan 0.2:0.5:5] [--p-list 1,2,inf]

Reports are JSON (sorted keys) and scan data is CSV.  With ``--out DIR`` they
are written to files in ``DIR``; otherwise the JSON report goes to stdout.
Exit codes: 0 success, 1 numerical failure, 2 invalid input, 3 nontrivial
singular space when an index was requested, 4 no good time found, 5 an L^p
fit missed tolerance.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .eikonal import decay_exponent_fit, evolve_weight, find_good_time
from .errors import DoublecharError, NoGoodTime, NontrivialSingularSpace
from .fbi import fbi_transform, lp_norm, reconstruct_lp_bound
from .io import dumps, potential_from_json, symbol_from_json
from .quadform import (
    hamilton_map,
    is_elliptic_on_singular_space,
    k0_index,
    real_part_nonneg,
    singular_space,
)
from .spectra import (
    PotentialSpec,
    discretize_schrodinger,
    lowlying_eigenpair,
    lp_scaling_fit,
    predicted_exponent,
    schrodinger_grid,
)
from .symplectic import (
    conjugate_hamilton_map,
    kappa_from_phase,
    normal_form_map,
    phase_from_kappa,
    standard_phase,
    weight_from_phase,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_SINGULAR = 3
EXIT_NO_GOOD_TIME = 4
EXIT_FIT_MISS = 5


@dataclass
class RunConfig:
    command: str
    input: str
    out: Optional[str] = None
    tol: Optional[float] = None
    seed: int = 0
    h_scan: str = "0.2:0.5:5"
    p_list: str = "1,2,inf"
    delta: Optional[float] = None
    T0: float = 0.5
    rho: Optional[float] = None
    s: Optional[float] = None
    epsilon: Optional[int] = None
    grid_N: Optional[int] = None
    grid_L: Optional[float] = None
    require_k0: bool = False
    threads: int = 1

    def validate(self) -> None:
        if self.tol is not None and not self.tol > 0:
            raise ValueError("--tol must be positive")
        if not self.T0 > 0:
            raise ValueError("--T0 must be positive")
        if self.delta is not None and not self.delta > 0:
            raise ValueError("--delta must be positive")
        if self.grid_N is not None and self.grid_N < 5:
            raise ValueError("--grid-N must be at least 5")
        if self.grid_L is not None and not self.grid_L > 0:
            raise ValueError("--grid-L must be positive")


class InputError(ValueError):
    pass


def _jsonable(x):
    """Make floats JSON-safe and deterministic (infinities become strings)."""
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    return x


def _matrix(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def parse_h_scan(spec: str) -> list[float]:
    """``"start:factor:count"`` -> geometric sequence."""
    try:
        start, factor, count = spec.split(":")
        start, factor, count = float(start), float(factor), int(count)
    except ValueError as exc:
        raise InputError(f"bad --h-scan {spec!r}; expected start:factor:count") from exc
    if not (0 < start <= 1 and 0 < factor and count >= 1):
        raise InputError(f"bad --h-scan {spec!r}")
    return [start * factor**k for k in range(count)]


def parse_p_list(spec: str) -> list[float]:
    out = []
    for tok in spec.split(","):
        tok = tok.strip().lower()
        try:
            p = math.inf if tok in ("inf", "infinity") else float(tok)
        except ValueError as exc:
            raise InputError(f"bad p value {tok!r}") from exc
        if not p >= 1:
            raise InputError(f"p must be >= 1, got {tok!r}")
        out.append(p)
    return out


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {path}: {exc}") from exc


def _threads() -> int:
    raw = os.environ.get("DOUBLECHAR_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def cmd_analyze_quadform(cfg: RunConfig) -> tuple[int, dict, dict]:
    q = symbol_from_json(_load_json(cfg.input))
    rank_tol = cfg.tol if cfg.tol is not None else 1e-10
    F = hamilton_map(q)
    S = singular_space(F, rank_tol)
    ell = is_elliptic_on_singular_space(q, S, seed=cfg.seed)
    lam = F.eigenvalues
    order = np.lexsort((lam.imag.round(12), lam.real.round(12)))
    report = {
        "n": q.n,
        "hamilton_map": _matrix(F.F),
        "eigenvalues": _matrix(lam[order]),
        "singular_space": {
            "basis": S.basis.tolist(),
            "d": S.d,
            "per_step_dims": list(S.per_step_dims),
            "rank_tolerance": rank_tol,
        },
        "ellipticity": {
            "elliptic_on_S": ell.elliptic_on_S,
            "min_abs_q_on_sphere": ell.min_abs_q_on_sphere,
            "witness": None if ell.witness is None else ell.witness.tolist(),
            "threshold": ell.threshold,
        },
        "real_part_nonneg": real_part_nonneg(q),
    }
    code = EXIT_OK
    try:
        report["k0"] = k0_index(F, rank_tol)
    except NontrivialSingularSpace as exc:
        report["k0"] = None
        report["k0_error"] = str(exc)
        if cfg.require_k0:
            code = EXIT_SINGULAR
    return code, report, {}


def _fbi_side(q):
    """Reduce a real-side symbol to FBI-side data ``(Phi0, F_fbi, reduction)``."""
    F = hamilton_map(q)
    S = singular_space(F)
    if S.d == 0:
        K, _ = normal_form_map(F)
        phi = phase_from_kappa(K)
        how = "normal-form"
    else:
        phi = standard_phase(q.n)
        K = kappa_from_phase(phi)
        how = "standard-phase"
    return weight_from_phase(phi), conjugate_hamilton_map(F, K), how, S


def cmd_good_time(cfg: RunConfig) -> tuple[int, dict, dict]:
    q = symbol_from_json(_load_json(cfg.input))
    Phi0, Ff, how, S = _fbi_side(q)
    ell = is_elliptic_on_singular_space(q, S, seed=cfg.seed)
    report = {
        "reduction": how,
        "singular_space_dim": S.d,
        "elliptic_on_S": ell.elliptic_on_S,
        "T0": cfg.T0,
    }
    files = {}
    kw = {}
    if cfg.rho is not None:
        kw["rho_values"] = [cfg.rho]
    if cfg.s is not None:
        kw["s_values"] = [cfg.s]
    if cfg.tol is not None:
        kw["c_floor"] = cfg.tol
    try:
        res = find_good_time(Phi0, Ff, cfg.T0, epsilon=cfg.epsilon, **kw)
    except NoGoodTime as exc:
        report["good_time"] = None
        report["error"] = str(exc)
        return EXIT_NO_GOOD_TIME, report, files
    report["good_time"] = res.to_dict()
    # certificate re-check on random unit vectors, independent of the eigen-solve
    Xi = evolve_weight(Phi0, Ff, res.t0)
    rng = np.random.default_rng(cfg.seed)
    z = rng.standard_normal((1000, q.n)) + 1j * rng.standard_normal((1000, q.n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    report["certificate_min_on_sample"] = float(np.min(Phi0(z) - Xi(z)))

    if S.d == 0:
        k0 = k0_index(hamilton_map(q))
        s_grid = np.geomspace(1e-1, 1e-3, 9)
        fit = decay_exponent_fit(Phi0, Ff, s_grid)
        report["decay"] = {"k0": k0, "expected_slope": 2 * k0 + 1, "slope": fit.slope, "r2": fit.r2}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "min_eig"])
        for s, g in zip(fit.s, fit.gaps):
            w.writerow([repr(float(s)), repr(float(g))])
        files["decay.csv"] = buf.getvalue()
    return EXIT_OK, report, files


def _load_potential(spec: str) -> tuple[str, PotentialSpec]:
    if spec == "oscillator":
        return "oscillator", PotentialSpec((0.0, 0.0, 1.0))
    return spec, potential_from_json(_load_json(spec))


def _eigen_state(V: PotentialSpec, h: float, cfg: RunConfig):
    L, N = schrodinger_grid(h)
    if cfg.grid_L is not None:
        L = cfg.grid_L
    if cfg.grid_N is not None:
        N = cfg.grid_N
    return lowlying_eigenpair(discretize_schrodinger(V, h, (L, N)))


def cmd_verify_lp(cfg: RunConfig) -> tuple[int, dict, dict]:
    name, V = _load_potential(cfg.input)
    hs = parse_h_scan(cfg.h_scan)
    ps = parse_p_list(cfg.p_list)
    tol = cfg.tol if cfg.tol is not None else 0.02
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        results = list(pool.map(lambda h: _eigen_state(V, h, cfg), hs))
    states = [(h, r.eigenfunction) for h, r in zip(hs, results)]

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "p", "norm"])
    for h, u in states:
        for p in ps:
            w.writerow([repr(h), "inf" if math.isinf(p) else repr(p), repr(lp_norm(u, p))])

    fits = []
    passed = True
    for p in ps:
        slope, r2 = lp_scaling_fit(states, p)
        expected = predicted_exponent(p, 1)
        ok = abs(slope - expected) <= tol
        passed &= ok
        fits.append({"p": p, "slope": slope, "expected": expected, "r2": r2, "pass": ok})
    report = {
        "potential": name,
        "potential_check": V.check(np.linspace(-4, 4, 801)),
        "h_values": hs,
        "eigenvalues": [{"h": h, "re": r.eigenvalue.real, "im": r.eigenvalue.imag,
                         "residual": r.residual} for h, r in zip(hs, results)],
        "fits": fits,
        "tolerance": tol,
        "pass": passed,
    }
    if cfg.delta is not None:
        phi = standard_phase(1)
        ratios = []
        for h, u in states:
            row = {"h": h}
            T = fbi_transform(u, phi)
            for p in ps:
                lhs, rhs = reconstruct_lp_bound(u, phi, cfg.delta, p, field=T)
                row["inf" if math.isinf(p) else repr(p)] = lhs / rhs
            ratios.append(row)
        report["reconstruction_ratios"] = ratios
    return (EXIT_OK if passed else EXIT_FIT_MISS), report, {"scan.csv": buf.getvalue()}


COMMANDS = {
    "analyze-quadform": cmd_analyze_quadform,
    "good-time": cmd_good_time,
    "verify-lp": cmd_verify_lp,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="doublechar", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", required=True, help="input JSON path (or 'oscillator' for verify-lp)")
        p.add_argument("--out", help="directory for report files")
        p.add_argument("--tol", type=float, help="command-specific tolerance")
        p.add_argument("--seed", type=int, default=0)
        if name == "analyze-quadform":
            p.add_argument("--require-k0", action="store_true",
                           help="exit 3 if the singular space is nontrivial")
        if name == "good-time":
            p.add_argument("--T0", type=float, default=0.5)
            p.add_argument("--rho", type=float, help="fix rho instead of scanning it")
            p.add_argument("--s", type=float, help="fix s instead of scanning it")
            p.add_argument("--epsilon", type=int, choices=(-1, 1))
        if name == "verify-lp":
            p.add_argument("--h-scan", default="0.2:0.5:5")
            p.add_argument("--p-list", default="1,2,inf")
            p.add_argument("--delta", type=float, help="also report FBI reconstruction ratios")
            p.add_argument("--grid-N", type=int)
            p.add_argument("--grid-L", type=float)
    return ap


def _config_from_args(args) -> RunConfig:
    known = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    cfg = RunConfig(**known)
    cfg.threads = _threads()
    return cfg


def run(cfg: RunConfig) -> tuple[int, str, dict]:
    """Execute a command; returns ``(exit code, report text, extra files)``."""
    try:
        cfg.validate()
        code, report, files = COMMANDS[cfg.command](cfg)
    except (InputError, ValueError, KeyError, TypeError) as exc:
        log.error("invalid input: %s", exc)
        code, report, files = EXIT_INVALID, {"error": f"invalid input: {exc}"}, {}
    except DoublecharError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        code, report, files = EXIT_FAILURE, {"error": f"{type(exc).__name__}: {exc}"}, {}
    config = asdict(cfg)
    # thread count does not change results; keep it out of the report bytes
    config.pop("threads")
    full = {"command": cfg.command, "version": __version__, "seed": cfg.seed,
            "config": config, "exit_code": code, "result": report}
    return code, dumps(_jsonable(full)), files


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    cfg = _config_from_args(args)
    code, text, files = run(cfg)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text)
        for fname, content in files.items():
            (out / fname).write_text(content)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
