"""Command-line front end: run uncertainty-relation checks described in a JSON job file.

A job file looks like::

    {
      "state": {"kind": "fock", "n": 2},
      "hbar": 1.0,
      "cutoff": 64,
      "checks": ["sr-up", {"hierarchy": 1}, "fourth-order"],
      "tolerances": {"psd": 1e-9},
      "format": "text",
      "wigner_grid": [512, 512]
    }

Complex numbers (coherent ``alpha``, explicit matrix entries) are ``[re, im]`` pairs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, replace
from importlib import metadata
from typing import Any

import numpy as np

from .algebra import format_half, to_doubled
from .covariance import Sp2Element, congruence_covariance_check, random_sp2, transform_moments
from .errors import (
    CutoffTooSmallError,
    InvalidArgumentError,
    InvalidStateError,
    MomentUPError,
    NumericalFailureError,
    SingularAError,
)
from .fourth_order import fourth_order_analysis, singular_a_analysis
from .hierarchy import (
    DEFAULT_TOL,
    MomentTable,
    build_omega_tilde,
    check_psd,
    compute_moments,
    schur_increment,
    sr_up_check,
    variance_matrix,
)
from .states import StateSpec, density_from_spec
from .wigner import (
    DEFAULT_POINTS,
    lorentz_average,
    omega1_wigner,
    quadrature_moments,
    state_overlap,
    wigner_grid,
)

SCHEMA_VERSION = "1.0"
ALLOWED_J = (1, 2, 3, 4)  # doubled

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

DEFAULT_TOLERANCES = {
    "psd": DEFAULT_TOL,
    "wigner_moments": 1e-6,
    "wigner_omega": 1e-5,
    "covariance": 1e-8,
}

_JOB_KEYS = {"state", "hbar", "cutoff", "checks", "tolerances", "format", "wigner_grid"}
_STATE_KEYS = {
    "fock": {"n"},
    "coherent": {"alpha"},
    "thermal": {"nbar"},
    "squeezed_vacuum": {"r", "phi"},
    "explicit": {"matrix"},
}
_SIMPLE_CHECKS = ("sr-up", "fourth-order", "wigner-cross-check")


class JobParseError(InvalidArgumentError):
    """A job file violates the schema; the message names the offending field."""


@dataclass(frozen=True)
class Check:
    name: str
    two_J: int | None = None
    matrices: tuple[tuple[float, float, float, float], ...] = ()
    count: int = 0
    seed: int = 0

    def label(self) -> str:
        if self.name == "hierarchy":
            return f"hierarchy(J={format_half(self.two_J)})"
        return self.name

    def two_j_max(self) -> int:
        """Highest doubled moment order the check consumes."""
        if self.name == "sr-up":
            return 2
        if self.name == "hierarchy":
            return 2 * self.two_J
        return 4


@dataclass(frozen=True)
class JobSpec:
    state: dict[str, Any]
    checks: tuple[Check, ...]
    hbar: float = 1.0
    cutoff: int | None = None
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    format: str = "text"
    wigner_grid: tuple[int, int] = (DEFAULT_POINTS, DEFAULT_POINTS)

    def two_j_max(self) -> int:
        return max(c.two_j_max() for c in self.checks)

    def effective_cutoff(self) -> int:
        """Explicit states are padded by twice the moment order; others default to 64."""
        if self.cutoff is not None:
            return self.cutoff
        if self.state["kind"] == "explicit":
            return len(self.state["matrix"]) + 2 * self.two_j_max()
        return 64

    def state_spec(self) -> StateSpec:
        kw = {k: v for k, v in self.state.items() if k != "kind"}
        return StateSpec(self.state["kind"], hbar=self.hbar, cutoff=self.effective_cutoff(), **kw)


def _fail(where: str, msg: str):
    raise JobParseError(f"{where}: {msg}")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        _fail(where, f"expected a finite number, got {value!r}")
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(where, f"expected an integer, got {value!r}")
    return value


def _complex(value, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(_number(value, where))
    if not isinstance(value, list) or len(value) != 2:
        _fail(where, f"expected a [re, im] pair, got {value!r}")
    return complex(_number(value[0], where + "[0]"), _number(value[1], where + "[1]"))


def _parse_state(raw) -> dict[str, Any]:
    if not isinstance(raw, dict):
        _fail("state", "expected an object")
    kind = raw.get("kind")
    if kind not in _STATE_KEYS:
        _fail("state.kind", f"expected one of {sorted(_STATE_KEYS)}, got {kind!r}")
    extra = set(raw) - _STATE_KEYS[kind] - {"kind"}
    if extra:
        _fail("state", f"unknown keys {sorted(extra)} for kind {kind!r}")
    out: dict[str, Any] = {"kind": kind}
    if kind == "fock":
        if "n" not in raw:
            _fail("state.n", "required")
        n = _integer(raw["n"], "state.n")
        if n < 0:
            _fail("state.n", "must be >= 0")
        out["n"] = n
    elif kind == "coherent":
        out["alpha"] = _complex(raw.get("alpha", 0.0), "state.alpha")
    elif kind == "thermal":
        if "nbar" not in raw:
            _fail("state.nbar", "required")
        nbar = _number(raw["nbar"], "state.nbar")
        if nbar < 0:
            _fail("state.nbar", f"must be >= 0, got {nbar}")
        out["nbar"] = nbar
    elif kind == "squeezed_vacuum":
        out["r"] = _number(raw.get("r", 0.0), "state.r")
        out["phi"] = _number(raw.get("phi", 0.0), "state.phi")
    else:
        rows = raw.get("matrix")
        if not isinstance(rows, list) or not rows:
            _fail("state.matrix", "expected a non-empty list of rows")
        d = len(rows)
        mat = []
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != d:
                _fail(f"state.matrix[{i}]", f"expected {d} entries")
            mat.append([_complex(x, f"state.matrix[{i}][{k}]") for k, x in enumerate(row)])
        out["matrix"] = mat
    return out


def _parse_check(raw, i: int) -> Check:
    where = f"checks[{i}]"
    if isinstance(raw, str):
        if raw not in _SIMPLE_CHECKS:
            _fail(where, f"unknown check {raw!r}")
        return Check(raw)
    if not isinstance(raw, dict) or len(raw) != 1:
        _fail(where, "expected a check name or a single-key object")
    (name, arg), = raw.items()
    if name == "hierarchy":
        try:
            two_J = to_doubled(arg if not isinstance(arg, bool) else None)
        except InvalidArgumentError:
            _fail(where + ".hierarchy", f"J must be a half-integer, got {arg!r}")
        if two_J not in ALLOWED_J:
            _fail(where + ".hierarchy", "J must be one of 1/2, 1, 3/2, 2")
        return Check("hierarchy", two_J=two_J)
    if name == "covariance-probe":
        if not isinstance(arg, dict):
            _fail(where + ".covariance-probe", "expected an object")
        extra = set(arg) - {"S", "count", "seed"}
        if extra:
            _fail(where + ".covariance-probe", f"unknown keys {sorted(extra)}")
        mats = []
        if "S" in arg:
            s = arg["S"]
            if s and isinstance(s[0], list) and s[0] and isinstance(s[0][0], list):
                items = s
            else:
                items = [s]
            for k, m in enumerate(items):
                w = f"{where}.covariance-probe.S[{k}]"
                if not isinstance(m, list) or len(m) != 2 or any(not isinstance(r, list) or len(r) != 2 for r in m):
                    _fail(w, "expected a 2x2 matrix")
                vals = tuple(_number(x, w) for r in m for x in r)
                try:
                    Sp2Element(*vals)
                except InvalidArgumentError as exc:
                    _fail(w, str(exc))
                mats.append(vals)
        count = _integer(arg.get("count", 0 if mats else 1), where + ".covariance-probe.count")
        seed = _integer(arg.get("seed", 0), where + ".covariance-probe.seed")
        if count < 0 or (count == 0 and not mats):
            _fail(where + ".covariance-probe", "needs S or a positive count")
        return Check("covariance-probe", matrices=tuple(mats), count=count, seed=seed)
    if name in _SIMPLE_CHECKS:
        _fail(where, f"{name!r} takes no arguments; give it as a plain string")
    _fail(where, f"unknown check {name!r}")


def _parse_grid(raw, where: str) -> tuple[int, int]:
    if isinstance(raw, str):
        parts = raw.lower().split("x")
        if len(parts) != 2 or not all(p.strip().isdigit() for p in parts):
            _fail(where, f"expected NxM, got {raw!r}")
        n_q, n_p = int(parts[0]), int(parts[1])
    elif isinstance(raw, list) and len(raw) == 2:
        n_q, n_p = _integer(raw[0], where), _integer(raw[1], where)
    else:
        _fail(where, f"expected NxM or [N, M], got {raw!r}")
    if n_q < 3 or n_p < 3:
        _fail(where, "grid needs at least 3 points per axis")
    return n_q, n_p


def parse_job(data) -> JobSpec:
    """Validate a decoded job document and fill in defaults."""
    if not isinstance(data, dict):
        _fail("job", "expected a JSON object")
    extra = set(data) - _JOB_KEYS
    if extra:
        _fail("job", f"unknown keys {sorted(extra)}")
    if "state" not in data:
        _fail("state", "required")
    state = _parse_state(data["state"])
    raw_checks = data.get("checks")
    if not isinstance(raw_checks, list) or not raw_checks:
        _fail("checks", "expected a non-empty list")
    checks = tuple(_parse_check(c, i) for i, c in enumerate(raw_checks))
    hbar = _number(data.get("hbar", 1.0), "hbar")
    if hbar <= 0:
        _fail("hbar", "must be positive")
    cutoff = None
    if "cutoff" in data:
        cutoff = _integer(data["cutoff"], "cutoff")
        if cutoff < 2:
            _fail("cutoff", "must be at least 2")
    tol = dict(DEFAULT_TOLERANCES)
    raw_tol = data.get("tolerances", {})
    if not isinstance(raw_tol, dict):
        _fail("tolerances", "expected an object")
    for k, v in raw_tol.items():
        if k not in tol:
            _fail("tolerances", f"unknown tolerance {k!r}; expected one of {sorted(tol)}")
        tol[k] = _number(v, f"tolerances.{k}")
        if tol[k] <= 0:
            _fail(f"tolerances.{k}", "must be positive")
    fmt = data.get("format", "text")
    if fmt not in ("text", "json"):
        _fail("format", f"expected 'text' or 'json', got {fmt!r}")
    grid = _parse_grid(data["wigner_grid"], "wigner_grid") if "wigner_grid" in data else (DEFAULT_POINTS, DEFAULT_POINTS)
    return JobSpec(state, checks, hbar, cutoff, tol, fmt, grid)


def parse_state_file(path) -> JobSpec:
    """Read and strictly validate a JSON job file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise JobParseError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise JobParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_job(data)


@dataclass
class CheckResult:
    label: str
    status: str  # "pass", "fail" or "error"
    details: dict[str, Any] = field(default_factory=dict)
    error_kind: str | None = None
    message: str | None = None

    @property
    def passes(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        out = {"check": self.label, "status": self.status, "passes": self.passes}
        if self.status == "error":
            out["error"] = {"kind": self.error_kind, "message": self.message}
        else:
            out["details"] = self.details
        return out


@dataclass
class Report:
    job: JobSpec
    state_label: str
    results: list[CheckResult]
    state_error: CheckResult | None = None

    @property
    def passes(self) -> bool:
        return self.state_error is None and all(r.passes for r in self.results)

    @property
    def exit_code(self) -> int:
        errors = [r for r in self.results if r.status == "error"]
        if self.state_error is not None:
            errors.append(self.state_error)
        if any(r.error_kind != "numerical-failure" for r in errors):
            return EXIT_USAGE
        if errors:
            return EXIT_NUMERICAL
        return EXIT_PASS if self.passes else EXIT_FAIL

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "tool": {"name": "momentup", "version": _version()},
            "provenance": {
                "state": self.state_label,
                "hbar": self.job.hbar,
                "cutoff": self.job.effective_cutoff(),
                "wigner_grid": list(self.job.wigner_grid),
                "tolerances": dict(sorted(self.job.tolerances.items())),
            },
            "checks": [r.to_dict() for r in self.results],
            "overall": {"passes": self.passes, "exit_code": self.exit_code},
        }
        if self.state_error is not None:
            out["state_error"] = {"kind": self.state_error.error_kind, "message": self.state_error.message}
        return out

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"state {self.state_label}  hbar={self.job.hbar:g}  cutoff={self.job.effective_cutoff()}"]
        if self.state_error is not None:
            lines.append(f"  state error ({self.state_error.error_kind}): {self.state_error.message}")
        for r in self.results:
            if r.status == "error":
                lines.append(f"  {r.label:<24} ERROR  {r.error_kind}: {r.message}")
            else:
                lines.append(f"  {r.label:<24} {r.status.upper():<5}  {_summary(r)}")
        lines.append(f"overall: {'PASS' if self.passes else 'FAIL'} (exit {self.exit_code})")
        return "\n".join(lines)


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _summary(r: CheckResult) -> str:
    d = r.details
    if r.label == "sr-up":
        return f"det V = {d['det_v']:.12g} (bound {d['bound']:.6g}){'  saturated' if d['saturated'] else ''}"
    if r.label.startswith("hierarchy"):
        return f"min eigenvalue {d['direct']['min_eigenvalue']:.6g} ({d['direct']['verdict']})"
    if r.label == "fourth-order":
        eig = ", ".join(f"{x:.6g}" for x in d["eigenvalues"])
        if d.get("branch") == "singular":
            return f"eigenvalues {{{eig}}} (A singular, |C2| = {d['schur']['c2_norm']:.3g})"
        return f"eigenvalues {{{eig}}}"
    if r.label == "wigner-cross-check":
        return (f"moments dev {d['moment_deviation']:.3g}, omega dev {d['omega_deviation']:.3g}, "
                f"norm {d['normalization']:.9f}, {d['lorentz']['classification']}")
    if r.label == "covariance-probe":
        return f"{d['count']} transforms, max deviation {d['max_deviation']:.3g}"
    return ""


def _error_kind(exc: Exception) -> str:
    if isinstance(exc, InvalidStateError):
        return "invalid-state"
    if isinstance(exc, CutoffTooSmallError):
        return "cutoff-too-small"
    if isinstance(exc, (NumericalFailureError, SingularAError, np.linalg.LinAlgError)):
        return "numerical-failure"
    return "invalid-argument"


def _hierarchy(moments: MomentTable, check: Check, tol: float) -> CheckResult:
    h = build_omega_tilde(moments, check.two_J / 2)
    direct = check_psd(h.omega_tilde, tol, f"omega_tilde(J={format_half(check.two_J)})")
    steps = []
    small = build_omega_tilde(moments, 0.5)
    for two_J in range(2, check.two_J + 1):
        big = build_omega_tilde(moments, two_J / 2)
        steps.append(schur_increment(small, big, tol))
        small = big
    ok = direct.passes and all(s.passes for s in steps)
    details = {"direct": direct.to_dict(), "schur_steps": [s.to_dict() for s in steps]}
    return CheckResult(check.label(), "pass" if ok else "fail", details)


def _fourth_order(moments: MomentTable, tol: float) -> CheckResult:
    try:
        _, pair, verdict = fourth_order_analysis(moments, tol)
    except SingularAError:
        rep, pair, verdict = singular_a_analysis(moments, tol)
        details = {"branch": "singular", **verdict.to_dict(), "schur": rep.to_dict()}
        return CheckResult("fourth-order", "pass" if verdict.passes else "fail", details)
    details = {"branch": "generic", **verdict.to_dict(), "a_vector": list(pair.a_vector)}
    return CheckResult("fourth-order", "pass" if verdict.passes else "fail", details)


def _wigner(job: JobSpec, rho, moments: MomentTable) -> CheckResult:
    tol = job.tolerances
    grid = wigner_grid(rho, n_q=job.wigner_grid[0], n_p=job.wigner_grid[1])
    wm = quadrature_moments(grid, 2)
    mdev = max(abs(wm[k] - moments[k]) for k in wm.values)
    omega_w = omega1_wigner(grid, convergence_tol=tol["wigner_moments"])
    omega_o = build_omega_tilde(moments, 1)
    odev = float(np.max(np.abs(omega_w.omega_tilde - omega_o.omega_tilde)))
    lor = lorentz_average(grid)
    norm = grid.normalization()
    ok = (mdev <= tol["wigner_moments"] and odev <= tol["wigner_omega"]
          and abs(norm - 1) <= tol["wigner_moments"] and lor.classification.value == "timelike-positive-above-bound")
    details = {
        "moment_deviation": mdev,
        "omega_deviation": odev,
        "normalization": norm,
        "purity": state_overlap(grid, grid),
        "extent": [grid.q_min, grid.q_max, grid.p_min, grid.p_max],
        "lorentz": lor.to_dict(),
    }
    return CheckResult("wigner-cross-check", "pass" if ok else "fail", details)


def _covariance(moments: MomentTable, check: Check, tol: dict[str, float]) -> CheckResult:
    rng = np.random.default_rng(check.seed)
    elements = [Sp2Element(*m) for m in check.matrices]
    elements += [random_sp2(rng) for _ in range(check.count)]
    h = build_omega_tilde(moments, 1)
    scale = max(1.0, float(np.max(np.abs(h.omega_tilde))))
    max_dev = 0.0
    ok = True
    probes = []
    for s in elements:
        cc = congruence_covariance_check(h, s, moments, tol["psd"])
        rel = cc.max_deviation / scale
        max_dev = max(max_dev, rel)
        ok = ok and cc.psd_preserved and rel <= tol["covariance"]
        probes.append({"S": [[s.a, s.b], [s.c, s.d]], **cc.to_dict()})
    try:
        base = fourth_order_analysis(moments, tol["psd"])[2]
    except SingularAError:
        base = None
    if base is not None:
        for s, probe in zip(elements, probes):
            moved = fourth_order_analysis(transform_moments(moments, s), tol["psd"])[2]
            same = moved.passes == base.passes
            d0 = sorted(base.scs_diagonal[1:])
            d1 = sorted(moved.scs_diagonal[1:])
            dscale = max(1.0, max(abs(x) for x in base.scs_diagonal))
            diag_dev = max(abs(base.scs_diagonal[0] - moved.scs_diagonal[0]),
                           *(abs(a - b) for a, b in zip(d0, d1))) / dscale
            probe["fourth_order_verdict_preserved"] = same
            probe["scs_diagonal_deviation"] = diag_dev
            ok = ok and same and diag_dev <= tol["covariance"]
    details = {"count": len(elements), "max_deviation": max_dev, "probes": probes}
    return CheckResult("covariance-probe", "pass" if ok else "fail", details)


def _run_check(job: JobSpec, check: Check, rho, moments: MomentTable) -> CheckResult:
    tol = job.tolerances["psd"]
    if check.name == "sr-up":
        sr = sr_up_check(variance_matrix(moments), job.hbar)
        return CheckResult("sr-up", "pass" if sr.passes else "fail", sr.to_dict())
    if check.name == "hierarchy":
        return _hierarchy(moments, check, tol)
    if check.name == "fourth-order":
        return _fourth_order(moments, tol)
    if check.name == "wigner-cross-check":
        return _wigner(job, rho, moments)
    return _covariance(moments, check, job.tolerances)


def run_job(job: JobSpec) -> Report:
    """Run every check in order; failures inside one check are recorded, not raised."""
    try:
        spec = job.state_spec()
        label = spec.label()
        rho = density_from_spec(spec)
    except MomentUPError as exc:
        err = CheckResult("state", "error", error_kind=_error_kind(exc), message=str(exc))
        return Report(job, job.state["kind"], [], err)
    tables: dict[int, MomentTable] = {}
    results = []
    for check in job.checks:
        try:
            order = check.two_j_max()
            if order not in tables:
                tables[order] = compute_moments(rho, order / 2)
            results.append(_run_check(job, check, rho, tables[order]))
        except (MomentUPError, np.linalg.LinAlgError) as exc:
            results.append(CheckResult(check.label(), "error", error_kind=_error_kind(exc), message=str(exc)))
    return Report(job, label, results)


def _apply_overrides(job: JobSpec, args) -> JobSpec:
    changes: dict[str, Any] = {}
    if args.hbar is not None:
        if not args.hbar > 0:
            raise JobParseError("--hbar: must be positive")
        changes["hbar"] = args.hbar
    if args.cutoff is not None:
        if args.cutoff < 2:
            raise JobParseError("--cutoff: must be at least 2")
        changes["cutoff"] = args.cutoff
    if args.tol is not None:
        if not args.tol > 0:
            raise JobParseError("--tol: must be positive")
        changes["tolerances"] = {**job.tolerances, "psd": args.tol}
    if args.format is not None:
        changes["format"] = args.format
    if args.wigner_grid is not None:
        changes["wigner_grid"] = _parse_grid(args.wigner_grid, "--wigner-grid")
    if args.max_J is not None:
        try:
            two_J = to_doubled(args.max_J)
        except InvalidArgumentError:
            raise JobParseError(f"--max-J: {args.max_J!r} is not a half-integer") from None
        if two_J not in ALLOWED_J:
            raise JobParseError("--max-J: must be one of 1/2, 1, 3/2, 2")
        checks = [c for c in job.checks if c.name != "hierarchy"]
        checks.insert(0, Check("hierarchy", two_J=two_J))
        changes["checks"] = tuple(checks)
    return replace(job, **changes)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="momentup", description="Check moment-matrix uncertainty relations.")
    sub = parser.add_subparsers(dest="command", required=True)
    chk = sub.add_parser("check", help="run the checks listed in a JSON job file")
    chk.add_argument("file")
    chk.add_argument("--max-J", dest="max_J", help="run the hierarchy check up to this J (replaces any in the file)")
    chk.add_argument("--tol", type=float, help="PSD tolerance")
    chk.add_argument("--cutoff", type=int, help="Fock-space cutoff")
    chk.add_argument("--format", choices=("text", "json"))
    chk.add_argument("--wigner-grid", dest="wigner_grid", metavar="NxM")
    chk.add_argument("--hbar", type=float)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        job = _apply_overrides(parse_state_file(args.file), args)
    except JobParseError as exc:
        print(f"momentup: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = run_job(job)
    print(report.to_json() if job.format == "json" else report.to_text())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
