"""Command-line front end.

Exit codes: 0 on success, 1 when a verification fails, 2 on bad input.
With ``--json-errors`` errors are written to stderr as JSON.
"""
from __future__ import annotations

import csv
import functools
import io
import json
import logging
import sys

import click
import numpy as np

from . import __version__
from .config import (
    basis_from_dict,
    basis_to_dict,
    dumps,
    metadata,
    params_from_dict,
    params_to_dict,
    preset_params,
    system_from_dict,
    PRESETS,
)
from .evaluator import MemoryCapError, refine
from .mra_basis import (
    PUBLISHED_U11,
    ConstraintSearchError,
    SearchConfig,
    build_basis,
    constraint_residuals,
    dimension_check,
    rho,
    solve_constraints,
    solve_u_zeta_eta,
    verify_mra,
    zeta_eta,
)
from .transform import SignalCoefficients, level_families, project, wavedec, waverec
from .wavelet import (
    WaveletConvergenceError,
    WaveletSolution,
    null_space_dimension,
    psi_samples,
    residual_labels,
    residuals,
    solve_wavelets,
)

log = logging.getLogger(__name__)


class _CliError(click.ClickException):
    kind = "error"

    def __init__(self, message):
        super().__init__(message)
        # show() runs after the context is popped, so read the flag now.
        ctx = click.get_current_context(silent=True)
        self.as_json = bool(ctx is not None and (ctx.find_root().obj or {}).get("json_errors"))

    def show(self, file=None):
        if self.as_json:
            payload = {"error": self.kind, "message": self.message, "exit_code": self.exit_code}
            click.echo(json.dumps(payload), err=True)
        else:
            super().show(file)


class BadInput(_CliError):
    exit_code = 2
    kind = "bad_input"


class VerificationFailed(_CliError):
    exit_code = 1
    kind = "verification_failed"


def _guard(fn):
    """Turn library input errors into exit code 2."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (ValueError, KeyError, TypeError, OSError, MemoryCapError) as exc:
            raise BadInput(f"{type(exc).__name__}: {exc}") from exc

    return wrapper


# ---------------------------------------------------------------- helpers


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise BadInput(f"{path}: invalid JSON ({exc})") from exc


def _emit(text: str, output):
    if output is None or output == "-":
        click.echo(text, nl=not text.endswith("\n"))
    else:
        with open(output, "w") as fh:
            fh.write(text)


def _emit_json(payload: dict, config: dict, output):
    _emit(dumps({"metadata": metadata(config), **payload}) + "\n", output)


def _params(n, preset, config_path):
    if preset and config_path:
        raise BadInput("use either --preset or --config")
    if preset:
        params = preset_params(preset)
        source = {"preset": preset}
    elif config_path:
        cfg = _read_json(config_path)
        params = params_from_dict(cfg)
        source = cfg
    else:
        raise BadInput("a parameter source is required (--preset, --config or --basis)")
    params.check()
    if n is not None and n != params.N:
        raise BadInput(f"--n {n} does not match {params.N} parameter(s) per family")
    return params, source


def _basis(basis_path, n=None, preset=None, config_path=None, default_preset=None):
    if basis_path:
        d = _read_json(basis_path)
        basis = basis_from_dict(d.get("basis", d))
        return basis, {"basis": d.get("basis", d)["params"]}
    if not preset and not config_path and default_preset:
        preset = default_preset
    params, source = _params(n, preset, config_path)
    return build_basis(params), source


def _wavelets(path):
    if path == "paper":
        return WaveletSolution.published()
    d = _read_json(path)
    return WaveletSolution.from_dict(d.get("solution", d))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _read_signal(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "x" not in rows[0] or "value" not in rows[0]:
        raise BadInput(f"{path}: expected CSV columns x,value")
    x = np.array([float(r["x"]) for r in rows])
    v = np.array([float(r["value"]) for r in rows])
    if np.any(np.diff(x) <= 0):
        raise BadInput(f"{path}: x must be strictly increasing")
    return x, v


basis_options = [
    click.option("--basis", "basis_path", type=click.Path(exists=True, dir_okay=False), help="Basis JSON from build-basis."),
    click.option("--n", type=int, default=None, help="Number of intervals."),
    click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None),
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Parameter JSON."),
]


def with_basis_options(fn):
    for opt in reversed(basis_options):
        fn = opt(fn)
    return fn


output_option = click.option("--output", "-o", type=click.Path(dir_okay=False), default=None, help="Output file (stdout by default).")


# ---------------------------------------------------------------- commands


@click.group()
@click.version_option(__version__)
@click.option("--json-errors", is_flag=True, help="Report errors as JSON on stderr.")
@click.option("-v", "--verbose", count=True)
@click.pass_context
def cli(ctx, json_errors, verbose):
    """Fractal interpolation scaling functions, wavelets and transforms."""
    ctx.obj = {"json_errors": json_errors}
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(name)s: %(message)s")


@cli.command("build-basis")
@click.option("--n", type=int, default=None)
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--solve", is_flag=True, help="Search for parameters satisfying the orthogonality constraints.")
@click.option("--nested", is_flag=True, help="With --solve, also impose the nestedness condition.")
@click.option("--seed", type=int, default=0)
@click.option("--tol", type=float, default=1e-12)
@output_option
@_guard
def build_basis_cmd(n, preset, config_path, solve, nested, seed, tol, output):
    """Build the orthogonal scaling functions and write them as JSON."""
    search = None
    if solve:
        if preset or config_path:
            raise BadInput("--solve does not take a parameter source")
        if n is None or n < 2:
            raise BadInput("--solve needs --n >= 2")
        cfg = SearchConfig(translate=True, nested=nested, tol=tol, seed=seed)
        try:
            params, search = solve_constraints(n, cfg)
        except ConstraintSearchError as exc:
            raise VerificationFailed(str(exc)) from exc
        source = {"solve": True, "n": n, "nested": nested, "seed": seed, "tol": tol}
    else:
        params, source = _params(n, preset, config_path)
    basis = build_basis(params)
    payload = {"basis": basis_to_dict(basis, preset if not solve else None)}
    if search is not None:
        payload["search"] = search
        payload["basis"]["params"] = params_to_dict(params)
    _emit_json(payload, {"command": "build-basis", **source}, output)


def _translate_labels(n_phi, shifts):
    return [f"phi{i + 1}(x-{l})" if l >= 0 else f"phi{i + 1}(x+{-l})" for l in shifts for i in range(n_phi)]


@cli.command("gram")
@with_basis_options
@click.option("--shift", type=int, default=1, help="Largest translate shift.")
@output_option
@_guard
def gram_cmd(basis_path, n, preset, config_path, shift, output):
    """Gram matrix of the scaling functions and their translates."""
    basis, source = _basis(basis_path, n, preset, config_path)
    shifts = range(-shift, shift + 1)
    funcs = [f.shift(l) for l in shifts for f in basis.phi]
    G = np.array([[a.inner(b) for b in funcs] for a in funcs])
    _emit_json({"labels": _translate_labels(len(basis.phi), shifts), "gram": G},
               {"command": "gram", "shift": shift, **source}, output)


def _check(name, value, tol, passed=None, gate=True):
    ok = bool(value < tol) if passed is None else bool(passed)
    return {"name": name, "value": value, "tol": tol, "pass": ok, "gate": gate}


def _finish(checks, payload, config, output):
    for c in checks:
        tag = "PASS" if c["pass"] else ("FAIL" if c["gate"] else "info")
        click.echo(f"[{tag}] {c['name']}: {c['value']!s}", err=True)
    _emit_json({**payload, "checks": checks}, config, output)
    failed = [c["name"] for c in checks if c["gate"] and not c["pass"]]
    if failed:
        raise VerificationFailed("failed checks: " + ", ".join(failed))


@cli.command("verify-basis")
@with_basis_options
@click.option("--tol", type=float, default=1e-8)
@click.option("--depth", type=int, default=12, help="Quadrature depth for the Riesz constants.")
@output_option
@_guard
def verify_basis_cmd(basis_path, n, preset, config_path, tol, depth, output):
    """Orthogonality of translates, two-scale relations and frame bounds."""
    basis, source = _basis(basis_path, n, preset, config_path)
    rep = verify_mra(basis, quad_depth=depth)
    checks = [_check("translate_gram_offdiag", rep["max_offdiag"], tol)]
    for i, r in enumerate(rep["two_scale_residuals"]):
        checks.append(_check(f"two_scale_phi{i + 1}", r, tol))
    checks.append(_check("frame_bounds", list(rep["frame_ratio_range"]), None, rep["frame_ok"]))
    payload = {"translate_gram": rep["translate_gram"], "riesz": rep["riesz"], "constants": rep["constants"]}
    _finish(checks, payload, {"command": "verify-basis", "tol": tol, "depth": depth, **source}, output)


@cli.group("wavelets")
def wavelets_grp():
    """Solve for and check the wavelet knot values (N = 2)."""


@wavelets_grp.command("solve")
@with_basis_options
@click.option("--seed", default="paper", help="'paper', 'random' or an integer RNG seed for random starts.")
@click.option("--starts", type=int, default=20)
@click.option("--tol", type=float, default=1e-9)
@click.option("--max-iter", type=int, default=100)
@output_option
@_guard
def wavelets_solve_cmd(basis_path, n, preset, config_path, seed, starts, tol, max_iter, output):
    """Solve the wavelet conditions by Levenberg-Marquardt."""
    basis, source = _basis(basis_path, n, preset, config_path, default_preset="paper-sec4")
    if seed in ("paper", "random"):
        rng, mode = 0, seed
    else:
        try:
            rng, mode = int(seed), "random"
        except ValueError as exc:
            raise BadInput(f"--seed must be 'paper', 'random' or an integer, got {seed!r}") from exc
    try:
        sol = solve_wavelets(basis, seed=mode, tol=tol, max_iter=max_iter, starts=starts, rng=rng)
    except WaveletConvergenceError as exc:
        raise VerificationFailed(str(exc)) from exc
    nb = basis.normalized_copy()
    payload = {
        "solution": sol.to_dict(),
        "residual": sol.report["residual"],
        "iterations": sol.report["iterations"],
        "null_space_dimension": null_space_dimension(sol, nb),
    }
    _emit_json(payload, {"command": "wavelets solve", "seed": seed, "starts": starts, "tol": tol,
                         "max_iter": max_iter, **source}, output)


@wavelets_grp.command("verify")
@click.option("--solution", required=True, help="Solution JSON, or 'paper' for the published table.")
@with_basis_options
@click.option("--tol", type=float, default=5e-3)
@output_option
@_guard
def wavelets_verify_cmd(solution, basis_path, n, preset, config_path, tol, output):
    """Residuals of a wavelet solution; exits 1 above --tol."""
    basis, source = _basis(basis_path, n, preset, config_path, default_preset="paper-sec4")
    sol = _wavelets(solution)
    # Orthogonality residuals scale with the scaling functions; the table
    # refers to the unnormalised ones.
    res = residuals(sol, basis)
    labels = residual_labels(basis)
    worst = np.argsort(-np.abs(res))[:5]
    click.echo(f"max residual {np.max(np.abs(res)):.6e}")
    checks = [_check("max_residual", float(np.max(np.abs(res))), tol)]
    payload = {"residuals": dict(zip(labels, res.tolist())), "worst": [labels[k] for k in worst]}
    _finish(checks, payload, {"command": "wavelets verify", "solution": solution, "tol": tol, **source}, output)


@wavelets_grp.command("table")
@output_option
def wavelets_table_cmd(output):
    """Write the published knot-value table as a solution JSON."""
    _emit_json({"solution": WaveletSolution.published().to_dict()}, {"command": "wavelets table"}, output)


@cli.command("sample")
@click.option("--system", "system_path", type=click.Path(exists=True, dir_okay=False), help="System JSON.")
@with_basis_options
@click.option("--wavelets", "wavelets_path", default=None, help="Solution JSON or 'paper'; samples the wavelets.")
@click.option("--depth", type=int, default=8)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@output_option
@_guard
def sample_cmd(system_path, basis_path, n, preset, config_path, wavelets_path, depth, fmt, output):
    """Sample a system (x,f1,f2), the scaling functions or the wavelets."""
    if depth < 0:
        raise BadInput("--depth must be non-negative")
    if system_path:
        d = _read_json(system_path)
        samples = refine(system_from_dict(d), depth)
        header, cols = ["x", "f1", "f2"], [samples.xs, samples.f1, samples.f2]
        config = {"command": "sample", "system": d, "depth": depth}
    else:
        basis, source = _basis(basis_path, n, preset, config_path)
        config = {"command": "sample", "depth": depth, **source}
        if wavelets_path:
            xs, psi = psi_samples(_wavelets(wavelets_path), basis.normalized_copy(), depth)
            header = ["x"] + [f"psi{i + 1}" for i in range(psi.shape[1])]
            cols = [xs] + list(psi.T)
            config["wavelets"] = wavelets_path
        else:
            xs = np.linspace(-1.0, 2.0, 3 * basis.N ** (depth + 1) + 1)
            header = ["x"] + [f"phi{i + 1}" for i in range(len(basis.phi))]
            cols = [xs] + [f.values_on(xs, depth) for f in basis.phi]
    if fmt == "csv":
        _emit(_csv(header, zip(*cols)), output)
    else:
        _emit_json({"columns": dict(zip(header, cols))}, config, output)


@cli.group("transform")
def transform_grp():
    """Multi-level decomposition and reconstruction of sampled signals."""


@transform_grp.command("decompose")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False), help="CSV with columns x,value.")
@with_basis_options
@click.option("--wavelets", "wavelets_path", required=True)
@click.option("--levels", type=click.IntRange(min=1), default=1)
@click.option("--level", type=int, default=None, help="Fine level (default: -levels).")
@click.option("--depth", type=int, default=12, help="Evaluation depth for the projection.")
@output_option
@_guard
def decompose_cmd(input_path, basis_path, n, preset, config_path, wavelets_path, levels, level, depth, output):
    """Project a signal and split it into approximation and details."""
    basis, source = _basis(basis_path, n, preset, config_path)
    wav = _wavelets(wavelets_path)
    x, v = _read_signal(input_path)
    level = -levels if level is None else level
    fine = project(x, v, basis, level, depth=depth)
    approx, details, _ = wavedec(fine, basis, wav, levels)
    payload = {
        "interval": [float(x[0]), float(x[-1])],
        "fine_level": level,
        "levels": levels,
        "fine": fine.to_dict(),
        "approx": approx.to_dict(),
        "details": [d.to_dict() for d in details],
    }
    _emit_json(payload, {"command": "transform decompose", "levels": levels, "level": level, "depth": depth,
                         "wavelets": wav.to_dict(), **source}, output)


@transform_grp.command("reconstruct")
@click.option("--coeffs", "coeffs_path", required=True, type=click.Path(exists=True, dir_okay=False))
@with_basis_options
@click.option("--wavelets", "wavelets_path", required=True)
@click.option("--points", type=click.IntRange(min=2), default=513, help="Samples for CSV output.")
@click.option("--depth", type=int, default=12)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@output_option
@_guard
def reconstruct_cmd(coeffs_path, basis_path, n, preset, config_path, wavelets_path, points, depth, fmt, output):
    """Rebuild fine coefficients (JSON) or signal samples (CSV)."""
    basis, source = _basis(basis_path, n, preset, config_path)
    wav = _wavelets(wavelets_path)
    d = _read_json(coeffs_path)
    lo, hi = d["interval"]
    fines, coarse, detail_fams = level_families(basis, wav, int(d["fine_level"]), lo, hi, int(d["levels"]))

    def load(entry, fam):
        if [list(ix) for ix in fam.index] != [list(ix) for ix in entry["index"]]:
            raise BadInput(f"coefficient index at level {entry['level']} does not match the basis")
        return SignalCoefficients(fam, np.asarray(entry["values"], float))

    approx = load(d["approx"], coarse)
    details = [load(e, f) for e, f in zip(d["details"], detail_fams)]
    rec = waverec(approx, details, fines)
    if fmt == "csv":
        xs = np.linspace(lo, hi, points)
        _emit(_csv(["x", "value"], zip(xs, rec.to_function().values_on(xs, depth))), output)
        return
    payload = {"fine": rec.to_dict()}
    if "fine" in d:
        payload["roundtrip_error"] = float(np.linalg.norm(rec.values - np.asarray(d["fine"]["values"])))
    _emit_json(payload, {"command": "transform reconstruct", "coeffs": d.get("metadata", {}).get("config_hash"),
                         **source}, output)


@cli.command("report")
@with_basis_options
@click.option("--tol", type=float, default=1e-8)
@click.option("--depth", type=int, default=12)
@click.option("--wavelet-tol", type=float, default=1e-9)
@click.option("--skip-wavelets", is_flag=True)
@output_option
@_guard
def report_cmd(basis_path, n, preset, config_path, tol, depth, wavelet_tol, skip_wavelets, output):
    """Full verification summary with pass/fail per check."""
    basis, source = _basis(basis_path, n, preset, config_path)
    params, N = basis.params, basis.N
    checks = []
    dim = dimension_check(N, params)
    checks.append(_check("dimension", dim, None, dim == 2 * N))
    rep = verify_mra(basis, quad_depth=depth)
    checks.append(_check("translate_gram_offdiag", rep["max_offdiag"], tol))
    t0tn = float(constraint_residuals(params, translate=True)[-1])
    checks.append(_check("rho_inner_T0_TN", abs(t0tn), tol))
    zeta, eta = zeta_eta(params)
    checks.append(_check("zeta", float(np.max(np.abs(zeta))), tol))
    checks.append(_check("eta", float(np.max(np.abs(eta))), tol))
    checks.append(_check("riesz_frame_bounds", list(rep["frame_ratio_range"]), None, rep["frame_ok"]))
    for i, r in enumerate(rep["two_scale_residuals"]):
        checks.append(_check(f"two_scale_phi{i + 1}", r, tol, gate=False))
    payload = {"translate_gram": rep["translate_gram"], "riesz": rep["riesz"]}
    if N == 2:
        payload["rho_closed_form"] = rho(params.alpha)
        u11, _, _ = solve_u_zeta_eta(params)
        payload["u11"] = u11
        checks.append(_check("u11_vs_published", abs(u11 - PUBLISHED_U11), 1e-9, gate=False))
        if not skip_wavelets:
            nb = basis.normalized_copy()
            table = float(np.max(np.abs(residuals(WaveletSolution.published(), basis))))
            checks.append(_check("wavelet_table_residual", table, 5e-3, gate=False))
            try:
                sol = solve_wavelets(basis, seed="paper", tol=wavelet_tol)
                res = sol.report["residual"]
                payload["wavelets"] = sol.to_dict()
                checks.append(_check("wavelet_residual", res, wavelet_tol))
                nd = null_space_dimension(sol, nb)
                checks.append(_check("wavelet_null_space", nd, None, nd == 3))
            except WaveletConvergenceError as exc:
                checks.append(_check("wavelet_residual", exc.best_residual, wavelet_tol))
    _finish(checks, payload, {"command": "report", "tol": tol, "depth": depth, **source}, output)


def main(argv=None):
    """Console entry point; returns the exit code."""
    args = sys.argv[1:] if argv is None else list(argv)
    try:
        cli.main(args=args, prog_name="chfif", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        if "--json-errors" in args and not isinstance(exc, _CliError):
            payload = {"error": "bad_input", "message": exc.format_message(), "exit_code": exc.exit_code}
            click.echo(json.dumps(payload), err=True)
        else:
            exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
