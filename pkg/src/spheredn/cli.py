"""Batch front door: config ingestion, experiment orchestration, result files.

Commands
--------
apply             solve G(h)psi once and emit the coefficient table
derivative_check  centered finite-difference consistency of G' and G''
radius            amplitude sweep of the homogeneity series
tame              fitted tame constants over a seeded sample set
norms             chart-vs-spectral norm equivalence and layered seminorms
witness           inequality witness suite and the atlas dump

Config files are flat ``KEY=VALUE`` text (``#`` comments).  Every output
file embeds the resolved configuration and its SHA-256 hash, so a result
can always be traced to the exact run that produced it.  CSV rows are
formatted with ``repr`` so identical configs reproduce bit-identical files.

Exit codes: 0 success; 2 configuration error; 3 numerical non-convergence
(partial outputs are kept).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .ballfields import RadialGrid
from .charts import Atlas, CutoffFamily
from .chartnorm import chart_norm, x_seminorm_table
from .dn import (
    default_cap,
    dn_apply,
    dn_derivative,
    dn_second_derivative,
    radius_scan,
)
from .oracles import (
    direct_galerkin_oracle,
    scaled_sphere_oracle,
    translated_ball_oracle,
    translated_ball_shape,
)
from .sampling import random_boundary_field, shape_samples
from .spectral import AREA, BoundaryField, mode_degrees
from .witness import tame_table, trace_r_band, witness_suite

COMMANDS = ("apply", "derivative_check", "radius", "tame", "norms", "witness")


class ConfigError(ValueError):
    """A configuration file or value violates the documented schema."""


# ------------------------------------------------------------- config plumbing


def parse_config(path):
    """Read a flat KEY=VALUE file into a string dict."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected KEY=VALUE, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


class Resolver:
    """Typed access to config keys with defaults and strictness checking."""

    def __init__(self, raw):
        self.raw = dict(raw)
        self.resolved = {}
        self.used = set()

    def _take(self, key, default, conv, kind):
        self.used.add(key)
        text = self.raw.get(key)
        if text is None:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            value = default
        else:
            try:
                value = conv(text)
            except ValueError as exc:
                raise ConfigError(f"key {key!r}: expected {kind}, got {text!r}") from exc
        self.resolved[key] = value
        return value

    def get_int(self, key, default=None):
        return self._take(key, default, int, "an integer")

    def get_float(self, key, default=None):
        return self._take(key, default, float, "a number")

    def get_str(self, key, default=None, choices=None):
        value = self._take(key, default, str, "a string")
        if choices is not None and value not in choices:
            raise ConfigError(f"key {key!r}: must be one of {sorted(choices)}")
        return value

    def get_floats(self, key, default=None):
        def conv(text):
            return tuple(float(part) for part in text.split(",") if part.strip())

        return self._take(key, default, conv, "a comma-separated number list")

    def get_ints(self, key, default=None):
        def conv(text):
            return tuple(int(part) for part in text.split(",") if part.strip())

        return self._take(key, default, conv, "a comma-separated integer list")

    def finish(self):
        unknown = set(self.raw) - self.used
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")


def _config_lines(resolved):
    def fmt(v):
        if isinstance(v, float):
            return repr(v)
        if isinstance(v, tuple):
            return ",".join(fmt(x) for x in v)
        return str(v)

    return [f"{k}={fmt(v)}" for k, v in sorted(resolved.items())]


def config_digest(resolved):
    blob = "\n".join(_config_lines(resolved)).encode()
    return hashlib.sha256(blob).hexdigest()


# --------------------------------------------------------------- result files


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, command, resolved, columns, rows):
    digest = config_digest(resolved)
    lines = [f"# command={command}", f"# config_sha256={digest}"]
    lines += [f"# {line}" for line in _config_lines(resolved)]
    with Path(path).open("w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])


def write_json_mirror(path, command, resolved, rows, extra=None):
    payload = {
        "command": command,
        "config_sha256": config_digest(resolved),
        "config": {k: v for k, v in sorted(resolved.items())},
        "rows": rows,
    }
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def _emit(out_dir, name, command, resolved, columns, rows, extra=None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / f"{name}.csv", command, resolved, columns, rows)
    write_json_mirror(out_dir / f"{name}.json", command, resolved, rows, extra)


# ------------------------------------------------------------ sample builders


def _build_h(res, dim, seed):
    """Shape field from the sample-set keys (shape, amplitude, band limit)."""
    shape = res.get_str("h_shape", "random", choices={"random", "constant", "translated"})
    amp = res.get_float("h_amplitude", 0.0)
    degree = res.get_int("h_degree", 6)
    if shape == "constant":
        # amp is the radial offset: the orthonormal degree-0 mode is
        # 1/sqrt(area), so the constant function amp needs this coefficient.
        coeffs = np.zeros(mode_degrees(dim, degree).size)
        coeffs[0] = amp * np.sqrt(AREA[dim])
        return BoundaryField(dim, degree, coeffs)
    if shape == "translated":
        center = np.zeros(dim)
        center[0] = amp
        return translated_ball_shape(dim, center, degree)
    if amp == 0.0:
        return BoundaryField(dim, degree, np.zeros(mode_degrees(dim, degree).size))
    return random_boundary_field(
        dim, degree, seed, decay=2.0, norm_s=2.0, target=amp
    )


def _build_psi(res, dim, seed):
    degree = res.get_int("psi_degree", 8)
    mode = res.get_str("psi_mode", "random")
    if mode == "random":
        return random_boundary_field(dim, degree, seed + 1, decay=1.5)
    try:
        flat = int(mode)
    except ValueError as exc:
        raise ConfigError(
            "psi_mode must be 'random' or a flat mode index"
        ) from exc
    coeffs = np.zeros(mode_degrees(dim, degree).size)
    if not 0 <= flat < coeffs.size:
        raise ConfigError("psi_mode index outside the band limit")
    coeffs[flat] = 1.0
    return BoundaryField(dim, degree, coeffs)


# ------------------------------------------------------------------- commands


def cmd_apply(res, out_dir, seed, threads):
    dim = res.get_int("dim")
    h = _build_h(res, dim, seed)
    psi = _build_psi(res, dim, seed)
    L = res.get_int("L", default_cap(h.degree_cut, psi.degree_cut))
    n_r = res.get_int("N_r", 0)
    tol = res.get_float("tol", 1e-12)
    m_max = res.get_int("M", 40)
    method = res.get_str("method", "series", choices={"series", "fixed_point"})
    oracle = res.get_str(
        "oracle",
        "none",
        choices={"none", "scaled_sphere", "translated_ball", "galerkin"},
    )
    res.finish()

    rgrid = RadialGrid(n_r) if n_r else None
    g, info = dn_apply(
        h,
        psi,
        L_cap=L,
        method=method,
        tol=tol,
        M_max=m_max,
        return_info=True,
        rgrid=rgrid,
    )

    reference = None
    if oracle == "scaled_sphere":
        if res.resolved["h_shape"] != "constant":
            raise ConfigError("oracle=scaled_sphere requires h_shape=constant")
        reference = scaled_sphere_oracle(psi, res.resolved["h_amplitude"])
    elif oracle == "translated_ball":
        if res.resolved["h_shape"] != "translated":
            raise ConfigError("oracle=translated_ball requires h_shape=translated")
        center = np.zeros(dim)
        center[0] = res.resolved["h_amplitude"]
        reference = translated_ball_oracle(psi, center, out_degree=g.degree_cut)
    elif oracle == "galerkin":
        reference = direct_galerkin_oracle(h, psi, L, out_degree=g.degree_cut)

    degs = mode_degrees(dim, g.degree_cut)
    columns = ["mode", "degree", "coefficient"]
    rows = []
    ref_padded = reference.padded(g.degree_cut) if reference is not None else None
    for i, coeff in enumerate(g.coeffs):
        row = {"mode": i, "degree": int(degs[i]), "coefficient": float(coeff)}
        if ref_padded is not None:
            row["oracle_coefficient"] = float(ref_padded.coeffs[i])
            row["abs_difference"] = abs(float(coeff) - float(ref_padded.coeffs[i]))
        rows.append(row)
    if ref_padded is not None:
        columns += ["oracle_coefficient", "abs_difference"]

    solve = info["solve"]
    if isinstance(solve, dict):
        probe = solve.get
    else:
        def probe(key, default):
            return getattr(solve, key, default)
    diagnostics = {
        "L_cap": L,
        "method": method,
        "margin": float(info["state"].margin),
        "converged": bool(probe("converged", True)),
        "residual": float(probe("residual", 0.0)),
        "terms_used": int(probe("m_used", -1)),
    }
    _emit(out_dir, "apply", "apply", res.resolved, columns, rows,
          extra={"diagnostics": diagnostics})
    if not diagnostics["converged"]:
        raise RuntimeError(
            f"series did not converge: residual={diagnostics['residual']:.3e}"
        )
    print(
        f"apply: dim={dim} modes={len(rows)} "
        f"residual={diagnostics['residual']:.3e} -> {out_dir}"
    )
    return 0


def cmd_derivative_check(res, out_dir, seed, threads):
    dim = res.get_int("dim")
    count = res.get_int("count", 5)
    degree = res.get_int("degree", 6)
    amp = res.get_float("amplitude", 0.05)
    t_coarse = res.get_float("t_coarse", 1e-2)
    t_fine = res.get_float("t_fine", 1e-3)
    s_norm = res.get_float("s_norm", 1.0)
    L = res.get_int("L", default_cap(degree, degree))
    # second differences divide solver noise by t^2, so the probes run the
    # series to machine precision by default
    tol = res.get_float("tol", 0.0)
    m_max = res.get_int("M", 40)
    # the second difference's truncation term grows quartically with the
    # direction size, so a few-unit eta keeps both steps truncation-dominated
    eta_amp = res.get_float("eta_amplitude", 3.0)
    res.finish()

    rng = np.random.default_rng(seed)
    triples = []
    for _ in range(count):
        h = random_boundary_field(dim, degree, rng, norm_s=2.0, target=amp)
        eta = random_boundary_field(dim, degree, rng, norm_s=2.0, target=eta_amp)
        psi = random_boundary_field(dim, degree, rng, decay=1.5)
        triples.append((h, eta, psi))

    def one(item):
        idx, (h, eta, psi) = item
        dG = dn_derivative(h, eta, psi, L_cap=L, tol=tol, M_max=m_max)
        d2G = dn_second_derivative(h, eta, eta, psi, L_cap=L, tol=tol, M_max=m_max)
        out = []
        for order in (1, 2):
            errs = []
            for t in (t_coarse, t_fine):
                plus = dn_apply(h + t * eta, psi, L_cap=L, tol=tol, M_max=m_max)
                minus = dn_apply(h + (-t) * eta, psi, L_cap=L, tol=tol, M_max=m_max)
                if order == 1:
                    fd = (plus - minus) * (0.5 / t)
                    errs.append((fd - dG).sobolev_norm(s_norm))
                else:
                    base = dn_apply(h, psi, L_cap=L, tol=tol, M_max=m_max)
                    fd = (plus - base * 2.0 + minus) * (1.0 / t**2)
                    errs.append((fd - d2G).sobolev_norm(s_norm))
            out.append(
                {
                    "sample": idx,
                    "order": order,
                    "err_coarse": errs[0],
                    "err_fine": errs[1],
                    "ratio": errs[0] / errs[1] if errs[1] > 0.0 else float("inf"),
                }
            )
        return out

    parts = _parallel_map(one, list(enumerate(triples)), threads)
    rows = [r for part in parts for r in part]
    _emit(
        out_dir,
        "derivative_check",
        "derivative_check",
        res.resolved,
        ["sample", "order", "err_coarse", "err_fine", "ratio"],
        rows,
    )
    ratios = [r["ratio"] for r in rows]
    print(
        f"derivative_check: {count} samples, ratio range "
        f"[{min(ratios):.1f}, {max(ratios):.1f}] -> {out_dir}"
    )
    return 0


def cmd_radius(res, out_dir, seed, threads):
    dim = res.get_int("dim")
    degree = res.get_int("degree", 4)
    amplitudes = res.get_floats("amplitudes", (0.02, 0.04, 0.08))
    m_max = res.get_int("M", 30)
    s_grid = res.get_floats("s_grid", ())
    tol_m = res.get_float("tol_for_M", 1e-8)
    L = res.get_int("L", 0)
    res.finish()

    rng = np.random.default_rng(seed)
    h_shape = random_boundary_field(dim, degree, rng, norm_s=1.0, target=1.0)
    psi = random_boundary_field(dim, degree, rng, decay=1.5)
    if not L:
        L = default_cap(degree, degree)
    records = radius_scan(
        h_shape, psi, amplitudes, L, M_max=m_max, s_values=s_grid, tol_for_M=tol_m
    )
    rows = []
    for rec in records:
        for m, norm in enumerate(rec["term_norms"]):
            rows.append(
                {
                    "amplitude": rec["amplitude"],
                    "m": m,
                    "norm_h1": norm,
                    "fitted_ratio": rec["fitted_ratio"],
                }
            )
    extra = {
        "per_amplitude": [
            {
                "amplitude": rec["amplitude"],
                "margin": rec["margin"],
                "converged": rec["converged"],
                "fitted_ratio": rec["fitted_ratio"],
                "M_of_s": {repr(k): v for k, v in rec.get("M_of_s", {}).items()},
            }
            for rec in records
        ]
    }
    _emit(
        out_dir,
        "radius",
        "radius",
        res.resolved,
        ["amplitude", "m", "norm_h1", "fitted_ratio"],
        rows,
        extra=extra,
    )
    if not all(rec["converged"] for rec in records):
        raise RuntimeError("series did not converge at the largest amplitude")
    print(f"radius: {len(records)} amplitudes, {len(rows)} rows -> {out_dir}")
    return 0


def cmd_tame(res, out_dir, seed, threads):
    dim = res.get_int("dim")
    s_grid = res.get_floats("s_grid", (0.5, 1.0, 2.0, 3.0, 4.0))
    s0 = res.get_float("s0", 1.5 if res.resolved["dim"] == 3 else 1.0)
    count = res.get_int("count", 20)
    cap = res.get_float("amplitude", 0.05)
    degree = res.get_int("degree", 8)
    L = res.get_int("L", 0)
    tol = res.get_float("tol", 1e-12)
    res.finish()

    samples = []
    rows = tame_table(
        dim,
        s_grid,
        s0,
        count,
        seed,
        cap,
        degree=degree,
        L_cap=L or None,
        tol=tol,
        threads=threads,
        samples_out=samples,
    )
    out_rows = [
        {
            "s": r["s"],
            "C0_fit": r["c0"],
            "Cs_fit": r["cs"],
            "samples": r["samples"],
            "stability": r["stability"],
            "violations": r["violations"],
        }
        for r in rows
    ]
    _emit(
        out_dir,
        "tame",
        "tame",
        res.resolved,
        ["s", "C0_fit", "Cs_fit", "samples", "stability", "violations"],
        out_rows,
    )
    _emit(
        out_dir,
        "tame_samples",
        "tame",
        res.resolved,
        ["sample", "s", "norm_G_s", "norm_psi_s1", "norm_psi_s01", "norm_h_s1"],
        samples,
    )
    bad = sum(r["violations"] for r in rows)
    if bad:
        raise RuntimeError(f"tame fit violated on {bad} rows")
    print(f"tame: {count} samples x {len(s_grid)} orders -> {out_dir}")
    return 0


def cmd_norms(res, out_dir, seed, threads):
    dim = res.get_int("dim")
    count = res.get_int("count", 6)
    degree = res.get_int("degree", 10)
    delta = res.get_float("delta", 0.1)
    n_plane = res.get_int("n_plane", 0) or None
    s_grid = res.get_floats("s_grid", (0.0, 1.0, 2.0))
    k_grid = res.get_ints("k_grid", (0, 1, 2, 3))
    res.finish()

    rng = np.random.default_rng(seed)
    fields = [
        random_boundary_field(dim, degree, rng, decay=1.5) for _ in range(count)
    ]
    atlas = Atlas.build(dim, delta)
    eq_rows = []
    for s in s_grid:
        chart_vals = chart_norm(fields, atlas, s, n_plane=n_plane)
        for i, f in enumerate(fields):
            spectral = f.sobolev_norm(s)
            eq_rows.append(
                {
                    "field": i,
                    "s": float(s),
                    "spectral_norm": spectral,
                    "chart_norm": float(chart_vals[i]),
                    "ratio": float(chart_vals[i]) / spectral if spectral else 0.0,
                }
            )
    _emit(
        out_dir,
        "norms_equivalence",
        "norms",
        res.resolved,
        ["field", "s", "spectral_norm", "chart_norm", "ratio"],
        eq_rows,
    )

    if k_grid:
        from .ballfields import harmonic_extension

        rgrid = RadialGrid(32)
        cut = CutoffFamily(delta)
        ball = [harmonic_extension(f, rgrid) for f in fields]
        entries = [(0.0, 0.0, k) for k in k_grid]
        table = x_seminorm_table(ball, atlas, cut, entries, n_plane=n_plane)
        layer_rows = []
        for e, (s, r, k) in enumerate(entries):
            for i in range(len(ball)):
                layer_rows.append(
                    {
                        "field": i,
                        "k": k,
                        "s": float(s),
                        "r": float(r),
                        "seminorm": float(table[e, i]),
                    }
                )
        _emit(
            out_dir,
            "norms_layers",
            "norms",
            res.resolved,
            ["field", "k", "s", "r", "seminorm"],
            layer_rows,
        )
    print(f"norms: {count} fields, dim={dim} -> {out_dir}")
    return 0


def cmd_witness(res, out_dir, seed, threads):
    dim = res.get_int("dim")
    include_low = bool(res.get_int("include_low_norm", 1 if res.resolved["dim"] == 2 else 0))
    delta = res.get_float("delta", 0.1)
    res.finish()

    records = witness_suite(dim=dim, seed=seed, include_low_norm=include_low, threads=threads)
    rows = [
        {
            "inequality": r["inequality"],
            "parameters": r["params"],
            "max_ratio": r["c0"],
            "sample_count": r["samples"],
            "second_constant": r["c1"],
            "stability": r["stability"],
            "passed": int(r["passed"]),
        }
        for r in records
    ]
    trace_rows = [r for r in records if r["inequality"] == "trace"]
    band, band_ok = trace_r_band(trace_rows)
    _emit(
        out_dir,
        "witness",
        "witness",
        res.resolved,
        [
            "inequality",
            "parameters",
            "max_ratio",
            "sample_count",
            "second_constant",
            "stability",
            "passed",
        ],
        rows,
        extra={"trace_r_band": band, "trace_r_band_ok": band_ok},
    )
    atlas = Atlas.build(dim, delta)
    (Path(out_dir) / "atlas.json").write_text(atlas.to_json() + "\n")
    n_fail = sum(1 for r in records if not r["passed"])
    if n_fail:
        raise RuntimeError(f"{n_fail} witness rows failed")
    print(f"witness: {len(rows)} rows, all passed, trace band {band:.4f} -> {out_dir}")
    return 0


def _parallel_map(fn, items, threads):
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


_DISPATCH = {
    "apply": cmd_apply,
    "derivative_check": cmd_derivative_check,
    "radius": cmd_radius,
    "tame": cmd_tame,
    "norms": cmd_norms,
    "witness": cmd_witness,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="spheredn",
        description="Dirichlet-Neumann spectral harness for nearly spherical domains",
    )
    parser.add_argument("--command", required=True, choices=COMMANDS)
    parser.add_argument("--config", required=True, help="flat KEY=VALUE config file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="overrides config seed")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    try:
        raw = parse_config(args.config)
        res = Resolver(raw)
        seed = res.get_int("seed", 0)
        if args.seed is not None:
            seed = args.seed
            res.resolved["seed"] = seed
        res.resolved["command"] = args.command
        res.used.add("command")
        if "command" in raw and raw["command"] != args.command:
            raise ConfigError(
                f"config names command {raw['command']!r} but --command is {args.command!r}"
            )
        return _DISPATCH[args.command](res, args.out, seed, max(args.threads, 1))
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
