"""Command line pipeline: gen, decompose, separate, diagnose, report.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence
(results are still written).
"""

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import diagnostics as diag
from .grid_fft import FreqGrid, forward_ft, inverse_ft, read_gsep, write_gsep
from .models import (Model, component_spectra, decompose, load_model, model_to_text,
                     parse_keyvalue, reconstruct)
from .separation import SolverConfig, separate_multiscale, write_trace_csv
from .shearlet_frame import ShearletFrame, check_alpha

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 2, 3

DEFAULTS = {
    "grid": 256,
    "alpha": 1.0,
    "eps": 0.1,
    "model": None,
    "out": "out",
    "input": None,
    "max_iters": 5000,
    "tol": 1e-5,
    "sweep_alpha": None,
    "scales": None,
    "dump_symbols": None,
    "no_bound": False,
}


class ConfigError(Exception):
    pass


def parse_scales(text, j_max):
    """'2,3,4' or '2-4' -> [2, 3, 4]; None -> 0..j_max."""
    if text is None:
        return list(range(j_max + 1))
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    bad = [j for j in out if not 0 <= j <= j_max]
    if bad:
        raise ConfigError(f"scales {bad} outside 0..{j_max} for this grid")
    return sorted(set(out))


def parse_alphas(text, alpha):
    if text is None:
        return [alpha]
    return [float(a) for a in str(text).split(",") if a.strip()]


def resolve(args):
    """Merge command line, config file and defaults (command line wins)."""
    conf = {}
    if args.config:
        if not os.path.exists(args.config):
            raise ConfigError(f"config file not found: {args.config}")
        with open(args.config) as fh:
            kv = parse_keyvalue(fh.read())
        conf = {k.replace("-", "_"): v[-1] for k, v in kv.items()}
        unknown = set(conf) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = {}
    for key, default in DEFAULTS.items():
        value = getattr(args, key, None)
        if value is None or value is False:
            value = conf.get(key, default)
        cfg[key] = value
    try:
        cfg["grid"] = int(cfg["grid"])
        cfg["alpha"] = float(cfg["alpha"])
        cfg["eps"] = float(cfg["eps"])
        cfg["max_iters"] = int(cfg["max_iters"])
        cfg["tol"] = float(cfg["tol"])
        cfg["no_bound"] = str(cfg["no_bound"]).lower() in ("1", "true", "yes")
        FreqGrid(cfg["grid"])
        check_alpha(cfg["alpha"])
    except ValueError as err:
        raise ConfigError(str(err)) from None
    return cfg


def _model(cfg, fallback_dir=None):
    if cfg["model"]:
        if not os.path.exists(cfg["model"]):
            raise ConfigError(f"model file not found: {cfg['model']}")
        return load_model(cfg["model"])
    if fallback_dir and os.path.exists(os.path.join(fallback_dir, "model.txt")):
        return load_model(os.path.join(fallback_dir, "model.txt"))
    return Model() if fallback_dir is None else None


def _solver(cfg):
    return SolverConfig(max_iters=cfg["max_iters"], tol_kkt=cfg["tol"])


def _check_eps(eps, alpha):
    try:
        diag.check_eps(eps, alpha)
    except ValueError:
        hi = (2.0 - alpha) / 4.0
        raise ConfigError(f"--eps must satisfy 0 < eps < (2 - alpha)/4 = {hi:g} "
                          f"(alpha={alpha:g}), got {eps:g}") from None


def cmd_gen(cfg):
    """Ground-truth components P, C and f = P + C as GSEP1 files plus the manifest."""
    grid = FreqGrid(cfg["grid"])
    model = _model(cfg)
    P, C = component_spectra(model, grid)
    p_img, c_img = inverse_ft(P, real=True), inverse_ft(C, real=True)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    write_gsep(os.path.join(out, "P.gsep"), p_img)
    write_gsep(os.path.join(out, "C.gsep"), c_img)
    write_gsep(os.path.join(out, "f.gsep"), p_img + c_img)
    with open(os.path.join(out, "model.txt"), "w") as fh:
        fh.write(f"# grid = {grid.N}\n")
        fh.write(model_to_text(model))
    print(f"wrote P.gsep, C.gsep, f.gsep, model.txt to {out}")
    return EXIT_OK


def read_image(path):
    """GSEP1 file, or headerless little-endian float64 samples of a square grid."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == b"GSEP":
        return read_gsep(path)
    raw = np.fromfile(path, dtype="<f8")
    N = int(round(np.sqrt(raw.size)))
    if N * N != raw.size:
        raise ConfigError(f"{path}: neither GSEP1 nor a square grid of raw float64 values")
    return raw.reshape(N, N)


def _input(cfg):
    path = cfg["input"] or os.path.join(cfg["out"], "f.gsep")
    if not os.path.exists(path):
        raise ConfigError(f"input file not found: {path}")
    img = read_image(path)
    if np.iscomplexobj(img):
        raise ConfigError(f"{path} holds a complex array, expected a real image")
    try:
        FreqGrid(img.shape[0])
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from None
    return path, img


def cmd_decompose(cfg):
    """Subband images f_j = F_j f and the low band, plus a reconstruction check."""
    path, img = _input(cfg)
    grid = FreqGrid(img.shape[0])
    stack = decompose(forward_ft(img), grid)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    lines = ["# j file energy"]
    for j, spec in stack.bands.items():
        name = f"subband_j{j}.gsep"
        write_gsep(os.path.join(out, name), inverse_ft(spec, real=True))
        lines.append(f"{j} {name} {float(np.sqrt(np.vdot(spec, spec).real))!r}")
    write_gsep(os.path.join(out, "low.gsep"), inverse_ft(stack.low, real=True))
    lines.append(f"low low.gsep {float(np.sqrt(np.vdot(stack.low, stack.low).real))!r}")
    with open(os.path.join(out, "subbands.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    # the filter bank sums to one on the covered band only
    mask = grid.covered_mask()
    diff = (forward_ft(reconstruct(stack).real) - forward_ft(img))[mask]
    ref = np.linalg.norm(forward_ft(img)[mask])
    err = float(np.linalg.norm(diff) / ref) if ref > 0 else 0.0
    print(f"decomposed {path} into {len(stack.bands)} subbands; "
          f"relative reconstruction error on the covered band {err:.3e}")
    return EXIT_OK


def cmd_separate(cfg):
    """Multiscale separation; writes parts, traces and study.csv when truth is known."""
    path, img = _input(cfg)
    N = img.shape[0]
    grid = FreqGrid(N)
    alpha = cfg["alpha"]
    scales = parse_scales(cfg["scales"], grid.j_max)
    if not cfg["no_bound"]:
        _check_eps(cfg["eps"], alpha)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    res = separate_multiscale(img, alpha, _solver(cfg), scales)
    for r in res.results:
        write_gsep(os.path.join(out, f"point_j{r.j}.gsep"), r.point)
        write_gsep(os.path.join(out, f"curve_j{r.j}.gsep"), r.curve)
        write_trace_csv(os.path.join(out, f"trace_j{r.j}.csv"), r)
        flag = "converged" if r.converged else "NOT converged"
        print(f"j={r.j}: {r.iterations} iterations, kkt {r.kkt:.2e}, {flag}")
    write_gsep(os.path.join(out, "P_star.gsep"), res.point)
    write_gsep(os.path.join(out, "C_star.gsep"), res.curve)

    model = _model(cfg, os.path.dirname(os.path.abspath(path)))
    if model is None:
        print("no model manifest next to the input and no --model: study.csv skipped")
    else:
        reports = [diag.scale_report(r, model, alpha, cfg["eps"], N, not cfg["no_bound"])
                   for r in res.results]
        diag.write_study_csv(os.path.join(out, "study.csv"), reports)
        print(f"wrote study.csv ({len(reports)} scales)")
    if not all(r.converged for r in res.results):
        return EXIT_NONCONVERGED
    return EXIT_OK


def _symbol_keys(text):
    keys = []
    for item in str(text).split(";"):
        item = item.strip()
        if not item:
            continue
        j, l, cone = (p.strip() for p in item.split(","))
        if cone not in ("h", "v"):
            raise ConfigError(f"cone must be h or v, got {cone!r}")
        keys.append((int(j), int(l), cone))
    return keys


def cmd_diagnose(cfg):
    """coherence.csv and sparsity.csv over scales (and an alpha sweep)."""
    grid = FreqGrid(cfg["grid"])
    alphas = parse_alphas(cfg["sweep_alpha"], cfg["alpha"])
    for a in alphas:
        try:
            check_alpha(a)
        except ValueError as err:
            raise ConfigError(str(err)) from None
        _check_eps(cfg["eps"], a)
    scales = parse_scales(cfg["scales"] or f"2-{grid.j_max}", grid.j_max)
    model = _model(cfg)
    center, offset = diag._anchors(model)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    coh, sparse = [], []
    for a in alphas:
        for j in scales:
            rep = diag.coherence_bound_check(j, a, cfg["eps"], center, offset)
            coh.append(rep)
            d1, d2 = diag.sparsity_pair(model, j, a, cfg["eps"], grid.N)
            sparse.append((j, d1, d2))
            print(f"alpha={a:g} j={j}: mu1={rep.mu1:.4g} mu2={rep.mu2:.4g} "
                  f"flag={rep.flag} delta1={d1:.4g} delta2={d2:.4g}")
    diag.write_coherence_csv(os.path.join(out, "coherence.csv"), coh)
    # with a sweep the rows come in blocks per alpha, in sweep order
    diag.write_sparsity_csv(os.path.join(out, "sparsity.csv"), sparse)
    if cfg["dump_symbols"]:
        keys = _symbol_keys(cfg["dump_symbols"])
        a = cfg["alpha"]
        frame = ShearletFrame(grid, a, "primal", scales=sorted({k[0] for k in keys}))
        missing = set(keys) - {k[1:] for k in frame.bands}
        if missing:
            raise ConfigError(f"symbols {sorted(missing)} not in the system for alpha={a:g}")
        names = frame.dump_symbols(out, keys)
        print(f"dumped {len(names)} symbol maps for alpha={a:g}")
    return EXIT_OK


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def cmd_report(cfg):
    """Plain-text summary of the CSV files found in the output directory."""
    out = cfg["out"]
    lines = []
    found = False
    for name in ("study.csv", "coherence.csv", "sparsity.csv"):
        path = os.path.join(out, name)
        if not os.path.exists(path):
            continue
        found = True
        rows = _read_csv(path)
        lines.append(f"== {name} ({len(rows)} rows)")
        if rows:
            cols = list(rows[0])
            lines.append("  ".join(f"{c:>12}" for c in cols))
            for row in rows:
                lines.append("  ".join(f"{_short(row[c]):>12}" for c in cols))
        if name == "study.csv" and rows:
            tot = [float(r["errP"]) + float(r["errC"]) for r in rows]
            trend = all(b < a for a, b in zip(tot, tot[1:]))
            lines.append(f"total relative error strictly decreasing over j: {trend}")
    if not found:
        raise ConfigError(f"no study/coherence/sparsity CSV in {out}")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(out, "report.txt"), "w") as fh:
        fh.write(text)
    print(text, end="")
    return EXIT_OK


def _short(value):
    try:
        x = float(value)
    except ValueError:
        return value
    if math.isinf(x) or x == int(x) and abs(x) < 1e9:
        return value
    return f"{x:.5g}"


COMMANDS = {
    "gen": cmd_gen,
    "decompose": cmd_decompose,
    "separate": cmd_separate,
    "diagnose": cmd_diagnose,
    "report": cmd_report,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="geosep",
        description="Separate point and line singularities with wavelets and alpha-shearlets.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value file ('#' comments); flags override it")
        sp.add_argument("--out", help=f"output directory (default {DEFAULTS['out']})")

    sp = sub.add_parser("gen", help="write P, C and f = P + C as GSEP1 files")
    common(sp)
    sp.add_argument("--grid", type=int, help=f"grid size N, power of two >= 16 "
                                             f"(default {DEFAULTS['grid']})")
    sp.add_argument("--model", help="model file (default: one point at (1/2, 1/2), "
                                    "lambda 3/2, and the line x2 = 1/2)")

    sp = sub.add_parser("decompose", help="split an image into subbands")
    common(sp)
    sp.add_argument("--input", help="GSEP1 or raw float64 image (default <out>/f.gsep)")

    sp = sub.add_parser("separate", help="run the separation at every scale")
    common(sp)
    sp.add_argument("--input", help="GSEP1 or raw float64 image (default <out>/f.gsep)")
    sp.add_argument("--model", help="ground truth model (default <input dir>/model.txt)")
    sp.add_argument("--alpha", type=float, help=f"anisotropy in [1, 2) (default {DEFAULTS['alpha']})")
    sp.add_argument("--eps", type=float, help=f"cluster exponent, 0 < eps < (2 - alpha)/4 "
                                              f"(default {DEFAULTS['eps']})")
    sp.add_argument("--max-iters", type=int, dest="max_iters",
                    help=f"iteration cap per scale (default {DEFAULTS['max_iters']})")
    sp.add_argument("--tol", type=float, help=f"KKT tolerance (default {DEFAULTS['tol']})")
    sp.add_argument("--scales", help="e.g. '2,3,4' or '2-4' (default all)")
    sp.add_argument("--no-bound", action="store_true", dest="no_bound",
                    help="skip coherence/sparsity/bound columns in study.csv")

    sp = sub.add_parser("diagnose", help="cluster coherence and relative sparsity")
    common(sp)
    sp.add_argument("--grid", type=int, help=f"grid size N (default {DEFAULTS['grid']})")
    sp.add_argument("--model", help="model file (default built-in model)")
    sp.add_argument("--alpha", type=float, help=f"anisotropy (default {DEFAULTS['alpha']})")
    sp.add_argument("--eps", type=float, help=f"cluster exponent (default {DEFAULTS['eps']})")
    sp.add_argument("--sweep-alpha", dest="sweep_alpha",
                    help="comma-separated alphas, one row per (j, alpha)")
    sp.add_argument("--scales", help="e.g. '2-4' (default 2..j_max)")
    sp.add_argument("--dump-symbols", dest="dump_symbols",
                    help="'j,l,cone;...' primal symbol maps (at --alpha) to write as GSEP1")

    sp = sub.add_parser("report", help="summarise the CSV files in --out")
    common(sp)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as err:
        print(f"geosep: error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as err:
        print(f"geosep: error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
