"""Reproducible experiment harness.

Every experiment family is a subcommand writing one CSV plus a JSON run
manifest (configuration, config hash, library versions, wall time).  Runs
are fully determined by the configuration: identical config produces
byte-identical CSV output.

Exit codes: 0 all run assertions passed, 2 assertion failure,
1 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np


class AssertionFailure(Exception):
    pass


class ConfigError(Exception):
    pass


DEFAULTS = {
    "lp-diag": {"m": 9, "eps": [1 / 800, 1 / 400, 1 / 200, 1 / 100],
                "p": [2.0, 4.0], "n_random": 2, "seed": 0, "substeps": 20,
                "j_min": 0, "j_max": 7, "band": 64, "assert_slope": False},
    "beta": {"m": 8, "n": 2, "budget": 300, "eps": 0.25, "seed": 0},
    "embed": {"m": 7, "p": [1.5, 2.0, 4.0], "trials": 2, "seed": 0},
    "tiles": {"m": 9, "unit_m": 2, "shear_ladder": [2, 3, 4, 5, 6],
              "scale_ladder": [1, 2], "bessel_trials": 5, "seed": 0},
    "cover": {"raster": 128, "instances": 3, "n_rects": 12, "seed": 0},
    "square": {"m": 6, "trials": 3, "seed": 0},
    "katz": {"m": 7, "N": [1, 2, 4, 8, 16, 32], "p": [2.0, 3.0],
             "trials": 3, "seed": 0, "direction_set": "structured"},
    "cww": {"m": 7, "j_max": 5, "eps": [0.1, 0.2, 0.4, 0.8, 1.6],
            "quantile": 0.7, "seed": 0},
}


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_manifest(out, name, config, t0):
    import scipy
    import shapely
    from . import __version__
    blob = json.dumps(config, sort_keys=True).encode()
    manifest = {
        "subcommand": name,
        "config": config,
        "config_hash": hashlib.sha256(blob).hexdigest(),
        "versions": {"dhl": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__,
                     "shapely": shapely.__version__},
        "wall_time_s": time.time() - t0,
    }
    with open(Path(out) / f"{name.replace('-', '_')}_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# subcommand runners: each returns (csv_name, header, rows) and raises
# AssertionFailure when its acceptance bundle fails
# ---------------------------------------------------------------------------

def run_lp_diag(cfg):
    from .filters import make_filter_pair
    from .grid import Grid1D, ScaleLattice, lp_norm, random_band_limited
    from .lipschitz import (LipschitzFunction, defect_operator,
                            defect_scaling_sweep)
    grid = Grid1D(cfg["m"])
    pair = make_filter_pair()
    lattice = ScaleLattice(cfg["j_min"], cfg["j_max"], cfg["substeps"])
    lattice.validate_for(grid)

    def profile(x):
        return np.sin(2 * np.pi * 4 * x) / (2 * np.pi * 4)

    rows, slopes = defect_scaling_sweep(
        grid, pair, lattice, profile, cfg["eps"], cfg["p"],
        n_random=cfg["n_random"], seed=cfg["seed"], band=cfg["band"])
    # A == 0 sanity row: the defect must vanish outright
    rng = np.random.default_rng(cfg["seed"])
    f = random_band_limited(grid, rng, band=cfg["band"])
    zero = LipschitzFunction(grid, np.zeros(grid.n))
    d0 = lp_norm(defect_operator(f, zero, pair, lattice), 2.0)
    if d0 > 1e-9 * lp_norm(f, 2.0):
        raise AssertionFailure(f"zero-slope defect {d0:.3e} exceeds 1e-9")
    if cfg["assert_slope"]:
        for p, s in slopes.items():
            if not (0.8 <= s <= 1.2):
                raise AssertionFailure(f"slope {s:.3f} at p={p} outside "
                                       "[0.8, 1.2]")
    return "lp_diag.csv", ["epsilon", "p", "N", "defect_norm", "f_norm",
                           "ratio", "seed"], rows


def _beta_profiles(grid):
    x = grid.points()
    lip = 1.0 / 128
    return {
        "zero": np.zeros(grid.n),
        "sine": lip * np.sin(2 * np.pi * x) / (2 * np.pi),
        "sine3": lip * np.sin(2 * np.pi * 3 * x) / (2 * np.pi * 3),
        "cosine": lip * np.cos(2 * np.pi * 2 * x) / (2 * np.pi * 2),
        "mixed": lip * (np.sin(2 * np.pi * x) + 0.5 * np.cos(4 * np.pi * x))
        / (4 * np.pi),
    }


def run_beta(cfg):
    from .grid import Grid1D
    from .halfplane import Tent
    from .lipschitz import LipschitzFunction, beta_tent_size, beta_weighted
    grid = Grid1D(cfg["m"])
    rows = []
    tents = [Tent(c, s) for c in (0.0, 0.25, 0.5, 0.75)
             for s in (0.25, 0.5, 1.0)]
    for name, values in _beta_profiles(grid).items():
        A = LipschitzFunction(grid, values)
        beta = beta_weighted(A, eps=cfg["eps"], sample_budget=cfg["budget"],
                             n_max=cfg["n"])
        if name == "zero" and np.max(np.abs(beta.values)) != 0.0:
            raise AssertionFailure("beta of the zero profile is not exactly 0")
        for tent in tents:
            s2 = beta_tent_size(beta, tent)
            ratio = s2 / A.lip if A.lip > 0 else 0.0
            rows.append((name, A.lip, tent.center, tent.s, s2, ratio))
    return "beta.csv", ["profile", "lip", "tent_center", "tent_s",
                        "size2", "ratio"], rows


def run_embed(cfg):
    from .grid import Grid1D, ScaleLattice, lp_norm, random_band_limited
    from .halfplane import embed, outer_lp
    grid = Grid1D(cfg["m"])
    lattice = ScaleLattice(0, cfg["m"] - 2, substeps=2)
    rng = np.random.default_rng(cfg["seed"])
    rows = []
    for trial in range(cfg["trials"]):
        f = random_band_limited(grid, rng, band=grid.n // 8)
        for p in cfg["p"]:
            fnorm = lp_norm(f, p)
            d = outer_lp(embed(f, "D_c", lattice), p, size_p=2.0)
            a = outer_lp(embed(f, "A_c", lattice), p, size_p=np.inf)
            if not (np.isfinite(d) and np.isfinite(a)):
                raise AssertionFailure("embedding outer norm not finite")
            rows.append((trial, p, "D_c", d, fnorm, d / fnorm))
            rows.append((trial, p, "A_c", a, fnorm, a / fnorm))
    return "embed.csv", ["trial", "p", "kind", "outer_lp", "f_norm",
                         "ratio"], rows


def run_tiles(cfg):
    from .grid import Grid2D, random_band_limited
    from .tiles import (Tile, bessel_sum, correlation, make_wave_packet,
                        sigma_measure)
    grid = Grid2D(cfg["m"], cfg["m"])
    um = cfg["unit_m"]
    rows = []
    base = Tile(0, 0, 1, 2)
    pk = make_wave_packet(base, grid, 2.0, 0, um)
    norm_err = abs(np.sqrt(np.mean(np.abs(pk.values) ** 2)) - 1.0)
    if norm_err > 1e-8:
        raise AssertionFailure(f"packet L2 normalization off by {norm_err:.2e}")
    rows.append(("norm_err", 0, norm_err))
    for dl in cfg["shear_ladder"]:
        rows.append(("shear_corr", dl,
                     correlation(base, Tile(0, dl, 1, 2), grid, 0, um)))
    for dk in cfg["scale_ladder"]:
        rows.append(("scale_corr", dk,
                     correlation(base, Tile(dk, 0, 1, 2), grid, 0, um)))
    coll = [Tile(0, l, n1, n2) for l in (0, 1) for n1 in (0, 2)
            for n2 in (0, 1)]
    rng = np.random.default_rng(cfg["seed"])
    for trial in range(cfg["bessel_trials"]):
        f = random_band_limited(grid, rng, band=grid.n1 // 4)
        b = bessel_sum(f, coll, grid, 0, um)
        rows.append(("bessel_ratio", trial,
                     b / np.mean(np.abs(f.values) ** 2)))
    rows.append(("sigma", 0, sigma_measure(coll)))
    return "tiles.csv", ["kind", "param", "value"], rows


def _random_rects(rng, n):
    from .cover import VParallelogram
    rects = []
    for _ in range(n):
        ln = Fraction(1, int(rng.choice([2, 4, 8])))
        left = Fraction(int(rng.integers(0, 8)), 8)
        if left + ln > 1:
            left = 1 - ln
        slope = Fraction(int(rng.integers(-4, 5)), 8)
        cy = Fraction(int(rng.integers(2, 15)), 16)
        h = Fraction(1, int(rng.choice([8, 16, 32])))
        rects.append(VParallelogram(left, ln, slope, cy, h))
    return rects


def run_cover(cfg):
    from .cover import (VParallelogram, overlap_statistics, packing_check,
                        select_cover)
    from .geometry import union_area
    shape = (cfg["raster"], cfg["raster"])
    rows = []
    R = VParallelogram(Fraction(1, 4), Fraction(1, 2), Fraction(1, 8),
                       Fraction(1, 2), Fraction(1, 16))
    dup = select_cover([R, R], shape)
    if len(dup.selected) != 1:
        raise AssertionFailure("duplicated parallelogram not pruned")
    rows.append(("duplicated", "basic", 2, 1, float(R.area), float(R.area),
                 1.0, True))
    rng = np.random.default_rng(cfg["seed"])
    for inst in range(cfg["instances"]):
        rects = _random_rects(rng, cfg["n_rects"])
        res = select_cover(rects, shape)
        pk = packing_check(res)
        union = union_area([r.corners() for r in rects])
        total = float(sum(r.area for r in res.selected))
        rows.append((f"random{inst}", "basic", len(rects),
                     len(res.selected), union, total,
                     union / total if total else 0.0, pk["holds"]))
        u = np.zeros(shape)
        fat = [r for r in rects
               if overlap_statistics([r], shape)["raster_moments"][1] > 0]
        ok = [r for r in fat if float(r.uncertainty()[0]) <= 0.0
              <= float(r.uncertainty()[1])]
        if ok:
            res2 = select_cover(ok, shape, mode="lipschitz_kakeya", u=u,
                                delta=0.5)
            pk2 = packing_check(res2)
            union2 = union_area([r.corners() for r in ok])
            total2 = float(sum(r.area for r in res2.selected))
            rows.append((f"random{inst}", "lipschitz_kakeya", len(ok),
                         len(res2.selected), union2, total2,
                         union2 / total2 if total2 else 0.0, pk2["holds"]))
    return "cover.csv", ["instance", "mode", "n_input", "n_selected",
                         "union_area", "selected_area", "ratio",
                         "packing_ok"], rows


def run_square(cfg):
    from .filters import make_filter_pair
    from .grid import Grid2D, ScaleLattice, SampledField, lp_norm, \
        random_band_limited
    from .directional import (gaussian_profile_hat, single_scale_average,
                              single_scale_square_function)
    grid = Grid2D(cfg["m"], cfg["m"])
    pair = make_filter_pair()
    lattice = ScaleLattice(0, cfg["m"] - 3, substeps=2)
    rng = np.random.default_rng(cfg["seed"])
    # constant-direction multiplier oracle
    m1, m2 = 2, 3
    x1, x2 = grid.points()
    harm = SampledField(grid, np.exp(
        2j * np.pi * (m1 * x1[:, None] + m2 * x2[None, :])))
    af = single_scale_average(harm, 1.0)
    ks = np.arange(-(grid.n1 // 2), grid.n1 // 2) / grid.n1
    from .directional import gaussian_profile
    pred = np.sum(gaussian_profile(ks)
                  * np.exp(-2j * np.pi * ks * (m1 + m2))) / grid.n1
    err = float(np.max(np.abs(af.values - pred * harm.values)))
    if err > 1e-8:
        raise AssertionFailure(f"constant-u multiplier oracle off by {err:.2e}")
    rows = [("oracle_err", 0, err)]
    for trial in range(cfg["trials"]):
        u = rng.uniform(-1.0, 1.0, size=grid.shape)
        f = random_band_limited(grid, rng, band=grid.n1 // 4)
        sq = single_scale_square_function(f, u, lattice, pair)
        ratio = (np.mean(sq ** 4) ** 0.25) / lp_norm(f, 4.0)
        rows.append(("ratio_p4", trial, float(ratio)))
    return "square.csv", ["kind", "trial", "value"], rows


def run_katz(cfg):
    from .grid import Grid2D, SampledField
    from .directional import gaussian_profile, n_direction_maximal
    grid = Grid2D(cfg["m"], cfg["m"])
    rng = np.random.default_rng(cfg["seed"])
    k1 = grid.frequencies(0)[:, None]
    k2 = grid.frequencies(1)[None, :]
    rad = np.sqrt(k1 ** 2 + k2 ** 2)
    band = (rad > grid.n1 / 4) & (rad < grid.n1 / 2.5)
    phi_l1 = float(np.sum(np.abs(gaussian_profile(
        np.arange(-(grid.n1 // 2), grid.n1 // 2) / grid.n1))) / grid.n1)
    rows = []
    for N in cfg["N"]:
        if cfg["direction_set"] == "structured":
            dirs = np.array([2 * k / N for k in range(-(N // 2),
                                                      N - N // 2)]) \
                if N > 1 else np.array([0.0])
            dirs = np.clip(dirs, -1.0, 1.0)
        else:
            dirs = rng.uniform(-1.0, 1.0, size=N)
        for p in cfg["p"]:
            best = 0.0
            for _ in range(cfg["trials"]):
                spec = (rng.standard_normal(grid.shape)
                        + 1j * rng.standard_normal(grid.shape)) * band
                f = SampledField(grid, np.fft.ifft2(spec))
                mf = n_direction_maximal(f, dirs)
                num = float(np.mean(mf ** p) ** (1 / p))
                den = float(np.mean(np.abs(f.values) ** p) ** (1 / p))
                best = max(best, num / den)
            rows.append((N, p, best, cfg["trials"], cfg["seed"]))
            if N == 1 and best > phi_l1 + 1e-6:
                raise AssertionFailure(
                    f"single-direction norm {best:.6f} exceeds L1 bound "
                    f"{phi_l1:.6f}")
    return "katz_sweep.csv", ["N", "p", "norm_estimate", "trials",
                              "seed"], rows


def run_cww(cfg):
    from .grid import Grid2D, SampledField, random_band_limited
    from .directional import cww_experiment, martingale_average
    grid = Grid2D(cfg["m"], cfg["m"])
    rng = np.random.default_rng(cfg["seed"])
    f = random_band_limited(grid, rng, band=grid.n1 // 4)
    lam = float(np.quantile(np.abs(f.values), cfg["quantile"]))
    rows = cww_experiment(f, cfg["j_max"], lam, cfg["eps"])
    # coarse-measurable f: constant on level-2 squares, so the square
    # function vanishes above that level and the deviation set is caught
    coarse = SampledField(grid, martingale_average(f, 2).astype(complex))
    lam2 = float(np.quantile(np.abs(coarse.values), cfg["quantile"]))
    crows = cww_experiment(coarse, 2, lam2, cfg["eps"])
    for r in crows:
        if r["numerator"] != 0.0:
            raise AssertionFailure("coarse-measurable numerator nonzero")
    out = [(r["epsilon"], r["lambda"], r["numerator"], r["denominator"],
            r["ratio"]) for r in rows]
    return "cww.csv", ["epsilon", "lambda", "numerator", "denominator",
                       "ratio"], out


RUNNERS = {
    "lp-diag": run_lp_diag, "beta": run_beta, "embed": run_embed,
    "tiles": run_tiles, "cover": run_cover, "square": run_square,
    "katz": run_katz, "cww": run_cww,
}


def _load_config(name, args):
    cfg = dict(DEFAULTS[name])
    if args.config:
        try:
            with open(args.config) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
        unknown = set(user) - set(cfg)
        if unknown:
            raise ConfigError(
                f"unknown config fields for {name}: {sorted(unknown)}")
        cfg.update(user)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.grid is not None:
        if "m" in cfg:
            cfg["m"] = args.grid
        elif "raster" in cfg:
            cfg["raster"] = args.grid
    for key, expected in DEFAULTS[name].items():
        if type(cfg[key]) is bool is not type(expected):
            raise ConfigError(f"field {key}: expected {type(expected)}")
    return cfg


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="dhl", description="directional harmonic analysis experiments")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="JSON config file; flags override its fields")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--grid", type=int, default=None,
                       help="grid exponent (or raster size for cover)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    t0 = time.time()
    try:
        cfg = _load_config(args.subcommand, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        csv_name, header, rows = RUNNERS[args.subcommand](cfg)
    except AssertionFailure as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_csv(out / csv_name, header, rows)
    _write_manifest(out, args.subcommand, cfg, t0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
