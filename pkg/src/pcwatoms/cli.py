"""Command-line front end: forward simulation, synthesis, fitting, decay.

Subcommands exchange data through CSV files (header row with unit-suffixed
column names, LF line endings) and optional static SVG line charts.  All
runs are deterministic given the config file and seed.  Exit codes: 0
success, 2 input/config error, 3 numeric/convergence error.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import decay as decay_mod
from . import ensemble as ens
from . import fitkit
from . import photonic1d as ph
from .errors import InputError, NumericError, PcwError
from .spinmodel import CouplingRates, cqed_rates
from .units import GAMMA_0_MHZ

SCHEMA_VERSION = 1

# config schema: key -> (parser, default, help)
_SCHEMA = {
    "schema": (int, SCHEMA_VERSION, "config schema version"),
    "stack.cell_layers": (str, "default", "unit cell as 'index:thickness_nm,...' or 'default'"),
    "stack.n_cells": (int, 150, "number of nominal cells"),
    "stack.taper_layers": (str, "default", "'default', 'none' or 'index:thickness_nm,...'"),
    "stack.n_outside": (float, ph.DEFAULT_N_HI, "index of the outside media"),
    "bands.start_thz": (float, 216.9, "band scan start (THz)"),
    "bands.stop_thz": (float, 220.6, "band scan stop (THz)"),
    "bands.points": (int, 371, "band scan points"),
    "fields.nu_thz": (float, ph.DEFAULT_NU_1_THZ, "frequency for the field profile (THz)"),
    "ratescan.start_dbe_ghz": (float, -150.0, "rate sweep start, detuning from edge (GHz)"),
    "ratescan.stop_dbe_ghz": (float, 90.0, "rate sweep stop (GHz)"),
    "ratescan.points": (int, 49, "rate sweep points"),
    "ratescan.gamma_ref_g0": (float, ph.DEFAULT_GAMMA_REF, "peak rate at nu_1 (Gamma_0)"),
    "rates.gamma_1d_g0": (float, 1.4, "peak guided decay rate (Gamma_0)"),
    "rates.j_1d_g0": (float, 0.0, "peak guided shift (Gamma_0)"),
    "rates.gamma_prime_g0": (float, 2.0, "non-guided decay rate (Gamma_0)"),
    "rates.delta_0_mhz": (float, 12.5, "common line shift (MHz)"),
    "ensemble.n_bar": (float, 3.0, "mean atom number"),
    "ensemble.position_method": (str, "quadrature", "'quadrature' or 'monte-carlo'"),
    "ensemble.samples": (int, 100_000, "Monte Carlo position samples"),
    "ensemble.kappa_x_rad_per_nm": (float, 0.0, "interaction attenuation constant (rad/nm)"),
    "ensemble.spread_nm": (float, 12_000.0, "trap extent along the axis (nm)"),
    "grid.start_mhz": (float, -100.0, "detuning grid start (MHz)"),
    "grid.stop_mhz": (float, 100.0, "detuning grid stop (MHz)"),
    "grid.points": (int, 201, "detuning grid points"),
    "synth.noise": (float, 0.02, "additive Gaussian noise level on T/T0"),
    "synth.model": (str, "te", "'te' (averaged spin model) or 'tm' (optical density)"),
    "tm.gamma_1d_tm_g0": (float, 0.045, "TM guided decay rate (Gamma_0)"),
    "fit.model": (str, "te", "'te' or 'tm'"),
    "fit.n_bar": (float, 3.0, "fixed mean atom number for spectrum fits"),
    "fig4.start_dbe_ghz": (float, -150.0, "headline sweep start (GHz)"),
    "fig4.stop_dbe_ghz": (float, 90.0, "headline sweep stop (GHz)"),
    "fig4.points": (int, 49, "headline sweep points"),
    "fig4.gamma_c_ghz": (float, 60.0, "comparator cavity linewidth (GHz)"),
    "decay.n_atoms": (int, 1, "atom number for the model decay curve"),
    "decay.gamma_1d_gp": (float, 1.4, "guided rate in Gamma' units"),
    "decay.points": (int, 400, "decay curve samples"),
    "decay.t_max_inv_gp": (float, 8.0, "curve extent in units of 1/Gamma'"),
    "decay.window_lo": (float, decay_mod.FIT_WINDOW[0], "fit window start (1/rate units)"),
    "decay.window_hi": (float, decay_mod.FIT_WINDOW[1], "fit window stop (1/rate units)"),
    "decay.hold_series": (str, "yes", "also run the hold-time pipeline ('yes'/'no')"),
    "decay.tau_sr_ms": (float, 16.0, "superradiance decay constant of the series (ms)"),
    "decay.asymptote_gp": (float, 2.12, "long-hold asymptote of the series (Gamma')"),
    "decay.nbar_probe": (float, 3.0, "mean atom number at the probe hold time"),
    "decay.probe_time_ms": (float, 4.0, "probe hold time (ms)"),
    "decay.hold_points": (int, 17, "hold-time series points"),
    "decay.hold_max_ms": (float, 64.0, "hold-time series extent (ms)"),
}


class ConfigError(InputError):
    pass


def load_config(path=None):
    """Parse a flat dotted-key config file against the schema."""
    cfg = {k: v[1] for k, v in _SCHEMA.items()}
    if path is None:
        return cfg
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        parser = _SCHEMA[key][0]
        try:
            cfg[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    if cfg["schema"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {cfg['schema']}")
    return cfg


def print_schema(stream=sys.stdout):
    for key, (parser, default, help_text) in _SCHEMA.items():
        stream.write(f"{key} = {default}   # {parser.__name__}: {help_text}\n")


def _parse_layers(text):
    layers = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        n, _, d = item.partition(":")
        layers.append((float(n), float(d)))
    if not layers:
        raise ConfigError(f"empty layer list {text!r}")
    return tuple(layers)


def build_stack(cfg):
    if cfg["stack.cell_layers"] == "default" and cfg["stack.taper_layers"] == "default":
        return ph.default_stack(cfg["stack.n_cells"])
    cell = (ph.default_stack().cell if cfg["stack.cell_layers"] == "default"
            else _parse_layers(cfg["stack.cell_layers"]))
    if cfg["stack.taper_layers"] == "default":
        taper = ph.default_stack().taper
    elif cfg["stack.taper_layers"] == "none":
        taper = ()
    else:
        taper = _parse_layers(cfg["stack.taper_layers"])
    return ph.LayerStack(cell=cell, n_cells=cfg["stack.n_cells"], taper=taper,
                         n_outside=cfg["stack.n_outside"])


def build_rates(cfg):
    return CouplingRates(gamma_1d=cfg["rates.gamma_1d_g0"],
                         j_1d=cfg["rates.j_1d_g0"],
                         gamma_prime=cfg["rates.gamma_prime_g0"],
                         delta_0=cfg["rates.delta_0_mhz"])


def detuning_grid(cfg):
    return np.linspace(cfg["grid.start_mhz"], cfg["grid.stop_mhz"], cfg["grid.points"])


# ---------------------------------------------------------------------------
# output helpers

def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def write_csv(path: Path, header, rows):
    """CSV with unit-suffixed header, '.' decimals and LF endings."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def read_spectrum_csv(path):
    """Read (detuning_MHz, T_over_T0[, sigma]) with line-numbered errors."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise InputError(f"{path}:1: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if header[:2] != ["detuning_MHz", "T_over_T0"]:
        raise InputError(f"{path}:1: expected header 'detuning_MHz,T_over_T0[,sigma]', "
                         f"got {lines[0]!r}")
    has_sigma = len(header) > 2 and header[2] == "sigma"
    det, t_rel, sig = [], [], []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) < 2 + has_sigma:
            raise InputError(f"{path}:{lineno}: expected {2 + has_sigma} columns, "
                             f"got {len(parts)}")
        try:
            det.append(float(parts[0]))
            t_rel.append(float(parts[1]))
            if has_sigma:
                sig.append(float(parts[2]))
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: non-numeric field ({exc})") from exc
    return ens.Spectrum(det, t_rel, sigma=sig if has_sigma else None)


def write_svg(path: Path, x, y, *, title, x_label, y_label):
    """Minimal static line chart; CSV stays the canonical output."""
    w, h, m = 640, 420, 60
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    finite = np.isfinite(x) & np.isfinite(y)
    x, y = x[finite], y[finite]
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(y.min()), float(y.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    px = m + (x - x0) / (x1 - x0) * (w - 2 * m)
    py = h - m - (y - y0) / (y1 - y0) * (h - 2 * m)
    points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" '
        'fill="none" stroke="black"/>',
        f'<polyline points="{points}" fill="none" stroke="#1f6fb2" stroke-width="1.5"/>',
        f'<text x="{w / 2:.0f}" y="24" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{w / 2:.0f}" y="{h - 14}" text-anchor="middle" font-size="12">{x_label}</text>',
        f'<text x="16" y="{h / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {h / 2:.0f})">{y_label}</text>',
        f'<text x="{m}" y="{h - m + 16}" font-size="10">{x0:.6g}</text>',
        f'<text x="{w - m}" y="{h - m + 16}" text-anchor="end" font-size="10">{x1:.6g}</text>',
        f'<text x="{m - 4}" y="{h - m}" text-anchor="end" font-size="10">{y0:.6g}</text>',
        f'<text x="{m - 4}" y="{m + 10}" text-anchor="end" font-size="10">{y1:.6g}</text>',
        "</svg>",
    ]
    path.write_bytes("\n".join(parts).encode("ascii"))


def _thread_count():
    raw = os.environ.get("PCWATOMS_THREADS", "1")
    try:
        return max(int(raw), 1)
    except ValueError:
        return 1


def _map_grid(fn, items):
    threads = _thread_count()
    if threads == 1:
        return [fn(v) for v in items]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# subcommands

def cmd_bands(cfg, out_dir, fmt, seed):
    stack = build_stack(cfg)
    nus = np.linspace(cfg["bands.start_thz"], cfg["bands.stop_thz"], cfg["bands.points"])
    rows = []
    for nu, res in zip(nus, _map_grid(lambda nu: ph.bloch_analysis(stack, nu), nus)):
        rows.append((nu, res.value, res.in_gap))
    write_csv(out_dir / "bands.csv",
              ("nu_THz", "delta_k_or_kappa_rad_per_nm", "in_gap"), rows)
    if fmt in ("svg", "both"):
        write_svg(out_dir / "bands.svg", nus, [r[1] for r in rows],
                  title="Bloch dispersion", x_label="nu (THz)",
                  y_label="delta_k or kappa (rad/nm)")
    return 0


def cmd_fields(cfg, out_dir, fmt, seed):
    stack = build_stack(cfg)
    x, intensity = ph.field_profile(stack, cfg["fields.nu_thz"])
    write_csv(out_dir / "fields.csv", ("x_nm", "intensity_rel"),
              list(zip(x, intensity)))
    if fmt in ("svg", "both"):
        write_svg(out_dir / "fields.svg", x, intensity,
                  title=f"|E|^2 at {cfg['fields.nu_thz']:.6g} THz",
                  x_label="x (nm)", y_label="per-cell peak |E|^2")
    return 0


def _rate_sweep(cfg, start_key, stop_key, points_key):
    stack = build_stack(cfg)
    edge = ph.band_edge(stack, ph.DEFAULT_NU_BE_THZ - 2.0, ph.DEFAULT_NU_BE_THZ + 2.0) \
        if cfg["stack.cell_layers"] == "default" else \
        ph.band_edge(stack, cfg["bands.start_thz"], cfg["bands.stop_thz"])
    x0 = ph.default_emitter_position(stack)
    nu_ref = edge - 0.1329 if cfg["stack.cell_layers"] == "default" else edge - 0.1
    dbes = np.linspace(cfg[start_key], cfg[stop_key], cfg[points_key])
    gref = cfg["ratescan.gamma_ref_g0"]

    def one(dbe):
        return ph.greens_rates(stack, x0, edge + dbe * 1e-3, gref, nu_ref)

    return edge, nu_ref, dbes, _map_grid(one, dbes)


def cmd_rates(cfg, out_dir, fmt, seed):
    edge, _, dbes, rates = _rate_sweep(cfg, "ratescan.start_dbe_ghz",
                                       "ratescan.stop_dbe_ghz", "ratescan.points")
    rows = [(dbe, edge + dbe * 1e-3, r.gamma_1d, r.j_1d)
            for dbe, r in zip(dbes, rates)]
    write_csv(out_dir / "rates.csv",
              ("delta_be_GHz", "nu_THz", "gamma_1d_Gamma0", "j_1d_Gamma0"), rows)
    if fmt in ("svg", "both"):
        write_svg(out_dir / "rates.svg", dbes, [r.gamma_1d for r in rates],
                  title="Guided decay rate", x_label="detuning from edge (GHz)",
                  y_label="Gamma_1D (Gamma_0)")
    return 0


def cmd_spectrum(cfg, out_dir, fmt, seed, *, filename="spectrum.csv"):
    det = detuning_grid(cfg)
    rates = build_rates(cfg)
    spec = ens.EnsembleSpec(n_bar=cfg["ensemble.n_bar"],
                            position_method=cfg["ensemble.position_method"],
                            samples=cfg["ensemble.samples"],
                            seed=seed)
    if cfg["synth.model"] == "tm":
        od = ens.od_resonant(cfg["ensemble.n_bar"], cfg["tm.gamma_1d_tm_g0"],
                             cfg["rates.gamma_prime_g0"])
        width = (cfg["tm.gamma_1d_tm_g0"] + cfg["rates.gamma_prime_g0"]) * GAMMA_0_MHZ
        curve = ens.od_transmission(det, od, width, cfg["rates.delta_0_mhz"])
    else:
        curve = ens.average_poisson(spec, rates, det,
                                    kappa_x=cfg["ensemble.kappa_x_rad_per_nm"],
                                    spread_nm=cfg["ensemble.spread_nm"]).values
    write_csv(out_dir / filename, ("detuning_MHz", "T_over_T0"),
              list(zip(det, curve)))
    if fmt in ("svg", "both"):
        write_svg(out_dir / (Path(filename).stem + ".svg"), det, curve,
                  title="Relative transmission", x_label="detuning (MHz)",
                  y_label="T/T0")
    return 0


def cmd_synth(cfg, out_dir, fmt, seed):
    if seed is None:
        raise InputError("synth requires --seed for reproducible noise")
    cmd_spectrum(cfg, out_dir, "csv", seed, filename="synth_clean.csv")
    clean = read_spectrum_csv(out_dir / "synth_clean.csv")
    rng = np.random.Generator(np.random.Philox(key=seed))
    sigma = cfg["synth.noise"]
    noisy = clean.values + (sigma * rng.standard_normal(clean.values.size)
                            if sigma > 0 else 0.0)
    rows = [(d, t, sigma if sigma > 0 else 1e-12)
            for d, t in zip(clean.detunings, noisy)]
    write_csv(out_dir / "synth.csv", ("detuning_MHz", "T_over_T0", "sigma"), rows)
    if fmt in ("svg", "both"):
        write_svg(out_dir / "synth.svg", clean.detunings, noisy,
                  title="Synthetic spectrum", x_label="detuning (MHz)",
                  y_label="T/T0")
    return 0


def _report_lines(report, names):
    lines = [f"converged: {'yes' if report.converged else 'no'} ({report.message})",
             f"iterations: {report.iterations}",
             f"chi2: {_fmt(report.chi2)}"]
    for name in names:
        value, err = report.parameters[name]
        flag = "  [at bound]" if report.at_bound.get(name) else ""
        lines.append(f"{name}: {_fmt(value)} +/- {_fmt(err)}{flag}")
    return lines


def cmd_fit(cfg, out_dir, fmt, seed, data_path):
    spectrum = read_spectrum_csv(data_path)
    n_bar = cfg["fit.n_bar"]
    if cfg["fit.model"] == "tm":
        report = fitkit.fit_tm_spectrum(spectrum, n_bar)
        names = ("gamma_1d_tm", "gamma_prime", "delta_0")
        gtm, gp = report.value("gamma_1d_tm"), report.value("gamma_prime")
        od = ens.od_resonant(n_bar, gtm, gp)
        model = ens.od_transmission(spectrum.detunings, od,
                                    (gtm + gp) * GAMMA_0_MHZ,
                                    report.value("delta_0"))
    elif cfg["fit.model"] == "te":
        report = fitkit.fit_te_spectrum(spectrum, n_bar)
        names = ("gamma_1d", "j_1d", "gamma_prime", "delta_0")
        fitted = CouplingRates(gamma_1d=report.value("gamma_1d"),
                               j_1d=report.value("j_1d"),
                               gamma_prime=report.value("gamma_prime"),
                               delta_0=report.value("delta_0"))
        model = ens.average_poisson(ens.EnsembleSpec(n_bar=n_bar), fitted,
                                    spectrum.detunings).values
    else:
        raise ConfigError(f"unknown fit model {cfg['fit.model']!r}")

    lines = [f"model: {cfg['fit.model']}", f"n_bar (fixed): {_fmt(n_bar)}"]
    lines += _report_lines(report, names)
    text = "\n".join(lines) + "\n"
    (out_dir / "fit_report.txt").write_bytes(text.encode("ascii"))
    sys.stdout.write(text)
    write_csv(out_dir / "fit_residuals.csv",
              ("detuning_MHz", "T_over_T0", "model", "residual"),
              [(d, t, m, t - m) for d, t, m in
               zip(spectrum.detunings, spectrum.values, model)])
    if not report.converged:
        raise NumericError("fit did not converge; see fit_report.txt")
    return 0


def cmd_decay(cfg, out_dir, fmt, seed):
    g1d, n = cfg["decay.gamma_1d_gp"], cfg["decay.n_atoms"]
    t = np.linspace(0.0, cfg["decay.t_max_inv_gp"], cfg["decay.points"])
    intensity = decay_mod.intensity_n(n, t, g1d, 1.0)
    write_csv(out_dir / "decay_curve.csv",
              ("t_inv_gamma_prime", "intensity_arb"), list(zip(t, intensity)))
    if fmt in ("svg", "both"):
        write_svg(out_dir / "decay_curve.svg", t, intensity,
                  title=f"Fluorescence decay, N={n}",
                  x_label="t (1/Gamma')", y_label="intensity")

    curve = decay_mod.DecayCurve(t[1:], intensity[1:], gamma_1d=g1d, gamma_prime=1.0)
    window = (cfg["decay.window_lo"], cfg["decay.window_hi"])
    rate = decay_mod.fit_single_exponential(curve, window)
    lines = [f"n_atoms: {n}",
             f"gamma_1d (Gamma'): {_fmt(g1d)}",
             f"fitted total rate (Gamma'): {_fmt(rate)}",
             f"fitted gamma_1d_bar (Gamma'): {_fmt(rate - 1.0)}",
             f"ratio gamma_1d_bar/gamma_1d: {_fmt((rate - 1.0) / g1d)}"]

    if cfg["decay.hold_series"] == "yes":
        nbar = cfg["decay.nbar_probe"]
        tau = cfg["decay.tau_sr_ms"]
        probe = cfg["decay.probe_time_ms"]
        asym = cfg["decay.asymptote_gp"]
        model_rate = decay_mod.poisson_average_rate(nbar, g1d)
        g_sr0 = (model_rate - asym) * np.exp(probe / tau)
        tm = np.linspace(0.0, cfg["decay.hold_max_ms"], cfg["decay.hold_points"])
        g_tot = g_sr0 * np.exp(-tm / tau) + asym
        write_csv(out_dir / "decay_holdtimes.csv",
                  ("hold_time_ms", "gamma_tot_gamma_prime"), list(zip(tm, g_tot)))
        report = decay_mod.fit_nbar(np.column_stack([tm, g_tot]), g1d,
                                    probe_time_ms=probe)
        lines += ["",
                  f"hold-time series: tau_sr = {_fmt(tau)} ms, asymptote = {_fmt(asym)} Gamma'",
                  f"fitted tau_sr_ms: {_fmt(report.tau_sr_ms)}",
                  f"fitted asymptote (Gamma'): {_fmt(report.asymptote)}",
                  f"fitted gamma_sr(0) (Gamma'): {_fmt(report.gamma_sr0)}",
                  f"n_bar at probe time: {_fmt(report.n_bar)}",
                  f"eta_sr: {_fmt(report.eta_sr)}"]

    text = "\n".join(lines) + "\n"
    (out_dir / "decay_report.txt").write_bytes(text.encode("ascii"))
    sys.stdout.write(text)
    return 0


def cmd_fig4(cfg, out_dir, fmt, seed):
    edge, nu_ref, dbes, rates = _rate_sweep(cfg, "fig4.start_dbe_ghz",
                                            "fig4.stop_dbe_ghz", "fig4.points")
    gamma_c = cfg["fig4.gamma_c_ghz"]
    nu1_offset_ghz = (edge - nu_ref) * 1e3
    rows = []
    for dbe, r in zip(dbes, rates):
        ratio = r.gamma_1d / abs(r.j_1d) if r.j_1d != 0 else np.inf
        delta_c = dbe + nu1_offset_ghz
        r_cqed = gamma_c / abs(delta_c) if delta_c != 0 else np.inf
        rows.append((dbe, r.gamma_1d, -r.j_1d, ratio, r_cqed))
    write_csv(out_dir / "fig4.csv",
              ("delta_be_GHz", "gamma_1d_Gamma0", "minus_j_1d_Gamma0",
               "r_ratio", "r_cqed"), rows)
    if fmt in ("svg", "both"):
        write_svg(out_dir / "fig4.svg", dbes, [row[3] for row in rows],
                  title="Dissipative-to-coherent ratio",
                  x_label="detuning from edge (GHz)", y_label="Gamma_1D/|J_1D|")
    return 0


# ---------------------------------------------------------------------------

_COMMANDS = {
    "bands": cmd_bands,
    "fields": cmd_fields,
    "rates": cmd_rates,
    "spectrum": cmd_spectrum,
    "synth": cmd_synth,
    "fit": cmd_fit,
    "decay": cmd_decay,
    "fig4": cmd_fig4,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="pcwatoms",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--print-schema", action="store_true",
                        help="list all config keys with defaults and exit")
    sub = parser.add_subparsers(dest="command")
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="config file path")
        p.add_argument("--seed", type=int, default=None, help="RNG seed")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "svg", "both"), default="csv")
        if name == "fit":
            p.add_argument("data", help="input spectrum CSV")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_schema:
        print_schema()
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "fit":
            return cmd_fit(cfg, out_dir, args.format, args.seed, args.data)
        return _COMMANDS[args.command](cfg, out_dir, args.format, args.seed)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except NumericError as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return 3
    except PcwError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
