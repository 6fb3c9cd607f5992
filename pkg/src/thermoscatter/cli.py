"""Command line driver: coefficient tables, identity suites, simulations and comparisons.

Exit codes: 0 success, 1 scientific failure (identity or comparison outside
tolerance), 2 invalid input, 3 numerical failure (quadrature, resolution,
periodic wrap-around or an unfinished scattering event).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as X
from .chain import run_ensemble
from .config import ExperimentConfig, from_dict, tomllib
from .errors import (
    DomainError,
    OutOfBand,
    PacketNotCleared,
    QuadratureFailure,
    ResolutionError,
    SingularWavenumber,
    ValidationError,
    WrapAround,
)
from .scattering import (
    DEFAULT_TOLERANCES,
    ScatteringTheory,
    ThermostatParams,
    default_k_grid,
    identity_suite,
    interface_coefficients,
)
from .wigner import empirical_wigner, interface_fractions, scattered_spectrum

EXIT_OK, EXIT_SCIENCE, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3

UNITS = {
    "t_micro": "lattice time",
    "t_macro": "eps * t_micro",
    "x": "macroscopic length (eps * site index)",
    "k": "wavenumber in cycles per site, [-1/2, 1/2)",
    "energy": "sum over sites of |psi_y|^2",
    "fractions": "share of the incident energy",
    "W": "energy per unit k per unit x, normalized to total mass eps * E / 2",
}


def versions():
    import numba
    import scipy

    return {
        "thermoscatter": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------
def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


class Writer:
    """Writes result files and a manifest; every JSON file carries the resolved config."""

    def __init__(self, cfg: ExperimentConfig, command):
        self.cfg = cfg
        self.command = command
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = {}

    def _header(self):
        return {
            "command": self.command,
            "config": self.cfg.to_dict(),
            "config_sha256": self.cfg.content_hash(),
            "versions": versions(),
            "units": UNITS,
        }

    def json(self, name, payload):
        body = _clean(payload)
        digest = hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()
        doc = {**self._header(), "content_sha256": digest, "results": body}
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        self._write(name, text, columns=None)

    def csv(self, name, header, rows):
        lines = []
        buf = _Buffer(lines)
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        self._write(name, "".join(lines), columns=list(header))

    def _write(self, name, text, columns):
        path = self.out / name
        with open(path, "w", newline="") as fh:
            fh.write(text)
        self.files[name] = {"sha256": hashlib.sha256(text.encode()).hexdigest(), "columns": columns}

    def manifest(self):
        doc = {**self._header(), "files": self.files}
        with open(self.out / "manifest.json", "w") as fh:
            fh.write(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")


class _Buffer:
    def __init__(self, lines):
        self.lines = lines

    def write(self, s):
        self.lines.append(s)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _checks_rows(checks):
    return [[c.name, c.empirical, c.theory, c.std_err, c.z, c.passed] for c in checks]


CHECK_HEADER = ["quantity", "empirical", "theory", "std_err", "z", "passed"]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
def _tolerances(cfg):
    t = cfg.tolerances
    return {name: getattr(t, name) for name in DEFAULT_TOLERANCES}


def cmd_coeffs(cfg: ExperimentConfig, args=None):
    d = X.build_dispersion(cfg)
    params = X.build_params(cfg)
    k = default_k_grid(d, n=cfg.grid.k_points, delta_excl=cfg.grid.delta_excl)
    c = interface_coefficients(d, params, k, cfg.grid.delta_excl, tol=cfg.tolerances.quadrature)
    w = Writer(cfg, "coeffs")
    w.csv(
        "coeffs.csv",
        ["k", "re_nu", "im_nu", "p_plus", "p_minus", "g", "p_sc"],
        zip(c.k, c.nu.real, c.nu.imag, c.p_plus, c.p_minus, c.g_weight, c.p_sc),
    )
    w.json("coeffs.json", c.summary())
    w.manifest()
    print(f"Gamma = {c.Gamma:.12g}  p_abs = {c.p_abs:.12g}  int p_sc = {c.p_sc_integral:.12g}")
    return EXIT_OK


def cmd_identities(cfg: ExperimentConfig, args=None):
    d = X.build_dispersion(cfg)
    shift = getattr(args, "perturb_gamma", 0.0) or 0.0
    k = default_k_grid(d, n=cfg.grid.k_points, delta_excl=cfg.grid.delta_excl)
    tol = _tolerances(cfg)
    rows, results, all_ok = [], [], True
    names = None
    for gam in cfg.identities.gammas:
        for mu in cfg.identities.mus:
            params = ThermostatParams(gam, mu, cfg.thermostat.T)
            c = interface_coefficients(d, params, k, cfg.grid.delta_excl, tol=cfg.tolerances.quadrature,
                                       gamma_shift=shift)
            rep = identity_suite(c, tol)
            names = list(rep.residuals)
            all_ok &= rep.ok
            rows.append([gam, mu, *[rep.residuals[n] for n in names], rep.ok])
            results.append({"gamma": gam, "mu": mu, "Gamma": c.Gamma, "p_abs": c.p_abs,
                            "residuals": rep.residuals, "passed": rep.passed, "ok": rep.ok,
                            "gamma_sensitivity": rep.gamma_sensitivity})
            for line in rep.lines():
                if line.startswith("FAIL"):
                    print(f"gamma={gam:g} mu={mu:g}: {line}")
            print(f"{'PASS' if rep.ok else 'FAIL'} gamma={gam:g} mu={mu:g}")
    w = Writer(cfg, "identities")
    w.csv("identities.csv", ["gamma", "mu", *names, "passed"], rows)
    w.json("identities.json", {"tolerances": tol, "gamma_shift": shift, "matrix": results, "ok": all_ok})
    w.manifest()
    return EXIT_OK if all_ok else EXIT_SCIENCE


def _simulate(cfg, w: Writer):
    setup = X.build_setup(cfg)
    summary = run_ensemble(setup.config, cfg.ensemble.M, setup.plan, workers=cfg.workers)
    eps = setup.eps
    series = X.time_series(summary)
    T, gam, mu = cfg.thermostat.T, cfg.thermostat.gamma, cfg.thermostat.mu
    drift = gam * (2 - 1 / mu) * (T - series[:, 3])
    w.csv(
        "energy_series.csv",
        ["t_micro", "t_macro", "energy", "energy_se", "p0_squared", "p0_squared_se", "predicted_drift"],
        [[r[0], eps * r[0], r[1], r[2], r[3], r[4], dd] for r, dd in zip(series, drift)],
    )
    results = {
        "M": summary.M,
        "t_end_micro": setup.t_end,
        "t_end_macro": eps * setup.t_end,
        "energy_balance": X.energy_balance(summary).to_dict(),
        "mean_initial_energy": float(summary.per_trajectory["energy0"].mean()),
    }
    if cfg.ensemble.initial == "thermal":
        results["thermal_checks"] = [asdict(c) for c in X.check_thermal(summary, cfg.tolerances.z_threshold)]
    fr = None
    if setup.spec is not None and T == 0:
        fr = interface_fractions(summary)
        w.csv("fractions.csv", ["quantity", "value", "std_err"],
              zip(X.FRACTION_NAMES, fr.values(), fr.errors()))
        results["fractions"] = asdict(fr)
        sp = scattered_spectrum(summary)
        w.csv("spectrum.csv", ["k_lo", "k_hi", "energy", "std_err"],
              zip(sp.edges[:-1], sp.edges[1:], sp.energy, sp.std_err))
    snap = summary.final
    if setup.plan.profiles:
        N = setup.config.N
        y = np.arange(-(N // 2), N // 2)
        w.csv("profile_site.csv", ["y", "x", "energy", "std_err"],
              zip(y, eps * y, snap.vector_mean["site"], snap.vector_se["site"]))
        kk = np.fft.fftshift(np.fft.fftfreq(N))
        w.csv("profile_spectral.csv", ["k", "energy", "std_err"],
              zip(kk, snap.vector_mean["spectral"], snap.vector_se["spectral"]))
    grid = None
    if setup.plan.wigner is not None:
        feature = cfg.packet.sigma if setup.spec is not None else math.inf
        grid = empirical_wigner(summary, eps=eps, feature_scale=feature)
        X_, K_ = np.meshgrid(grid.x_grid, grid.k_grid, indexing="ij")
        w.csv("wigner.csv", ["x", "k", "W", "std_err"],
              zip(X_.ravel(), K_.ravel(), grid.values.ravel(), grid.std_err.ravel()))
        results["wigner_mass"] = grid.mass
    return setup, summary, fr, grid, results


def cmd_simulate(cfg: ExperimentConfig, args=None):
    w = Writer(cfg, "simulate")
    setup, summary, fr, grid, results = _simulate(cfg, w)
    w.json("summary.json", results)
    w.manifest()
    if fr is not None:
        for name, v, s in zip(X.FRACTION_NAMES, fr.values(), fr.errors()):
            print(f"{name:12s} {v:.6f} +- {s:.6f}")
    bal = results["energy_balance"]
    print(f"energy balance residual {bal['mean_residual']:.4g} +- {bal['residual_se']:.2g} (z = {bal['z']:.2f})")
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig, args=None):
    X.ensure_packet(cfg)
    w = Writer(cfg, "compare")
    setup, summary, fr, grid, results = _simulate(cfg, w)
    theory = ScatteringTheory(setup.config.d, setup.config.params, tol=cfg.tolerances.quadrature)
    tol = cfg.tolerances
    k0 = setup.spec.k0
    checks = X.fraction_checks(fr, X.theory_fractions(theory, k0), tol.z_threshold, tol.abs_tolerance)
    spec_expected = X.spectrum_theory(theory, setup)
    checks += X.spectrum_checks(scattered_spectrum(summary), spec_expected, tol.z_threshold_binned)
    n_wigner = 0
    if grid is not None:
        sol = X.macro_for_packet(theory, setup.spec, cfg.grid.delta_excl)
        wc = X.wigner_checks(grid, sol, setup, tol.z_threshold_binned, cfg.wigner.std_sites)
        n_wigner = len(wc)
        checks += wc
    ok = all(c.passed for c in checks)
    w.csv("comparison.csv", CHECK_HEADER, _checks_rows(checks))
    worst = {}
    for c in checks:
        fam = c.name.split("[")[0].split("(")[0]
        if fam not in worst or abs(c.z) > abs(worst[fam]["z"]):
            worst[fam] = asdict(c)
    results.update({
        "theory": {"Gamma": theory.Gamma, "p_abs": theory.p_abs, "p_sc_integral": theory.p_sc_integral,
                   "g_weight_k0": float(theory.g_weight(k0))},
        "fraction_checks": [asdict(c) for c in checks[:4]],
        "worst_by_family": worst,
        "n_wigner_cells": n_wigner,
        "ok": ok,
    })
    w.json("comparison.json", results)
    w.manifest()
    for c in checks[:4]:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name:12s} empirical {c.empirical:.5f} "
              f"theory {c.theory:.5f} se {c.std_err:.1e} z {c.z:+.2f}")
    for fam, c in worst.items():
        if fam in X.FRACTION_NAMES:
            continue
        n_fail = sum(1 for cc in checks if not cc.passed and cc.name.startswith(fam))
        print(f"{'PASS' if n_fail == 0 else 'FAIL'} {fam}: worst |z| = {abs(c['z']):.2f} ({n_fail} failing)")
    return EXIT_OK if ok else EXIT_SCIENCE


COMMANDS = {
    "coeffs": cmd_coeffs,
    "identities": cmd_identities,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------
def _parse_set(items):
    """``section.key=value`` overrides; values are parsed as TOML."""
    nested = {}
    for item in items or ():
        if "=" not in item:
            raise ValidationError(f"--set expects section.key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = tomllib.loads(f"v = {raw}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw
        parts = key.strip().split(".")
        node = nested
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return nested


def _merge(base, extra):
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _merge(base[k], v)
        else:
            base[k] = v
    return base


def resolve_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
    _merge(data, _parse_set(args.set))
    data["kind"] = args.command
    for key in ("seed", "workers", "out"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    return from_dict(data).validate()


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML experiment file")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed")
    common.add_argument("--workers", type=int, metavar="N", help="worker processes")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
    p = argparse.ArgumentParser(prog="thermoscatter", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("coeffs", parents=[common], help="tabulate interface coefficients")
    ident = sub.add_parser("identities", parents=[common], help="run the identity suite over a (gamma, mu) matrix")
    ident.add_argument("--perturb-gamma", type=float, default=0.0, metavar="DELTA",
                       help="add DELTA to the scattering constant (checks that the suite fails)")
    sub.add_parser("simulate", parents=[common], help="run an ensemble and dump observables")
    sub.add_parser("compare", parents=[common], help="compare simulated fractions and densities with theory")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except (ValidationError, SingularWavenumber, OutOfBand, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (QuadratureFailure, ResolutionError, WrapAround, PacketNotCleared) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
