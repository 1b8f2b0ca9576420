"""Experiment configuration, dispatch and result serialisation.

Configs are flat ``key = value`` text with ``#`` comments.  Values not set in
the file come from a named preset (``toroidal-2005`` by default).
"""
from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import IO, Sequence

import numpy as np

from .bh_model import BHParams, build_bh_hamiltonian, ground_state, site_statistics
from .fock_space import CavityGraph, enumerate_basis
from .microscopic import compare_kappa_shift, one_excitation_spectrum
from .open_dynamics import IntegratorControl, ObservableSeries, evolve, initial_mott_state
from .polariton_params import (
    PhysicalParams,
    adiabatic_margin,
    effective_parameters,
    make_ramp,
    validity_report,
)

KINDS = ("params", "ground-scan", "ramp", "validate-micro")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDITY = 2

_FLOAT_KEYS = {
    "g13", "g24", "omega_l_start", "omega_l_end", "ramp_duration", "delta_cap", "delta_small",
    "epsilon", "gamma_c", "gamma3", "gamma4", "gamma_dephase", "two_omega_alpha", "omega_c",
    "rtol", "atol", "max_step", "validity_threshold", "scan_min", "scan_max",
}
_INT_KEYS = {"n_atoms", "n_max", "samples", "n_p", "scan_points"}
_STR_KEYS = {"ramp_shape", "graph", "initial", "output", "format", "chemical"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS

_TOROIDAL = {
    "g13": 2.5e9,
    "g24": 2.5e9,
    "gamma3": 1.6e7,
    "gamma4": 1.6e7,
    "gamma_c": 0.4e5,
    "n_atoms": 1000,
    "delta_cap": -2.0e10,
    "two_omega_alpha": 1.1e7,
    "omega_l_start": 7.8e10,
    "omega_l_end": 1.1e12,
    # not specified for the experiment; half of delta_cap (see polariton_params.toroidal_2005)
    "delta_small": -1.0e10,
    "epsilon": 0.0,
    "gamma_dephase": 0.0,
    "omega_c": 0.0,
    "ramp_duration": 1e-6,
    "ramp_shape": "exponential",
    "graph": "cycle:3",
    "n_max": 3,
    "rtol": 1e-8,
    "atol": 1e-12,
    "samples": 200,
    "n_p": 2,
    "validity_threshold": 0.25,
    "scan_min": 1e-2,
    "scan_max": 1e2,
    "scan_points": 41,
    "chemical": "yes",
    "format": "csv",
}

# photonic band-gap cavities: same atoms, cavity loss set so that kappa/Gamma -> 5.2
# for Omega_L << sqrt(N) g13, i.e. gamma_c = g24^2 / (|Delta| * 5.2)
PBG_KAPPA_OVER_GAMMA = 5.2
_PBG = dict(_TOROIDAL, gamma_c=_TOROIDAL["g24"] ** 2
            / (abs(_TOROIDAL["delta_cap"]) * PBG_KAPPA_OVER_GAMMA))

PRESETS = {"toroidal-2005": _TOROIDAL, "pbg": _PBG, "none": {}}

# keys that must be present (from file or preset) for every kind
_REQUIRED = ("g13", "g24", "delta_cap", "two_omega_alpha", "n_atoms", "omega_l_start")
_OPTIONAL_DEFAULTS = {
    "delta_small": 0.0, "epsilon": 0.0, "gamma_c": 0.0, "gamma3": 0.0, "gamma4": 0.0,
    "gamma_dephase": 0.0, "omega_c": 0.0, "ramp_shape": "exponential", "ramp_duration": 1e-6,
    "graph": "cycle:3", "n_max": 3, "rtol": 1e-8, "atol": 1e-12, "samples": 200, "n_p": 2,
    "validity_threshold": 0.25, "scan_min": 1e-2, "scan_max": 1e2, "scan_points": 41,
    "chemical": "yes", "format": "csv",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    physical: PhysicalParams
    omega_l_end: float | None
    ramp_duration: float
    ramp_shape: str
    graph: CavityGraph
    n_max: int
    initial: tuple[int, ...]
    rtol: float = 1e-8
    atol: float = 1e-12
    max_step: float | None = None
    samples: int = 200
    n_p: int = 2
    validity_threshold: float = 0.25
    scan_min: float = 1e-2
    scan_max: float = 1e2
    scan_points: int = 41
    include_chemical: bool = True
    output: str | None = None
    format: str = "csv"
    preset: str = "toroidal-2005"
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    def ramp(self):
        end = self.omega_l_end if self.omega_l_end is not None else self.physical.omega_l
        return make_ramp(self.physical.omega_l, end, self.ramp_duration, self.ramp_shape)

    def control(self) -> IntegratorControl:
        return IntegratorControl(rtol=self.rtol, atol=self.atol, samples=self.samples,
                                 max_step=self.max_step, include_chemical=self.include_chemical,
                                 n_p=self.n_p)


def parse_graph(spec: str) -> CavityGraph:
    """``cycle:M``, ``chain:M`` or ``M: i-j, k-l, ...``."""
    spec = spec.strip()
    head, sep, tail = spec.partition(":")
    if not sep:
        raise ValueError(f"graph spec {spec!r} needs a ':'")
    head = head.strip().lower()
    if head in ("cycle", "chain"):
        m = int(tail)
        return CavityGraph.cycle(m) if head == "cycle" else CavityGraph.chain(m)
    m = int(head)
    edges = []
    for item in filter(None, (x.strip() for x in tail.split(","))):
        i, _, j = item.partition("-")
        edges.append((int(i), int(j)))
    return CavityGraph.from_edges(m, edges)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "yes", "true", "on"):
        return True
    if t in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(key: str, raw: str):
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _INT_KEYS:
        x = float(raw)
        if not x.is_integer():
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(x)
    return raw.strip()


def parse_config(text: str, kind: str = "params", preset: str = "toroidal-2005") -> ExperimentConfig:
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {', '.join(PRESETS)}")
    values: dict = {}
    lines: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in lines:
            raise ConfigError(f"line {lineno}: {key!r} already set on line {lines[key]}")
        try:
            values[key] = _convert(key, raw.strip())
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
        lines[key] = lineno

    merged = {**_OPTIONAL_DEFAULTS, **PRESETS[preset], **values}
    missing = [k for k in _REQUIRED if k not in merged]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)} (preset {preset!r})")

    def where(key):
        return f"line {lines[key]}" if key in lines else f"preset {preset!r}"

    try:
        physical = PhysicalParams(
            g13=merged["g13"], g24=merged["g24"], omega_l=merged["omega_l_start"],
            delta_cap=merged["delta_cap"], two_omega_alpha=merged["two_omega_alpha"],
            n_atoms=merged["n_atoms"], delta_small=merged["delta_small"],
            epsilon=merged["epsilon"], gamma_c=merged["gamma_c"], gamma3=merged["gamma3"],
            gamma4=merged["gamma4"], gamma_dephase=merged["gamma_dephase"],
            omega_c=merged["omega_c"],
        )
    except ValueError as exc:
        raise ConfigError(f"invalid physical parameters: {exc}") from None
    if physical.g13 <= 0:
        raise ConfigError(f"{where('g13')}: g13 must be positive")

    try:
        graph = parse_graph(merged["graph"])
    except ValueError as exc:
        raise ConfigError(f"{where('graph')}: bad graph spec: {exc}") from None

    if "initial" in merged:
        try:
            initial = tuple(int(x) for x in merged["initial"].replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"{where('initial')}: occupations must be integers") from None
    else:
        initial = (1,) * graph.site_count
    if len(initial) != graph.site_count or min(initial) < 0:
        raise ConfigError(f"{where('initial')}: need {graph.site_count} non-negative occupations")
    n_max = merged["n_max"]
    if kind in ("ramp", "ground-scan") and sum(initial) > n_max:
        raise ConfigError(f"{where('n_max')}: n_max={n_max} below initial particle number {sum(initial)}")

    for key in ("ramp_duration", "rtol", "atol"):
        if merged[key] <= 0:
            raise ConfigError(f"{where(key)}: {key} must be positive")
    if merged["samples"] < 2:
        raise ConfigError(f"{where('samples')}: need at least 2 samples")
    if merged["ramp_shape"] not in ("linear", "exponential"):
        raise ConfigError(f"{where('ramp_shape')}: ramp_shape must be linear or exponential")
    if merged["format"] not in ("csv", "json"):
        raise ConfigError(f"{where('format')}: format must be csv or json")
    if merged["scan_points"] < 1 or not 0 < merged["scan_min"] <= merged["scan_max"]:
        raise ConfigError("scan grid needs 0 < scan_min <= scan_max and scan_points >= 1")
    try:
        chemical = _parse_bool(merged["chemical"])
    except ValueError as exc:
        raise ConfigError(f"{where('chemical')}: {exc}") from None

    return ExperimentConfig(
        kind=kind, physical=physical, omega_l_end=merged.get("omega_l_end"),
        ramp_duration=merged["ramp_duration"], ramp_shape=merged["ramp_shape"], graph=graph,
        n_max=n_max, initial=initial, rtol=merged["rtol"], atol=merged["atol"],
        max_step=merged.get("max_step"), samples=merged["samples"], n_p=merged["n_p"],
        validity_threshold=merged["validity_threshold"], scan_min=merged["scan_min"],
        scan_max=merged["scan_max"], scan_points=merged["scan_points"],
        include_chemical=chemical, output=merged.get("output"), format=merged["format"],
        preset=preset, raw=merged,
    )


# -- serialisation ------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


def write_table(columns: Sequence[str], rows, fmt: str, path: str | None) -> None:
    fh, close = _open_out(path)
    try:
        if fmt == "csv":
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        elif fmt == "json":
            records = [dict(zip(columns, (float(v) for v in row))) for row in rows]
            json.dump(records, fh, indent=1)
            fh.write("\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
    finally:
        if close:
            fh.close()


def write_series(series: ObservableSeries, fmt: str = "csv", path: str | None = None) -> None:
    """Write ``t,omega_l,kappa,j,gamma,n_1..n_M,f_1..f_M,trace,purity`` rows."""
    write_table(series.columns(), series.rows(), fmt, path)


def read_csv_table(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


# -- experiments -----------------------------------------------------------------

def _thread_count() -> int:
    raw = os.environ.get("POLARITON_BH_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _report_lines(title: str, mapping: dict) -> list[str]:
    out = [f"[{title}]"]
    for k, v in mapping.items():
        out.append(f"{k} = {v!r}" if isinstance(v, (str, bool)) else f"{k} = {float(v):.6g}")
    return out


def params_report(cfg: ExperimentConfig) -> dict:
    p = cfg.physical
    ramp = cfg.ramp()
    report = {}
    for label, omega in (("start", ramp.omega_start), ("end", ramp.omega_end)):
        q = p.with_omega_l(omega)
        eff = effective_parameters(q)
        rep = validity_report(q, cfg.n_p, cfg.validity_threshold)
        report[label] = {
            "effective": {**asdict(eff), "kappa_over_gamma": eff.kappa_over_gamma,
                          "omega_l": omega},
            "validity": {**rep.ratios, "threshold": rep.threshold, "passed": rep.passed,
                         "level": rep.level},
            "adiabatic_margin": adiabatic_margin(q, ramp.slope_at(0.0 if label == "start" else ramp.duration)),
        }
    return report


def _validity_ok(cfg: ExperimentConfig, omegas) -> tuple[bool, list[str]]:
    problems = []
    for omega in omegas:
        rep = validity_report(cfg.physical.with_omega_l(omega), cfg.n_p, cfg.validity_threshold)
        if not rep.passed:
            problems.append(f"Omega_L={omega:.4g}: {rep.level} ({', '.join(rep.failures())})")
    return not problems, problems


def ground_scan(cfg: ExperimentConfig) -> tuple[list[str], list[list[float]]]:
    basis = enumerate_basis(cfg.graph.site_count, cfg.n_max)
    n_particles = sum(cfg.initial)
    ratios = np.geomspace(cfg.scan_min, cfg.scan_max, cfg.scan_points)

    def point(r):
        H = build_bh_hamiltonian(basis, cfg.graph, BHParams(kappa=1.0, J=float(r)))
        _, vec = ground_state(H, basis, n_particles)
        st = site_statistics(vec, basis, 0)
        return [float(r), st.fluctuation, st.mean_n]

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        rows = list(pool.map(point, ratios))
    return ["j_over_kappa", "f_1", "n_1"], rows


def run_experiment(cfg: ExperimentConfig, strict_validity: bool = False,
                   stream: IO[str] | None = None) -> int:
    """Run ``cfg`` and return the process exit status."""
    stream = stream or sys.stdout
    ramp = cfg.ramp()
    ok, problems = _validity_ok(cfg, (ramp.omega_start, ramp.omega_end))
    for msg in problems:
        print(f"warning: polariton mapping validity: {msg}", file=sys.stderr)

    if cfg.kind == "params":
        report = params_report(cfg)
        if cfg.output:
            with open(cfg.output, "w", encoding="utf-8") as fh:
                json.dump(report, fh, indent=1)
                fh.write("\n")
        else:
            for label, block in report.items():
                for section in ("effective", "validity"):
                    print("\n".join(_report_lines(f"{label}.{section}", block[section])), file=stream)
                print(f"adiabatic_margin = {block['adiabatic_margin']:.6g}", file=stream)
    elif cfg.kind == "ground-scan":
        columns, rows = ground_scan(cfg)
        write_table(columns, rows, cfg.format, cfg.output)
    elif cfg.kind == "ramp":
        basis = enumerate_basis(cfg.graph.site_count, cfg.n_max)
        rho0 = initial_mott_state(basis, cfg.initial)
        series = evolve(rho0, cfg.physical, ramp, cfg.graph, basis, cfg.control())
        write_series(series, cfg.format, cfg.output)
    elif cfg.kind == "validate-micro":
        cmp = compare_kappa_shift(cfg.physical, cfg.n_p)
        eff = effective_parameters(cfg.physical)
        spectrum = one_excitation_spectrum(cfg.physical.__class__(
            **{**asdict(cfg.physical), "g24": 0.0, "epsilon": 0.0}))
        expected = np.sort([eff.mu_plus, 0.0, eff.mu_minus])
        report = {
            "n_atoms": cfg.physical.n_atoms,
            "n_p": cmp.n_p,
            "omega_l": cfg.physical.omega_l,
            "measured_shift": cmp.measured,
            "predicted_shift": cmp.predicted,
            "relative_error": cmp.rel_error,
            "dark_overlap": cmp.overlap,
            "one_excitation_max_deviation": float(np.max(np.abs(np.sort(spectrum) - expected))
                                                  / max(abs(eff.mu_plus), abs(eff.mu_minus))),
        }
        if cfg.output:
            with open(cfg.output, "w", encoding="utf-8") as fh:
                json.dump(report, fh, indent=1)
                fh.write("\n")
        else:
            print("\n".join(_report_lines("validate-micro", report)), file=stream)
    else:  # pragma: no cover - parse_config rejects unknown kinds
        raise ConfigError(f"unknown kind {cfg.kind!r}")

    if strict_validity and not ok:
        return EXIT_VALIDITY
    return EXIT_OK

