"""Command-line orchestrator: scenarios, reports, and the N = C check.

Subcommands
-----------
``spectrum``  sweep a scenario and export the window eigenvalue table plus
              the closed-form branch table of the named models;
``flow``      compute the spectral flow through the scenario's gap window;
``chern``     compute per-band Chern indices by one or all methods;
``verify``    run flow and Chern together and assert that they agree.

Every subcommand takes ``--preset <name>`` or ``--scenario <file.json>``,
``--out <path>`` and ``--format json|csv``; reports are written atomically
(temp file + rename) and JSON output is byte-deterministic apart from the
``timings`` block.

Exit codes: 0 success / verdict PASS; 1 configuration or model error;
2 usage error; 3 flow computation failure; 4 Chern computation failure;
5 verify verdict FAIL.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .errors import (
    AliasingError,
    DegenerateZeroError,
    DegeneracyError,
    EndpointInSpectrumError,
    IndexLabError,
    MethodDisagreementError,
    ModelError,
    RefinementError,
    SectionVanishesError,
)
from .flow import FlowResult, SpectralWindow, spectral_index, sweep
from .hermite import AffineMatrixSymbol, TruncatedBasis, sampled_gap_certificate
from .models import (
    constant_symbol,
    matsuno_branch_table,
    matsuno_symbol,
    normal_form_eigenvalue,
    normal_form_symbol,
    ts2_symbol,
    BranchLabel,
)
from .topology import (
    BandProjectorField,
    ChernReport,
    SphereGrid,
    chern_clutching,
    chern_curvature,
    chern_section_zeros,
)

__all__ = ["Scenario", "VerificationReport", "PRESETS", "load_preset",
           "run_spectrum", "run_flow", "run_chern", "run_verify", "main", "entry"]

SCHEMA = "indexlab.scenario/1"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_USAGE = 2
EXIT_FLOW = 3
EXIT_CHERN = 4
EXIT_VERDICT = 5

_FLOW_ERRORS = (EndpointInSpectrumError, RefinementError, MethodDisagreementError)
_CHERN_ERRORS = (DegeneracyError, SectionVanishesError, AliasingError,
                 DegenerateZeroError)


@dataclass(frozen=True)
class Scenario:
    """Fully serializable description of one laboratory run."""

    name: str
    model: str
    model_params: dict = field(default_factory=dict)
    max_level: int = 24
    guard_levels: int = 5
    window: tuple[float, float, float] = (-0.9, 0.9, 0.0)
    mu_min: float = -2.0
    mu_max: float = 2.0
    steps: int = 32
    grid_n: int = 64
    equator_samples: int = 512
    chern_bands: tuple[int, ...] = ()
    zero_refs: dict = field(default_factory=dict)
    clutch_refs: dict = field(default_factory=dict)
    branch_table_levels: int = 8
    schema: str = SCHEMA

    def __post_init__(self):
        if self.schema != SCHEMA:
            raise ModelError(f"unsupported scenario schema {self.schema!r}")
        if self.model not in ("normal-form", "matsuno", "ts2", "constant"):
            raise ModelError(f"unknown model {self.model!r}")

    # -- construction of live objects -------------------------------------
    def symbol(self) -> AffineMatrixSymbol:
        params = self.model_params
        if self.model == "normal-form":
            sym = normal_form_symbol(
                epsilon=params.get("epsilon", 1.0),
                reflected=bool(params.get("reflected", False)),
            )
        elif self.model == "matsuno":
            sym = matsuno_symbol(gap_band=int(params.get("gap_band", 2)))
        elif self.model == "ts2":
            sym = ts2_symbol(gap_band=int(params.get("gap_band", 2)))
        else:
            sym = constant_symbol(
                value=float(params.get("value", 5.0)),
                dim=int(params.get("dim", 1)),
            )
        override = params.get("gap_band_override")
        if override is not None:
            sym = dataclasses.replace(sym, gap_band=int(override))
        return sym

    def basis(self) -> TruncatedBasis:
        eps = self.model_params.get("epsilon", 1.0) if self.model == "normal-form" else 1.0
        return TruncatedBasis(
            max_level=self.max_level, epsilon=float(eps),
            guard_levels=self.guard_levels,
        )

    def spectral_window(self) -> SpectralWindow:
        lo, hi, ref = self.window
        return SpectralWindow(omega_min=lo, omega_max=hi, omega_ref=ref)

    def zero_ref_for(self, band: int) -> np.ndarray:
        stored = self.zero_refs.get(str(band))
        if stored is not None:
            return np.array([complex(re, im) for re, im in stored])
        return _default_zero_ref(self.model, band, self.symbol().dim)

    def clutch_refs_for(self, band: int):
        strategy = self.clutch_refs.get(str(band), "poles")
        if strategy == "poles":
            return None, None
        if strategy == "global-section":
            fn = _GLOBAL_SECTIONS.get((self.model, band))
            if fn is None:
                raise ModelError(
                    f"no registered global section for {self.model} band {band}"
                )
            return fn, fn
        raise ModelError(f"unknown clutching reference strategy {strategy!r}")

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["window"] = list(self.window)
        d["chern_bands"] = list(self.chern_bands)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        data = dict(data)
        data["window"] = tuple(data.get("window", (-0.9, 0.9, 0.0)))
        data["chern_bands"] = tuple(data.get("chern_bands", ()))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ModelError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**data)


def _default_zero_ref(model: str, band: int, dim: int) -> np.ndarray:
    if model == "matsuno":
        if band == 2:
            return np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
        return np.array([0.0, 0.0, 1.0], dtype=complex)
    if model == "ts2":
        return np.array([0.0, 0.0, 1.0], dtype=complex)
    if model == "normal-form":
        return np.array([0.0, 1.0], dtype=complex) if band == 1 else np.array([1.0, 0.0], dtype=complex)
    return np.eye(dim, dtype=complex)[0]


def _matsuno_band2_section(p: np.ndarray) -> np.ndarray:
    """Tautological nonvanishing section of the flat middle band."""
    mu, x, xi = p
    return np.array([-x, 1j * xi, -1j * mu])


def _ts2_band2_section(p: np.ndarray) -> np.ndarray:
    """The rotation generator's kernel at p is spanned by p itself."""
    return np.asarray(p, dtype=complex)


_GLOBAL_SECTIONS: dict[tuple[str, int], Callable] = {
    ("matsuno", 2): _matsuno_band2_section,
    ("ts2", 2): _ts2_band2_section,
}


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _normal_form_preset() -> Scenario:
    return Scenario(
        name="normal-form",
        model="normal-form",
        model_params={"epsilon": 1.0},
        max_level=24,
        window=(-0.9, 0.9, 0.0),
        mu_min=-2.0,
        mu_max=2.0,
        steps=32,
        grid_n=64,
        chern_bands=(1, 2),
        branch_table_levels=10,
    )


def _matsuno_preset(name: str, gap_band: int, window, mu, steps) -> Scenario:
    return Scenario(
        name=name,
        model="matsuno",
        model_params={"gap_band": gap_band},
        max_level=60,
        window=window,
        mu_min=mu[0],
        mu_max=mu[1],
        steps=steps,
        grid_n=64,
        chern_bands=(1, 2, 3),
        clutch_refs={"2": "global-section"},
        branch_table_levels=8,
    )


PRESETS: dict[str, Callable[[], Scenario]] = {
    "normal-form": _normal_form_preset,
    "matsuno": lambda: _matsuno_preset(
        "matsuno", 2, (1.1, 1.5, 1.3), (-4.0, 4.0), 161
    ),
    "matsuno-upper-gap": lambda: _matsuno_preset(
        "matsuno-upper-gap", 2, (1.1, 1.5, 1.3), (-6.0, 6.0), 48
    ),
    "matsuno-lower-gap": lambda: _matsuno_preset(
        "matsuno-lower-gap", 1, (-1.5, -1.1, -1.3), (-6.0, 6.0), 48
    ),
    "ts2": lambda: Scenario(
        name="ts2",
        model="ts2",
        model_params={"gap_band": 2},
        max_level=24,
        window=(0.3, 0.7, 0.5),
        mu_min=-2.0,
        mu_max=2.0,
        steps=32,
        grid_n=64,
        chern_bands=(3,),
    ),
    "constant": lambda: Scenario(
        name="constant",
        model="constant",
        model_params={"value": 5.0, "dim": 1},
        max_level=24,
        window=(-0.9, 0.9, 0.0),
        mu_min=-2.0,
        mu_max=2.0,
        steps=32,
        grid_n=64,
        chern_bands=(),
    ),
}


def load_preset(name: str) -> Scenario:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ModelError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        ) from None


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def _closed_form_rows(scenario: Scenario) -> list[tuple[float, str, int, float]]:
    """Labeled branch values on the requested mu grid for the named models."""
    rows: list[tuple[float, str, int, float]] = []
    mus = np.linspace(scenario.mu_min, scenario.mu_max, scenario.steps + 1)
    if scenario.model == "matsuno":
        for mu in mus:
            for label, omega in matsuno_branch_table(float(mu), scenario.branch_table_levels):
                rows.append((float(mu), label.family, label.level, omega))
    elif scenario.model == "normal-form":
        eps = float(scenario.model_params.get("epsilon", 1.0))
        sign = -1.0 if scenario.model_params.get("reflected") else 1.0
        for mu in mus:
            m = sign * float(mu)
            rows.append((float(mu), "normal_zero", 0, normal_form_eigenvalue(BranchLabel("normal_zero"), m, eps)))
            for n in range(1, scenario.branch_table_levels + 1):
                for fam in ("normal_minus", "normal_plus"):
                    rows.append((float(mu), fam, n, normal_form_eigenvalue(BranchLabel(fam, n), m, eps)))
    return rows


def run_spectrum(scenario: Scenario) -> dict:
    """Sweep and export (mu, ordinal, omega, spurious_weight) records."""
    t0 = time.monotonic()
    symbol = scenario.symbol()
    symbol.validate()
    sw = sweep(
        symbol,
        scenario.basis(),
        scenario.spectral_window(),
        scenario.mu_min,
        scenario.mu_max,
        scenario.steps,
    )
    report = {
        "schema": "indexlab.spectrum/1",
        "scenario": scenario.to_dict(),
        "rows": [list(r) for r in sw.table_rows()],
        "closed_form_rows": [list(r) for r in _closed_form_rows(scenario)],
        "timings": {"seconds": time.monotonic() - t0},
    }
    return report


def run_flow(scenario: Scenario) -> dict:
    """Spectral flow of the scenario through its gap window."""
    t0 = time.monotonic()
    symbol = scenario.symbol()
    symbol.validate()
    sampled_gap_certificate(symbol, strict=True)
    sw = sweep(
        symbol,
        scenario.basis(),
        scenario.spectral_window(),
        scenario.mu_min,
        scenario.mu_max,
        scenario.steps,
    )
    result = spectral_index(sw)
    return {
        "schema": "indexlab.flow/1",
        "scenario": scenario.to_dict(),
        "N": result.N,
        "method_counts": result.method_counts,
        "crossings": [
            {"mu_lo": c.mu_lo, "mu_hi": c.mu_hi, "direction": c.direction}
            for c in result.crossings
        ],
        "samples": len(sw.samples),
        "timings": {"seconds": time.monotonic() - t0},
    }


def _chern_report_dict(report: ChernReport) -> dict:
    out = {
        "method": report.method,
        "C": report.C,
        "raw_value": report.raw_value,
        "residual": report.residual,
        "diagnostics": report.diagnostics,
    }
    if report.zeros:
        out["zeros"] = [
            {"point": list(z.point), "index": z.index} for z in report.zeros
        ]
    return out


def run_chern(scenario: Scenario, method: str = "all") -> dict:
    """Per-band Chern indices by the requested method(s)."""
    if method not in ("curvature", "clutching", "zeros", "all"):
        raise ModelError(f"unknown chern method {method!r}")
    t0 = time.monotonic()
    symbol = scenario.symbol()
    symbol.validate()
    bands = scenario.chern_bands or tuple(range(1, symbol.dim + 1))
    grid = SphereGrid.build(scenario.grid_n)
    per_band = []
    c_values = []
    agreement = True
    for band in bands:
        fld = BandProjectorField.build(symbol, [band], grid)
        reports: dict[str, ChernReport] = {}
        if method in ("curvature", "all"):
            reports["curvature"] = chern_curvature(fld)
        if method in ("clutching", "all"):
            north, south = scenario.clutch_refs_for(band)
            reports["clutching"] = chern_clutching(
                fld, scenario.equator_samples, north_ref=north, south_ref=south
            )
        if method in ("zeros", "all"):
            reports["zeros"] = chern_section_zeros(fld, scenario.zero_ref_for(band))
        values = {r.C for r in reports.values()}
        agreement = agreement and len(values) == 1
        c_values.append(next(iter(reports.values())).C)
        per_band.append(
            {"band": band, "reports": {k: _chern_report_dict(v) for k, v in reports.items()}}
        )
    out = {
        "schema": "indexlab.chern/1",
        "scenario": scenario.to_dict(),
        "method": method,
        "C": c_values,
        "bands": per_band,
        "timings": {"seconds": time.monotonic() - t0},
    }
    if method == "all":
        out["agreement"] = agreement
    return out


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of the flow-equals-Chern check for one scenario."""

    scenario: Scenario
    flow: FlowResult
    subgap_chern: int
    subgap_raw: float
    band_reports: tuple
    verdict: str

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"


def run_verify(scenario: Scenario) -> tuple[VerificationReport, dict]:
    """Compute the flow and the sub-gap bundle index; PASS iff they agree.

    The bundle below the tracked gap is bands ``1..gap_band``; its index is
    computed with the determinant-overlap curvature method (rank >= 2 safe).
    A scenario with no band below the gap has index 0 by convention.
    """
    t0 = time.monotonic()
    symbol = scenario.symbol()
    symbol.validate()
    sampled_gap_certificate(symbol, strict=True)

    sw = sweep(
        symbol,
        scenario.basis(),
        scenario.spectral_window(),
        scenario.mu_min,
        scenario.mu_max,
        scenario.steps,
    )
    flow_result = spectral_index(sw)
    t_flow = time.monotonic()

    grid = SphereGrid.build(scenario.grid_n)
    if symbol.gap_band >= 1:
        subgap = BandProjectorField.build(
            symbol, tuple(range(1, symbol.gap_band + 1)), grid
        )
        subgap_report = chern_curvature(subgap)
        subgap_c, subgap_raw = subgap_report.C, subgap_report.raw_value
    else:
        subgap_c, subgap_raw = 0, 0.0

    chern_all = run_chern(scenario, "all") if scenario.chern_bands else None
    verdict = "PASS" if flow_result.N == subgap_c else "FAIL"
    report = VerificationReport(
        scenario=scenario,
        flow=flow_result,
        subgap_chern=subgap_c,
        subgap_raw=subgap_raw,
        band_reports=tuple(chern_all["bands"]) if chern_all else (),
        verdict=verdict,
    )
    payload = {
        "schema": "indexlab.verify/1",
        "scenario": scenario.to_dict(),
        "flow": {
            "N": flow_result.N,
            "method_counts": flow_result.method_counts,
            "crossings": [
                {"mu_lo": c.mu_lo, "mu_hi": c.mu_hi, "direction": c.direction}
                for c in flow_result.crossings
            ],
        },
        "chern": {
            "subgap_bands": list(range(1, symbol.gap_band + 1)),
            "C": subgap_c,
            "raw_value": subgap_raw,
            "per_band": chern_all["bands"] if chern_all else [],
            "agreement": chern_all.get("agreement") if chern_all else None,
        },
        "verdict": verdict,
        "timings": {
            "flow_seconds": t_flow - t0,
            "chern_seconds": time.monotonic() - t_flow,
        },
    }
    return report, payload


# ---------------------------------------------------------------------------
# output formatting
# ---------------------------------------------------------------------------

def _fmt17(x: float) -> str:
    return format(float(x), ".17g")


def _spectrum_csv(report: dict) -> str:
    lines = ["mu,branch,omega,spurious_weight"]
    for mu, ordinal, omega, wt in report["rows"]:
        lines.append(f"{_fmt17(mu)},{int(ordinal)},{_fmt17(omega)},{_fmt17(wt)}")
    return "\n".join(lines) + "\n"


def _branches_csv(report: dict) -> str:
    lines = ["mu,family,level,omega"]
    for mu, family, level, omega in report["closed_form_rows"]:
        lines.append(f"{_fmt17(mu)},{family},{int(level)},{_fmt17(omega)}")
    return "\n".join(lines) + "\n"


def _flow_csv(report: dict) -> str:
    lines = ["key,value", f"N,{report['N']}"]
    for k, v in report["method_counts"].items():
        lines.append(f"{k},{v}")
    for c in report["crossings"]:
        lines.append(f"crossing,{_fmt17(c['mu_lo'])}:{_fmt17(c['mu_hi'])}:{c['direction']}")
    return "\n".join(lines) + "\n"


def _chern_csv(report: dict) -> str:
    lines = ["band,method,C,raw_value,residual"]
    for entry in report["bands"]:
        for name, rep in entry["reports"].items():
            lines.append(
                f"{entry['band']},{name},{rep['C']},{_fmt17(rep['raw_value'])},"
                f"{_fmt17(rep['residual'])}"
            )
    return "\n".join(lines) + "\n"


def _verify_csv(payload: dict) -> str:
    lines = [
        "key,value",
        f"N,{payload['flow']['N']}",
        f"C,{payload['chern']['C']}",
        f"verdict,{payload['verdict']}",
    ]
    return "\n".join(lines) + "\n"


def _to_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".indexlab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None):
    if out:
        _atomic_write(out, text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------

def _load_scenario(args: argparse.Namespace) -> Scenario:
    if args.scenario:
        with open(args.scenario) as fh:
            scenario = Scenario.from_dict(json.load(fh))
    else:
        scenario = load_preset(args.preset)
    overrides = {}
    if args.grid is not None:
        overrides["grid_n"] = args.grid
    if args.levels is not None:
        overrides["max_level"] = args.levels
    if overrides:
        scenario = dataclasses.replace(scenario, **overrides)
    return scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="indexlab",
        description="Spectral-flow vs Chern-index laboratory for matrix wave operators",
    )
    parser.add_argument("--version", action="version", version=f"indexlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("spectrum", "export window eigenvalue branches over the mu sweep"),
        ("flow", "count the spectral flow through the gap window"),
        ("chern", "compute per-band Chern indices"),
        ("verify", "check that spectral flow equals the sub-gap Chern index"),
    ):
        p = sub.add_parser(name, help=help_)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
        src.add_argument("--scenario", help="path to a scenario JSON file")
        p.add_argument("--out", help="output path (stdout when omitted)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--grid", type=int, help="override sphere grid size N")
        p.add_argument("--levels", type=int, help="override Hermite cutoff M")
        if name == "chern":
            p.add_argument(
                "--method",
                choices=("curvature", "clutching", "zeros", "all"),
                default="all",
            )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses code 2 for usage errors
        return int(exc.code or 0)

    try:
        scenario = _load_scenario(args)
    except (OSError, json.JSONDecodeError, IndexLabError, TypeError) as exc:
        print(f"indexlab: scenario error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "spectrum":
            report = run_spectrum(scenario)
            if args.format == "csv":
                _emit(_spectrum_csv(report), args.out)
                if args.out and report["closed_form_rows"]:
                    stem, ext = os.path.splitext(args.out)
                    _atomic_write(stem + "_branches" + ext, _branches_csv(report))
            else:
                _emit(_to_json(report), args.out)
            return EXIT_OK

        if args.command == "flow":
            report = run_flow(scenario)
            _emit(_flow_csv(report) if args.format == "csv" else _to_json(report), args.out)
            return EXIT_OK

        if args.command == "chern":
            report = run_chern(scenario, args.method)
            _emit(_chern_csv(report) if args.format == "csv" else _to_json(report), args.out)
            if args.method == "all" and not report["agreement"]:
                print("indexlab: chern methods disagree", file=sys.stderr)
                return EXIT_CHERN
            return EXIT_OK

        # verify
        result, payload = run_verify(scenario)
        _emit(_verify_csv(payload) if args.format == "csv" else _to_json(payload), args.out)
        if payload["chern"].get("agreement") is False:
            print("indexlab: chern methods disagree", file=sys.stderr)
            return EXIT_CHERN
        if not result.passed:
            print(
                f"indexlab: FAIL: spectral flow {result.flow.N} != "
                f"Chern index {result.subgap_chern}",
                file=sys.stderr,
            )
            return EXIT_VERDICT
        return EXIT_OK

    except _FLOW_ERRORS as exc:
        print(f"indexlab: flow error: {exc}", file=sys.stderr)
        return EXIT_FLOW
    except _CHERN_ERRORS as exc:
        print(f"indexlab: chern error: {exc}", file=sys.stderr)
        return EXIT_CHERN
    except (IndexLabError, np.linalg.LinAlgError) as exc:
        print(f"indexlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"indexlab: i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
