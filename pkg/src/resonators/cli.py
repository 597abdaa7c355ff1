"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``) whose sections
mirror :class:`RunConfig`; command-line flags override file values.  JSON
goes to stdout unless ``--out`` is given.  Exit codes: 0 success, 1 usage
error, 2 computation error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import __version__
from .capacitance import CapacitanceMatrix, leading_model, realize
from .errors import GapTooLarge, InvalidCutoff, InvalidDims, InvalidGap, ResonatorError
from .frequencies import (PhysicalParams, epsilon_of_delta, frequencies_csv, frequencies_payload,
                          resonant_frequencies, span_and_count, imaginary_parts)
from .geometry import Kind, build_arrangement
from .modes import mode_profiles, modes_csv
from .spectra import dense_eigen, spectrum_for

log = logging.getLogger("resonators")

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_VERIFY = 0, 1, 2, 3
USAGE_ERRORS = (InvalidDims, InvalidGap, InvalidCutoff, GapTooLarge)
DEFAULT_MODES_EPS = 1e-2


class UsageError(Exception):
    pass


class VerificationFailed(Exception):
    def __init__(self, payload):
        super().__init__("verification failed")
        self.payload = payload


@dataclass
class RunConfig:
    """Resolved run configuration.

    ``gap`` holds either ``{"eps": ...}`` or ``{"Lambda": ..., "beta": ...}``;
    ``capacitance["source"]`` is one of ``model``, ``bem`` or ``file``.
    """
    kind: str = "chain"
    dims: tuple[int, ...] = (4,)
    R: float = 1.0
    gap: dict = field(default_factory=dict)
    delta: Optional[float] = None
    v: float = 1.0
    v_b: float = 1.0
    cross_check: bool = False
    capacitance: dict = field(default_factory=lambda: {"source": "model"})
    output: dict = field(default_factory=lambda: {"format": "json", "path": None})

    def params(self) -> PhysicalParams:
        if self.delta is None:
            raise UsageError("--delta is required")
        if not self.gap:
            raise UsageError("give either --eps or both --Lambda and --beta")
        return PhysicalParams(delta=self.delta, v=self.v, v_b=self.v_b, R=self.R,
                              Lambda=self.gap.get("Lambda"), beta=self.gap.get("beta"), eps=self.gap.get("eps"))

    def eps(self) -> Optional[float]:
        if "eps" in self.gap:
            return self.gap["eps"]
        if self.delta is not None and "Lambda" in self.gap:
            return epsilon_of_delta(self.params()).eps
        return None


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _flags_to_nested(ns: argparse.Namespace) -> dict:
    nested: dict[str, Any] = {"arrangement": {}, "gap": {}, "physics": {}, "capacitance": {}, "output": {}}
    if ns.kind is not None:
        nested["arrangement"]["kind"] = ns.kind
    if ns.N is not None:
        nested["arrangement"]["N"] = ns.N
    if ns.dims is not None:
        nested["arrangement"]["dims"] = ns.dims
    if ns.R is not None:
        nested["arrangement"]["R"] = ns.R
    if ns.cross_check:
        nested["arrangement"]["cross_check"] = True
    if ns.eps is not None:
        nested["gap"] = {"eps": ns.eps}
    elif ns.Lambda is not None or ns.beta is not None:
        nested["gap"] = {k: v for k, v in (("Lambda", ns.Lambda), ("beta", ns.beta)) if v is not None}
    for key, attr in (("delta", "delta"), ("v", "v"), ("v_b", "vb")):
        if getattr(ns, attr) is not None:
            nested["physics"][key] = getattr(ns, attr)
    if ns.capacitance is not None:
        nested["capacitance"]["source"] = ns.capacitance
    if ns.capacitance_file is not None:
        nested["capacitance"]["path"] = ns.capacitance_file
        nested["capacitance"].setdefault("source", "file")
    if ns.panels is not None:
        nested["capacitance"]["panels"] = ns.panels
    if ns.refine_gaps:
        nested["capacitance"]["refine_gaps"] = True
    if ns.format is not None:
        nested["output"]["format"] = ns.format
    if ns.out is not None:
        nested["output"]["path"] = ns.out
    return nested


def _check_dims(kind: str, dims: tuple, cross_check: bool) -> None:
    # same admissibility rules as build_arrangement, enforced before any computation
    k = Kind.parse(kind)
    if k is Kind.GRID:
        if len(dims) != 2 or min(dims) < 2:
            raise InvalidDims(f"grid needs dims m n with 2 <= m <= n, got {dims}")
    elif len(dims) != 1 or dims[0] < (1 if cross_check and k is Kind.CHAIN else 3):
        raise InvalidDims(f"{k.value} needs N > 2 (chains with N < 3 need --cross-check), got {dims}")


def load_config(ns: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from None
    flags = _flags_to_nested(ns)
    if flags["gap"]:
        base.pop("gap", None)
    data = _merge(base, flags)
    arr = data.get("arrangement", {})
    kind = str(arr.get("kind", "chain"))
    if "dims" in arr and arr["dims"] is not None and Kind.parse(kind) is Kind.GRID:
        dims = tuple(int(x) for x in arr["dims"])
    elif "N" in arr:
        dims = (int(arr["N"]),)
    elif "dims" in arr:
        dims = tuple(int(x) for x in np.atleast_1d(arr["dims"]))
    else:
        dims = (4,)
    cross_check = bool(arr.get("cross_check", False))
    _check_dims(kind, dims, cross_check)
    gap = data.get("gap", {}) or {}
    if "eps" in gap and ("Lambda" in gap or "beta" in gap):
        raise UsageError("config gives both an explicit eps and a (Lambda, beta) schedule")
    phys = data.get("physics", {})
    cap = {"source": "model", "panels": 1000, "refine_gaps": False}
    cap.update(data.get("capacitance", {}))
    if cap["source"] not in ("model", "bem", "file"):
        raise UsageError(f"unknown capacitance source {cap['source']!r}")
    if cap["source"] == "file" and not cap.get("path"):
        raise UsageError("capacitance source 'file' needs a path")
    out = {"format": "json", "path": None}
    out.update(data.get("output", {}))
    return RunConfig(kind=kind, dims=dims, R=float(arr.get("R", 1.0)), gap=dict(gap),
                     cross_check=cross_check,
                     delta=phys.get("delta"), v=float(phys.get("v", 1.0)), v_b=float(phys.get("v_b", 1.0)),
                     capacitance=cap, output=out)


def _arrangement(cfg: RunConfig, eps: Optional[float] = None):
    eps = eps if eps is not None else cfg.eps()
    if eps is None:
        raise UsageError("this command needs a representable gap (--eps, or a schedule that does not underflow)")
    return build_arrangement(cfg.kind, cfg.dims, cfg.R, eps, cross_check=cfg.cross_check)


def _capacitance(cfg: RunConfig, arr) -> CapacitanceMatrix:
    src = cfg.capacitance["source"]
    if src == "file":
        with open(cfg.capacitance["path"]) as fh:
            C = CapacitanceMatrix.from_dict(json.load(fh))
        if C.n != arr.n:
            raise UsageError(f"capacitance file has n={C.n}, arrangement has {arr.n}")
        return C
    if src == "bem":
        from .bem import bem_capacitance
        return bem_capacitance(arr, int(cfg.capacitance["panels"]), bool(cfg.capacitance.get("refine_gaps")))
    return realize(leading_model(arr), arr.gap)


def cmd_spectrum(cfg: RunConfig, ns) -> tuple[dict, Optional[str]]:
    spectrum = spectrum_for(cfg.kind, cfg.dims)
    text = None
    if cfg.output["format"] == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(spectrum.to_csv_rows())
        text = buf.getvalue()
    return spectrum.to_dict(), text


def cmd_frequencies(cfg: RunConfig, ns):
    p = cfg.params()
    src = cfg.capacitance["source"]
    target = (cfg.kind, cfg.dims)
    C = None
    if src == "model":
        M_source = None
    elif src == "bem":
        M_source = "bem"
        if ns.M is None and cfg.eps() is not None and cfg.eps() >= 1e-3 * cfg.R:
            C = _capacitance(cfg, _arrangement(cfg))
            M_source = C
    else:
        C = _capacitance(cfg, _arrangement(cfg, eps=cfg.eps() or 0.5 * cfg.R))
        M_source = C
    if ns.M is not None:
        M_source = ns.M
    freqs = resonant_frequencies(target, p, M_source, panels=int(cfg.capacitance["panels"]))
    if C is not None:
        freqs = _attach_imaginary(freqs, C, p, cfg)
    payload = frequencies_payload(p, freqs)
    payload["span"] = span_and_count(target, p).to_dict()
    text = frequencies_csv(freqs) if cfg.output["format"] == "csv" else None
    return payload, text


def _attach_imaginary(freqs, C, p, cfg):
    """Mean imaginary part over the eigenpairs of ``C`` that fall in each group, matched in ascending order."""
    from dataclasses import replace
    spectrum = spectrum_for(cfg.kind, cfg.dims)
    pairs = dense_eigen(C.entries)
    vol = [4.0 * math.pi * cfg.R**3 / 3.0] * C.n
    ims = imaginary_parts(C, pairs, p, vol)
    by_index, start = {}, 0
    for g in spectrum.groups:
        by_index[start + 1] = float(np.mean(ims[start:start + g.multiplicity]))
        start += g.multiplicity
    return [replace(f, im=by_index.get(f.index)) for f in freqs]


def cmd_modes(cfg: RunConfig, ns):
    eps = cfg.eps() if cfg.eps() is not None else DEFAULT_MODES_EPS * cfg.R
    arr = _arrangement(cfg, eps=eps)
    C = _capacitance(cfg, arr) if Kind.parse(cfg.kind) is not Kind.CHAIN else None
    profiles = mode_profiles(arr, C)
    payload = {"kind": arr.kind.value, "dims": list(arr.dims), "eps": eps,
               "modes": [m.to_dict() for m in profiles]}
    text = modes_csv(profiles) if cfg.output["format"] == "csv" else None
    return payload, text


def cmd_capacitance(cfg: RunConfig, ns):
    arr = _arrangement(cfg)
    C = _capacitance(cfg, arr)
    payload = C.to_dict()
    report = C.check()
    if C.provenance.value == "BEM":
        payload["checks"] = {"symmetric": report.symmetric, "positive_definite": report.positive_definite,
                         "sign_pattern": report.sign_pattern, "diagonally_dominant": report.diagonally_dominant}
    text = C.to_csv() if cfg.output["format"] == "csv" else None
    return payload, text


def _read_points(path: str) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append([float(x) for x in row[:3]])
            except ValueError:
                continue  # header line
    if not rows:
        raise UsageError(f"no points read from {path}")
    return np.array(rows)


def cmd_scatter(cfg: RunConfig, ns):
    from .bem import MeshOptions, assemble, capacitance_from_context
    from .scattering import IncidentWave, scatter
    if ns.omega is None:
        raise UsageError("scatter needs --omega")
    p = cfg.params()
    arr = _arrangement(cfg)
    ctx = assemble(arr, MeshOptions(int(cfg.capacitance["panels"]), bool(cfg.capacitance.get("refine_gaps"))))
    C = capacitance_from_context(ctx)
    freqs = resonant_frequencies(arr, p, C)
    modes = mode_profiles(arr, C)
    direction = tuple(ns.direction) if ns.direction else (1.0, 0.0, 0.0)
    norm = math.sqrt(sum(x * x for x in direction))
    w = IncidentWave(complex(ns.amplitude), tuple(x / norm for x in direction), float(ns.omega), cfg.v)
    sol = scatter(ctx, freqs, modes, w, p)
    payload = sol.to_dict()
    fields = []
    if ns.points:
        pts = _read_points(ns.points)
        vals = sol.field_evaluator(pts)
        fields = [{"x": float(x), "y": float(y), "z": float(z), "re": float(u.real), "im": float(u.imag)}
                  for (x, y, z), u in zip(pts, vals)]
    payload["fields"] = fields
    return payload, None


def cmd_verify(cfg: RunConfig, ns):
    from .verification import asymptotic_convergence, reference_tables, seed_from_env
    seed = seed_from_env()
    cases = [("chain", (8,)), ("ring", (5,)), ("grid", (2, 3))]
    if ns.kind is not None or ns.config:
        cases = [(cfg.kind, cfg.dims)]
    grid = ns.rho if ns.rho else [1e2, 1e3, 1e4]
    reports = [asymptotic_convergence(k, d, grid, seed=seed).to_dict() for k, d in cases]
    tables = reference_tables(raise_on_mismatch=False).to_dict()
    checks = [{"name": f"convergence {r['kind']} {r['dims']}", "passed": r["passed"]} for r in reports]
    checks.append({"name": "tables", "passed": tables["passed"]})
    bem = None
    if ns.bem:
        bem = _verify_bem(int(cfg.capacitance["panels"]))
        checks.extend(bem["checks"])
    payload = {"seed": seed, "convergence": reports, "tables": tables, "checks": checks,
               "passed": all(c["passed"] for c in checks)}
    if bem is not None:
        payload["bem"] = bem["rows"]
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}", file=sys.stderr)
    if not payload["passed"]:
        raise VerificationFailed(payload)
    return payload, None


def _verify_bem(panels: int) -> dict:
    from .bem import bem_capacitance
    from .verification import two_sphere_series
    rows, checks = [], []
    for eps in (0.1, 0.05):
        C = bem_capacitance(build_arrangement("chain", 2, 1.0, eps, cross_check=True), panels).entries
        S = two_sphere_series(1.0, 2.0 + eps)
        err = float(np.max(np.abs(C - S) / np.abs(S)))
        rows.append({"eps": eps, "bem": C.ravel().tolist(), "series": S.ravel().tolist(), "max_rel_err": err})
        checks.append({"name": f"bem vs series eps={eps}", "passed": err <= 0.01})
    return {"rows": rows, "checks": checks}


def cmd_tables(cfg: RunConfig, ns):
    from .verification import reference_tables
    report = reference_tables(raise_on_mismatch=False)
    payload = report.to_dict()
    print("PASS" if report.passed else "FAIL", file=sys.stderr)
    if not report.passed:
        raise VerificationFailed(payload)
    return payload, None


COMMANDS = {
    "spectrum": cmd_spectrum,
    "frequencies": cmd_frequencies,
    "modes": cmd_modes,
    "capacitance": cmd_capacitance,
    "scatter": cmd_scatter,
    "verify": cmd_verify,
    "tables": cmd_tables,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


COMMAND_HELP = {
    "spectrum": "closed-form structure eigenvalues in units of rho",
    "frequencies": "leading-order resonant frequencies with radiative damping",
    "modes": "normalized resonant modes and gap blow-up classes",
    "capacitance": "capacitance matrix from the selected --capacitance source",
    "scatter": "modal coefficients and scattered field for a plane wave",
    "verify": "convergence campaigns and reference table checks",
    "tables": "distinct-frequency counts and spans",
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config with arrangement/gap/physics/capacitance/output sections")
    common.add_argument("--kind", choices=[k.value for k in Kind])
    common.add_argument("--N", type=int)
    common.add_argument("--dims", type=int, nargs=2, metavar=("M", "N"))
    common.add_argument("--R", type=float)
    common.add_argument("--cross-check", action="store_true", help="admit chains of one or two spheres")
    common.add_argument("--eps", type=float, help="explicit gap, same unit as R")
    common.add_argument("--delta", type=float)
    common.add_argument("--Lambda", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--vb", type=float)
    common.add_argument("--v", type=float)
    common.add_argument("--capacitance", choices=["model", "bem", "file"])
    common.add_argument("--capacitance-file")
    common.add_argument("--panels", type=int, help="BEM panels per sphere (default 1000)")
    common.add_argument("--refine-gaps", action="store_true", help="graded BEM mesh near contact points")
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--out")
    common.add_argument("--verbose", action="store_true")

    parser = _Parser(prog="resonators", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=COMMAND_HELP[name])
        if name == "frequencies":
            sp.add_argument("--M", type=float, help="average capacity for the lowest frequency")
        if name == "scatter":
            sp.add_argument("--omega", type=float)
            sp.add_argument("--points", help="CSV of x,y,z evaluation points")
            sp.add_argument("--amplitude", type=complex, default=1.0)
            sp.add_argument("--direction", type=float, nargs=3)
        if name == "verify":
            sp.add_argument("--rho", type=float, nargs="+")
            sp.add_argument("--bem", action="store_true", help="include the BEM vs series comparison")
    return parser


def _emit(payload: dict, text: Optional[str], cfg: Optional[RunConfig]) -> None:
    out = text if text is not None else json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"
    path = cfg.output.get("path") if cfg else None
    if path:
        with open(path, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def run(argv=None) -> int:
    cfg = None
    try:
        ns = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING)
        cfg = load_config(ns)
        payload, text = COMMANDS[ns.command](cfg, ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except USAGE_ERRORS as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationFailed as exc:
        _emit(exc.payload, None, cfg)
        return EXIT_VERIFY
    except (ResonatorError, np.linalg.LinAlgError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    _emit(payload, text, cfg)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
