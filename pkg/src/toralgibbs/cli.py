"""Command-line pipelines and report emission.

Subcommands: ``pressure``, ``curve``, ``spectrum``, ``coding``, ``realize`` and
``counterexample``.  Exit status: 0 when the run succeeds (for
``counterexample``: the verdict is *reproduced*), 2 when the counterexample is
not reproduced, 1 on error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .coding import build_partition, encode_future
from .errors import ConditionDegenerate, IoFailure, ToralGibbsError
from .gibbs import g_function, gibbs_state
from .potential import Potential, compose_Mk, geometric_potential
from .pressure import (
    DEFAULT_DEPTH,
    DEFAULT_ORBIT_ORDER,
    PressureCurve,
    default_t_grid,
    pressure,
    pressure_curve,
)
from .realization import cohomology_residual, expansion_check, livsic_bound_report, xi
from .spectrum import compare_spectra, unmarked_spectrum
from .torus import ToralAutomorphism, eigen_data, fixed_point_count

log = logging.getLogger("toralgibbs")

CURVE_TOL = 5e-3
SPEC_TOL = 1e-6
CONDITION_FLOOR = 1e-9


# ---------------------------------------------------------------------------
# counterexample pipeline
# ---------------------------------------------------------------------------

@dataclass
class CounterexampleConfig:
    matrix: tuple = (1, 1, 1, 0)
    potential: Potential = field(default_factory=lambda: Potential.cosine(0.3))
    k: int = 2
    max_period: int = 6
    depth: int = DEFAULT_DEPTH
    orbit_order: int = DEFAULT_ORBIT_ORDER
    t_grid: np.ndarray = field(default_factory=default_t_grid)
    curve_tol: float = CURVE_TOL
    spec_tol: float = SPEC_TOL


@dataclass
class CounterexampleReport:
    matrix: tuple
    potential: dict
    k: int
    normalizing_pressure: float
    pressure_curve_phi: PressureCurve
    pressure_curve_phi2: PressureCurve
    max_curve_gap: float
    cross_method_gap: float
    cross_residual_phi: float
    cross_residual_phi2: float
    spectrum_witness: dict
    condition_check: float
    verdict: str
    reason: str = ""
    config: dict = field(default_factory=dict)

    @property
    def reproduced(self) -> bool:
        return self.verdict == "reproduced"

    def to_json(self) -> dict:
        return {
            "matrix": list(self.matrix),
            "potential": self.potential,
            "k": self.k,
            "normalizing_pressure": self.normalizing_pressure,
            "pressure_curve_phi": self.pressure_curve_phi.to_json(),
            "pressure_curve_phi2": self.pressure_curve_phi2.to_json(),
            "max_curve_gap": self.max_curve_gap,
            "cross_method_gap": self.cross_method_gap,
            "cross_residual_phi": self.cross_residual_phi,
            "cross_residual_phi2": self.cross_residual_phi2,
            "spectrum_witness": self.spectrum_witness,
            "condition_check": self.condition_check,
            "verdict": self.verdict,
            "reason": self.reason,
            "config": self.config,
        }


def two_torsion_condition(phi: Potential) -> float:
    """``phi(0,0) - mean of phi over the three nonzero 2-torsion points``.

    For the cat map those points form the unique period-3 orbit, and the
    period-3 Birkhoff sums of ``phi`` and ``phi o M_2`` there differ by
    ``3 * condition``.
    """
    pts = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
    return phi(np.zeros(2)) - math.fsum(phi(pts).tolist()) / 3.0


def run_counterexample(config: CounterexampleConfig | None = None) -> CounterexampleReport:
    """Pressure curves of ``phi`` and ``phi o M_k`` plus their unmarked spectra.

    Curves use the transfer operator as the primary method and carry their
    residual against orbit sums of order ``orbit_order``.  The orbit-sum gap is
    reported alongside; it converges slowly for ``phi o M_k`` at large ``|t|``
    because ``M_k`` folds low-period orbits onto the origin inside ``Fix(L^n)``.
    """
    cfg = config or CounterexampleConfig()
    L = eigen_data([[cfg.matrix[0], cfg.matrix[1]], [cfg.matrix[2], cfg.matrix[3]]])
    cond = two_torsion_condition(cfg.potential)
    if abs(cond) < CONDITION_FLOOR:
        raise ConditionDegenerate(f"condition check {cond:.3e}: phi(0,0) equals the 2-torsion average")
    P0 = pressure(cfg.potential, L, "transfer_operator", cfg.depth)
    phi = cfg.potential.shift(-P0)
    phik = compose_Mk(phi, cfg.k)
    t = np.asarray(cfg.t_grid, dtype=float)
    kw = dict(method="transfer_operator", order=cfg.depth, cross_method="orbit_sum", cross_order=cfg.orbit_order)
    c1 = pressure_curve(phi, L, t, potential_id="phi", **kw)
    c2 = pressure_curve(phik, L, t, potential_id=f"phi_o_M{cfg.k}", **kw)
    gap = float(np.max(np.abs(c1.values - c2.values)))
    # orbit-sum curves are values - residual
    o1, o2 = c1.values - c1.residual, c2.values - c2.residual
    cross_gap = float(np.max(np.abs(o1 - o2)))
    s1 = unmarked_spectrum(phi, L, cfg.max_period)
    s2 = unmarked_spectrum(phik, L, cfg.max_period)
    cmp = compare_spectra(s1, s2, tol=cfg.spec_tol)
    witness = {
        "period": cmp.witness_period,
        "values_phi": None if cmp.values_1 is None else cmp.values_1.tolist(),
        "values_phi2": None if cmp.values_2 is None else cmp.values_2.tolist(),
        "gap": cmp.gap if not cmp.equal else 0.0,
    }
    reasons = []
    if gap > cfg.curve_tol:
        reasons.append(f"curve gap {gap:.3e} > {cfg.curve_tol}")
    if cmp.equal or witness["gap"] < cfg.spec_tol:
        reasons.append(f"spectra agree up to period {cfg.max_period}")
    if abs(cond) < cfg.spec_tol / 4:
        reasons.append("condition check below spec_tol/4")
    verdict = "failed" if reasons else "reproduced"
    return CounterexampleReport(
        matrix=tuple(int(a) for a in cfg.matrix),
        potential=cfg.potential.to_json(),
        k=cfg.k,
        normalizing_pressure=P0,
        pressure_curve_phi=c1,
        pressure_curve_phi2=c2,
        max_curve_gap=gap,
        cross_method_gap=cross_gap,
        cross_residual_phi=c1.max_residual,
        cross_residual_phi2=c2.max_residual,
        spectrum_witness=witness,
        condition_check=cond,
        verdict=verdict,
        reason="; ".join(reasons),
        config={
            "k": cfg.k, "max_period": cfg.max_period, "depth": cfg.depth,
            "orbit_order": cfg.orbit_order, "curve_tol": cfg.curve_tol, "spec_tol": cfg.spec_tol,
            "t_grid": [float(t[0]), float(t[-1]), float(t[1] - t[0]) if len(t) > 1 else 0.0],
        },
    )


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def load_schema() -> dict:
    text = resources.files("toralgibbs").joinpath("schemas/counterexample.schema.json").read_text()
    return json.loads(text)


def _dump_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _report_csv(report: CounterexampleReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "P_phi", "P_phi2", "gap"])
    c1, c2 = report.pressure_curve_phi, report.pressure_curve_phi2
    for t, a, b in zip(c1.t_grid, c1.values, c2.values):
        w.writerow([repr(float(t)), repr(float(a)), repr(float(b)), repr(float(abs(a - b)))])
    return buf.getvalue()


def render(report, fmt: str) -> str:
    if fmt not in ("json", "csv"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(report, CounterexampleReport):
        if fmt == "csv":
            return _report_csv(report)
        data = report.to_json()
        jsonschema.validate(data, load_schema())
        return _dump_json(data)
    if isinstance(report, PressureCurve):
        if fmt == "json":
            return _dump_json(report.to_json())
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "P", "method", "order", "residual"])
        for t, p, m, o, r in report.rows():
            w.writerow([repr(t), repr(p), m, o, repr(r)])
        return buf.getvalue()
    if fmt == "csv":
        rows = report if isinstance(report, list) else [report]
        buf = io.StringIO()
        keys = list(rows[0].keys()) if rows else []
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    return _dump_json(report)


def emit(report, format: str = "json", path=None) -> str:
    """Serialize deterministically; write to ``path`` (or return the text only)."""
    text = render(report, format)
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
    return text


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def parse_matrix(text: str) -> ToralAutomorphism:
    parts = [int(p) for p in text.replace(" ", "").split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("matrix must be a,b,c,d")
    return eigen_data([[parts[0], parts[1]], [parts[2], parts[3]]])


def parse_potential(text: str | None, L: ToralAutomorphism) -> Potential:
    """A JSON file, inline JSON, or one of ``cos:EPS[:m1,m2]``, ``const:C``, ``geometric``."""
    if text is None:
        return Potential.cosine(0.3)
    if text == "geometric":
        return geometric_potential(L)
    if text.startswith("cos:"):
        bits = text.split(":")
        m = tuple(int(v) for v in bits[2].split(",")) if len(bits) > 2 else (1, 0)
        return Potential.cosine(float(bits[1]), m)
    if text.startswith("const:"):
        return Potential.const(float(text.split(":", 1)[1]))
    if text.lstrip().startswith("{"):
        return Potential.from_json(json.loads(text))
    try:
        return Potential.load(text)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def parse_t_grid(text: str | None) -> np.ndarray:
    if text is None:
        return default_t_grid()
    a, b, step = (float(v) for v in text.split(":"))
    if step <= 0 or b < a:
        raise argparse.ArgumentTypeError("t-grid must be a:b:step with a <= b, step > 0")
    return default_t_grid(a, b, step)


_METHOD_ALIASES = {"ratio": "orbit_ratio", "sum": "orbit_sum", "eigen": "transfer_operator",
                   "orbit_ratio": "orbit_ratio", "orbit_sum": "orbit_sum",
                   "transfer_operator": "transfer_operator", "transfer": "transfer_operator"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--matrix", default="1,1,1,0", help="integer matrix a,b,c,d (default: cat map)")
    common.add_argument("--potential", default=None,
                        help="JSON file, inline JSON, cos:EPS[:m1,m2], const:C or geometric")
    common.add_argument("--depth", type=int, default=None, help="cylinder depth for the transfer operator")
    common.add_argument("--order", type=int, default=None, help="orbit order n / max period")
    common.add_argument("--t-grid", default=None, help="a:b:step (default -2:2:0.05)")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0, help="seed for sampling-based checks")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="toralgibbs", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pressure", parents=[common], help="pressure of a potential, or a curve with --t-grid")
    p.add_argument("--method", default="eigen", choices=sorted(_METHOD_ALIASES))
    p = sub.add_parser("curve", parents=[common], help="pressure curve t -> P(t phi)")
    p.add_argument("--method", default="eigen", choices=sorted(_METHOD_ALIASES))
    p = sub.add_parser("spectrum", parents=[common], help="unmarked orbit spectrum up to --order")
    p.add_argument("--max-period", dest="order", type=int, default=None, help="alias for --order")
    p = sub.add_parser("coding", parents=[common], help="Markov partition summary")
    p.add_argument("--refinement", default=None, help="p,q join depths")
    p.add_argument("--dump", default=None, help="alias for --out")
    p = sub.add_parser("realize", parents=[common], help="chart, Livsic and cohomology diagnostics")
    p.add_argument("--report", default=None, help="alias for --out")
    p = sub.add_parser("counterexample", parents=[common], help="curves agree, spectra differ")
    p.add_argument("--k", type=int, default=2)
    return parser


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_pressure(args, L, phi):
    method = _METHOD_ALIASES[args.method]
    order = (args.depth or args.order) if method == "transfer_operator" else args.order
    if args.t_grid is not None or args.command == "curve":
        return pressure_curve(phi, L, parse_t_grid(args.t_grid), method, order)
    P = pressure(phi, L, method, order)
    curve = pressure_curve(phi, L, [1.0], method, order, check_convexity=False)
    return {"pressure": P, "method": method, "order": curve.order,
            "cross_method": curve.cross_method, "cross_order": curve.cross_order,
            "residual": float(curve.residual[0])}


def _cmd_spectrum(args, L, phi):
    N = args.order or 6
    spec = unmarked_spectrum(phi, L, N)
    if args.format == "csv":
        return [{"n": n, "value": repr(float(v))} for n in sorted(spec.entries) for v in spec.entries[n]]
    return spec.to_json()


def _cmd_coding(args, L, phi):
    ref = tuple(int(v) for v in args.refinement.split(",")) if args.refinement else None
    C = build_partition(L, ref)
    out = C.to_json()
    out["trace_vs_fix"] = {str(n): [int(C.sft.trace_power(n)), int(fixed_point_count(L, n))]
                           for n in range(1, (args.order or 12) + 1)}
    return out


def _cmd_realize(args, L, phi):
    depth = args.depth or 10
    C = build_partition(L)
    phi = phi.shift(-pressure(phi, L, "transfer_operator", max(depth, DEFAULT_DEPTH)))
    rng = np.random.default_rng(args.seed)
    out = {"depth": depth, "zero_symbol": C.zero_symbol}
    residuals = {}
    for m in sorted({max(4, depth - 4), depth}):
        G = gibbs_state(phi, C, m)
        gf = g_function(G)
        rep = cohomology_residual(G, C, gf, phi, L, min(args.order or 8, 12), return_report=True)
        residuals[str(m)] = {"residual": rep.residual, "skipped_boundary": rep.skipped_boundary,
                             "per_period": {str(k): v for k, v in rep.per_period.items()}}
    out["cohomology_residual"] = residuals
    G = gibbs_state(phi, C, depth)
    gf = g_function(G)
    lr = livsic_bound_report(G, C, gf, phi, depth - 2, return_report=True)
    out["livsic_M"] = {str(n): v for n, v in lr.per_n.items()}
    n_exp, min_prod = expansion_check(G, C, gf, samples=100, seed=args.seed)
    out["expansion"] = {"n": n_exp, "min_product": min_prod}
    box = C.boxes[C.zero_symbol]
    samples = []
    for _ in range(5):
        u = box.u0 + box.width_u * rng.uniform(0.05, 0.95)
        s = box.s0 + box.width_s * rng.uniform(0.05, 0.95)
        ci = xi(G, C, L.from_eigen([u, s]) % 1.0)
        samples.append({"u": u, "s": s, "xi1": ci.xi1, "xi2": ci.xi2, "error_radius": ci.error_radius})
    out["xi_samples"] = samples
    # calibration against the Lebesgue case
    geo = geometric_potential(L)
    Gl = gibbs_state(geo, C, depth)
    gl = g_function(Gl)
    x = L.from_eigen([box.u0 + 0.5 * box.width_u, box.s0 + 0.5 * box.width_s]) % 1.0
    code = encode_future(C, x, gl.depth)
    out["lebesgue_calibration"] = {
        "livsic_M_error": abs(livsic_bound_report(Gl, C, gl, geo, min(6, depth - 2)) - 1.0),
        "inverse_g_error": None if len(code) != 1 else abs(float(1.0 / gl(np.array(code))[0]) - L.lam),
        "cohomology_residual": cohomology_residual(Gl, C, gl, geo, L, min(args.order or 8, 12)),
    }
    return out


def _cmd_counterexample(args, L, phi):
    cfg = CounterexampleConfig(
        matrix=tuple(int(v) for v in args.matrix.split(",")),
        potential=phi,
        k=args.k,
        max_period=args.order or 6,
        depth=args.depth or DEFAULT_DEPTH,
        t_grid=parse_t_grid(args.t_grid),
    )
    return run_counterexample(cfg)


_COMMANDS = {
    "pressure": _cmd_pressure, "curve": _cmd_pressure, "spectrum": _cmd_spectrum,
    "coding": _cmd_coding, "realize": _cmd_realize, "counterexample": _cmd_counterexample,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for alias in ("report", "dump"):
        if getattr(args, alias, None):
            args.out = getattr(args, alias)
    try:
        L = parse_matrix(args.matrix)
        phi = parse_potential(args.potential, L)
        result = _COMMANDS[args.command](args, L, phi)
        text = emit(result, args.format, args.out)
        if args.out is None:
            sys.stdout.write(text)
    except (ToralGibbsError, ValueError, argparse.ArgumentTypeError, jsonschema.ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if isinstance(result, CounterexampleReport):
        if not result.reproduced:
            print(f"not reproduced: {result.reason}", file=sys.stderr)
            return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
