"""``tdg`` command-line interface: classify, simulate, pbs, verify.

Exit codes: 0 success, 1 domain error (solver failure, failed checks),
2 usage or scenario-file error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .barrier_geometry import barrier_at, pbs_analytic, sample_pbs_analytic, sample_pbs_mesh
from .convex_sets import HalfSpace, NormBall, Singleton, target_from_dict
from .errors import GameError
from .game_core import GameConfig, GameState, barrier
from .simulator import Scenario, simulate
from .strategies import DirectTo, OptimalAuto, PurePursuit, RandomHeading
from .verify import SUITES, render_table, report_json, run_suite

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2

POLICIES_P = ("optimal", "pure_pursuit", "random")
POLICIES_E = ("optimal", "direct_to", "random")
REQUIRED_KEYS = ("dimension", "gamma", "target", "x_P0", "x_E0")
OPTIONAL_KEYS = {
    "v_P": 1.0,
    "policy_P": "optimal",
    "policy_E": "optimal",
    "dt": 1e-3,
    "t_max": 50.0,
    "capture_radius": 1e-3,
    "seed": 0,
    "direct_to": None,
}


class ScenarioFileError(Exception):
    """Scenario file problem, anchored to a line of the source text."""

    def __init__(self, path, line: Optional[int], message: str):
        where = f"{path}:{line}" if line is not None else f"{path}"
        super().__init__(f"{where}: {message}")
        self.line = line


def _key_line(text: str, key: str) -> Optional[int]:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


@dataclass
class ScenarioFile:
    """The JSON scenario document, with defaults filled in."""

    dimension: int
    gamma: float
    target: dict
    x_P0: List[float]
    x_E0: List[float]
    v_P: float = 1.0
    policy_P: str = "optimal"
    policy_E: str = "optimal"
    dt: float = 1e-3
    t_max: float = 50.0
    capture_radius: float = 1e-3
    seed: int = 0
    direct_to: Optional[List[float]] = None
    source: str = field(default="<scenario>", compare=False, repr=False)
    text: str = field(default="", compare=False, repr=False)

    def to_dict(self) -> dict:
        d = {
            "dimension": self.dimension,
            "gamma": self.gamma,
            "v_P": self.v_P,
            "target": self.target,
            "x_P0": self.x_P0,
            "x_E0": self.x_E0,
            "policy_P": self.policy_P,
            "policy_E": self.policy_E,
            "dt": self.dt,
            "t_max": self.t_max,
            "capture_radius": self.capture_radius,
            "seed": self.seed,
        }
        if self.direct_to is not None:
            d["direct_to"] = self.direct_to
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def _fail(self, key: str, message: str):
        raise ScenarioFileError(self.source, _key_line(self.text, key), f"{key}: {message}" if key else message)

    def build(self) -> Scenario:
        """Validate every field and assemble the simulator scenario."""
        n = self.dimension
        for key in ("x_P0", "x_E0") + (("direct_to",) if self.direct_to is not None else ()):
            v = getattr(self, key)
            if not isinstance(v, list) or len(v) != n or not all(_is_number(x) for x in v):
                self._fail(key, f"expected a list of {n} numbers")
        try:
            cfg = GameConfig(float(self.gamma), n, v_P=float(self.v_P))
        except GameError as exc:
            self._fail("v_P" if "v_P" in str(exc) else "gamma", str(exc))
        try:
            target = target_from_dict(self.target, n)
        except (GameError, TypeError, ValueError) as exc:
            self._fail("target", str(exc))
        if self.policy_P not in POLICIES_P:
            self._fail("policy_P", f"unknown defender policy {self.policy_P!r}; choose from {', '.join(POLICIES_P)}")
        if self.policy_E not in POLICIES_E:
            self._fail("policy_E", f"unknown attacker policy {self.policy_E!r}; choose from {', '.join(POLICIES_E)}")
        if (self.policy_E == "direct_to") != (self.direct_to is not None):
            self._fail("direct_to", "direct_to is required exactly when policy_E is 'direct_to'")
        pol = {"optimal": OptimalAuto(), "pure_pursuit": PurePursuit(), "random": RandomHeading(seed=self.seed)}
        policy_E = DirectTo(self.direct_to) if self.policy_E == "direct_to" else pol[self.policy_E]
        # distinct random streams for the two players
        if self.policy_P == "random":
            pol["random"] = RandomHeading(seed=self.seed + 1)
        policy_P = pol[self.policy_P]
        try:
            return Scenario(
                cfg, target, self.x_P0, self.x_E0, policy_P, policy_E,
                dt=float(self.dt), t_max=float(self.t_max), capture_radius=float(self.capture_radius), seed=int(self.seed),
            )
        except GameError as exc:
            msg = str(exc)
            key = next((k for k in ("dt", "t_max", "capture", "direct_to") if k in msg), "")
            self._fail({"capture": "capture_radius"}.get(key, key), msg)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and np.isfinite(x)


def parse_scenario(text: str, source: str = "<scenario>") -> ScenarioFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFileError(source, exc.lineno, f"invalid JSON: {exc.msg} (column {exc.colno})") from None
    if not isinstance(doc, dict):
        raise ScenarioFileError(source, 1, "scenario must be a JSON object")
    for key in doc:
        if key not in REQUIRED_KEYS and key not in OPTIONAL_KEYS:
            raise ScenarioFileError(source, _key_line(text, key), f"unknown key {key!r}")
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise ScenarioFileError(source, None, f"missing required key {key!r}")
    vals = {k: doc.get(k, default) for k, default in OPTIONAL_KEYS.items()}
    scalar_types = {"dimension": int, "seed": int, "gamma": float, "v_P": float, "dt": float, "t_max": float, "capture_radius": float}
    for key, typ in scalar_types.items():
        v = doc.get(key, vals.get(key))
        ok = _is_number(v) and (typ is float or (isinstance(v, int) and not isinstance(v, bool)))
        if not ok:
            raise ScenarioFileError(source, _key_line(text, key), f"{key}: expected {'an integer' if typ is int else 'a number'}")
    if doc["dimension"] < 1:
        raise ScenarioFileError(source, _key_line(text, "dimension"), "dimension: must be positive")
    for key in ("policy_P", "policy_E"):
        if not isinstance(vals[key], str):
            raise ScenarioFileError(source, _key_line(text, key), f"{key}: expected a string")
    sf = ScenarioFile(
        dimension=doc["dimension"], gamma=doc["gamma"], target=doc["target"], x_P0=doc["x_P0"], x_E0=doc["x_E0"],
        source=source, text=text, **vals,
    )
    sf.build()  # full validation up front
    return sf


def load_scenario(path) -> ScenarioFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioFileError(path, None, f"cannot read file: {exc.strerror}") from None
    return parse_scenario(text, str(path))


def scenario_file_from(sc: Scenario) -> ScenarioFile:
    """Serialize a simulator scenario back into the file schema."""

    def name(policy, role):
        if isinstance(policy, OptimalAuto):
            return "optimal"
        if isinstance(policy, PurePursuit):
            return "pure_pursuit"
        if isinstance(policy, DirectTo):
            return "direct_to"
        if isinstance(policy, RandomHeading):
            return "random"
        raise GameError(f"policy {policy!r} has no file representation")

    return ScenarioFile(
        dimension=sc.cfg.dim,
        gamma=sc.cfg.gamma,
        target=sc.target.to_dict(),
        x_P0=sc.x_P0.tolist(),
        x_E0=sc.x_E0.tolist(),
        v_P=sc.cfg.v_P,
        policy_P=name(sc.policy_P, "P"),
        policy_E=name(sc.policy_E, "E"),
        dt=sc.dt,
        t_max=sc.t_max,
        capture_radius=sc.capture_radius,
        seed=sc.seed,
        direct_to=sc.policy_E.point.tolist() if isinstance(sc.policy_E, DirectTo) else None,
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    return "(" + ", ".join(f"{x:.10g}" for x in np.atleast_1d(v)) + ")"


def cmd_classify(path) -> str:
    sf = load_scenario(path)
    sc = sf.build()
    br = barrier(sc.cfg, GameState(sc.x_P0, sc.x_E0), sc.target)
    return "\n".join(
        [
            f"scenario: {path}",
            f"B(x0): {br.value:.12g}",
            f"region: {br.region.value}",
            f"alpha: {_fmt(br.apollonius.alpha)}",
            f"beta: {br.apollonius.beta:.12g}",
            f"proj(alpha): {_fmt(br.projection_point)}",
        ]
    )


def _out_stem(out: Optional[str], scenario_path, many: bool) -> Path:
    stem = Path(scenario_path).stem
    if out is None:
        return Path(stem)
    p = Path(out)
    if many or p.is_dir():
        return p / stem
    return p.with_suffix("") if p.suffix in (".csv", ".json", ".svg") else p


def cmd_simulate(path, out_stem: Path) -> str:
    sc = load_scenario(path).build()
    rec = simulate(sc)
    out_stem.parent.mkdir(parents=True, exist_ok=True)
    out_stem.with_suffix(".csv").write_text(rec.to_csv())
    out_stem.with_suffix(".json").write_text(rec.to_json())
    switches = "[" + ", ".join(f"{t:.6f}" for t in rec.switch_times) + "]"
    return (
        f"{path}: outcome={rec.outcome} t_f={rec.t_f:.6f} payoff={rec.payoff:.9f} "
        f"switch_times={switches} capture_radius={rec.capture_radius:g} -> {out_stem}.csv, {out_stem}.json"
    )


def cmd_pbs(path, resolution: int, out_stem: Path) -> str:
    sc = load_scenario(path).build()
    cfg, target, x_P0 = sc.cfg, sc.target, sc.x_P0
    if cfg.dim not in (2, 3):
        raise GameError(f"PBS export supports dimensions 2 and 3, got {cfg.dim}")
    if isinstance(target, (Singleton, HalfSpace, NormBall)):
        mesh = sample_pbs_analytic(target, x_P0, cfg, resolution)
        method = "analytic"
    elif getattr(target, "has_smooth_boundary", False):
        mesh = sample_pbs_mesh(target, x_P0, cfg, resolution)
        method = "transformation-map"
    else:
        raise GameError(f"no PBS construction for {target.kind} targets (needs a closed form or a smooth boundary)")
    verts = mesh.points[mesh.ok()]
    B = np.array([barrier_at(target, x_P0, cfg, z) for z in verts])
    out_stem.parent.mkdir(parents=True, exist_ok=True)
    out_stem.with_suffix(".csv").write_text(mesh.to_csv())
    out_stem.with_suffix(".json").write_text(mesh.to_json())
    files = [f"{out_stem}.csv", f"{out_stem}.json"]
    if cfg.dim == 2:
        out_stem.with_suffix(".svg").write_text(mesh.to_svg(extra_points=[x_P0]))
        files.append(f"{out_stem}.svg")
    lines = [f"{path}: method={method} vertices={len(verts)} failures={len(mesh.failures)} max|B|={np.max(np.abs(B)) if len(B) else float('nan'):.3e}"]
    if method == "analytic":
        res = [abs(pbs_analytic(target, x_P0, cfg, z)) for z in verts]
        lines.append(f"max|analytic residual|={max(res) if res else float('nan'):.3e}")
    lines.append("wrote " + ", ".join(files))
    return "\n".join(lines)


def _run_one(job):
    """Worker for batch runs: returns (exit code, stdout text, stderr text)."""
    kind, path, args = job
    try:
        if kind == "classify":
            return EXIT_OK, cmd_classify(path), ""
        if kind == "simulate":
            return EXIT_OK, cmd_simulate(path, args["stem"]), ""
        return EXIT_OK, cmd_pbs(path, args["resolution"], args["stem"]), ""
    except ScenarioFileError as exc:
        return EXIT_USAGE, "", f"error: {exc}"
    except GameError as exc:
        return EXIT_DOMAIN, "", f"error: {path}: {exc}"


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tdg", description="Target-defense differential game solver.")
    sub = ap.add_subparsers(dest="command", required=True)

    def scen(p, many=True):
        p.add_argument("--scenario", required=True, nargs="+" if many else None, help="scenario JSON file(s)")
        p.add_argument("--workers", type=_positive_int, default=1, help="parallel processes for several scenarios")

    p = sub.add_parser("classify", help="barrier value and winning region of the initial state")
    scen(p)
    p = sub.add_parser("simulate", help="simulate the game; writes trajectory CSV and JSON")
    scen(p)
    p.add_argument("--out", help="output stem (or directory when several scenarios are given)")
    p = sub.add_parser("pbs", help="sample the projection of the barrier surface")
    scen(p)
    p.add_argument("--resolution", type=_positive_int, default=32, help="samples per grid axis")
    p.add_argument("--out", help="output stem (or directory when several scenarios are given)")
    p = sub.add_parser("verify", help="run an oracle verification suite")
    p.add_argument("--suite", default="all", choices=list(SUITES) + ["all"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--format", choices=("table", "json"), default="table", help="stdout format")
    p.add_argument("--workers", type=_positive_int, default=1, help="parallel processes for sample evaluation")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        try:
            reports = run_suite(args.suite, seed=args.seed, workers=args.workers)
        except GameError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DOMAIN
        doc = report_json(args.suite, args.seed, reports)
        if args.out:
            Path(args.out).write_text(doc + "\n")
        print(doc if args.format == "json" else render_table(reports))
        return EXIT_OK if all(r.passed for r in reports) else EXIT_DOMAIN

    paths = args.scenario
    many = len(paths) > 1
    extra = {}
    jobs = []
    for path in paths:
        if args.command != "classify":
            extra = {"stem": _out_stem(args.out, path, many)}
            if args.command == "pbs":
                extra["resolution"] = args.resolution
        jobs.append((args.command, path, extra))
    if args.workers > 1 and many:
        with ProcessPoolExecutor(max_workers=args.workers) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    code = EXIT_OK
    for rc, out, err in results:
        if out:
            print(out)
        if err:
            print(err, file=sys.stderr)
        code = max(code, rc)
    return code


if __name__ == "__main__":
    sys.exit(main())
