"""Command-line surface: solve RDP queries, trace regions, run codec
simulations, audit seed maps, and emit machine-readable results.

Every output file embeds a run manifest (subcommand, config path and
hash, master seed, library version, output names) so a run can be
reproduced bit-identically; exit codes are 0 on success, 2 for config
errors, 3 for resource rejections, and 4 for numerical non-convergence
(with partial results written).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .derandom import SeedMapError, build_seed_map
from .prob import JointPmf, Kernel, Pmf
from .region import AuxChannel, Budgets, RegionProblem, compute_frontier
from .simulate import ResourceCapError, SimConfig, run_simulation
from .solver import (
    DistortionMatrix,
    InfeasibleError,
    PerceptionMeasure,
    RdpQuery,
    conditional_rdp,
    hamming,
    rdp_point_to_point,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_NO_CONVERGENCE = 4


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunManifest:
    subcommand: str
    config_path: str
    config_sha256: str
    master_seed: int
    version: str
    out_dir: str
    outputs: tuple[str, ...]

    def as_dict(self) -> dict:
        return asdict(self)


def _need(obj: dict, field: str, kind=None):
    if field not in obj:
        raise ConfigError(f"missing required field {field!r}")
    value = obj[field]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"field {field!r} has wrong type (expected {kind})")
    return value


def _as_budget(value) -> float:
    if value == "inf":
        return math.inf
    if isinstance(value, (int, float)) and value >= 0:
        return float(value)
    raise ConfigError(f"budget {value!r} must be a nonnegative number or 'inf'")


def _pmf_like(obj: dict, field: str) -> np.ndarray:
    spec = _need(obj, field)
    if isinstance(spec, list):
        return np.asarray(spec, dtype=np.float64)
    if isinstance(spec, dict):
        shape = tuple(_need(spec, "alphabets", list))
        probs = np.asarray(_need(spec, "probs", list), dtype=np.float64)
        try:
            return probs.reshape(shape)
        except ValueError as exc:
            raise ConfigError(f"field {field!r}: {exc}") from None
    raise ConfigError(f"field {field!r} must be a list or an alphabets/probs object")


def _perception(obj: dict) -> PerceptionMeasure:
    kind = obj.get("perception", "tv")
    if kind not in ("tv", "kl"):
        raise ConfigError("perception must be 'tv' or 'kl' in configs")
    return PerceptionMeasure(kind)


def _distortion(obj: dict, n_source: int, field: str = "distortion") -> DistortionMatrix:
    spec = obj.get(field, "hamming")
    if spec == "hamming":
        return DistortionMatrix(hamming(n_source))
    if isinstance(spec, list):
        return DistortionMatrix(np.asarray(spec, dtype=np.float64))
    raise ConfigError(f"field {field!r} must be 'hamming' or a matrix")


def _write_json(path: Path, payload: dict, manifest: RunManifest):
    payload = dict(payload)
    payload["manifest"] = manifest.as_dict()
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, body: str, manifest: RunManifest):
    header = "# manifest: " + json.dumps(manifest.as_dict(), sort_keys=True)
    path.write_text(header + "\n" + body)


def _manifest(args, subcommand: str, config_text: str, outputs: tuple[str, ...],
              seed: int) -> RunManifest:
    return RunManifest(
        subcommand=subcommand,
        config_path=str(args.config) if args.config else "",
        config_sha256=hashlib.sha256(config_text.encode()).hexdigest(),
        master_seed=seed,
        version=__version__,
        out_dir=str(args.out_dir),
        outputs=outputs)


def cmd_rdp(args, cfg: dict, config_text: str) -> int:
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    if "q_xw" in cfg:
        q_xw = JointPmf(_pmf_like(cfg, "q_xw"), ("X", "W"))
    else:
        src = _pmf_like(cfg, "source")
        if src.ndim != 1:
            raise ConfigError("field 'source' must be a 1-D pmf")
        q_xw = JointPmf(src[:, None], ("X", "W"))
    delta = _distortion(cfg, q_xw.shape[0])
    query = RdpQuery(
        q_xw=q_xw, delta=delta, perception=_perception(cfg),
        d_budget=_as_budget(_need(cfg, "d_budget")),
        p_budget=_as_budget(_need(cfg, "p_budget")),
        recon_alphabet=tuple(cfg["recon_alphabet"]) if "recon_alphabet" in cfg else None)
    try:
        result = conditional_rdp(query)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    manifest = _manifest(args, "rdp", config_text, ("rdp_result.json",), seed)
    payload = {
        "rate_bits": result.rate,
        "achieved_distortion": result.achieved_distortion,
        "achieved_perception": result.achieved_perception,
        "converged": result.converged,
        "iterations": result.iterations,
        "test_channel": json.loads(result.test_channel.to_json()),
    }
    _write_json(args.out_dir / "rdp_result.json", payload, manifest)
    print(f"rate {result.rate:.6f} bits | distortion {result.achieved_distortion:.6g}"
          f" | perception {result.achieved_perception:.6g} | converged {result.converged}")
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def cmd_region(args, cfg: dict, config_text: str) -> int:
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    p_xy = JointPmf(_pmf_like(cfg, "p_xy"), ("X", "Y"))
    bud_cfg = _need(cfg, "budgets", dict)
    budgets = Budgets(d1=_as_budget(_need(bud_cfg, "D1")),
                      d2=_as_budget(_need(bud_cfg, "D2")),
                      p1=_as_budget(bud_cfg.get("P1", "inf")),
                      p2=_as_budget(bud_cfg.get("P2", "inf")))
    nx, ny = p_xy.shape
    problem = RegionProblem(
        p_xy=p_xy,
        delta_x=_distortion(cfg, nx, "distortion_x"),
        delta_y=_distortion(cfg, ny, "distortion_y"),
        perception_x=_perception(cfg), perception_y=_perception(cfg))
    frontier = compute_frontier(
        problem, budgets,
        strategy=cfg.get("strategy", "grid"),
        w_size=cfg.get("w_size"),
        samples=int(cfg.get("samples", 16)),
        restarts=int(cfg.get("restarts", 3)),
        seed=seed, parallel=args.parallel)

    outputs = ["frontier.csv", "frontier.json"]
    csv_body = frontier.to_csv()
    payload = json.loads(frontier.to_json())

    if cfg.get("cutset_audit", False):
        p_x = Pmf(p_xy.marginal("X").probs)
        p_y = Pmf(p_xy.marginal("Y").probs)
        rdp_x = rdp_point_to_point(p_x, problem.delta_x, problem.perception_x,
                                   budgets.d1, budgets.p1).rate
        rdp_y = rdp_point_to_point(p_y, problem.delta_y, problem.perception_y,
                                   budgets.d2, budgets.p2).rate
        lines = csv_body.splitlines()
        lines[0] += ",cutset_ok"
        for i, pt in enumerate(frontier.points):
            ok = (pt.r0 + pt.r1 >= rdp_x - 1e-3) and (pt.r0 + pt.r2 >= rdp_y - 1e-3)
            lines[i + 1] += f",{str(ok).lower()}"
        csv_body = "\n".join(lines) + "\n"
        payload["cutset_reference"] = {"rdp_x": rdp_x, "rdp_y": rdp_y}

    manifest = _manifest(args, "region", config_text, tuple(outputs), seed)
    _write_csv(args.out_dir / "frontier.csv", csv_body, manifest)
    _write_json(args.out_dir / "frontier.json", payload, manifest)
    print(f"frontier: {len(frontier.points)} points from {frontier.n_evaluated} evaluations")
    return EXIT_OK


def _kernel_or_none(cfg: dict, field: str) -> Kernel | None:
    if field not in cfg or cfg[field] == "solve":
        return None
    return Kernel(_pmf_like(cfg, field))


def cmd_simulate(args, cfg: dict, config_text: str) -> int:
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    p_xy = JointPmf(_pmf_like(cfg, "p_xy"), ("X", "Y"))
    nx, ny = p_xy.shape
    bud_cfg = _need(cfg, "budgets", dict)
    budgets = Budgets(d1=_as_budget(_need(bud_cfg, "D1")),
                      d2=_as_budget(_need(bud_cfg, "D2")),
                      p1=_as_budget(bud_cfg.get("P1", "inf")),
                      p2=_as_budget(bud_cfg.get("P2", "inf")))
    aux_spec = cfg.get("aux", "independent")
    if aux_spec == "independent":
        aux = AuxChannel.independent(nx, ny)
    else:
        aux = AuxChannel(Kernel(_pmf_like(cfg, "aux")))

    tc_x = _kernel_or_none(cfg, "test_channel_x")
    tc_y = _kernel_or_none(cfg, "test_channel_y")
    perception = _perception(cfg)
    delta_x = _distortion(cfg, nx, "distortion_x")
    delta_y = _distortion(cfg, ny, "distortion_y")
    if tc_x is None or tc_y is None:
        q_xyw = p_xy.extend(aux.kernel, "W")
        if tc_x is None:
            res = conditional_rdp(RdpQuery(q_xyw.marginal("X", "W"), delta_x,
                                           perception, budgets.d1, budgets.p1))
            tc_x = res.test_channel
        if tc_y is None:
            res = conditional_rdp(RdpQuery(q_xyw.marginal("Y", "W"), delta_y,
                                           perception, budgets.d2, budgets.p2))
            tc_y = res.test_channel

    config = SimConfig(
        p_xy=p_xy, aux=aux, test_channel_x=tc_x, test_channel_y=tc_y,
        n=int(_need(cfg, "n")), delta=float(_need(cfg, "delta")),
        trials=int(_need(cfg, "trials")), master_seed=seed, budgets=budgets,
        mode=cfg.get("mode", "common-randomness"),
        n0=cfg.get("n0"), delta_x_mat=delta_x, delta_y_mat=delta_y,
        memory_cap=args.memory_cap)
    try:
        report = run_simulation(config, parallel=args.parallel)
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE

    manifest = _manifest(args, "simulate", config_text,
                         ("sim_report.json", "sim_report.csv"), seed)
    _write_json(args.out_dir / "sim_report.json", json.loads(report.to_json()), manifest)
    _write_csv(args.out_dir / "sim_report.csv", report.to_csv(), manifest)
    print(f"distortion ({report.mean_distortion_x:.4f}, {report.mean_distortion_y:.4f})"
          f" vs thresholds ({report.threshold_x:.4f}, {report.threshold_y:.4f}) | "
          f"max TV excess ({report.max_tv_excess_x:+.4f}, {report.max_tv_excess_y:+.4f}) | "
          f"miss rates ({report.freq_no_common_codeword:.3f}, "
          f"{report.freq_no_x_codeword:.3f}, {report.freq_no_y_codeword:.3f})")
    return EXIT_OK


def cmd_derand_audit(args, cfg: dict, config_text: str) -> int:
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    p_xy = JointPmf(_pmf_like(cfg, "p_xy"), ("X", "Y"))
    try:
        seed_map = build_seed_map(p_xy, int(_need(cfg, "n0")), int(_need(cfg, "n")))
    except SeedMapError as exc:
        print(f"seed map rejected: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    audit = seed_map.audit()
    manifest = _manifest(args, "derand-audit", config_text, ("derand_audit.json",), seed)
    _write_json(args.out_dir / "derand_audit.json", audit, manifest)
    print(f"bins {seed_map.n} | max deviation {audit['max_deviation']:.3e} | "
          f"bound {audit['bound_p_max']:.3e} | pass {audit['within_bound']}")
    return EXIT_OK if audit["within_bound"] else EXIT_NO_CONVERGENCE


def cmd_selftest(args, cfg: dict, config_text: str) -> int:
    """Small built-in checks with known answers."""
    checks: list[tuple[str, bool]] = []
    tvm = PerceptionMeasure("tv")
    ham2 = DistortionMatrix(hamming(2))
    uni = Pmf([0.5, 0.5])

    r = rdp_point_to_point(uni, ham2, tvm, 0.0, 0.0)
    checks.append(("uniform binary D=0 P=0 gives rate 1", abs(r.rate - 1.0) < 1e-9))
    r = rdp_point_to_point(uni, ham2, tvm, 0.5, math.inf)
    checks.append(("uniform binary D=0.5 gives rate 0", r.rate < 1e-9))

    from .codec import circular_shift, shift_position
    checks.append(("shift map (n=5,k=2,t=4) -> 1", shift_position(5, 2, 4) == 1))
    seq = np.array([1, 2, 3, 4])
    checks.append(("shift inverse restores the sequence",
                   np.array_equal(circular_shift(1, circular_shift(-1, seq)), seq)))

    sm = build_seed_map(JointPmf(np.full((2, 2), 0.25), ("X", "Y")), 1, 4)
    checks.append(("uniform 4-atom seed map has zero deviation",
                   sm.max_deviation < 1e-12))

    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok = ok and passed
    return EXIT_OK if ok else 1


COMMANDS = {
    "rdp": (cmd_rdp, True),
    "region": (cmd_region, True),
    "simulate": (cmd_simulate, True),
    "derand-audit": (cmd_derand_audit, True),
    "selftest": (cmd_selftest, False),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gwrdp",
        description="Rate-distortion-perception tools for the two-decoder "
                    "common-message (Gray-Wyner) network")
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON config file (required except for selftest)")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed (overrides the config)")
    parser.add_argument("--out-dir", type=Path, default=Path("."),
                        help="directory for output files")
    parser.add_argument("--parallel", type=int, default=1,
                        help="worker processes; results are degree-independent")
    parser.add_argument("--memory-cap", type=int, default=2 ** 24,
                        help="codeword-symbol cap for simulations")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    func, needs_config = COMMANDS[args.subcommand]
    config_text = ""
    cfg: dict = {}
    if needs_config:
        if args.config is None:
            print("a --config file is required for this subcommand", file=sys.stderr)
            return EXIT_CONFIG
        try:
            config_text = args.config.read_text()
            cfg = json.loads(config_text)
        except OSError as exc:
            print(f"cannot read config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except json.JSONDecodeError as exc:
            print(f"config is not valid JSON: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if not isinstance(cfg, dict):
            print("config must be a JSON object", file=sys.stderr)
            return EXIT_CONFIG
    args.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        return func(args, cfg, config_text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResourceCapError, SeedMapError) as exc:
        print(f"resource rejection: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
