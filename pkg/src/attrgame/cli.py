"""Command-line front end.

Every subcommand prints a JSON summary on stdout. With ``--out DIR`` it also
writes its primary output files plus a ``manifest.json`` from which
``attrgame replay`` reproduces those files byte for byte.

Exit codes: 0 success, 1 input error, 2 numeric failure (no convergence or a
failed certificate).
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .abstraction import CLASSIFIERS, load_csv, make_correlated_dataset, sweep_k
from .attack_sim import attack_from_json, attack_to_json, mean_shift_summary, sample_poisoned_stream
from .equilibrium import (
    LP_TOL,
    certify_uniform_equilibrium,
    solve_fictitious_play,
    solve_indicator_game,
    solve_lp,
)
from .game_core import (
    DEFAULT_STRATEGY_CAP,
    Partition,
    PayoffMatrix,
    build_indicator_matrix,
)
from .reward_model import (
    QualityTable,
    QualityTableError,
    build_reward_matrix,
    validate_quality_table,
)

log = logging.getLogger("attrgame")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_json_arg(text: str, what: str):
    """Parse inline JSON, or read it from a file when ``text`` names one."""
    path = Path(text)
    try:
        if not text.lstrip().startswith(("[", "{")) and path.exists():
            text = path.read_text()
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")


def _input_files(args) -> dict[str, str]:
    files = {}
    for key in ("spec", "config", "data", "quality", "batch", "partition", "matrix"):
        val = getattr(args, key, None)
        if isinstance(val, str) and not val.lstrip().startswith(("[", "{")) and Path(val).is_file():
            files[key] = val
    return files


class Outputs:
    """Collects primary output files and writes them with the manifest."""

    def __init__(self, args, subcommand: str):
        self.args = args
        self.subcommand = subcommand
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str):
        self.files[name] = text

    def write(self):
        out = getattr(self.args, "out", None)
        if not out:
            return
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (out / name).write_text(text)
        config = {k: v for k, v in vars(self.args).items() if k not in ("func", "out", "verbose")}
        manifest = {
            "subcommand": self.subcommand,
            "config": config,
            "seed": getattr(self.args, "seed", None),
            "version": __version__,
            "inputs": {k: {"path": str(Path(p).resolve()), "sha256": _digest(p)}
                       for k, p in _input_files(self.args).items()},
            "outputs": sorted(self.files),
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        }
        (out / "manifest.json").write_text(_dumps(manifest))


def _resolve_seed(args):
    if getattr(args, "seed", None) is None:
        args.seed = secrets.randbits(32)
        log.info("no --seed given, using %d", args.seed)


def _game_from_args(args):
    """Returns (partition or None, PayoffMatrix or None)."""
    sources = [s for s in ("partition", "matrix", "spec") if getattr(args, s, None)]
    if len(sources) != 1:
        raise InputError("give exactly one of --partition, --matrix, --spec")
    obj = _load_json_arg(getattr(args, sources[0]), sources[0])
    if sources[0] == "spec":
        if not isinstance(obj, dict):
            raise InputError("spec: expected a JSON object with 'blocks' or 'matrix'")
        if "matrix" in obj:
            sources[0], obj = "matrix", obj
        elif "blocks" in obj:
            sources[0] = "partition"
        else:
            raise InputError("spec: needs a 'blocks' or 'matrix' field")
    try:
        if sources[0] == "partition":
            part = Partition.from_json(obj)
            if part.num_strategies > args.cap:
                raise InputError(
                    f"strategy space too large: {part.num_strategies} pure strategies exceeds cap {args.cap}"
                )
            quality = getattr(args, "quality", None)
            if quality:
                q = QualityTable.from_json(_load_json_arg(quality, "quality"), part)
                return part, build_reward_matrix(part, q, args.asymmetric)
            return part, None
        return None, PayoffMatrix.from_json(obj)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{sources[0]}: {exc}") from exc


def cmd_solve(args) -> int:
    part, matrix = _game_from_args(args)
    method = args.method
    if matrix is None:
        if method == "auto":
            result = solve_indicator_game(part, tolerance=args.tol or LP_TOL)
            return _emit_solve(args, result, part)
        matrix = build_indicator_matrix(part, cap=args.cap)
    if method in ("auto", "lp"):
        result = solve_lp(matrix, tolerance=args.tol or LP_TOL)
    else:
        result = solve_fictitious_play(matrix, args.max_iters, args.tol or 1e-4)
    return _emit_solve(args, result, part)


def _emit_solve(args, result, part) -> int:
    payload = result.to_json()
    if part is not None:
        payload["partition"] = part.to_json()["blocks"]
    out = Outputs(args, "solve")
    out.add("solve.json", _dumps(payload))
    out.write()
    sys.stdout.write(_dumps(payload))
    if not result.converged:
        log.error("fictitious play did not reach %g in %d iterations", args.tol or 1e-4, result.iterations)
        return EXIT_NUMERIC
    return EXIT_OK if result.certificate.certified else EXIT_NUMERIC


def _random_partitions(count: int, seed: int, max_k: int, max_block: int) -> list[Partition]:
    rng = np.random.default_rng(seed)
    parts = []
    for _ in range(count):
        k = int(rng.integers(1, max_k + 1))
        sizes = rng.integers(1, max_block + 1, size=k)
        ids = np.cumsum([0, *sizes])
        parts.append(Partition([range(ids[i], ids[i + 1]) for i in range(k)]))
    return parts


def cmd_verify(args) -> int:
    if args.partition:
        parts = [Partition.from_json(_load_json_arg(args.partition, "partition"))]
    elif args.batch:
        obj = _load_json_arg(args.batch, "batch")
        if isinstance(obj, dict):
            obj = obj.get("partitions")
        if not isinstance(obj, list):
            raise InputError("batch: expected a list of partitions")
        parts = [Partition.from_json(o) for o in obj]
    elif args.random:
        _resolve_seed(args)
        parts = _random_partitions(args.random, args.seed, args.max_k, args.max_block)
    else:
        raise InputError("give one of --partition, --batch, --random")
    reports = []
    for part in parts:
        cert = certify_uniform_equilibrium(part, tolerance=args.tol)
        reports.append({
            "partition": part.to_json()["blocks"],
            "value": cert.value,
            "expected_value": part.uniform_value(),
            "exploitability": cert.exploitability,
            "tolerance": cert.tolerance,
            "certified": cert.certified,
        })
    payload = {"certified": all(r["certified"] for r in reports), "reports": reports}
    out = Outputs(args, "verify")
    out.add("verify.json", _dumps(payload))
    out.write()
    sys.stdout.write(_dumps(payload))
    return EXIT_OK if payload["certified"] else EXIT_NUMERIC


def cmd_attack(args) -> int:
    _resolve_seed(args)
    if args.config:
        cfg = _load_json_arg(args.config, "config")
    else:
        cfg = {
            "plus": {"kind": "normal", "mean": args.u_plus, "std": args.std},
            "minus": {"kind": "normal", "mean": args.u_minus, "std": args.std},
            "epsilon": args.epsilon,
        }
    try:
        pair, attack = attack_from_json(cfg)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"attack config: {exc}") from exc
    stream = sample_poisoned_stream(pair, attack, args.n, args.seed)
    summary = mean_shift_summary(pair, attack, stream)
    summary["config"] = attack_to_json(pair, attack)
    summary["n"] = args.n
    summary["seed"] = args.seed
    out = Outputs(args, "attack")
    if args.out:
        out.add("stream.csv", stream.to_csv())
    out.add("summary.json", _dumps(summary))
    out.write()
    sys.stdout.write(_dumps(summary))
    return EXIT_OK


def _k_values(spec, n: int) -> list[int]:
    if spec is None:
        return list(range(2, n + 1))
    if isinstance(spec, dict):
        return list(range(int(spec.get("start", 2)), int(spec.get("stop", n)) + 1, int(spec.get("step", 1))))
    return [int(k) for k in spec]


def cmd_sweep(args) -> int:
    cfg = _load_json_arg(args.config, "config") if args.config else {}
    if not isinstance(cfg, dict):
        raise InputError("config: expected a JSON object")
    for key in ("scheme", "repeats", "seed", "classifier", "train_fraction", "control_repeats"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if args.k:
        cfg["k_values"] = args.k
    if args.per_sample:
        cfg["per_sample"] = True
    if cfg.get("seed") is None:
        cfg["seed"] = secrets.randbits(32)
    args.seed = cfg["seed"]

    partitions = None
    if args.data:
        try:
            data = load_csv(args.data)
        except (OSError, ValueError) as exc:
            raise InputError(f"data: {exc}") from exc
    else:
        syn = cfg.get("synthetic", {})
        data, aligned = make_correlated_dataset(
            n_samples=syn.get("samples", 1000), n_groups=syn.get("groups", 8),
            group_size=syn.get("group_size", 5), n_classes=syn.get("classes", 3),
            seed=syn.get("seed", 0),
        )
        if syn.get("aligned", True):
            partitions = {aligned.k: aligned}
    if cfg.get("subsample"):
        rng = np.random.default_rng([cfg["seed"], 99])
        keep = np.sort(rng.choice(len(data), size=min(len(data), int(cfg["subsample"])), replace=False))
        data = type(data)(data.samples[keep], data.labels[keep])
    ks = _k_values(cfg.get("k_values"), data.n)
    bad = [k for k in ks if not 1 <= k <= data.n]
    if bad:
        raise InputError(f"k values outside 1..{data.n}: {bad[:5]}")
    grid = tuple(cfg["grid"]) if cfg.get("grid") else None
    result = sweep_k(
        data, ks,
        repeats=int(cfg.get("repeats", 5)),
        scheme=cfg.get("scheme", "random"),
        seed=int(cfg["seed"]),
        train_fraction=float(cfg.get("train_fraction", 0.8)),
        classifier=cfg.get("classifier", "ridge"),
        per_sample=bool(cfg.get("per_sample", False)),
        partitions=partitions,
        control_repeats=cfg.get("control_repeats"),
        grid=grid,
        workers=args.workers,
    )
    payload = result.to_json()
    payload["config"] = cfg
    out = Outputs(args, "sweep")
    out.add("sweep.json", _dumps(payload))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        result.to_csv(Path(args.out) / "sweep.csv")
        out.add("sweep.csv", (Path(args.out) / "sweep.csv").read_text())
    out.write()
    c = result.control
    sys.stdout.write(_dumps({
        "control": {"mean_acc": c.mean_acc, "std_acc": c.std_acc},
        "comparable_k": [r.k for r in result.records if r.comparable],
        "records": len(result.records),
    }))
    return EXIT_OK


def _partition_and_quality(args):
    part = Partition.from_json(_load_json_arg(args.partition, "partition"))
    q = QualityTable.from_json(_load_json_arg(args.quality, "quality"), part)
    return part, q


def cmd_reward_build(args) -> int:
    part, q = _partition_and_quality(args)
    try:
        matrix = build_reward_matrix(part, q, args.asymmetric)
    except QualityTableError as exc:
        raise InputError(str(exc)) from exc
    payload = {"reward": matrix.to_json()}
    if args.solve:
        payload["solution"] = solve_lp(matrix).to_json()
    out = Outputs(args, "reward-build")
    out.add("reward.json", _dumps(payload))
    out.write()
    sys.stdout.write(_dumps(payload))
    return EXIT_OK


def cmd_reward_validate(args) -> int:
    part, q = _partition_and_quality(args)
    violations = validate_quality_table(part, q, args.asymmetric)
    payload = {"valid": not violations, "violations": [v.to_json() for v in violations]}
    out = Outputs(args, "reward-validate")
    out.add("validation.json", _dumps(payload))
    out.write()
    sys.stdout.write(_dumps(payload))
    return EXIT_OK if not violations else EXIT_INPUT


def cmd_replay(args) -> int:
    manifest = _load_json_arg(args.manifest, "manifest")
    try:
        sub = manifest["subcommand"]
        config = dict(manifest["config"])
    except (KeyError, TypeError) as exc:
        raise InputError(f"manifest: missing field {exc}") from exc
    for key, entry in manifest.get("inputs", {}).items():
        if not Path(entry["path"]).is_file() or _digest(entry["path"]) != entry["sha256"]:
            raise InputError(f"manifest: input '{key}' at {entry['path']} is missing or changed")
        config[key] = entry["path"]
    if sub not in COMMANDS:
        raise InputError(f"manifest: unknown subcommand {sub!r}")
    ns = argparse.Namespace(**config)
    ns.func = COMMANDS[sub]
    ns.out = args.out
    return ns.func(ns)


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "attack": cmd_attack,
    "sweep": cmd_sweep,
    "reward-build": cmd_reward_build,
    "reward-validate": cmd_reward_validate,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="attrgame", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve a game given by a partition or a matrix")
    s.add_argument("--partition", help="JSON blocks, e.g. '[[1,2],[3,4]]', or a file")
    s.add_argument("--matrix", help="JSON matrix (learner rows pay adversary columns), or a file")
    s.add_argument("--spec", help="JSON file with 'blocks' or 'matrix'")
    s.add_argument("--quality", help="quality table JSON; turns a partition into a reward game")
    s.add_argument("--asymmetric", action="store_true", help="clamp quality gains under attack")
    s.add_argument("--method", choices=["auto", "lp", "fp"], default="auto")
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--max-iters", type=int, default=10_000_000)
    s.add_argument("--cap", type=int, default=DEFAULT_STRATEGY_CAP, help="strategy-space cap")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("verify", help="certify the uniform equilibrium of indicator games")
    s.add_argument("--partition")
    s.add_argument("--batch", help="JSON list of partitions")
    s.add_argument("--random", type=int, help="certify this many random partitions")
    s.add_argument("--max-k", type=int, default=4)
    s.add_argument("--max-block", type=int, default=5)
    s.add_argument("--seed", type=int)
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("attack", help="simulate the one-feature density-mixing attack")
    s.add_argument("--config", help="attack config JSON (plus, minus, epsilon, attacker)")
    s.add_argument("--epsilon", type=float, default=0.2)
    s.add_argument("--u-plus", type=float, default=1.0)
    s.add_argument("--u-minus", type=float, default=-1.0)
    s.add_argument("--std", type=float, default=1.0)
    s.add_argument("-n", "--n", type=int, default=100_000)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("sweep", help="accuracy-vs-k feature abstraction sweep")
    s.add_argument("--data", help="CSV, label in the first column")
    s.add_argument("--config", help="sweep config JSON")
    s.add_argument("--k", type=int, nargs="+")
    s.add_argument("--repeats", type=int)
    s.add_argument("--control-repeats", type=int)
    s.add_argument("--scheme", choices=["contiguous", "random", "grid"])
    s.add_argument("--classifier", choices=sorted(CLASSIFIERS))
    s.add_argument("--train-fraction", type=float)
    s.add_argument("--per-sample", action="store_true")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    for name, func, help_ in (
        ("reward-build", cmd_reward_build, "build the quality-weighted reward matrix"),
        ("reward-validate", cmd_reward_validate, "check a quality table against the collision rules"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--partition", required=True)
        s.add_argument("--quality", required=True)
        s.add_argument("--asymmetric", action="store_true")
        if name == "reward-build":
            s.add_argument("--solve", action="store_true")
        s.add_argument("--out")
        s.set_defaults(func=func)

    s = sub.add_parser("replay", help="re-run a subcommand from its manifest.json")
    s.add_argument("manifest")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"attrgame: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError) as exc:
        print(f"attrgame: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
