"""Command-line interface.

Subcommands::

    bayesbench run       benchmark experiment -> per-evaluation CSV + summary
    bayesbench table     aggregate a results CSV into a mean (std) grid
    bayesbench optimize  minimize an external command over a box
    bayesbench serve     newline-delimited JSON ask/tell session on stdio

``optimize`` evaluates the target by spawning ``--target-cmd`` once per
point: the child receives space-separated coordinates on stdin and must
print one number.  ``serve`` inverts control for foreign bindings: the
parent drives propose/tell and evaluates the target itself.
"""

from __future__ import annotations

import argparse
import json
import logging
import shlex
import subprocess
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from .benchmarks import get_benchmark
from .config import Params, default_params, params_from_mapping, parse_params
from .errors import BayesBenchError, OutOfOrderError
from .experiment import format_table, read_csv, run_experiment, summarize
from .inneropt import Box
from .optimizer import Optimizer, Problem

_LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def load_config(spec: str | None) -> Params:
    """Resolve --config: a file path, a shipped preset name, or defaults."""
    if spec is None:
        return default_params()
    path = Path(spec)
    if path.exists():
        return parse_params(path.read_text(encoding="utf-8"))
    preset = resources.files("bayesbench.presets").joinpath(f"{spec}.toml")
    if preset.is_file():
        return parse_params(preset.read_text(encoding="utf-8"))
    raise FileNotFoundError(f"no config file or preset named {spec!r}")


def _parse_checkpoints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok)


def _parse_floats(text: str) -> np.ndarray:
    return np.array([float(tok) for tok in text.split(",") if tok])


def _apply_overrides(params: Params, args) -> Params:
    if getattr(args, "seed", None) is not None:
        params = replace(params, random_seed=args.seed)
    if getattr(args, "n_init", None) is not None:
        total = params.n_init_samples + params.n_iterations
        params = replace(
            params,
            n_init_samples=args.n_init,
            n_iterations=max(total - args.n_init, 0),
        )
    if getattr(args, "evals", None) is not None:
        params = replace(
            params, n_iterations=max(args.evals - params.n_init_samples, 0)
        )
    for item in getattr(args, "param", None) or []:
        key, _, value = item.partition("=")
        doc = f"{key.strip()} = {value.strip()}"
        override = parse_params(doc)
        params = replace(params, **{key.strip(): getattr(override, key.strip())})
    return params


def cmd_run(args) -> int:
    params = _apply_overrides(load_config(args.config), args)
    bench = get_benchmark(args.function)
    checkpoints = _parse_checkpoints(args.checkpoints)
    row = run_experiment(
        params,
        bench,
        n_runs=args.runs,
        base_seed=args.seed if args.seed is not None else params.random_seed,
        checkpoints=checkpoints,
        out_csv=args.out,
        label=args.label or (args.config or "default"),
    )
    print(format_table(row))
    if args.out:
        print(f"wrote {args.out}")
    return 0


def cmd_table(args) -> int:
    rows = read_csv(args.infile)
    checkpoints = (
        _parse_checkpoints(args.checkpoints)
        if args.checkpoints
        else (50, 100, 200)
    )
    label = args.label or Path(args.infile).stem
    print(format_table(summarize(rows, checkpoints, label=label)))
    return 0


class _CommandTarget:
    """Evaluate points by spawning a child process per query."""

    def __init__(self, cmd: str):
        self.argv = shlex.split(cmd)

    def __call__(self, x: np.ndarray) -> float:
        payload = " ".join(repr(float(v)) for v in x) + "\n"
        proc = subprocess.run(
            self.argv, input=payload, capture_output=True, text=True
        )
        if proc.returncode != 0:
            raise RuntimeError(
                f"target command failed (exit {proc.returncode}): {proc.stderr.strip()}"
            )
        try:
            return float(proc.stdout.strip().splitlines()[-1])
        except (ValueError, IndexError) as exc:
            raise RuntimeError(
                f"target command printed no number: {proc.stdout!r}"
            ) from exc


def _problem_from_args(args) -> Problem:
    lower = _parse_floats(args.lower)
    upper = _parse_floats(args.upper)
    if len(lower) != args.dim or len(upper) != args.dim:
        raise BayesBenchError(
            f"--lower/--upper must have {args.dim} entries each"
        )
    return Problem(
        dim=args.dim,
        box=Box(lower, upper),
        evaluate=lambda x: float("nan"),  # replaced by the caller
    )


def cmd_optimize(args) -> int:
    params = _apply_overrides(load_config(args.config), args)
    problem = _problem_from_args(args)
    problem.evaluate = _CommandTarget(args.target_cmd)
    result = Optimizer(problem, params).run()
    print(
        json.dumps(
            {
                "x_best": list(result.x_best),
                "y_best": result.y_best,
                "n_evals": result.n_evals,
            }
        )
    )
    return 0


def cmd_serve(args) -> int:
    params = _apply_overrides(load_config(args.config), args)
    problem = _problem_from_args(args)
    opt = Optimizer(problem, params)
    out = sys.stdout
    _emit(
        out,
        {
            "ok": True,
            "op": "ready",
            "dim": problem.dim,
            "n_init": params.n_init_samples,
            "n_iterations": params.n_iterations,
            "total_evals": opt.n_evals_total,
        },
    )
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            op = request.get("op")
            if op == "propose":
                x = opt.propose()
                _emit(out, {"ok": True, "x": [float(v) for v in x]})
            elif op == "tell":
                record = opt.tell(request["x"], request["y"])
                _emit(
                    out,
                    {
                        "ok": True,
                        "n": record.eval_index,
                        "y_best": record.y_best,
                        "criterion": record.criterion,
                    },
                )
            elif op == "best":
                result = opt.result()
                _emit(
                    out,
                    {
                        "ok": True,
                        "x_best": list(result.x_best),
                        "y_best": result.y_best,
                        "n_evals": result.n_evals,
                        "history": [
                            {
                                "iteration": r.iteration,
                                "eval_index": r.eval_index,
                                "x": list(r.x),
                                "y": r.y,
                                "y_best": r.y_best,
                                "criterion": r.criterion,
                            }
                            for r in result.history
                        ],
                    },
                )
            elif op == "exit":
                _emit(out, {"ok": True})
                return 0
            else:
                _emit(out, {"ok": False, "error": "UnknownOp", "message": str(op)})
        except OutOfOrderError as exc:
            _emit(out, {"ok": False, "error": "OutOfOrder", "message": str(exc)})
        except (BayesBenchError, ValueError, KeyError, json.JSONDecodeError) as exc:
            _emit(
                out,
                {"ok": False, "error": type(exc).__name__, "message": str(exc)},
            )
    return 0


def _emit(out, payload: dict) -> None:
    out.write(json.dumps(payload) + "\n")
    out.flush()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayesbench",
        description="Bayesian optimization library and benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark experiment")
    run.add_argument("--config", help="config file path or preset name")
    run.add_argument(
        "--function",
        required=True,
        choices=("branin", "camelback", "hartmann6"),
    )
    run.add_argument("--runs", type=int, default=10)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--checkpoints", default="50,200")
    run.add_argument("--out", default=None, help="per-evaluation CSV path")
    run.add_argument("--n-init", dest="n_init", type=int, default=None)
    run.add_argument("--evals", type=int, default=None, help="total evaluations")
    run.add_argument("--label", default=None)
    run.add_argument("--param", action="append", help="key=value override")
    run.set_defaults(func=cmd_run)

    table = sub.add_parser("table", help="summarize a results CSV")
    table.add_argument("--in", dest="infile", required=True)
    table.add_argument("--checkpoints", default=None)
    table.add_argument("--label", default=None)
    table.set_defaults(func=cmd_table)

    def add_problem_args(p):
        p.add_argument("--config", help="config file path or preset name")
        p.add_argument("--dim", type=int, required=True)
        p.add_argument("--lower", required=True, help="comma-separated bounds")
        p.add_argument("--upper", required=True, help="comma-separated bounds")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--param", action="append", help="key=value override")

    optimize = sub.add_parser("optimize", help="minimize an external command")
    add_problem_args(optimize)
    optimize.add_argument(
        "--target-cmd",
        required=True,
        help="command receiving coordinates on stdin, printing one number",
    )
    optimize.set_defaults(func=cmd_optimize)

    serve = sub.add_parser("serve", help="JSON ask/tell session on stdio")
    add_problem_args(serve)
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config_level = logging.WARNING
    if getattr(args, "config", None) is not None:
        try:
            config_level = _LOG_LEVELS[load_config(args.config).verbose]
        except Exception:
            pass
    logging.basicConfig(level=config_level, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (BayesBenchError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
