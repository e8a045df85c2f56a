"""Command-line entry point for the training package."""

from __future__ import annotations

import argparse
import sys


def _cmd_gen_dataset(args) -> int:
    from .data import gen_swap_dataset

    stored = gen_swap_dataset(args.count, args.out, seed=args.seed)
    print(f"stored {stored}/{args.count} converged pairs in {args.out}")
    return 0


def _cmd_train_flow(args) -> int:
    from .flow_model import FlowTrainConfig, train

    cfg = FlowTrainConfig(
        dataset=args.dataset, out=args.out, steps=args.steps,
        batch_size=args.batch_size, lr=args.lr, seed=args.seed,
    )
    out = train(cfg, resume=args.resume)
    losses = out["losses"]
    print(f"trained {args.steps} steps; final loss {losses[-1]:.4f}; saved {args.out}")
    return 0


def _cmd_sample(args) -> int:
    from swarmplan.scenario import load as load_scn

    from .flow_model import load_flow, sample_to_file

    net, std, _ = load_flow(args.flow)
    scn = load_scn(args.scenario)
    sample_to_file(
        net, std, scn, args.count, args.out,
        num_ode_steps=args.ode_steps, seed=args.seed,
    )
    print(f"wrote {args.count} candidates to {args.out}")
    return 0


def _cmd_train_init(args) -> int:
    from .init_net import InitTrainConfig, train_init

    cfg = InitTrainConfig(
        flow_checkpoint=args.flow, out=args.out, n_scenarios=args.scenarios,
        n_robots=args.robots, robot_radius=args.radius,
        steps=args.steps, batch_size=args.batch_size,
        unroll_depth=args.unroll, lr=args.lr, seed=args.seed,
    )
    out = train_init(cfg)
    print(f"trained {args.steps} steps; final loss {out['losses'][-1]:.4f}; saved {args.out}")
    return 0


def _cmd_export_warmstarts(args) -> int:
    from swarmplan.scenario import load as load_scn

    from . import bridge
    from .init_net import export_warmstarts, load_init

    net, _ = load_init(args.init)
    scn = load_scn(args.scenario)
    cands = bridge.load_candidates(
        args.candidates, scn.n, scn.n_d, scn.horizon.n_basis
    )
    export_warmstarts(net, [scn] * len(cands), cands, args.out)
    print(f"wrote {len(cands)} warm starts to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swarmtrain", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="solve toy swap instances into a dataset")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("train-flow", help="train the candidate sampler")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=1500)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resume", default=None)
    p.set_defaults(func=_cmd_train_flow)

    p = sub.add_parser("sample", help="sample candidates for a scenario")
    p.add_argument("--flow", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--count", type=int, default=64)
    p.add_argument("--out", required=True)
    p.add_argument("--ode-steps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("train-init", help="train the warm-start network")
    p.add_argument("--flow", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scenarios", type=int, default=2048)
    p.add_argument("--robots", type=int, default=4)
    p.add_argument("--radius", type=float, default=0.12)
    p.add_argument("--steps", type=int, default=8000)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--unroll", type=int, default=5)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train_init)

    p = sub.add_parser("export-warmstarts", help="predict warm starts for a candidate file")
    p.add_argument("--init", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_warmstarts)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface expected errors as exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
