"""Self-supervised warm-start network for the planner's fixed-point solver.

Given a sampled candidate trajectory and the scenario conditions, the network
predicts an initial iterate (coefficients and multipliers). Training unrolls
L differentiable solver iterations from the prediction and minimizes the
fixed-point residual of every unrolled step plus the distance of the final
coefficients from the candidate — no ground-truth solver outputs are used.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn

from . import diff_solver
from .data import conditions_of, make_swap_scenario
from .errors import TrainerError
from .flow_model import AdaBlock, PointSetEncoder, load_flow, sample as flow_sample


@dataclass(frozen=True)
class InitModelConfig:
    n: int
    n_d: int
    n_xi: int
    n_obs: int = 0
    dim: int = 64
    heads: int = 8
    depth: int = 1


@dataclass(frozen=True)
class InitTrainConfig:
    flow_checkpoint: str
    out: str
    n_scenarios: int = 2048
    n_robots: int = 4
    robot_radius: float = 0.12
    steps: int = 8000
    batch_size: int = 64
    unroll_depth: int = 5
    lr: float = 1e-3
    seed: int = 0
    dim: int = 128
    heads: int = 8
    depth: int = 3
    # constraint inflation used for the training-time solver system; wider than
    # the planner's own margin so predictions that match the training fixed
    # points sit strictly inside the planner's feasible set
    train_margin: float = 1.5


class InitNet(nn.Module):
    def __init__(self, cfg: InitModelConfig):
        super().__init__()
        self.cfg = cfg
        dim = cfg.dim
        self.patch = nn.Linear(cfg.n_d * cfg.n_xi, dim)
        self.sg_enc = PointSetEncoder(2 * cfg.n_d, dim)
        self.obs_enc = PointSetEncoder(2 * cfg.n_d, dim)
        self.blocks = nn.ModuleList(AdaBlock(dim, cfg.heads) for _ in range(cfg.depth))
        self.norm = nn.LayerNorm(dim, elementwise_affine=False)
        # both heads start at zero so the initial prediction is exactly the
        # candidate itself with cold multipliers
        self.xi_head = nn.Linear(dim, cfg.n_d * cfg.n_xi)
        self.lam_head = nn.Linear(dim, cfg.n_d * cfg.n_xi)
        for head in (self.xi_head, self.lam_head):
            nn.init.zeros_(head.weight)
            nn.init.zeros_(head.bias)

    def forward(
        self,
        xi: torch.Tensor,                 # (B, n, n_d, n_xi) raw-scale candidate
        sg: torch.Tensor,                 # (B, n, 2*n_d)
        obs: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        cfg = self.cfg
        if xi.shape[1:] != (cfg.n, cfg.n_d, cfg.n_xi):
            raise TrainerError(
                f"coefficient shape {tuple(xi.shape[1:])} does not match the model "
                f"({cfg.n}, {cfg.n_d}, {cfg.n_xi})"
            )
        sg_tok, sg_pool = self.sg_enc(sg)
        cond = sg_pool
        if obs is not None and obs.shape[1] > 0:
            cond = cond + self.obs_enc(obs)[1]
        tokens = self.patch(xi.flatten(2)) + sg_tok
        for block in self.blocks:
            tokens = block(tokens, cond)
        tokens = self.norm(tokens)
        xi0 = xi + self.xi_head(tokens).reshape(xi.shape)
        lam0 = self.lam_head(tokens).reshape(xi.shape)
        return xi0, lam0


def predict(net: InitNet, coeffs: np.ndarray, scn) -> tuple[np.ndarray, np.ndarray]:
    """Warm start for one candidate; returns (xi0, lambda0) coefficient arrays."""
    sg_np, obs_np = conditions_of(scn)
    with torch.no_grad():
        xi0, lam0 = net(
            torch.as_tensor(coeffs, dtype=torch.float32)[None],
            torch.as_tensor(sg_np, dtype=torch.float32)[None],
            torch.as_tensor(obs_np, dtype=torch.float32)[None],
        )
    return xi0[0].double().numpy(), lam0[0].double().numpy()


def _planner_pieces(scn, margin: float | None = None):
    from swarmplan.basis import build_basis
    from swarmplan.constraints import assemble

    basis = build_basis(scn.horizon)
    if margin is None:
        return basis, assemble(scn, basis)
    return basis, assemble(scn, basis, margin=margin)


def build_training_inputs(cfg: InitTrainConfig):
    """Scenarios, flow samples, and the shared torch system with batched
    boundary conditions for the whole training set."""
    flow_net, std, _ = load_flow(cfg.flow_checkpoint)
    scns = [
        make_swap_scenario(cfg.seed + i, n=cfg.n_robots, radius=cfg.robot_radius)
        for i in range(cfg.n_scenarios)
    ]
    _, sys0 = _planner_pieces(scns[0], margin=cfg.train_margin)
    ts = diff_solver.TorchSystem.from_planner(sys0, mode="projection")
    bs = []
    samples = []
    sgs = []
    for i, scn in enumerate(scns):
        _, sys = _planner_pieces(scn, margin=cfg.train_margin)
        bs.append(torch.as_tensor(sys.b, dtype=torch.float64))
        samples.append(flow_sample(flow_net, std, scn, count=1, seed=cfg.seed + 7000 + i)[0])
        sgs.append(conditions_of(scn)[0])
    b_all = torch.stack(bs, dim=-1)                                   # (n_d, a_rows, N)
    xi_all = torch.as_tensor(np.stack(samples), dtype=torch.float64)  # (N, n, n_d, n_xi)
    sg_all = torch.as_tensor(np.stack(sgs), dtype=torch.float64)
    return scns, ts, b_all, xi_all, sg_all


def train_init(cfg: InitTrainConfig) -> dict:
    scns, ts, b_all, xi_all, sg_all = build_training_inputs(cfg)
    model_cfg = InitModelConfig(
        n=scns[0].n, n_d=scns[0].n_d, n_xi=scns[0].horizon.n_basis,
        n_obs=0, dim=cfg.dim, heads=cfg.heads, depth=cfg.depth,
    )
    torch.manual_seed(cfg.seed)
    net = InitNet(model_cfg)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(
        opt, T_max=cfg.steps, eta_min=cfg.lr / 10
    )
    gen = torch.Generator().manual_seed(cfg.seed + 1)
    N = len(scns)
    losses: list[float] = []
    for _ in range(cfg.steps):
        idx = torch.randint(N, (min(cfg.batch_size, N),), generator=gen)
        xi_raw = xi_all[idx]
        xi0_c, lam0_c = net(xi_raw.float(), sg_all[idx].float(), None)
        xi0 = diff_solver.xi_from_coeffs(xi0_c.double())
        lam0 = diff_solver.xi_from_coeffs(lam0_c.double())
        target = diff_solver.xi_from_coeffs(xi_raw)
        tsb = ts.with_b(b_all[..., idx])
        loss = diff_solver.unroll_loss(tsb, xi0, lam0, target, target, cfg.unroll_depth)
        opt.zero_grad()
        loss.backward()
        opt.step()
        sched.step()
        losses.append(float(loss.detach()))
    torch.save(
        {
            "kind": "init",
            "model_config": asdict(model_cfg),
            "state_dict": net.state_dict(),
            "losses": losses,
            "train_config": asdict(cfg),
        },
        cfg.out,
    )
    return {"losses": losses, "net": net, "model_config": model_cfg}


def load_init(path) -> tuple[InitNet, dict]:
    ckpt = torch.load(path, weights_only=False)
    if ckpt.get("kind") != "init":
        raise TrainerError(f"{path} is not an init checkpoint")
    net = InitNet(InitModelConfig(**ckpt["model_config"]))
    net.load_state_dict(ckpt["state_dict"])
    net.eval()
    return net, ckpt


def export_warmstarts(net: InitNet, scenarios, candidates, path) -> None:
    """Predicted warm starts for candidate i of scenario i, written in the
    shared warm-start schema (index-aligned with a candidate file)."""
    from . import bridge

    entries = [predict(net, coeffs, scn) for scn, coeffs in zip(scenarios, candidates)]
    bridge.write_warmstarts(path, entries)


def iterations_to_threshold(
    scn,
    target_coeffs: np.ndarray,
    xi0_coeffs: np.ndarray,
    lam0_coeffs: np.ndarray | None = None,
    threshold: float = 0.01,
    max_iters: int = 2000,
) -> int:
    """Planner-solver iterations until the primal residual first drops below
    the threshold, starting from the given iterate while projecting onto the
    target candidate; max_iters if never reached."""
    from swarmplan.solver import (
        ObjectiveMode, SolverConfig, SolverState, solve, xi_from_coeffs,
    )

    _, sys = _planner_pieces(scn)
    target = xi_from_coeffs(target_coeffs)
    xi0 = xi_from_coeffs(xi0_coeffs)
    lam0 = np.zeros_like(xi0) if lam0_coeffs is None else xi_from_coeffs(lam0_coeffs)
    cfg = SolverConfig(max_iters=max_iters)
    res = solve(
        SolverState(xi=xi0, lam=lam0), sys, ObjectiveMode.projection(target), cfg
    )
    reached = res.iterations_to(threshold)
    return max_iters if reached is None else reached
