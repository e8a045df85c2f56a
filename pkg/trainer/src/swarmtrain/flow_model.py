"""Conditional flow matching over trajectory coefficients, toy scale.

A velocity network v(xi_t, t, c) is trained to regress the straight
interpolation displacement between prior noise and dataset coefficients; new
candidates are drawn by integrating the learned field from a standard-normal
prior with fixed-step Euler and written to the shared candidate schema.

The backbone is a small transformer over one token per robot with no
positional encoding, so it is permutation-equivariant in the robots; the
condition encoders pool with max over set elements and are therefore exactly
permutation-invariant at the pooled-feature level.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn

from .data import Standardizer, conditions_of, load_training_set
from .errors import TrainerError


@dataclass(frozen=True)
class FlowModelConfig:
    n: int
    n_d: int
    n_xi: int
    n_obs: int = 0
    dim: int = 64
    heads: int = 4
    depth: int = 2


@dataclass(frozen=True)
class FlowTrainConfig:
    dataset: str
    out: str
    steps: int = 1500
    batch_size: int = 64
    lr: float = 1e-3
    seed: int = 0
    dim: int = 64
    heads: int = 4
    depth: int = 2


class SinusoidalEmbedding(nn.Module):
    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        half = self.dim // 2
        freqs = torch.exp(
            -math.log(10000.0) * torch.arange(half, dtype=t.dtype, device=t.device) / half
        )
        ang = t[:, None] * freqs[None, :] * 1000.0
        return torch.cat([torch.sin(ang), torch.cos(ang)], dim=-1)


class PointSetEncoder(nn.Module):
    """Per-point features plus an exactly permutation-invariant max pool."""

    def __init__(self, in_dim: int, dim: int):
        super().__init__()
        self.phi = nn.Sequential(nn.Linear(in_dim, dim), nn.SiLU(), nn.Linear(dim, dim))
        self.mix = nn.Linear(2 * dim, dim)
        self.dim = dim

    def forward(self, pts: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        B, P, _ = pts.shape
        if P == 0:
            z = pts.new_zeros(B, 0, self.dim)
            return z, pts.new_zeros(B, self.dim)
        feat = self.phi(pts)                          # (B, P, dim)
        pooled = feat.max(dim=1).values               # (B, dim)
        per_point = self.mix(torch.cat([feat, pooled[:, None].expand_as(feat)], dim=-1))
        return per_point, pooled


class AdaBlock(nn.Module):
    """Pre-norm attention + MLP with gated scale/shift conditioning."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim, elementwise_affine=False)
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim, elementwise_affine=False)
        self.mlp = nn.Sequential(nn.Linear(dim, 4 * dim), nn.SiLU(), nn.Linear(4 * dim, dim))
        self.mod = nn.Linear(dim, 6 * dim)
        nn.init.zeros_(self.mod.weight)
        nn.init.zeros_(self.mod.bias)

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        sh1, sc1, g1, sh2, sc2, g2 = self.mod(torch.nn.functional.silu(cond))[:, None].chunk(
            6, dim=-1
        )
        h = self.norm1(x) * (1 + sc1) + sh1
        x = x + g1 * self.attn(h, h, h, need_weights=False)[0]
        h = self.norm2(x) * (1 + sc2) + sh2
        return x + g2 * self.mlp(h)


class FlowNet(nn.Module):
    def __init__(self, cfg: FlowModelConfig):
        super().__init__()
        self.cfg = cfg
        dim = cfg.dim
        self.patch = nn.Linear(cfg.n_d * cfg.n_xi, dim)
        self.sg_enc = PointSetEncoder(2 * cfg.n_d, dim)
        self.obs_enc = PointSetEncoder(2 * cfg.n_d, dim)
        self.time_emb = nn.Sequential(
            SinusoidalEmbedding(dim), nn.Linear(dim, dim), nn.SiLU(), nn.Linear(dim, dim)
        )
        self.blocks = nn.ModuleList(AdaBlock(dim, cfg.heads) for _ in range(cfg.depth))
        self.norm = nn.LayerNorm(dim, elementwise_affine=False)
        self.head = nn.Linear(dim, cfg.n_d * cfg.n_xi)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(
        self,
        xi: torch.Tensor,                 # (B, n, n_d, n_xi), standardized
        t: torch.Tensor,                  # (B,) in [0, 1]
        sg: torch.Tensor,                 # (B, n, 2*n_d)
        obs: torch.Tensor | None = None,  # (B, n_obs, 2*n_d)
    ) -> torch.Tensor:
        cfg = self.cfg
        if xi.shape[1:] != (cfg.n, cfg.n_d, cfg.n_xi):
            raise TrainerError(
                f"coefficient shape {tuple(xi.shape[1:])} does not match the model "
                f"({cfg.n}, {cfg.n_d}, {cfg.n_xi})"
            )
        sg_tok, sg_pool = self.sg_enc(sg)
        cond = self.time_emb(t) + sg_pool
        if obs is not None and obs.shape[1] > 0:
            cond = cond + self.obs_enc(obs)[1]
        tokens = self.patch(xi.flatten(2)) + sg_tok
        for blk in self.blocks:
            tokens = blk(tokens, cond)
        return self.head(self.norm(tokens)).reshape(xi.shape)


def cfm_loss(
    net: nn.Module,
    xi1: torch.Tensor,
    sg: torch.Tensor,
    obs: torch.Tensor | None,
    t: torch.Tensor,
    xi0: torch.Tensor,
) -> torch.Tensor:
    """Mean squared error between the field at the linear interpolation point
    and the endpoint displacement."""
    tt = t[:, None, None, None]
    xt = (1.0 - tt) * xi0 + tt * xi1
    v = net(xt, t, sg, obs)
    return ((v - (xi1 - xi0)) ** 2).mean()


def train(cfg: FlowTrainConfig, resume: str | None = None) -> dict:
    """Train the field on a toy dataset; returns the loss history, model and
    standardizer, and writes a checkpoint to cfg.out."""
    dset = load_training_set(cfg.dataset)
    std = Standardizer.fit(dset.coeffs)
    xi1_all = std.apply(dset.coeffs).float()
    sg_all = dset.sg.float()
    obs_all = dset.obs.float()
    N, n, n_d, n_xi = xi1_all.shape
    model_cfg = FlowModelConfig(
        n=n, n_d=n_d, n_xi=n_xi, n_obs=obs_all.shape[1],
        dim=cfg.dim, heads=cfg.heads, depth=cfg.depth,
    )

    torch.manual_seed(cfg.seed)
    net = FlowNet(model_cfg)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.lr)
    losses: list[float] = []
    if resume is not None:
        ckpt = torch.load(resume, weights_only=False)
        if ckpt["model_config"] != asdict(model_cfg):
            raise TrainerError("resume checkpoint does not match the dataset dimensions")
        net.load_state_dict(ckpt["state_dict"])
        opt.load_state_dict(ckpt["optimizer"])
        std = Standardizer.from_state_dict(ckpt["standardizer"])
        losses = list(ckpt["losses"])

    gen = torch.Generator().manual_seed(cfg.seed + 1)
    for _ in range(cfg.steps):
        idx = torch.randint(N, (min(cfg.batch_size, N),), generator=gen)
        xi1 = xi1_all[idx]
        t = torch.rand(len(idx), generator=gen)
        xi0 = torch.randn(xi1.shape, generator=gen)
        loss = cfm_loss(net, xi1, sg_all[idx], obs_all[idx], t, xi0)
        opt.zero_grad()
        loss.backward()
        opt.step()
        losses.append(float(loss.detach()))

    torch.save(
        {
            "kind": "flow",
            "model_config": asdict(model_cfg),
            "state_dict": net.state_dict(),
            "optimizer": opt.state_dict(),
            "standardizer": std.state_dict(),
            "losses": losses,
            "train_config": asdict(cfg),
        },
        cfg.out,
    )
    return {"losses": losses, "net": net, "std": std, "model_config": model_cfg}


def load_flow(path) -> tuple[FlowNet, Standardizer, dict]:
    ckpt = torch.load(path, weights_only=False)
    if ckpt.get("kind") != "flow":
        raise TrainerError(f"{path} is not a flow checkpoint")
    net = FlowNet(FlowModelConfig(**ckpt["model_config"]))
    net.load_state_dict(ckpt["state_dict"])
    net.eval()
    return net, Standardizer.from_state_dict(ckpt["standardizer"]), ckpt


def sample(
    net: FlowNet,
    std: Standardizer,
    scn,
    count: int,
    num_ode_steps: int = 20,
    seed: int = 0,
) -> np.ndarray:
    """Euler-integrate the field from prior noise; returns raw-scale
    coefficients (count, n, n_d, n_xi). `scn` is a planner scenario or a
    bridge document with matching dimensions."""
    cfg = net.cfg
    n_xi = getattr(scn, "n_xi", None) or scn.horizon.n_basis
    if (scn.n, scn.n_d, n_xi) != (cfg.n, cfg.n_d, cfg.n_xi):
        raise TrainerError(
            f"scenario dims ({scn.n}, {scn.n_d}, {n_xi}) do not match the model "
            f"({cfg.n}, {cfg.n_d}, {cfg.n_xi})"
        )
    sg_np, obs_np = conditions_of(scn)
    sg = torch.as_tensor(sg_np, dtype=torch.float32)[None].expand(count, -1, -1)
    obs = torch.as_tensor(obs_np, dtype=torch.float32)[None].expand(count, -1, -1)
    gen = torch.Generator().manual_seed(seed)
    xi = torch.randn((count, cfg.n, cfg.n_d, cfg.n_xi), generator=gen)
    dt = 1.0 / num_ode_steps
    with torch.no_grad():
        for k in range(num_ode_steps):
            t = torch.full((count,), k * dt)
            xi = xi + dt * net(xi, t, sg, obs)
    return std.invert(xi.double()).numpy()


def sample_to_file(net, std, scn, count, path, num_ode_steps: int = 20, seed: int = 0):
    from . import bridge

    coeffs = sample(net, std, scn, count, num_ode_steps=num_ode_steps, seed=seed)
    bridge.write_candidates(path, list(coeffs), net.cfg.n, net.cfg.n_d, net.cfg.n_xi)
    return coeffs
