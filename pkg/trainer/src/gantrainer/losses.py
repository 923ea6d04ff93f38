"""Wasserstein loss with gradient penalty."""

from __future__ import annotations

import torch

from .models import latent_batch

DEFAULT_PENALTY_WEIGHT = 10.0


def gradient_penalty(discriminator, x_real: torch.Tensor, x_gen: torch.Tensor,
                     generator: torch.Generator | None = None) -> torch.Tensor:
    """Mean squared deviation of the discriminator's input-gradient norm from 1.

    Gradients are taken at random per-sample linear interpolations
    x_hat = eps * x_real + (1 - eps) * x_gen with eps uniform on [0, 1].
    """
    if x_real.shape != x_gen.shape:
        raise ValueError("real and generated batches must share a shape")
    eps_shape = (x_real.shape[0],) + (1,) * (x_real.ndim - 1)
    eps = torch.rand(eps_shape, generator=generator, dtype=x_real.dtype)
    x_hat = (eps * x_real + (1.0 - eps) * x_gen.detach()).requires_grad_(True)
    d_hat = discriminator(x_hat)
    if not d_hat.requires_grad:
        # discriminator ignores its input entirely: gradient is zero
        return torch.ones((), dtype=x_real.dtype)
    grad = torch.autograd.grad(
        d_hat.sum(), x_hat, create_graph=True, allow_unused=True
    )[0]
    if grad is None:
        return torch.ones((), dtype=x_real.dtype)
    norms = grad.flatten(1).norm(2, dim=1)
    return ((norms - 1.0) ** 2).mean()


def wgan_gp_loss(discriminator, generator_net, x_real: torch.Tensor,
                 penalty_weight: float = DEFAULT_PENALTY_WEIGHT,
                 generator: torch.Generator | None = None
                 ) -> tuple[torch.Tensor, torch.Tensor]:
    """(discriminator loss, generator loss) for one batch.

    disc = E[D(x_gen)] - E[D(x_real)] + weight * penalty;  gen = -E[D(x_gen)].
    """
    z = latent_batch(x_real.shape[0], generator)
    x_gen = generator_net(z)
    disc_loss = (
        discriminator(x_gen.detach()).mean()
        - discriminator(x_real).mean()
        + penalty_weight * gradient_penalty(discriminator, x_real, x_gen, generator)
    )
    gen_loss = -discriminator(x_gen).mean()
    return disc_loss, gen_loss
