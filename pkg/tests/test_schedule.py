import numpy as np
import pytest
import torch

from orbit4d.diffusion import (
    NoiseSchedule,
    ddim_step,
    ddim_timesteps,
    forward_diffuse,
    predict_x0,
)
from orbit4d.errors import InvalidArgument

SCHED = NoiseSchedule()


class TestSchedule:
    def test_alpha_bar_monotone(self):
        ab = SCHED.alpha_bar
        assert ab[0] == 1.0
        assert torch.all(ab[1:] < ab[:-1])
        assert ab[-1] > 0

    def test_betas_increasing_in_range(self):
        b = SCHED.betas
        assert torch.all(b > 0) and torch.all(b < 1)
        assert torch.all(b[1:] >= b[:-1])

    def test_rejects_bad_params(self):
        with pytest.raises(InvalidArgument):
            NoiseSchedule(beta_start=0.0)
        with pytest.raises(InvalidArgument):
            NoiseSchedule(beta_start=0.5, beta_end=0.1)
        with pytest.raises(InvalidArgument):
            NoiseSchedule(num_train_steps=0)


class TestForwardDiffuse:
    def test_t_zero_is_identity(self):
        z0 = torch.randn(2, 3, 4, 4, generator=torch.Generator().manual_seed(0))
        eps = torch.randn_like(z0)
        assert torch.equal(forward_diffuse(z0, 0, eps, SCHED), z0)

    def test_zero_noise_scales_by_sqrt_alpha_bar(self):
        z0 = torch.ones(2, 3, 4, 4)
        out = forward_diffuse(z0, 500, torch.zeros_like(z0), SCHED)
        expected = torch.sqrt(SCHED.alpha_bar[500]).float()
        assert torch.allclose(out, expected * z0)

    def test_monte_carlo_second_moment(self):
        gen = torch.Generator().manual_seed(7)
        z0 = torch.randn(4, 4, generator=gen, dtype=torch.float64)
        t = 400
        ab = float(SCHED.alpha_bar[t])
        a2, s2 = ab, 1.0 - ab
        n = z0.numel()
        draws = 1000
        vals = []
        for _ in range(draws):
            eps = torch.randn(z0.shape, generator=gen, dtype=torch.float64)
            vals.append(float((forward_diffuse(z0, t, eps, SCHED) ** 2).sum()))
        expected = a2 * float((z0**2).sum()) + s2 * n
        # Var(X^2) for X ~ N(mu, s2): 4 mu^2 s2 + 2 s2^2, summed over entries
        var_one = float((4.0 * a2 * z0**2 * s2 + 2.0 * s2**2).sum())
        sigma = np.sqrt(var_one / draws)
        assert abs(np.mean(vals) - expected) <= 3.0 * sigma

    def test_rejects_shape_mismatch(self):
        with pytest.raises(InvalidArgument):
            forward_diffuse(torch.zeros(2, 3), 10, torch.zeros(3, 2), SCHED)

    def test_rejects_out_of_range_t(self):
        z = torch.zeros(2, 2)
        with pytest.raises(InvalidArgument):
            forward_diffuse(z, 1001, z.clone(), SCHED)


class TestPredictX0:
    def test_inverts_forward(self):
        gen = torch.Generator().manual_seed(1)
        z0 = torch.randn(3, 3, 4, 4, generator=gen)
        eps = torch.randn(z0.shape, generator=gen)
        z_t = forward_diffuse(z0, 700, eps, SCHED)
        rec = predict_x0(z_t, eps, 700, SCHED)
        assert torch.allclose(rec, z0, atol=1e-5)

    def test_zero_eps_hat(self):
        z_t = torch.ones(2, 2)
        out = predict_x0(z_t, torch.zeros_like(z_t), 300, SCHED)
        assert torch.allclose(out, z_t / torch.sqrt(SCHED.alpha_bar[300]).float())

    def test_linear_in_eps_hat(self):
        gen = torch.Generator().manual_seed(2)
        z_t = torch.randn(2, 5, generator=gen, dtype=torch.float64)
        e = torch.randn(z_t.shape, generator=gen, dtype=torch.float64)
        d = torch.randn(z_t.shape, generator=gen, dtype=torch.float64)
        t = 600
        ab = SCHED.alpha_bar[t]
        coeff = -torch.sqrt(1.0 - ab) / torch.sqrt(ab)
        diff = predict_x0(z_t, e + d, t, SCHED) - predict_x0(z_t, e, t, SCHED)
        assert torch.allclose(diff, coeff * d, atol=1e-12)


class TestDdim:
    def test_full_denoise_with_true_noise(self):
        gen = torch.Generator().manual_seed(3)
        z0 = torch.randn(2, 3, 4, 4, generator=gen)
        eps = torch.randn(z0.shape, generator=gen)
        z_T = forward_diffuse(z0, 1000, eps, SCHED)
        out = ddim_step(z_T, eps, 1000, 0, SCHED)
        assert torch.allclose(out, z0, atol=1e-4)

    def test_zero_everything(self):
        z = torch.zeros(2, 2)
        assert torch.equal(ddim_step(z, z.clone(), 500, 250, SCHED), z)

    def test_oracle_round_trip_50_steps(self):
        gen = torch.Generator().manual_seed(4)
        z0 = torch.randn(2, 3, 8, 8, generator=gen, dtype=torch.float64)
        eps = torch.randn(z0.shape, generator=gen, dtype=torch.float64)
        path = ddim_timesteps(SCHED, 50)
        z = forward_diffuse(z0, path[0], eps, SCHED)
        for t, t_prev in zip(path[:-1], path[1:]):
            eps_hat = (z - torch.sqrt(SCHED.alpha_bar[t]) * z0) / torch.sqrt(
                1.0 - SCHED.alpha_bar[t]
            )
            z = ddim_step(z, eps_hat, t, t_prev, SCHED)
        rel = float(torch.linalg.vector_norm(z - z0) / torch.linalg.vector_norm(z0))
        assert rel <= 1e-4

    def test_rejects_non_descending(self):
        z = torch.zeros(2, 2)
        with pytest.raises(InvalidArgument):
            ddim_step(z, z, 100, 100, SCHED)


class TestDdimTimesteps:
    def test_uniform_stride(self):
        path = ddim_timesteps(SCHED, 50)
        assert path[0] == 1000 and path[-1] == 0
        assert len(path) == 51
        assert all(a - b == 20 for a, b in zip(path[:-1], path[1:]))

    def test_single_step(self):
        assert ddim_timesteps(SCHED, 1) == [1000, 0]

    def test_rejects_bad_steps(self):
        with pytest.raises(InvalidArgument):
            ddim_timesteps(SCHED, 0)
        with pytest.raises(InvalidArgument):
            ddim_timesteps(SCHED, 1001)
