import numpy as np
import pytest
import torch

from orbit4d.diffusion import (
    GuidanceWeights,
    NoiseSchedule,
    cfg_combine,
    forward_diffuse,
    latent_motion_magnitude,
    loss_ldm,
    loss_mr,
    total_loss,
)
from orbit4d.errors import InvalidArgument

SCHED = NoiseSchedule()


def cfg_oracle(c, u, s, w1, w2):
    """Scalar-loop reference for the three-term combination."""
    out = np.empty_like(c)
    for i in range(c.size):
        cv, uv, sv = c.flat[i], u.flat[i], s.flat[i]
        out.flat[i] = cv + w1 * (cv - uv) + w2 * (cv - sv)
    return out


class TestCfgCombine:
    def test_worked_scalar_case(self):
        w = GuidanceWeights(w1=7.0, w2=0.5)
        assert cfg_combine(1.0, 0.5, 0.8, w) == pytest.approx(4.6, abs=1e-12)

    def test_matches_scalar_loop_oracle(self):
        rng = np.random.default_rng(0)
        c = rng.normal(size=(4, 3, 8, 8))
        u = rng.normal(size=c.shape)
        s = rng.normal(size=c.shape)
        w = GuidanceWeights(7.0, 0.5)
        got = cfg_combine(torch.from_numpy(c), torch.from_numpy(u), torch.from_numpy(s), w)
        assert np.allclose(got.numpy(), cfg_oracle(c, u, s, 7.0, 0.5), atol=1e-12)

    def test_equal_inputs_collapse(self):
        x = torch.randn(3, 5, generator=torch.Generator().manual_seed(1))
        out = cfg_combine(x, x.clone(), x.clone(), GuidanceWeights(123.0, -4.5))
        assert torch.equal(out, x)

    def test_zero_weights_identity(self):
        gen = torch.Generator().manual_seed(2)
        c, u, s = (torch.randn(4, 4, generator=gen) for _ in range(3))
        assert torch.equal(cfg_combine(c, u, s, GuidanceWeights(0.0, 0.0)), c)

    def test_exact_linearity_in_conditional(self):
        gen = torch.Generator().manual_seed(3)
        c, u, s, d = (torch.randn(6, 6, generator=gen, dtype=torch.float64) for _ in range(4))
        w = GuidanceWeights(7.0, 0.5)
        diff = cfg_combine(c + d, u, s, w) - cfg_combine(c, u, s, w)
        assert torch.allclose(diff, (1.0 + 7.0 + 0.5) * d, atol=1e-12)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(InvalidArgument):
            cfg_combine(torch.zeros(2, 2), torch.zeros(2, 3), torch.zeros(2, 2), GuidanceWeights())

    def test_rejects_nonfinite_weights(self):
        with pytest.raises(InvalidArgument):
            GuidanceWeights(w1=float("nan"))


class TestLossLdm:
    class EchoDenoiser:
        """Returns a stored tensor regardless of input."""

        def __init__(self, out):
            self.out = out
            self.trained = True

        def __call__(self, z, t, cond=None, m=None, drop=None):
            return self.out

    def test_perfect_prediction_zero(self):
        gen = torch.Generator().manual_seed(0)
        z0 = torch.randn(1, 4, 3, 8, 8, generator=gen)
        eps = torch.randn(z0.shape, generator=gen)
        assert float(loss_ldm(self.EchoDenoiser(eps), z0, 500, eps, SCHED)) == 0.0

    def test_constant_offset_gives_c_squared(self):
        gen = torch.Generator().manual_seed(1)
        z0 = torch.randn(1, 4, 3, 8, 8, generator=gen, dtype=torch.float64)
        eps = torch.randn(z0.shape, generator=gen, dtype=torch.float64)
        c = 0.3
        got = float(loss_ldm(self.EchoDenoiser(eps + c), z0, 100, eps, SCHED))
        assert got == pytest.approx(c * c, rel=1e-12)

    def test_matches_elementwise_bruteforce(self):
        gen = torch.Generator().manual_seed(2)
        z0 = torch.randn(1, 2, 3, 4, 4, generator=gen, dtype=torch.float64)
        eps = torch.randn(z0.shape, generator=gen, dtype=torch.float64)
        pred = torch.randn(z0.shape, generator=gen, dtype=torch.float64)
        got = float(loss_ldm(self.EchoDenoiser(pred), z0, 250, eps, SCHED))
        brute = 0.0
        for p, e in zip(pred.flatten().tolist(), eps.flatten().tolist()):
            brute += (p - e) ** 2
        brute /= eps.numel()
        assert got == pytest.approx(brute, rel=1e-12)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(InvalidArgument):
            loss_ldm(self.EchoDenoiser(None), torch.zeros(1, 2, 3, 4, 4), 10,
                     torch.zeros(1, 2, 3, 4, 5), SCHED)


class TestLossMr:
    def test_perfect_reconstruction_zero(self):
        gen = torch.Generator().manual_seed(0)
        z0 = torch.randn(4, 3, 8, 8, generator=gen)
        zb = torch.randn(z0.shape, generator=gen)
        assert float(loss_mr(z0, z0.clone(), zb)) == 0.0

    def test_worked_magnitudes(self):
        # m(z0) = 0.04, m(z0_hat) = 0.01 -> (0.03)^2
        zb = torch.zeros(2, 3, 4, 4, dtype=torch.float64)
        z0 = torch.full_like(zb, 0.2)       # mean squared diff = 0.04
        z0_hat = torch.full_like(zb, 0.1)   # mean squared diff = 0.01
        assert float(loss_mr(z0, z0_hat, zb)) == pytest.approx(9e-4, rel=1e-12)

    def test_constant_shift_invariance(self):
        gen = torch.Generator().manual_seed(1)
        z0, zh, zb = (torch.randn(3, 3, 4, 4, generator=gen, dtype=torch.float64) for _ in range(3))
        base = float(loss_mr(z0, zh, zb))
        shifted = float(loss_mr(z0 + 0.7, zh + 0.7, zb + 0.7))
        assert shifted == pytest.approx(base, rel=1e-9)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(InvalidArgument):
            loss_mr(torch.zeros(2, 3), torch.zeros(2, 3), torch.zeros(3, 2))


class TestTotalLoss:
    def test_worked_example(self):
        assert total_loss(0.5, 0.2, 5e-4) == pytest.approx(0.5001, rel=1e-12)

    def test_omega_zero(self):
        assert total_loss(0.37, 123.0, 0.0) == 0.37

    def test_zero_losses(self):
        assert total_loss(0.0, 0.0, 5e-4) == 0.0

    def test_rejects_negative_omega(self):
        with pytest.raises(InvalidArgument):
            total_loss(1.0, 1.0, -0.1)


def test_latent_motion_magnitude_basics():
    z = torch.zeros(2, 3, 4, 4)
    zb = torch.zeros_like(z)
    assert float(latent_motion_magnitude(z, zb)) == 0.0
    z2 = z.clone()
    z2[0, 0, 0, 0] = 1.0
    assert float(latent_motion_magnitude(z2, zb)) == pytest.approx(1.0 / z.numel(), rel=1e-6)
