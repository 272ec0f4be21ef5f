"""Eigenpair generation, certification, catalog shapes, and scaling laws."""

import math

import numpy as np
import pytest

import plapspec as pl
from plapspec.errors import DegenerateFieldError, ParameterError


class TestEigenPairInvariants:
    def test_unit_norm_and_zero_mean_enforced(self):
        vals = np.array([1.0, -1.0, 1.0, -1.0]) / 2.0
        pl.EigenPair(pl.Field(vals), -1.0, 1.5, 0.0, "analytic")
        with pytest.raises(ParameterError):
            pl.EigenPair(pl.Field(2.0 * vals), -1.0, 1.5, 0.0, "analytic")
        with pytest.raises(ParameterError):
            pl.EigenPair(pl.Field(vals + 0.5), -1.0, 1.5, 0.0, "analytic")

    def test_rejects_positive_eigenvalue(self):
        vals = np.array([1.0, -1.0, 1.0, -1.0]) / 2.0
        with pytest.raises(ParameterError):
            pl.EigenPair(pl.Field(vals), 0.5, 1.5, 0.0, "analytic")

    def test_rejects_unknown_provenance(self):
        vals = np.array([1.0, -1.0, 1.0, -1.0]) / 2.0
        with pytest.raises(ParameterError):
            pl.EigenPair(pl.Field(vals), -1.0, 1.5, 0.0, "guessed")


class TestRayleighAndResidual:
    def test_rayleigh_scaling_follows_homogeneity(self, pair_1d):
        # The quotient of c*phi is |c|^(p-2) times the quotient of phi.
        lam = pair_1d.lam
        for c in (34.54, -2.0, 0.3):
            scaled = pair_1d.phi.with_values(c * pair_1d.phi.values)
            got = pl.rayleigh_lambda(scaled, 1.5)
            assert got == pytest.approx(abs(c) ** -0.5 * lam, rel=1e-12)

    def test_residual_is_scale_free_in_certified_range(self, pair_1d):
        assert pair_1d.residual <= 1e-4
        recomputed = pl.residual(pair_1d.phi, pair_1d.lam, 1.5)
        assert recomputed == pytest.approx(pair_1d.residual, rel=1e-9)

    def test_degenerate_inputs_rejected(self):
        zero = pl.Field(np.zeros(8))
        with pytest.raises(DegenerateFieldError):
            pl.rayleigh_lambda(zero, 1.5)
        with pytest.raises(DegenerateFieldError):
            pl.residual(zero, -1.0, 1.5)
        with pytest.raises(DegenerateFieldError):
            pl.residual(pl.Field(np.ones(8)), 0.0, 1.5)


class TestCatalog:
    def test_cosine_is_exact_discrete_eigenvector(self):
        for k in (1, 2, 3):
            pair = pl.analytic_catalog("cosine_p2", 32, half_periods=k)
            assert pair.p == 2.0
            assert pair.provenance == "analytic"
            assert pair.residual <= 1e-12
            assert pl.rayleigh_lambda(pair.phi, 2.0) == pytest.approx(pair.lam, rel=1e-13)

    def test_cosine_eigenvalue_approaches_continuum(self):
        n, h = 256, 1.0
        pair = pl.analytic_catalog("cosine_p2", n, spacing=h)
        continuum = -((math.pi / (n * h)) ** 2)
        assert pair.lam == pytest.approx(continuum, rel=1e-4)

    def test_step_reference_shape(self):
        pair = pl.analytic_catalog("step_p1_reference", 32)
        assert pair.p == 1.0
        assert not pair.converged
        assert math.isinf(pair.residual)
        assert pair.lam == pytest.approx(-2.0 / math.sqrt(32.0))
        assert len(np.unique(pair.phi.values)) == 2

    def test_rejects_unknown_kind_and_bad_sizes(self):
        with pytest.raises(ParameterError):
            pl.analytic_catalog("sine", 32)
        with pytest.raises(ParameterError):
            pl.analytic_catalog("cosine_p2", 1)
        with pytest.raises(ParameterError):
            pl.analytic_catalog("cosine_p2", 32, half_periods=32)


class TestGeneration:
    def test_linear_case_recovers_known_eigenpair(self):
        rng = np.random.default_rng(5)
        seed = pl.Field(np.cos(np.pi * (np.arange(32) + 0.5) / 32) + 0.2 * rng.standard_normal(32))
        got = pl.generate_eigenfunction(seed, 2.0, pl.EigenConfig(dt=2e-3, stages=5))
        exact = pl.analytic_catalog("cosine_p2", 32).lam
        assert got.converged
        assert got.provenance == "generated"
        assert abs(got.lam - exact) / abs(exact) <= 1e-6
        assert got.residual <= 5e-3

    def test_certified_pair_properties(self, pair_1d):
        assert pair_1d.converged
        assert pair_1d.lam < 0.0
        assert pl.norm(pair_1d.phi) == pytest.approx(1.0, abs=1e-13)
        assert abs(pair_1d.phi.values.mean()) <= 1e-13

    def test_generation_is_deterministic(self):
        rng = np.random.default_rng(5)
        seed = pl.Field(np.cos(np.pi * (np.arange(32) + 0.5) / 32) + 0.2 * rng.standard_normal(32))
        cfg = pl.EigenConfig(dt=2e-3, stages=3)
        a = pl.generate_eigenfunction(seed, 1.5, cfg)
        b = pl.generate_eigenfunction(seed, 1.5, cfg)
        assert np.array_equal(a.phi.values, b.phi.values)
        assert a.lam == b.lam and a.residual == b.residual

    def test_constant_seed_rejected(self):
        with pytest.raises(DegenerateFieldError):
            pl.generate_eigenfunction(pl.Field(np.ones(16)), 1.5)

    def test_p_out_of_range_rejected(self):
        with pytest.raises(ParameterError):
            pl.generate_eigenfunction(pl.Field(np.arange(16.0)), 2.5)

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            pl.EigenConfig(dt=0.0)
        with pytest.raises(ParameterError):
            pl.EigenConfig(shrink=1.0)
        with pytest.raises(ParameterError):
            pl.EigenConfig(stages=0)


class TestTiling:
    def test_eigenvalue_rescales_through_renormalization(self, pair_1d):
        # Tiling then renormalizing scales the field by (n*h)^(-1/2), which
        # moves the eigenvalue by that factor to the p-2 power.
        tiled = pl.tile_to_2d(pair_1d, 32)
        c = (32 * pair_1d.phi.spacing[0]) ** -0.5
        assert tiled.lam == pytest.approx(c ** (pair_1d.p - 2.0) * pair_1d.lam, rel=1e-12)
        assert tiled.residual == pytest.approx(pair_1d.residual, rel=1e-8)
        assert tiled.converged
        assert tiled.phi.shape == (32, 32)

    def test_rows_are_constant(self, pair_1d):
        tiled = pl.tile_to_2d(pair_1d, 8)
        assert np.all(tiled.phi.values == tiled.phi.values[:, :1])

    def test_rejects_2d_input_and_tiny_extent(self, pair_1d):
        tiled = pl.tile_to_2d(pair_1d, 4)
        with pytest.raises(ParameterError):
            pl.tile_to_2d(tiled, 4)
        with pytest.raises(ParameterError):
            pl.tile_to_2d(pair_1d, 1)


class TestContrastRescaling:
    def test_hits_requested_eigenvalue(self, pair_1d):
        target = -0.0269
        field = pl.rescale_contrast(pair_1d, target)
        assert pl.rayleigh_lambda(field, 1.5) == pytest.approx(target, rel=1e-12)

    def test_less_negative_target_raises_amplitude(self, pair_1d):
        # lam scales with amplitude^(p-2), so p<2 means bigger fields decay slower.
        field = pl.rescale_contrast(pair_1d, pair_1d.lam / 2.0)
        assert pl.norm(field) > 1.0

    def test_rejects_non_negative_targets_and_p2(self, pair_1d):
        with pytest.raises(ParameterError):
            pl.rescale_contrast(pair_1d, 0.0)
        cosine = pl.analytic_catalog("cosine_p2", 16)
        with pytest.raises(ParameterError):
            pl.rescale_contrast(cosine, -0.5)
