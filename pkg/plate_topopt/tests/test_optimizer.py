"""レベルセット操作と最適化ループのテスト"""

import math

import numpy as np
import pytest

from plate_topopt.source.fem import ElementwiseField
from plate_topopt.source.interfaces.data_models import (
    AssemblyError,
    ConfigError,
    IterationRecord,
    OptimizationStatus,
    ProjectionError,
    StationaryFieldError,
)
from plate_topopt.source.objective import ShapeArchive
from plate_topopt.source.optimizer import (
    FlowParameters,
    LevelSet,
    LevelSetOptimizer,
    OptimizationResult,
    OptimizerSettings,
    PenaltyContext,
    alpha_from_characteristic,
    alpha_from_levelset,
    angle,
    characteristic_from_levelset,
    evaluate_shape,
    fluid_volume,
    initial_levelset,
    l2_norm,
    optimize,
    update_levelset,
    volume_project,
)
from plate_topopt.source.optimizer.levelset import l2_inner
from plate_topopt.source.topderiv import TDField

from .conftest import band_levelset


def random_levelset(mesh, rng):
    return LevelSet.normalized(mesh, rng.standard_normal(mesh.num_vertices))


class TestCharacteristic:
    def test_all_fluid(self, mesh_10):
        chi = characteristic_from_levelset(initial_levelset(mesh_10), mesh_10)
        np.testing.assert_array_equal(chi.values, 1.0)

    def test_all_solid(self, mesh_10):
        psi = LevelSet.normalized(mesh_10, np.full(mesh_10.num_vertices, 2.0))
        np.testing.assert_array_equal(characteristic_from_levelset(psi, mesh_10).values, 0.0)

    def test_vertical_split(self, mesh_10):
        psi = LevelSet.normalized(mesh_10, mesh_10.vertices[:, 0] - 0.5)
        chi = characteristic_from_levelset(psi, mesh_10)
        centroids = mesh_10.centroids
        np.testing.assert_array_equal(chi.values, (centroids[:, 0] < 0.5).astype(float))
        assert fluid_volume(mesh_10, chi) == pytest.approx(0.5, abs=1e-12)


class TestAlpha:
    def test_all_fluid_and_all_solid(self, mesh_10, flow_params):
        p = flow_params
        fluid = alpha_from_levelset(initial_levelset(mesh_10), mesh_10, p.alpha_L, p.alpha_U)
        solid = alpha_from_levelset(LevelSet.normalized(mesh_10, np.ones(mesh_10.num_vertices)), mesh_10, p.alpha_L, p.alpha_U)
        np.testing.assert_allclose(fluid.values, 2.5e-4, rtol=1e-15)
        np.testing.assert_allclose(solid.values, 400000.0, rtol=1e-15)

    def test_split_takes_two_values(self, mesh_10, flow_params):
        psi = LevelSet.normalized(mesh_10, mesh_10.vertices[:, 0] - 0.5)
        alpha = alpha_from_levelset(psi, mesh_10, flow_params.alpha_L, flow_params.alpha_U)
        assert set(np.unique(alpha.values)) == {flow_params.alpha_L, flow_params.alpha_U}

    def test_rejects_nonpositive_bounds(self, mesh_10):
        with pytest.raises(AssemblyError):
            alpha_from_levelset(initial_levelset(mesh_10), mesh_10, 0.0, 1.0)


class TestLevelSet:
    def test_normalized(self, mesh_10, rng):
        assert l2_norm(mesh_10, random_levelset(mesh_10, rng).values) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_zero(self, mesh_10):
        with pytest.raises(AssemblyError):
            LevelSet.normalized(mesh_10, np.zeros(mesh_10.num_vertices))

    def test_rejects_wrong_length(self, mesh_10):
        with pytest.raises(AssemblyError):
            LevelSet.normalized(mesh_10, np.ones(5))


class TestVolumeProject:
    def test_feasible_is_unchanged(self, mesh_10):
        psi = band_levelset(mesh_10, 0.3)
        assert fluid_volume(mesh_10, characteristic_from_levelset(psi, mesh_10)) == pytest.approx(0.6, abs=1e-12)
        assert volume_project(psi, mesh_10, 0.5, 0.7) is psi

    def test_all_fluid_projected_to_upper_bound(self, mesh_20):
        projected = volume_project(initial_levelset(mesh_20), mesh_20, 0.5, 0.7)
        volume = fluid_volume(mesh_20, characteristic_from_levelset(projected, mesh_20))
        assert 0.7 - mesh_20.min_element_area <= volume <= 0.7 + 1e-12
        assert l2_norm(mesh_20, projected.values) == pytest.approx(1.0, abs=1e-12)

    def test_all_solid_projected_to_lower_bound(self, mesh_20):
        psi = LevelSet.normalized(mesh_20, np.ones(mesh_20.num_vertices))
        volume = fluid_volume(mesh_20, characteristic_from_levelset(volume_project(psi, mesh_20, 0.5, 0.7), mesh_20))
        assert 0.5 - 1e-12 <= volume <= 0.5 + mesh_20.min_element_area

    def test_random_levelsets(self, mesh_20, rng):
        for _ in range(5):
            projected = volume_project(random_levelset(mesh_20, rng), mesh_20, 0.5, 0.7)
            volume = fluid_volume(mesh_20, characteristic_from_levelset(projected, mesh_20))
            assert 0.5 - 1e-12 <= volume <= 0.7 + 1e-12

    def test_shift_monotonicity(self, mesh_10, rng):
        shifts = np.linspace(-3.0, 3.0, 61)
        for _ in range(10):
            values = rng.standard_normal(mesh_10.num_vertices)
            volumes = [
                fluid_volume(mesh_10, ElementwiseField((values[mesh_10.triangles].mean(axis=1) - c < 0.0).astype(float)))
                for c in shifts
            ]
            assert all(a <= b for a, b in zip(volumes, volumes[1:]))
            assert volumes[0] < volumes[-1]

    def test_invalid_bounds(self, mesh_10):
        with pytest.raises(ProjectionError):
            volume_project(initial_levelset(mesh_10), mesh_10, 0.8, 0.7)


class TestAngle:
    def test_parallel_and_antiparallel(self, mesh_10, rng):
        psi = random_levelset(mesh_10, rng)
        assert angle(psi, TDField.from_values(psi.values), mesh_10) == pytest.approx(0.0, abs=1e-7)
        assert angle(psi, TDField.from_values(-psi.values), mesh_10) == pytest.approx(math.pi, abs=1e-7)

    def test_orthogonal(self, mesh_10, rng):
        psi = random_levelset(mesh_10, rng)
        w = rng.standard_normal(mesh_10.num_vertices)
        w = w - l2_inner(mesh_10, w, psi.values) * psi.values
        assert angle(psi, TDField.from_values(w), mesh_10) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_zero_derivative(self, mesh_10, rng):
        with pytest.raises(StationaryFieldError):
            angle(random_levelset(mesh_10, rng), TDField.from_values(np.zeros(mesh_10.num_vertices)), mesh_10)


class TestUpdateLevelset:
    def test_full_step_lands_on_derivative(self, mesh_10, rng):
        psi = random_levelset(mesh_10, rng)
        g = rng.standard_normal(mesh_10.num_vertices)
        updated = update_levelset(psi, TDField.from_values(g), 1.0, mesh_10)
        np.testing.assert_allclose(updated.values, g / l2_norm(mesh_10, g), atol=1e-12)

    def test_zero_step(self, mesh_10, rng):
        psi = random_levelset(mesh_10, rng)
        g = TDField.from_values(rng.standard_normal(mesh_10.num_vertices))
        assert update_levelset(psi, g, 0.0, mesh_10) is psi

    def test_aligned_keeps_shape(self, mesh_10, rng):
        psi = random_levelset(mesh_10, rng)
        updated = update_levelset(psi, TDField.from_values(3.0 * psi.values), 0.5, mesh_10)
        np.testing.assert_allclose(updated.values, psi.values, atol=1e-6)

    def test_spherical_identities(self, mesh_10, rng):
        for _ in range(20):
            psi = random_levelset(mesh_10, rng)
            g = TDField.from_values(rng.standard_normal(mesh_10.num_vertices))
            kappa = float(rng.uniform(0.05, 0.95))
            theta = angle(psi, g, mesh_10)
            updated = update_levelset(psi, g, kappa, mesh_10)
            assert l2_norm(mesh_10, updated.values) == pytest.approx(1.0, abs=1e-12)
            assert angle(updated, g, mesh_10) == pytest.approx((1.0 - kappa) * theta, abs=1e-8)

    def test_rejects_out_of_range_step(self, mesh_10, rng):
        psi = random_levelset(mesh_10, rng)
        with pytest.raises(AssemblyError):
            update_levelset(psi, TDField.from_values(psi.values), 1.5, mesh_10)


class TestOptimizerSettings:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"eps_theta": 0.0},
            {"eps_theta": 4.0},
            {"max_iterations": 0},
            {"kappa_min": 2.0},
            {"V_L": 0.8, "V_U": 0.7},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            OptimizerSettings(**kwargs)

    def test_large_stopping_angle_warns(self, caplog):
        with caplog.at_level("WARNING"):
            OptimizerSettings(eps_theta=2.0)
        assert caplog.records

    def test_invalid_flow_parameters(self):
        with pytest.raises(ConfigError):
            FlowParameters(alpha_L=1.0, alpha_U=0.5)

    def test_invalid_penalty_variant(self, mesh_10):
        with pytest.raises(ConfigError):
            PenaltyContext(ShapeArchive.for_mesh(mesh_10), variant="other")


class TestEvaluateShape:
    def test_all_fluid(self, mesh_20, flow_params):
        chi = ElementwiseField(np.ones(mesh_20.num_triangles))
        evaluation = evaluate_shape(mesh_20, chi, flow_params)
        assert evaluation.penalty == 0.0
        assert evaluation.volume == pytest.approx(1.0, abs=1e-12)
        assert evaluation.objective > 0.0
        assert 0.0 < evaluation.fulfillment < 1.0
        assert evaluation.merit == evaluation.objective

    def test_alpha_matches_levelset_rule(self, mesh_20, flow_params):
        psi = LevelSet.normalized(mesh_20, mesh_20.vertices[:, 0] - 0.4)
        chi = characteristic_from_levelset(psi, mesh_20)
        evaluation = evaluate_shape(mesh_20, chi, flow_params, levelset=psi)
        expected = alpha_from_levelset(psi, mesh_20, flow_params.alpha_L, flow_params.alpha_U)
        np.testing.assert_array_equal(evaluation.alpha.values, expected.values)
        np.testing.assert_array_equal(
            evaluation.alpha.values,
            alpha_from_characteristic(chi, flow_params.alpha_L, flow_params.alpha_U).values,
        )

    def test_penalty_included(self, mesh_20, flow_params):
        chi = ElementwiseField(np.ones(mesh_20.num_triangles))
        archive = ShapeArchive.for_mesh(mesh_20)
        archive.append(chi)
        evaluation = evaluate_shape(mesh_20, chi, flow_params, PenaltyContext(archive))
        assert evaluation.penalty == pytest.approx(math.exp(500.0), rel=1e-12)


class TestOptimize:
    def test_forced_steps_are_counted(self, mesh_10):
        history = [
            IterationRecord(i, 1.0, 0.0, 0.5, 0.7, 0.5, 2.0 ** -10, forced_step=(i % 2 == 1)) for i in range(5)
        ]
        result = OptimizationResult(
            levelset=initial_levelset(mesh_10),
            status=OptimizationStatus.MAX_ITERATIONS,
            history=history,
            evaluation=None,
        )
        summary = result.phase_summary()
        assert result.forced_steps == 2
        assert summary.forced_steps == 2 and summary.iterations == 5
        assert not summary.converged

    def test_trivial_stopping_angle(self, mesh_10, flow_params):
        settings = OptimizerSettings(eps_theta=math.pi)
        result = optimize(mesh_10, settings, flow_params)
        assert result.status is OptimizationStatus.CONVERGED
        assert result.iterations == 1
        assert result.history[0].kappa == 0.0
        expected = volume_project(initial_levelset(mesh_10), mesh_10, settings.V_L, settings.V_U)
        np.testing.assert_array_equal(result.levelset.values, expected.values)

    def test_short_run_keeps_volume_norm_and_descent(self, mesh_10, flow_params, quick_settings):
        records = []
        result = optimize(mesh_10, quick_settings, flow_params, history_sink=records.append)
        assert 1 <= result.iterations <= quick_settings.max_iterations
        assert records == result.history
        assert [r.iteration for r in records] == list(range(len(records)))
        for record in records:
            assert quick_settings.V_L - 1e-12 <= record.volume <= quick_settings.V_U + 1e-12
            assert record.penalty == 0.0
        assert l2_norm(mesh_10, result.levelset.values) == pytest.approx(1.0, abs=1e-12)
        for earlier, later in zip(records, records[1:]):
            if not earlier.forced_step:
                assert later.objective < earlier.objective
        assert result.forced_steps == sum(record.forced_step for record in records)
        assert result.phase_summary().forced_steps == result.forced_steps

    def test_initial_shape_is_used(self, mesh_10, flow_params):
        settings = OptimizerSettings(eps_theta=math.pi)
        initial = band_levelset(mesh_10, 0.3)
        result = LevelSetOptimizer(mesh_10, settings, flow_params).run(initial)
        np.testing.assert_array_equal(result.levelset.values, initial.values)
        assert result.phase_summary().converged

    def test_deflated_flag(self, mesh_10, flow_params):
        archive = ShapeArchive.for_mesh(mesh_10)
        assert not LevelSetOptimizer(mesh_10, penalty_context=PenaltyContext(archive)).deflated
        archive.append(ElementwiseField(np.ones(mesh_10.num_triangles)))
        assert LevelSetOptimizer(mesh_10, penalty_context=PenaltyContext(archive)).deflated
