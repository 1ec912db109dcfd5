"""設定・ファイル入出力・CLI のテスト"""

import json

import numpy as np
import pytest

from plate_topopt.source.cli_io import (
    HISTORY_COLUMNS,
    RunConfig,
    RunConfigManager,
    format_field_vtk,
    get_config_manager,
    init_config_manager,
    format_history_csv,
    load_shape,
    main,
    parse_config,
    read_field_vtk,
    write_field_vtk,
)
from plate_topopt.source.cli_io.files import atomic_write_text, format_float
from plate_topopt.source.fem import ElementwiseField, ScalarFieldP1
from plate_topopt.source.interfaces.data_models import (
    ConfigError,
    IterationRecord,
    OutputError,
    ShapeFileError,
)
from plate_topopt.source.optimizer import LevelSet

GOLDEN_VTK = """# vtk DataFile Version 3.0
plate-topopt fields
ASCII
DATASET UNSTRUCTURED_GRID
POINTS 4 double
0 0 0
1 0 0
0 1 0
1 1 0
CELLS 2 8
3 0 1 3
3 0 3 2
CELL_TYPES 2
5
5
POINT_DATA 4
SCALARS psi double 1
LOOKUP_TABLE default
1
-0.5
0.25
2
CELL_DATA 2
SCALARS chi double 1
LOOKUP_TABLE default
1
0
"""


class TestParseConfig:
    def test_empty_gives_defaults(self):
        config = parse_config("")
        assert config == RunConfig()
        assert config.mesh_n == 70
        assert config.alpha_U == pytest.approx(400000.0)
        assert config.penalty_td_variant == "paper"

    def test_values_and_comments(self):
        config = parse_config("# 設定\nu_t = 0.2   # 目標流速\n\nmesh_n = 20\npenalty_td_variant = derived\n")
        assert config.u_t == 0.2
        assert config.mesh_n == 20
        assert config.penalty_td_variant == "derived"

    def test_overrides_take_precedence(self):
        config = parse_config("u_t = 0.2\n", {"u_t": "0.3", "mesh_n": None})
        assert config.u_t == 0.3
        assert config.mesh_n == 70

    def test_invalid_value_reports_key_and_line(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("mesh_n = 20\nu_t = -1\n", source="run.cfg")
        assert excinfo.value.details["key"] == "u_t"
        assert excinfo.value.details["line"] == 2
        assert "run.cfg" in excinfo.value.message

    def test_type_mismatch(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("mesh_n = abc\n")
        assert excinfo.value.details["key"] == "mesh_n"

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("mesh_n = 20\nfoo = 1\n")
        assert excinfo.value.details == {"key": "foo", "line": 2, "source": "<config>"}

    def test_duplicate_key(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("u_t = 0.1\nu_t = 0.2\n")
        assert excinfo.value.details["line"] == 2

    def test_malformed_line(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("mesh_n 70\n")
        assert excinfo.value.details["line"] == 1

    def test_volume_ordering(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("V_L = 0.8\nV_U = 0.6\n")
        assert excinfo.value.details["key"] == "V_U"
        assert excinfo.value.details["line"] == 2

    def test_override_error_is_attributed_to_command_line(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("", {"delta": "-5"})
        assert excinfo.value.details["key"] == "delta"
        assert excinfo.value.details["line"] is None

    def test_text_round_trip(self):
        config = parse_config("u_t = 0.123456789\nmesh_n = 30\n")
        assert parse_config(config.to_text()) == config

    def test_derived_objects(self):
        config = parse_config("gamma = 0.3\nmax_iterations = 7\n")
        assert config.penalty_params().gamma == 0.3
        assert config.optimizer_settings().max_iterations == 7
        assert config.flow_parameters().alpha_L == config.alpha_L


class TestRunConfigManager:
    def test_file_and_resolved_copy(self, tmp_path):
        config_file = tmp_path / "run.cfg"
        config_file.write_text(f"mesh_n = 20\noutput_dir = {tmp_path / 'out'}\n", encoding="utf-8")
        manager = RunConfigManager(config_file, {"u_t": "0.05"})
        config = manager.load_config()
        assert config.mesh_n == 20 and config.u_t == 0.05
        assert manager.load_config() is config

        resolved = manager.save_config_to_file()
        assert resolved == tmp_path / "out" / "resolved_config.txt"
        assert parse_config(resolved.read_text(encoding="utf-8")) == config

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfigManager(tmp_path / "missing.cfg").load_config()

    def test_singleton(self, tmp_path):
        manager = init_config_manager(None, {"mesh_n": "4", "output_dir": str(tmp_path)})
        assert get_config_manager() is manager
        assert get_config_manager().load_config().mesh_n == 4
        assert init_config_manager() is not manager


class TestFiles:
    def test_format_float(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert float(format_float(1 / 3)) == 1 / 3
        assert format_float(2.0) == "2"

    def test_atomic_write(self, tmp_path):
        path = atomic_write_text(tmp_path / "sub" / "a.txt", "abc\n")
        assert path.read_text(encoding="utf-8") == "abc\n"
        assert [p.name for p in path.parent.iterdir()] == ["a.txt"]

    def test_atomic_write_failure(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        with pytest.raises(OutputError):
            atomic_write_text(blocker / "a.txt", "abc")


class TestVtk:
    def fields(self):
        return {"psi": ScalarFieldP1([1.0, -0.5, 0.25, 2.0]), "chi": ElementwiseField([1.0, 0.0])}

    def test_golden_file(self, mesh_1):
        assert format_field_vtk(mesh_1, self.fields()) == GOLDEN_VTK

    def test_read_back(self, mesh_1, tmp_path):
        path = write_field_vtk(mesh_1, self.fields(), tmp_path / "shape.vtk")
        data = read_field_vtk(path)
        np.testing.assert_array_equal(data.points, mesh_1.vertices)
        np.testing.assert_array_equal(data.triangles, mesh_1.triangles)
        np.testing.assert_array_equal(data.point_data["psi"], [1.0, -0.5, 0.25, 2.0])
        np.testing.assert_array_equal(data.cell_data["chi"], [1.0, 0.0])

    def test_wrong_length_rejected(self, mesh_1):
        with pytest.raises(OutputError):
            format_field_vtk(mesh_1, {"x": np.zeros(3)})

    def test_load_shape_keeps_normalized_levelset(self, mesh_10, rng, tmp_path):
        psi = LevelSet.normalized(mesh_10, rng.standard_normal(mesh_10.num_vertices))
        chi = ElementwiseField((psi.values[mesh_10.triangles].mean(axis=1) < 0.0).astype(float))
        path = write_field_vtk(mesh_10, {"psi": psi.psi, "chi": chi}, tmp_path / "shape.vtk")
        loaded_psi, loaded_chi = load_shape(path, mesh_10)
        np.testing.assert_array_equal(loaded_psi.values, psi.values)
        np.testing.assert_array_equal(loaded_chi.values, chi.values)

    def test_load_shape_mesh_mismatch(self, mesh_1, mesh_2, tmp_path):
        path = write_field_vtk(mesh_1, self.fields(), tmp_path / "shape.vtk")
        with pytest.raises(ShapeFileError):
            load_shape(path, mesh_2)

    def test_load_shape_requires_chi(self, mesh_1, tmp_path):
        path = write_field_vtk(mesh_1, {"psi": ScalarFieldP1(np.ones(4))}, tmp_path / "shape.vtk")
        with pytest.raises(ShapeFileError):
            load_shape(path, mesh_1)

    def test_load_shape_rejects_non_binary_chi(self, mesh_1, tmp_path):
        path = write_field_vtk(mesh_1, {"chi": ElementwiseField([0.5, 1.0])}, tmp_path / "shape.vtk")
        with pytest.raises(ShapeFileError):
            load_shape(path, mesh_1)

    def test_garbage_file(self, tmp_path):
        path = tmp_path / "bad.vtk"
        path.write_text("not a vtk file\n", encoding="utf-8")
        with pytest.raises(ShapeFileError):
            read_field_vtk(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ShapeFileError):
            read_field_vtk(tmp_path / "missing.vtk")


class TestHistoryCsv:
    def test_header_only(self):
        assert format_history_csv([]) == ",".join(HISTORY_COLUMNS) + "\n"

    def test_rows(self):
        record = IterationRecord(iteration=3, objective=0.5, penalty=0.0, theta=0.25, volume=0.7, fulfillment=0.75, kappa=0.125)
        lines = format_history_csv([record]).splitlines()
        assert lines[1] == "3,0.5,0,0.25,0.69999999999999996,0.75,0.125"


def cli_args(command, output_dir, *extra):
    return [command, "--mesh_n", "10", "--max_iterations", "2", "--output_dir", str(output_dir), *extra]


class TestCommandLine:
    def test_optimize_writes_outputs(self, tmp_path):
        assert main(cli_args("optimize", tmp_path)) == 0
        for name in ("optimum.vtk", "history.csv", "summary.json", "resolved_config.txt"):
            assert (tmp_path / name).is_file()
        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert summary["mesh_n"] == 10
        assert len(summary["minimizers"]) == 1
        minimizer = summary["minimizers"][0]
        assert minimizer["restart_forced_steps"] >= 0
        assert minimizer["deflated_forced_steps"] is None
        reference = summary["reference"]
        assert [entry["round"] for entry in reference] == [0, 1, 2]
        assert [entry["restart_iterations"] for entry in reference] == [53, 51, 60]
        assert [entry["deflated_iterations"] for entry in reference] == [None, 46, 38]
        assert [entry["channels"] for entry in reference] == [4, 6, 8]
        assert [entry["fulfillment"] for entry in reference] == [0.764, 0.9068, 0.9888]
        assert set(reference[0]) - {"channels"} <= set(minimizer)
        header = (tmp_path / "history.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header == "iter,J,P,theta,volume,fulfillment,kappa"

    def test_eval_and_solve_of_stored_shape(self, tmp_path):
        assert main(cli_args("optimize", tmp_path / "opt")) == 0
        shape = tmp_path / "opt" / "optimum.vtk"
        assert main(cli_args("eval", tmp_path / "eval", "--shape", str(shape))) == 0
        assert main(cli_args("solve", tmp_path / "solve", "--shape", str(shape))) == 0

        summary = json.loads((tmp_path / "opt" / "summary.json").read_text(encoding="utf-8"))
        evaluation = json.loads((tmp_path / "eval" / "evaluation.json").read_text(encoding="utf-8"))
        assert evaluation["J"] == summary["minimizers"][0]["J"]
        assert evaluation["fulfillment"] == summary["minimizers"][0]["fulfillment"]

        fluxes = json.loads((tmp_path / "solve" / "solve.json").read_text(encoding="utf-8"))
        assert abs(fluxes["inlet_flux"] + fluxes["outlet_flux"]) <= 1e-8
        assert (tmp_path / "solve" / "solve.vtk").is_file()

    def test_invalid_config_exit_code(self, tmp_path, capsys):
        assert main(cli_args("optimize", tmp_path, "--u_t", "-1")) == 1
        line = capsys.readouterr().err.strip().splitlines()[-1]
        assert line.startswith("error code=config_invalid ")
        assert '"key": "u_t"' in line

    def test_missing_shape_file(self, tmp_path, capsys):
        assert main(cli_args("eval", tmp_path, "--shape", str(tmp_path / "none.vtk"))) == 1
        assert "error code=shape_file_invalid" in capsys.readouterr().err

    def test_config_file_option(self, tmp_path):
        config_file = tmp_path / "run.cfg"
        config_file.write_text("mesh_n = 10\nmax_iterations = 1\n", encoding="utf-8")
        out = tmp_path / "out"
        assert main(["optimize", "--config", str(config_file), "--output_dir", str(out)]) == 0
        resolved = parse_config((out / "resolved_config.txt").read_text(encoding="utf-8"))
        assert resolved.max_iterations == 1

    def test_optimize_is_deterministic(self, tmp_path):
        assert main(cli_args("optimize", tmp_path / "a")) == 0
        assert main(cli_args("optimize", tmp_path / "b")) == 0
        for name in ("optimum.vtk", "history.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_deflate_is_deterministic(self, tmp_path):
        args = ("--deflation_rounds", "1", "--max_iterations", "1")
        assert main(cli_args("deflate", tmp_path / "a", *args)) == 0
        assert main(cli_args("deflate", tmp_path / "b", *args)) == 0
        names = sorted(p.name for p in (tmp_path / "a").iterdir() if p.name != "resolved_config.txt")
        assert "minimizer_01.vtk" in names and "history_round_01_deflated.csv" in names
        for name in names:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_deflate_resume(self, tmp_path):
        assert main(cli_args("deflate", tmp_path, "--deflation_rounds", "0", "--max_iterations", "1")) == 0
        first = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))["minimizers"][0]
        assert main(cli_args("deflate", tmp_path, "--deflation_rounds", "1", "--max_iterations", "1", "--resume")) == 0
        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert [m["round"] for m in summary["minimizers"]] == [0, 1]
        assert len(summary["distance_matrix"]) == 2
        assert summary["minimizers"][0]["restart_forced_steps"] == first["restart_forced_steps"]
        assert summary["minimizers"][1]["deflated_forced_steps"] is not None
