"""Config parsing, artifact generation, reproducibility and exit codes."""

import json
import os

import pytest

from potcol.bench import CaseId
from potcol.cli import (
    ConfigError,
    load_config,
    main,
    parse_config,
    run_matrix,
    run_sample,
    run_train,
)
from potcol.io import load_params

TINY = """
case: case1_exponential
n_interior: 40
n_per_face: 10
hidden_widths: [6]
adam: {max_iters: 15}
lbfgs: {max_iters: 15}
eval_grid: 2
seed: 0
"""


def tiny_cfg(tmp_path, name="out", **extra):
    text = TINY + "".join(f"{k}: {v}\n" for k, v in extra.items())
    cfg = parse_config(text)
    import dataclasses

    return dataclasses.replace(cfg, output_dir=str(tmp_path / name))


class TestParseConfig:
    def test_empty_document_gives_headline_defaults(self):
        cfg = parse_config("")
        assert cfg.case is CaseId.CASE1_EXPONENTIAL
        assert cfg.sampler == "latin_hypercube"
        assert (cfg.n_interior, cfg.n_per_face) == (3000, 300)
        assert cfg.hidden_widths == (30, 30)
        assert cfg.activation.name == "arctan"
        assert cfg.adam.max_iters == 1000
        assert cfg.lbfgs.max_iters == 2000
        assert cfg.seed == 0

    def test_activation_names_case_insensitive(self):
        assert parse_config('activation: "Mish"').activation.name == "mish"
        assert parse_config("activation: LeCun-Tanh").activation.name == "lecun_tanh"

    def test_zero_interior_count_names_the_key(self):
        with pytest.raises(ConfigError, match="n_interior"):
            parse_config("n_interior: 0")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key n_internal"):
            parse_config("n_internal: 10")

    def test_unknown_nested_key_rejected_with_path(self):
        with pytest.raises(ConfigError, match="adam.learning_rte"):
            parse_config("adam: {learning_rte: 0.01}")

    def test_type_mismatch_rejected(self):
        with pytest.raises(ConfigError, match="n_interior"):
            parse_config("n_interior: lots")

    def test_bad_enum_value_rejected(self):
        with pytest.raises(ConfigError, match="unknown sampler"):
            parse_config("sampler: grid")
        with pytest.raises(ConfigError, match="unknown case"):
            parse_config("case: case9")

    def test_json_is_accepted(self):
        cfg = parse_config('{"case": "case2_poly3d", "seed": 3}')
        assert cfg.case is CaseId.CASE2_POLY3D
        assert cfg.seed == 3

    def test_nested_optimizer_settings(self):
        cfg = parse_config("adam: {learning_rate: 0.01, max_iters: 5}\n"
                           "lbfgs: {memory: 4, max_iters: 7}")
        assert cfg.adam.learning_rate == 0.01
        assert cfg.adam.max_iters == 5
        assert cfg.lbfgs.memory == 4
        assert cfg.lbfgs.max_iters == 7

    def test_swish_beta_flows_into_activation(self):
        cfg = parse_config("activation: swish\nswish_beta: 1.5")
        assert cfg.activation.beta == 1.5


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("train")
    cfg = tiny_cfg(tmp)
    summary = run_train(cfg, quiet=True)
    return cfg, summary


class TestRunTrain:
    def test_all_listed_artifacts_exist(self, run):
        cfg, summary = run
        for name in summary.files:
            assert os.path.exists(os.path.join(cfg.output_dir, name)), name
        assert set(summary.files) >= {"config.yaml", "convergence.csv", "fields.csv",
                                      "fields.vtk", "params.txt", "summary.json"}

    def test_lock_removed_after_completion(self, run):
        cfg, _ = run
        assert not os.path.exists(os.path.join(cfg.output_dir, ".potcol.lock"))

    def test_convergence_schema(self, run):
        cfg, _ = run
        lines = open(os.path.join(cfg.output_dir, "convergence.csv")).read().splitlines()
        assert lines[0] == "iter,phase,total,mse_g,mse_d,mse_n"
        assert lines[1].split(",")[1] == "adam"
        first = float(lines[1].split(",")[2])
        last = float(lines[-1].split(",")[2])
        assert last < first

    def test_fields_rows_match_grid(self, run):
        cfg, _ = run
        lines = open(os.path.join(cfg.output_dir, "fields.csv")).read().splitlines()
        assert lines[0] == "x,y,z,phi_pred,phi_exact,q_pred,q_exact,abs_err"
        assert len(lines) == 1 + cfg.eval_grid**3

    def test_vtk_is_valid_legacy_structured_grid(self, run):
        cfg, _ = run
        lines = open(os.path.join(cfg.output_dir, "fields.vtk")).read().splitlines()
        assert lines[0] == "# vtk DataFile Version 3.0"
        assert lines[2] == "ASCII"
        assert lines[3] == "DATASET STRUCTURED_GRID"
        n = cfg.eval_grid**3
        assert lines[4] == f"DIMENSIONS {cfg.eval_grid} {cfg.eval_grid} {cfg.eval_grid}"
        assert lines[5] == f"POINTS {n} double"
        assert f"POINT_DATA {n}" in lines

    def test_params_snapshot_roundtrips_bit_exact(self, run):
        cfg, _ = run
        params = load_params(os.path.join(cfg.output_dir, "params.txt"))
        again = os.path.join(cfg.output_dir, "params_copy.txt")
        from potcol.io import save_params

        save_params(again, params)
        assert open(again).read() == open(os.path.join(cfg.output_dir, "params.txt")).read()

    def test_summary_json_content(self, run):
        cfg, summary = run
        data = json.load(open(os.path.join(cfg.output_dir, "summary.json")))
        assert data["config"]["case"] == "case1_exponential"
        assert data["relative_error"] == summary.relative_error
        assert data["iterations"] == {"adam": 15, "lbfgs": 15}


class TestReproducibility:
    def test_two_identical_runs_byte_identical_csv(self, tmp_path):
        cfg_a = tiny_cfg(tmp_path, "a")
        cfg_b = tiny_cfg(tmp_path, "b")
        run_train(cfg_a, quiet=True)
        run_train(cfg_b, quiet=True)
        for name in ("convergence.csv", "fields.csv"):
            a = open(os.path.join(cfg_a.output_dir, name), "rb").read()
            b = open(os.path.join(cfg_b.output_dir, name), "rb").read()
            assert a == b, name

    def test_evaluate_reproduces_training_fields(self, tmp_path):
        cfg = tiny_cfg(tmp_path, "t")
        run_train(cfg, quiet=True)
        from potcol.cli import run_evaluate
        import dataclasses

        cfg_eval = dataclasses.replace(cfg, output_dir=str(tmp_path / "e"))
        run_evaluate(cfg_eval, os.path.join(cfg.output_dir, "params.txt"), quiet=True)
        a = open(os.path.join(cfg.output_dir, "fields.csv"), "rb").read()
        b = open(os.path.join(cfg_eval.output_dir, "fields.csv"), "rb").read()
        assert a == b


class TestRunSample:
    def test_collocation_csv_schema_and_counts(self, tmp_path):
        cfg = tiny_cfg(tmp_path, "s")
        path = run_sample(cfg, quiet=True)
        lines = open(path).read().splitlines()
        assert lines[0] == "x,y,z,kind,nx,ny,nz,prescribed"
        kinds = [ln.split(",")[3] for ln in lines[1:]]
        assert kinds.count("interior") == 40
        assert kinds.count("dirichlet") == 20    # top + bottom faces
        assert kinds.count("neumann") == 40      # four insulated sides
        top = [ln for ln in lines[1:] if ln.split(",")[3] == "dirichlet"
               and float(ln.split(",")[7]) == 100.0]
        assert len(top) == 10


class TestRunMatrix:
    def test_depth_axis_rows(self, tmp_path):
        cfg = tiny_cfg(tmp_path, "m")
        rows = run_matrix(cfg, "depth", values=[1, 2], quiet=True)
        assert [r["variant"] for r in rows] == ["1x6", "2x6"]
        lines = open(os.path.join(cfg.output_dir, "comparison.csv")).read().splitlines()
        assert lines[0].startswith("variant,total,mse_g,mse_d,mse_n,relative_error")
        assert len(lines) == 3

    def test_schedule_axis_splits_budget(self, tmp_path):
        cfg = tiny_cfg(tmp_path, "m2")
        rows = run_matrix(cfg, "optimizer-schedule", values=["adam", "combined"], quiet=True)
        adam_row = rows[0]
        assert adam_row["adam_iters"] == 30      # 15 + 15 budget, all first-order
        assert adam_row["lbfgs_iters"] == 0

    def test_unknown_axis_rejected(self, tmp_path):
        cfg = tiny_cfg(tmp_path, "m3")
        with pytest.raises(ConfigError, match="comparison axis"):
            run_matrix(cfg, "widths")

    def test_default_axis_enumerations(self, tmp_path):
        from potcol.cli import _matrix_variants

        cfg = tiny_cfg(tmp_path, "m4")
        assert len(_matrix_variants(cfg, "depth")) == 6
        assert len(_matrix_variants(cfg, "sampler")) == 7
        assert len(_matrix_variants(cfg, "activation")) == 8
        assert len(_matrix_variants(cfg, "optimizer-schedule")) == 3
        labels = [lbl for lbl, _ in _matrix_variants(cfg, "depth")]
        assert labels == ["1x6", "2x6", "3x6", "4x6", "5x6", "6x6"]


class TestMainExitCodes:
    def test_config_error_is_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("n_interior: 0\n")
        assert main(["train", str(bad)]) == 2
        assert "n_interior" in capsys.readouterr().err

    def test_missing_snapshot_is_4(self, tmp_path, capsys):
        cfgf = tmp_path / "c.yaml"
        cfgf.write_text(TINY)
        code = main(["evaluate", str(cfgf), str(tmp_path / "nope.txt"),
                     "--output-dir", str(tmp_path / "o")])
        assert code == 4

    def test_numerical_failure_is_3_and_partial_outputs_removed(self, tmp_path, capsys):
        cfgf = tmp_path / "c.yaml"
        cfgf.write_text(TINY + "adam: {learning_rate: 1.0e+200, max_iters: 10}\n")
        out = tmp_path / "o3"
        code = main(["train", str(cfgf), "--output-dir", str(out), "--quiet"])
        assert code == 3
        assert not (out / "convergence.csv").exists()
        assert not (out / "config.yaml").exists()

    def test_locked_output_dir_is_4(self, tmp_path):
        cfgf = tmp_path / "c.yaml"
        cfgf.write_text(TINY)
        out = tmp_path / "locked"
        out.mkdir()
        (out / ".potcol.lock").touch()
        assert main(["sample", str(cfgf), "--output-dir", str(out)]) == 4

    def test_successful_sample_is_0(self, tmp_path):
        cfgf = tmp_path / "c.yaml"
        cfgf.write_text(TINY)
        assert main(["sample", str(cfgf), "--output-dir", str(tmp_path / "ok"),
                     "--quiet"]) == 0

    def test_seed_flag_overrides(self, tmp_path):
        cfgf = tmp_path / "c.yaml"
        cfgf.write_text(TINY)
        cfg = load_config(str(cfgf), seed=7)
        assert cfg.seed == 7
