"""The ccam command line: artifacts, exit codes, reproducibility."""

import dataclasses
import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from conceptorcam import CheckResult, read_image, save_record
from conceptorcam.cli import main
import conceptorcam.cli

from conftest import FIXTURES

RECORD_DIR = str(FIXTURES / "golden_record")
EVAL_MANIFEST = str(FIXTURES / "eval" / "manifest.json")

MODES = ("baseline", "positive", "complementary", "comprehensive")


def run_explain(tmp_path, *extra, record=RECORD_DIR, mode="comprehensive"):
    out = tmp_path / "out" / "run"
    code = main(["explain", "--record", record, "--mode", mode,
                 "--out", str(out), *extra])
    return code, out


class TestExplain:

    def test_writes_the_three_artifacts(self, tmp_path, capsys):
        code, out = run_explain(tmp_path)
        assert code == 0
        assert (tmp_path / "out" / "run.saliency.cct").exists()
        assert (tmp_path / "out" / "run.overlay.png").exists()
        assert (tmp_path / "out" / "run.sidecar.json").exists()
        assert "wrote" in capsys.readouterr().out

    def test_reproduces_the_golden_artifacts(self, tmp_path, golden_checksums):
        """Each mode's saliency tensor matches the independently computed
        golden file byte for byte, and the overlay checksum matches too."""
        for mode in MODES:
            code, out = run_explain(tmp_path / mode, "--alpha", "1.0",
                                    mode=mode)
            assert code == 0
            written = (out.parent / "run.saliency.cct").read_bytes()
            golden = (FIXTURES / "golden" / f"golden_{mode}.cct").read_bytes()
            assert written == golden, mode
            assert hashlib.sha256(written).hexdigest() == \
                golden_checksums[mode]["saliency_cct_sha256"]
            sidecar = json.loads((out.parent / "run.sidecar.json").read_text())
            assert sidecar["overlay_rgb_sha256"] == \
                golden_checksums[mode]["overlay_rgb_sha256"]

    def test_overlay_png_decodes_to_the_checksummed_pixels(self, tmp_path,
                                                           golden_checksums):
        code, out = run_explain(tmp_path)
        assert code == 0
        back = read_image(out.parent / "run.overlay.png")
        digest = hashlib.sha256(
            (back * 255.0).astype(np.uint8).tobytes()).hexdigest()
        assert digest == golden_checksums["comprehensive"]["overlay_rgb_sha256"]

    def test_repeat_runs_write_identical_bytes(self, tmp_path):
        _, first = run_explain(tmp_path / "a")
        _, second = run_explain(tmp_path / "b")
        for suffix in (".saliency.cct", ".overlay.png", ".sidecar.json"):
            assert (first.parent / f"run{suffix}").read_bytes() == \
                (second.parent / f"run{suffix}").read_bytes(), suffix

    def test_sidecar_carries_the_run_parameters(self, tmp_path):
        code, out = run_explain(tmp_path, "--weights", "grad", "--alpha",
                                "2.0", "--tanh", "off", mode="positive")
        assert code == 0
        sidecar = json.loads((out.parent / "run.sidecar.json").read_text())
        assert sidecar["mode"] == "positive"
        assert sidecar["weights_scheme"] == "grad"
        assert sidecar["alpha"] == 2.0
        assert sidecar["tanh"] is False
        assert sidecar["record"] == RECORD_DIR
        assert len(sidecar["channel_weights"]) == 6

    def test_unknown_mode_exits_2_with_usage(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as info:
            main(["explain", "--record", RECORD_DIR, "--mode", "bogus",
                  "--out", str(tmp_path / "x")])
        assert info.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_missing_required_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["explain", "--mode", "baseline"])
        assert info.value.code == 2

    def test_alpha_out_of_range_exits_2(self, tmp_path, capsys):
        code, _ = run_explain(tmp_path, "--alpha", "250")
        assert code == 2
        assert "alpha" in capsys.readouterr().err

    def test_missing_record_exits_3(self, tmp_path, capsys):
        code, _ = run_explain(tmp_path, record=str(tmp_path / "absent"))
        assert code == 3
        assert "manifest not found" in capsys.readouterr().err

    def test_score_space_mismatch_exits_2(self, tmp_path, capsys):
        code, _ = run_explain(tmp_path, "--score-space", "logit")
        assert code == 2
        assert "softmax scores" in capsys.readouterr().err

    def test_scheme_without_tensor_exits_2(self, tmp_path, capsys,
                                           golden_record):
        bare = dataclasses.replace(golden_record, gradients=None,
                                   explanation_modes=(),
                                   explanation_scores=None)
        save_record(bare, tmp_path / "bare")
        code, _ = run_explain(tmp_path, "--weights", "grad",
                              record=str(tmp_path / "bare"))
        assert code == 2
        assert "no gradients" in capsys.readouterr().err


class TestEval:

    def test_fixture_manifest_prints_the_reference_table(self, tmp_path,
                                                         capsys):
        report_path = tmp_path / "report.json"
        code = main(["eval", "--manifest", EVAL_MANIFEST,
                     "--out", str(report_path)])
        assert code == 0
        table = capsys.readouterr().out
        assert "average increase 50.0000" in table
        assert "average drop 6.2500" in table
        payload = json.loads(report_path.read_text())
        assert payload["evaluated"] == 2
        assert payload["average_increase"] == 50.0
        assert abs(payload["average_drop"] - 6.25) <= 1e-5

    def test_jobs_flag_changes_nothing(self, tmp_path, capsys):
        main(["eval", "--manifest", EVAL_MANIFEST,
              "--out", str(tmp_path / "one.json")])
        main(["eval", "--manifest", EVAL_MANIFEST, "--jobs", "4",
              "--out", str(tmp_path / "four.json")])
        assert (tmp_path / "one.json").read_text() == \
            (tmp_path / "four.json").read_text()

    def test_missing_manifest_exits_3(self, tmp_path, capsys):
        code = main(["eval", "--manifest", str(tmp_path / "none.json")])
        assert code == 3
        assert "cannot read manifest" in capsys.readouterr().err

    def test_invalid_json_exits_3(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        assert main(["eval", "--manifest", str(path)]) == 3
        assert "not valid JSON" in capsys.readouterr().err

    def test_non_list_manifest_exits_2(self, tmp_path, capsys):
        path = tmp_path / "object.json"
        path.write_text("{}")
        assert main(["eval", "--manifest", str(path)]) == 2
        assert "JSON list" in capsys.readouterr().err

    def test_empty_manifest_exits_2(self, tmp_path, capsys):
        path = tmp_path / "empty.json"
        path.write_text("[]")
        assert main(["eval", "--manifest", str(path)]) == 2
        assert "empty" in capsys.readouterr().err

    def test_bad_jobs_exits_2(self, capsys):
        assert main(["eval", "--manifest", EVAL_MANIFEST, "--jobs", "0"]) == 2
        assert "--jobs" in capsys.readouterr().err

    def test_unreadable_record_exits_3(self, tmp_path, capsys):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps([{"record": "gone", "mode": "baseline"}]))
        assert main(["eval", "--manifest", str(path)]) == 3
        assert "manifest not found" in capsys.readouterr().err


class TestVerify:

    @pytest.fixture(autouse=True)
    def clean_env(self, monkeypatch):
        monkeypatch.delenv("CCAM_SEED", raising=False)

    def test_clean_build_passes_all_checks(self, capsys):
        assert main(["verify"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 5
        assert "FAIL" not in out
        assert "5/5 checks passed (seed 0)" in out

    def test_seed_flag_is_reported(self, capsys):
        assert main(["verify", "--seed", "7"]) == 0
        assert "(seed 7)" in capsys.readouterr().out

    def test_env_seed_overrides_the_flag(self, monkeypatch, capsys):
        monkeypatch.setenv("CCAM_SEED", "11")
        assert main(["verify", "--seed", "7"]) == 0
        assert "(seed 11)" in capsys.readouterr().out

    def test_non_integer_env_seed_exits_2(self, monkeypatch, capsys):
        monkeypatch.setenv("CCAM_SEED", "eleven")
        assert main(["verify"]) == 2
        assert "CCAM_SEED" in capsys.readouterr().err

    def test_failing_check_exits_1(self, monkeypatch, capsys):
        def rigged(seed):
            return [CheckResult(name="rigged", passed=False, detail="boom")]

        monkeypatch.setattr(conceptorcam.cli, "run_all_checks", rigged)
        assert main(["verify"]) == 1
        out = capsys.readouterr().out
        assert "FAIL rigged: boom" in out
        assert "0/1 checks passed" in out


class TestEntryPoint:

    def test_module_runs_as_a_script(self):
        proc = subprocess.run(
            [sys.executable, "-m", "conceptorcam.cli", "verify", "--seed", "0"],
            capture_output=True, text=True,
            env={"PATH": "/usr/bin:/bin", "PYTHONPATH": ""},
            cwd=str(FIXTURES.parent.parent),
        )
        assert proc.returncode == 0
        assert "5/5 checks passed" in proc.stdout
