import json

import pytest

from gzspec import suites
from gzspec.config import settings
from gzspec.main import main
from gzspec.schemas import Check
from gzspec.suites import SuiteOutcome


@pytest.fixture
def sample(samples_dir):
    def path(name):
        return str(samples_dir / f"{name}.json")

    return path


class TestAnalyze:
    def test_accumulation_point(self, run_cli, sample):
        code, report = run_cli("analyze", sample("diagonal-harmonic"), "--point", "0")
        assert code == 0
        assert report["command"] == "analyze"
        assert report["operator_id"] == "diagonal-harmonic"
        assert report["classification"]["tier"] == "gz_invertible"
        assert report["spectral_tiers"] == {"in_spectrum": True, "in_acc": True, "in_acc_acc": False}
        assert report["point_data"]["index"] is None

    def test_isolated_eigenvalue(self, run_cli, sample):
        code, report = run_cli("analyze", sample("diagonal-harmonic"), "--point", "1/2")
        assert code == 0
        assert report["classification"]["tier"] == "drazin"
        assert report["classification"]["browder"] is True
        assert report["point_data"]["index"] == "0"
        assert report["point"] == ["1/2", "0/1"]

    def test_shifts(self, run_cli, sample):
        code, report = run_cli("analyze", sample("shifts"))
        assert code == 0
        tag = report["classification"]
        assert tag["tier"] == "none"
        assert (tag["left_gz"], tag["right_gz"]) == (False, False)
        assert report["point_data"]["index"] == "0"

    def test_quasinilpotent(self, run_cli, sample):
        code, report = run_cli("analyze", sample("quasinilpotent-shift"))
        assert code == 0
        assert report["classification"]["tier"] == "generalized_drazin"

    def test_off_centre_disk_point(self, run_cli, sample):
        assert run_cli("analyze", sample("shift-disk"), "--point", "1/2") == (3, None)

    def test_bad_point(self, run_cli, sample):
        assert run_cli("analyze", sample("diagonal-harmonic"), "--point", "abc")[0] == 2

    @pytest.mark.parametrize("name", ["empty", "missing"])
    def test_bad_operator_file(self, run_cli, sample, name):
        assert run_cli("analyze", sample(name))[0] == 2


class TestInverse:
    def test_matrix(self, run_cli, sample):
        code, report = run_cli(
            "inverse", sample("matrix-diag-2-0"), "--spectral-set", sample("zero")
        )
        assert code == 0
        assert report["passed"] is True
        [certificate] = report["certificates"]
        assert certificate["kind"] == "gz"
        entries = certificate["inverse"]["entries"]
        assert entries[0] == pytest.approx([0.5, 0.0])
        assert all(abs(re) < 1e-12 and abs(im) < 1e-12 for re, im in entries[1:])

    def test_explicit_r(self, run_cli, sample):
        code, report = run_cli(
            "inverse", sample("matrix-diag-2-0"), "--spectral-set", sample("zero"), "--r", "3i"
        )
        assert code == 0
        assert report["certificates"][0]["inverse"]["entries"][0] == pytest.approx([0.5, 0.0])

    def test_diagonal(self, run_cli, sample):
        code, report = run_cli(
            "inverse", sample("diagonal-harmonic"), "--spectral-set", sample("tail-from-3")
        )
        assert code == 0
        [certificate] = report["certificates"]
        assert certificate["kind"] == "gz_diagonal"
        assert certificate["inverse_spectrum"]["points"] == [["0/1", "0/1"], ["1/1", "0/1"], ["2/1", "0/1"]]
        assert certificate["inverse_model"]["entry_maps"][0]["kind"] == "gz"
        assert (certificate["sampled_entries"], certificate["sample_bound"]) == (32, 32)

    def test_zero_left_out(self, run_cli, sample):
        assert run_cli("inverse", sample("matrix-diag-2-0"), "--spectral-set", sample("selection-two"))[0] == 4

    def test_r_too_small(self, run_cli, sample, write_json):
        sigma = write_json("both.json", {"selected_points": [["0", "0"], ["2", "0"]]})
        code, _ = run_cli("inverse", sample("matrix-diag-2-0"), "--spectral-set", sigma, "--r", "1")
        assert code == 4

    def test_cluster_selection_on_a_matrix(self, run_cli, sample):
        assert run_cli("inverse", sample("jordan3"), "--spectral-set", sample("tail-from-3"))[0] == 4

    def test_contour_enclosing_zero(self, run_cli, sample, write_json):
        contour = write_json("contour.json", {"center": [0, 0], "radius": 5})
        code, _ = run_cli(
            "inverse", sample("matrix-diag-2-0"), "--spectral-set", sample("zero"), "--contour", contour
        )
        assert code == 1

    def test_no_construction_for_shifts(self, run_cli, sample):
        assert run_cli("inverse", sample("shift-disk"), "--spectral-set", sample("zero"))[0] == 3


class TestVerify:
    def test_nilpotent_matrix(self, run_cli, sample):
        code, report = run_cli("verify", sample("jordan3"))
        assert code == 0
        assert report["suites"] == ["drazin", "gz", "index", "splits"]
        assert report["skipped"] == ["perturbation", "punctured"]
        names = [c["name"] for c in report["checks"]]
        assert names == sorted(names)
        assert all(c["pass"] for c in report["checks"])

    def test_diagonal(self, run_cli, sample):
        code, report = run_cli("verify", sample("diagonal-harmonic"), "--suite", "gz", "--size", "6")
        assert code == 0
        assert report["suites"] == ["gz"]

    def test_shift_index(self, run_cli, sample):
        code, report = run_cli("verify", sample("shifts"), "--suite", "index")
        assert code == 0
        assert report["passed"] is True

    def test_failing_check_exits_five(self, run_cli, sample, monkeypatch):
        forced = SuiteOutcome(name="drazin", checks=[Check(name="drazin.forced", passed=False)])
        monkeypatch.setitem(suites.SUITES, "drazin", lambda ctx: forced)
        code, report = run_cli("verify", sample("jordan3"), "--suite", "drazin")
        assert code == 5
        assert report["passed"] is False

    def test_unknown_suite(self, run_cli, sample):
        with pytest.raises(SystemExit) as excinfo:
            run_cli("verify", sample("jordan3"), "--suite", "banana")
        assert excinfo.value.code == 2

    def test_reports_are_deterministic(self, run_cli, sample):
        _, first = run_cli("verify", sample("matrix-diag-2-0"))
        _, second = run_cli("verify", sample("matrix-diag-2-0"))
        assert first == second


class TestTruncate:
    def test_diagonal(self, run_cli, sample):
        code, report = run_cli("truncate", sample("diagonal-harmonic"), "--size", "3")
        assert code == 0
        matrix = report["matrix"]
        assert (matrix["rows"], matrix["cols"]) == (3, 3)
        assert matrix["entries"][4] == pytest.approx([0.5, 0.0])

    def test_size_must_be_positive(self, run_cli, sample):
        assert run_cli("truncate", sample("diagonal-harmonic"), "--size", "0")[0] == 2


class TestSurface:
    def test_stdout(self, sample, capsys):
        assert main(["truncate", sample("jordan3"), "--size", "2"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["matrix"]["entries"][1] == [1.0, 0.0]

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
        assert settings.VERSION in capsys.readouterr().out

    def test_error_goes_to_stderr(self, sample, capsys):
        assert main(["analyze", sample("missing")]) == 2
        assert "error" in capsys.readouterr().err

    def test_tolerance_flags_are_echoed(self, run_cli, sample):
        _, report = run_cli("analyze", sample("jordan3"), "--tol-rank", "1e-6", "--tol-residual", "1e-7")
        assert report["tolerances"]["rank_rtol"] == pytest.approx(1e-6)
        assert report["tolerances"]["residual_tol"] == pytest.approx(1e-7)
        assert report["tolerances"]["profile"] == "default"

    def test_strict_profile(self, run_cli, sample, monkeypatch):
        monkeypatch.setattr(settings, "GZSPEC_TOL_PROFILE", "strict")
        _, report = run_cli("analyze", sample("jordan3"))
        assert report["tolerances"]["profile"] == "strict"
        assert report["tolerances"]["residual_tol"] == pytest.approx(settings.RESIDUAL_TOL * 1e-2)
