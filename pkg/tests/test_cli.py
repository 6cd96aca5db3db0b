"""Command-line interface: outputs, exit codes, manifests, reproducibility."""

import json

import pytest

from dnsseclab.cli import main
from dnsseclab.keyforge import compute_keytag
from dnsseclab.records import rr_from_presentation


def run_cli(*argv) -> int:
    return main(list(argv))


class TestForge:
    def test_forge_keys(self, tmp_path):
        out = tmp_path / "keys.txt"
        code = run_cli("forge", "--alg", "14", "--tag", "5353", "--count", "25",
                       "--seed", "1", "--out", str(out))
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 25
        rdatas = set()
        for line in lines:
            rr = rr_from_presentation(line)
            assert compute_keytag(rr.rdata) == 5353
            rdatas.add(rr.rdata)
        assert len(rdatas) == 25
        manifest = json.loads((tmp_path / "keys.txt.manifest.json").read_text())
        assert manifest["command"] == "forge"
        assert "keys.txt" in manifest["outputs"]

    def test_forge_reproducible(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        run_cli("forge", "--count", "10", "--seed", "3", "--out", str(a))
        run_cli("forge", "--count", "10", "--seed", "3", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_count_zero_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run_cli("forge", "--count", "0", "--out", str(tmp_path / "x"))
        assert exc.value.code == 2


class TestGenzone:
    def test_keysigtrap_outputs(self, tmp_path):
        prefix = tmp_path / "trap"
        code = run_cli("genzone", "keysigtrap", "--k", "5", "--s", "4",
                       "--out-prefix", str(prefix))
        assert code == 0
        assert (tmp_path / "trap.attack.er.zone").exists()
        assert (tmp_path / "trap.er.zone").exists()
        graph = json.loads((tmp_path / "trap.graph.json").read_text())
        assert graph["format"] == "dnsseclab-graph/1"
        fit = json.loads((tmp_path / "trap.fit.json").read_text())
        assert all(e["compressed_size"] <= e["limit"] for e in fit)

    def test_fit_error_names_packing_bound(self, tmp_path, capsys):
        code = run_cli("genzone", "lockcram", "--k", "600", "--alg", "14",
                       "--out-prefix", str(tmp_path / "bad"))
        assert code == 1
        assert "589" in capsys.readouterr().err

    def test_reproducible(self, tmp_path):
        for name in ("one", "two"):
            run_cli("genzone", "sigjam", "--s", "3", "--seed", "5",
                    "--out-prefix", str(tmp_path / name))
        assert ((tmp_path / "one.graph.json").read_bytes()
                == (tmp_path / "two.graph.json").read_bytes())
        assert ((tmp_path / "one.attack.er.zone").read_bytes()
                == (tmp_path / "two.attack.er.zone").read_bytes())

    def test_spec_json_input(self, tmp_path):
        spec_file = tmp_path / "spec.json"
        spec_file.write_text(json.dumps(
            {"vector": "anytype", "rrset_count": 3, "seed": 2}))
        code = run_cli("genzone", "--spec-json", str(spec_file),
                       "--out-prefix", str(tmp_path / "any"))
        assert code == 0


class TestValidate:
    @pytest.fixture()
    def graphs(self, tmp_path):
        paths = {}
        for vector, flags in (("benign", []),
                              ("keysigtrap", ["--k", "6", "--s", "5"]),
                              ("hashtrap", ["--d", "4", "--k", "3", "--alg", "15"])):
            prefix = tmp_path / vector
            assert run_cli("genzone", vector, *flags,
                           "--out-prefix", str(prefix)) == 0
            paths[vector] = str(prefix) + ".graph.json"
        return paths

    def test_exit_codes(self, graphs, capsys):
        assert run_cli("validate", "--graph", graphs["benign"]) == 0
        assert run_cli("validate", "--graph", graphs["keysigtrap"]) == 3
        assert run_cli("validate", "--graph", graphs["keysigtrap"],
                       "--policy", "failures=16") == 4
        assert run_cli("validate", "--graph", graphs["hashtrap"]) == 5
        capsys.readouterr()

    def test_outcome_json(self, graphs, capsys):
        run_cli("validate", "--graph", graphs["keysigtrap"])
        out = json.loads(capsys.readouterr().out)
        assert out["status"] == "Bogus"
        assert out["stages"]["answer"]["signature_attempts"] == 30

    def test_profile_options_apply(self, graphs, capsys):
        run_cli("validate", "--graph", graphs["keysigtrap"], "--profile", "Unbound")
        out = json.loads(capsys.readouterr().out)
        assert out["stages"]["answer"]["signature_attempts"] == 6 * 30

    def test_real_crypto_flag(self, graphs, capsys):
        assert run_cli("validate", "--graph", graphs["benign"], "--real-crypto") == 0
        capsys.readouterr()

    def test_unreadable_graph(self, tmp_path, capsys):
        assert run_cli("validate", "--graph", str(tmp_path / "missing.json")) == 1
        assert "error" in capsys.readouterr().err

    def test_bad_policy_string(self, graphs):
        with pytest.raises(SystemExit) as exc:
            run_cli("validate", "--graph", graphs["benign"], "--policy", "bogus=1")
        assert exc.value.code == 2


class TestSimulate:
    def test_bundled_scenario(self, tmp_path, capsys):
        code = run_cli("simulate", "--scenario", "benign-baseline",
                       "--out-prefix", str(tmp_path / "base"))
        assert code == 0
        report = json.loads((tmp_path / "base.report.json").read_text())
        assert report["loss_fraction"] == 0.0
        csv = (tmp_path / "base.timeseries.csv").read_text()
        assert csv.startswith("# dnsseclab-timeseries/1")
        assert (tmp_path / "base.manifest.json").exists()
        capsys.readouterr()

    def test_scenario_file(self, tmp_path, capsys):
        scenario = {
            "name": "tiny",
            "profile": "Knot",
            "vector": {"vector": "sigjam", "sig_count": 8},
            "attack_schedule": [{"time": 1.0, "count": 1}],
            "duration": 20.0,
        }
        path = tmp_path / "tiny.json"
        path.write_text(json.dumps(scenario))
        assert run_cli("simulate", "--scenario", str(path),
                       "--out-prefix", str(tmp_path / "tiny")) == 0
        report = json.loads((tmp_path / "tiny.report.json").read_text())
        assert report["attack_requests"] == 1
        capsys.readouterr()

    def test_unknown_scenario_lists_bundled(self, tmp_path, capsys):
        assert run_cli("simulate", "--scenario", "no-such-thing",
                       "--out-prefix", str(tmp_path / "x")) == 1
        err = capsys.readouterr().err
        assert "unbound-single-shot" in err

    def test_schema_violation_diagnostics(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"profile": "Unbound", "duration": 10,
                                    "attack_schedule": [{"count": 2}]}))
        assert run_cli("simulate", "--scenario", str(path),
                       "--out-prefix", str(tmp_path / "x")) == 1
        assert "attack_schedule" in capsys.readouterr().err

    def test_report_reproducible(self, tmp_path, capsys):
        for name in ("r1", "r2"):
            run_cli("simulate", "--scenario", "benign-baseline",
                    "--out-prefix", str(tmp_path / name))
        capsys.readouterr()
        assert ((tmp_path / "r1.report.json").read_bytes()
                == (tmp_path / "r2.report.json").read_bytes())


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("--version")
    assert exc.value.code == 0
