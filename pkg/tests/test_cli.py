"""
End-to-end tests for the carbon_market.py command-line runner
"""

import json
import os

import numpy as np
import pandas as pd
import pytest
from conftest import check_golden, check_goldens

import carbon_market
from utils.errors import NonFiniteError
from utils.file_manager import load_manifest


def inputs(files):
    transactions_path, prices_path = files
    return ["--transactions", transactions_path, "--prices", prices_path]


def listing(directory):
    result = {}
    for root, _, names in os.walk(directory):
        for name in names:
            path = os.path.join(root, name)
            with open(path, "rb") as f:
                result[os.path.relpath(path, directory)] = f.read()
    return result


class TestSubcommands:
    def test_test_writes_results_and_table(self, tmp_path, synthetic_files, capsys):
        out = tmp_path / "out"
        code = carbon_market.main(["test", *inputs(synthetic_files), "--output-dir", str(out)])
        assert code == 0
        results = json.loads((out / "tests.json").read_text(encoding="utf-8"))
        assert results["adf"]["name"] == "ADF"
        assert results["arch_lm"]["name"] == "ARCH-LM"
        assert (out / "correlogram.csv").exists()
        assert (out / "correlogram.json").exists()
        stdout = capsys.readouterr().out
        assert "Augmented Dickey-Fuller" in stdout
        assert "Engle's ARCH test" in stdout
        text = (out / "tests.json").read_text(encoding="utf-8")
        check_golden("cli_test/tests.json", text)

    def test_manifest_lists_every_file(self, tmp_path, synthetic_files):
        out = tmp_path / "out"
        carbon_market.main(["summary", *inputs(synthetic_files), "--output-dir", str(out)])
        manifest = load_manifest(str(out))
        on_disk = set(listing(out)) - {"manifest.json"}
        assert {a["path"] for a in manifest["artifacts"]} == on_disk
        assert manifest["subcommand"] == "summary"
        assert len(manifest["inputs"]) == 2
        assert manifest["config"]["output_format"] == "both"
        assert "output_dir" not in manifest["config"]

    def test_json_only_output(self, tmp_path, transactions_csv, prices_csv):
        out = tmp_path / "out"
        args = ["ingest", "--transactions", transactions_csv, "--prices", prices_csv]
        code = carbon_market.main([*args, "--output-dir", str(out), "--output-format", "json"])
        assert code == 0
        names = set(os.listdir(out))
        assert "transfers.json" in names
        assert "ingest_summary.json" in names
        assert not any(name.endswith(".csv") for name in names)
        summary = json.loads((out / "ingest_summary.json").read_text(encoding="utf-8"))
        assert summary["compliance_transfers"] == 5
        assert summary["unvalued_transfers"] == 1

    def test_config_file_values_reach_manifest(self, tmp_path, synthetic_files):
        out = tmp_path / "out"
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"window": 60, "ar_order": 2}), encoding="utf-8")
        code = carbon_market.main(
            ["forecast", *inputs(synthetic_files), "--output-dir", str(out), "--config", str(config)]
        )
        assert code == 0
        metrics = json.loads((out / "forecast_metrics.json").read_text(encoding="utf-8"))
        assert metrics["window"] == 60
        assert metrics["ar_order"] == 2
        assert load_manifest(str(out))["config"]["window"] == 60

    def test_network_writes_dot_per_year(self, tmp_path, synthetic_files):
        out = tmp_path / "out"
        code = carbon_market.main(
            ["network", *inputs(synthetic_files), "--output-dir", str(out), "--year", "2011"]
        )
        assert code == 0
        assert (out / "network_2011.dot").read_text(encoding="utf-8").startswith("digraph")
        assert not (out / "network_2010.dot").exists()
        assert (out / "centrality_2011.csv").exists()

    def test_network_centrality_flags_are_applied(self, tmp_path, synthetic_files):
        runs = {}
        for name, extra in (("plain", []), ("incoming", ["--transpose", "--damping", "0.1"])):
            out = tmp_path / name
            argv = ["network", *inputs(synthetic_files), "--output-dir", str(out), "--year", "2011"]
            assert carbon_market.main([*argv, *extra]) == 0
            runs[name] = out
        meta = json.loads((runs["incoming"] / "network_meta.json").read_text(encoding="utf-8"))
        assert meta["transpose"] is True
        assert meta["damping"] == 0.1
        assert meta["years"]["2011"]["transpose"] is True
        assert meta["years"]["2011"]["damping"] == 0.1
        plain = pd.read_csv(runs["plain"] / "centrality_2011.csv")
        incoming = pd.read_csv(runs["incoming"] / "centrality_2011.csv")
        assert list(plain["registry"]) == list(incoming["registry"])
        assert not np.allclose(plain["centrality"], incoming["centrality"])

    def test_centrality_single_year(self, tmp_path, synthetic_files):
        out = tmp_path / "out"
        code = carbon_market.main(
            ["centrality", *inputs(synthetic_files), "--output-dir", str(out), "--year", "2011"]
        )
        assert code == 0
        table = pd.read_csv(out / "centrality.csv")
        assert set(table["year"]) == {2011}
        assert table["proportion"].sum() == pytest.approx(1.0)

    def test_synthesize(self, tmp_path):
        out = tmp_path / "synth"
        code = carbon_market.main(
            [
                "synthesize",
                "--output-dir",
                str(out),
                "--seed",
                "3",
                "--start",
                "2010-01-01",
                "--end",
                "2010-03-31",
                "--registries",
                "de,fr",
            ]
        )
        assert code == 0
        truth = json.loads((out / "true_elasticities.json").read_text(encoding="utf-8"))
        assert sorted(truth) == ["DE->DE", "DE->FR", "FR->DE", "FR->FR"]
        assert (out / "transactions.csv").exists()
        assert load_manifest(str(out))["seed"] == 3


class TestExitCodes:
    def test_missing_input_is_data_error(self, tmp_path, prices_csv):
        out = tmp_path / "out"
        code = carbon_market.main(
            [
                "ingest",
                "--transactions",
                str(tmp_path / "absent.csv"),
                "--prices",
                prices_csv,
                "--output-dir",
                str(out),
            ]
        )
        assert code == 2
        assert not out.exists()

    def test_unreadable_rows_in_strict_mode_are_data_errors(self, tmp_path, prices_csv):
        path = tmp_path / "transactions.csv"
        path.write_bytes(
            b"id,date,from_registry,to_registry,from_class,to_class,quantity\n"
            b"A,2010-01-05,DE,FR,OHA,PHA,1\n"
            b"B\xff,2010-01-06,DE,FR,OHA,PHA,2,extra\n"
        )
        args = ["ingest", "--transactions", str(path), "--prices", prices_csv]
        assert carbon_market.main([*args, "--output-dir", str(tmp_path / "lenient")]) == 0
        code = carbon_market.main([*args, "--strict", "--output-dir", str(tmp_path / "strict")])
        assert code == 2
        assert not (tmp_path / "strict").exists()

    @pytest.mark.parametrize(
        "argv",
        [
            ["bogus"],
            ["forecast", "--window", "abc"],
            ["summary"],
            ["summary", "--output-format", "xml"],
        ],
    )
    def test_usage_errors(self, argv):
        assert carbon_market.main(argv) == 1

    def test_help_exits_cleanly(self):
        with pytest.raises(SystemExit) as excinfo:
            carbon_market.main(["--help"])
        assert excinfo.value.code == 0

    def test_numerical_failure_leaves_no_artifacts(self, tmp_path, synthetic_files, monkeypatch):
        def boom(ctx):
            raise NonFiniteError("variance went non-finite")

        monkeypatch.setitem(carbon_market.STAGES, "all", [carbon_market.stage_ingest, boom])
        out = tmp_path / "out"
        code = carbon_market.main(["all", *inputs(synthetic_files), "--output-dir", str(out)])
        assert code == 3
        assert listing(out) == {}


def test_all_is_reproducible(tmp_path, synthetic_files):
    runs = []
    for name in ("first", "second"):
        out = tmp_path / name
        flags = ["--window", "60", "--bootstrap-reps", "19", "--seed", "42", "--quiet"]
        code = carbon_market.main(["all", *inputs(synthetic_files), "--output-dir", str(out), *flags])
        assert code == 0
        runs.append(out)

    first, second = (listing(out) for out in runs)
    assert first.keys() == second.keys()
    for name in first:
        if name != "manifest.json":
            assert first[name] == second[name], name

    manifests = [load_manifest(str(out)) for out in runs]
    for manifest in manifests:
        manifest.pop("generated_at")
    assert manifests[0] == manifests[1]
    names = set(first)
    assert {"tests.json", "forecast_metrics.json", "centrality.csv", "elasticity.csv"} <= names
    assert "elasticity_2010-2012_ols.dot" in names
    assert "network_2010.dot" in names

    golden = ("tests.json", "forecast_metrics.json", "centrality.csv", "elasticity.csv")
    check_goldens({f"cli_all/{name}": first[name].decode("utf-8") for name in golden})
