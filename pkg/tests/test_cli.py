import json
import random
from pathlib import Path

import pytest

from tracekit import corpus, embeddings
from tracekit.cli import main

from conftest import write_dataset


def run_cli(*argv) -> tuple[int, str, str]:
    import contextlib
    import io

    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


@pytest.fixture()
def cm1_dir(tmp_path):
    code, _, _ = run_cli("make-data", "--shape", "cm1", "--out", tmp_path / "cm1")
    assert code == 0
    return tmp_path / "cm1"


class TestValidate:
    def test_counts_line(self, cm1_dir):
        code, out, _ = run_cli("validate", cm1_dir / "manifest.json")
        assert code == 0
        assert "sources=22 targets=53 true_links=45 pairs=1166" in out

    def test_broken_answer_row_exits_2(self, cm1_dir):
        answers = cm1_dir / "answers.csv"
        answers.write_text(answers.read_text() + "NOPE\n", encoding="utf-8")
        code, _, err = run_cli("validate", cm1_dir / "manifest.json")
        assert code == 2
        assert "row" in err

    def test_unknown_id_exits_2(self, cm1_dir):
        answers = cm1_dir / "answers.csv"
        answers.write_text("source_id,target_id\nZZZ,DES0001\n", encoding="utf-8")
        code, _, err = run_cli("validate", cm1_dir / "manifest.json")
        assert code == 2
        assert "unknown source id" in err

    def test_empty_targets_dir_fails(self, cm1_dir):
        for f in (cm1_dir / "targets").glob("*.txt"):
            f.unlink()
        code, _, err = run_cli("validate", cm1_dir / "manifest.json")
        assert code == 2
        assert "no artifact files" in err


class TestSplit:
    def test_stratified_file(self, cm1_dir, tmp_path):
        out = tmp_path / "split.json"
        code, _, _ = run_cli("split", cm1_dir / "manifest.json",
                             "--method", "by_link", "--ratios", "4:2:4",
                             "--seed", "7", "--out", out)
        assert code == 0
        split = corpus.DatasetSplit.load(out)
        assert sum(p.label for p in split.train) == 18
        assert sum(p.label for p in split.validation) == 9
        assert sum(p.label for p in split.test) == 18

    def test_all_test_ratios(self, cm1_dir, tmp_path):
        out = tmp_path / "tlg.json"
        code, _, _ = run_cli("split", cm1_dir / "manifest.json",
                             "--ratios", "0:0:10", "--seed", "7", "--out", out)
        assert code == 0
        split = corpus.DatasetSplit.load(out)
        assert (len(split.train), len(split.validation), len(split.test)) == (0, 0, 1166)

    def test_same_seed_byte_identical(self, cm1_dir, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            code, _, _ = run_cli("split", cm1_dir / "manifest.json",
                                 "--seed", "13", "--out", out)
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_by_artifact_exclusivity(self, cm1_dir, tmp_path):
        out = tmp_path / "arte.json"
        code, _, _ = run_cli("split", cm1_dir / "manifest.json",
                             "--method", "by_artifact", "--seed", "3", "--out", out)
        assert code == 0
        split = corpus.DatasetSplit.load(out)
        groups = [{p.source_id for p in s} for s in split.subsets()]
        assert not (groups[0] & groups[1] or groups[1] & groups[2] or groups[0] & groups[2])


@pytest.fixture()
def small_project(tmp_path):
    """Small dataset + split + vectors, cheap enough for CLI round trips."""
    sources = {f"S{i}": f"module {i} handles the telemetry stream berth-{i}" for i in range(6)}
    targets = {f"T{i}": f"design {i} describes buffer layout berth-{i}" for i in range(5)}
    links = [("S0", "T0"), ("S1", "T1"), ("S2", "T2"), ("S3", "T3")]
    manifest = write_dataset(tmp_path / "data", sources, targets, links)
    run_cli("split", manifest, "--seed", "5", "--out", tmp_path / "split.json")
    ds = corpus.load_dataset(tmp_path / "data", manifest)
    pairs = corpus.enumerate_pairs(ds)
    rng = random.Random(0)
    vectors = {embeddings.pair_representation(p, ds): [rng.uniform(-1, 1) for _ in range(3)]
               for p in pairs}
    embeddings.write_vector_file(tmp_path / "vectors.json", vectors)
    return tmp_path, manifest


class TestBaseline:
    def test_vsm_writes_reports(self, small_project):
        tmp_path, manifest = small_project
        code, out, _ = run_cli("baseline", manifest, "--split", tmp_path / "split.json",
                               "--model", "vsm", "--out", tmp_path / "bl")
        assert code == 0
        assert "F2=" in out
        assert (tmp_path / "bl" / "report.csv").exists()
        assert (tmp_path / "bl" / "sweep.csv").exists()
        summary = json.loads((tmp_path / "bl" / "summary.json").read_text())
        assert summary["model"] == "vsm"
        sweep_lines = (tmp_path / "bl" / "sweep.csv").read_text().splitlines()
        assert len(sweep_lines) == 101  # header + the 100-point grid

    def test_lsi_grid_defaults(self, small_project):
        tmp_path, manifest = small_project
        import warnings as _w
        with _w.catch_warnings():
            _w.simplefilter("ignore")  # grid values exceed toy rank; clamped
            code, out, _ = run_cli("baseline", manifest, "--split", tmp_path / "split.json",
                                   "--model", "lsi", "--out", tmp_path / "bl2")
        assert code == 0

    def test_lda_small_grid(self, small_project):
        tmp_path, manifest = small_project
        code, out, _ = run_cli("baseline", manifest, "--split", tmp_path / "split.json",
                               "--model", "lda", "--lda-topics", "2", "--lda-passes", "4",
                               "--seed", "3", "--out", tmp_path / "bl3")
        assert code == 0

    def test_embed_baseline(self, small_project):
        tmp_path, manifest = small_project
        # artifact-level vectors for the embed baseline
        ds = corpus.load_dataset(tmp_path / "data", manifest)
        rng = random.Random(2)
        vecs = {a.text: [rng.uniform(-1, 1) for _ in range(4)]
                for a in ds.sources + ds.targets}
        embeddings.write_vector_file(tmp_path / "artifact_vecs.json", vecs)
        code, _, _ = run_cli("baseline", manifest, "--split", tmp_path / "split.json",
                             "--model", "embed", "--vectors", tmp_path / "artifact_vecs.json",
                             "--out", tmp_path / "bl4")
        assert code == 0

    def test_default_grids_match_published_table(self):
        from tracekit.cli import build_parser
        parser = build_parser()
        args = parser.parse_args(["baseline", "m", "--split", "s", "--model", "lsi", "--out", "o"])
        assert args.lsi_components == [50, 100, 150]
        assert args.lda_topics == [5, 10, 20, 30]
        assert args.lda_passes == [10, 15, 20]


class TestRun:
    def test_scripted_gold_run(self, small_project):
        tmp_path, manifest = small_project
        cfg = {
            "dataset": str(tmp_path / "data"),
            "split_file": str(tmp_path / "split.json"),
            "prompt_id": "P6",
            "strategy": "diversity",
            "balanced": True,
            "shots": 2,
            "repeats": 2,
            "seeds": [1, 2],
            "vectors_file": str(tmp_path / "vectors.json"),
        }
        cfg_path = tmp_path / "exp.json"
        cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
        code, out, _ = run_cli("run", cfg_path, "--out", tmp_path / "runs", "--scripted-gold")
        assert code == 0
        assert "F2=1.0000±0.0000" in out

    def test_responses_table(self, small_project):
        tmp_path, manifest = small_project
        split = corpus.DatasetSplit.load(tmp_path / "split.json")
        table = {p.key: "No" for p in split.test}
        (tmp_path / "resp.json").write_text(json.dumps(table), encoding="utf-8")
        cfg = {
            "dataset": str(tmp_path / "data"),
            "split_file": str(tmp_path / "split.json"),
            "prompt_id": "P1",
            "shots": 0,
            "repeats": 1,
            "seeds": [1],
        }
        (tmp_path / "exp.json").write_text(json.dumps(cfg), encoding="utf-8")
        code, out, _ = run_cli("run", tmp_path / "exp.json", "--out", tmp_path / "runs",
                               "--responses", tmp_path / "resp.json")
        assert code == 0
        assert "R=0.0000" in out


class TestSelectDump:
    @pytest.mark.filterwarnings("ignore:label class")
    def test_diversity_balanced_structure(self, small_project):
        tmp_path, manifest = small_project
        out = tmp_path / "dump.csv"
        code, msg, _ = run_cli("select-dump", manifest, "--split", tmp_path / "split.json",
                               "--strategy", "diversity", "--k", "4", "--balanced",
                               "--vectors", tmp_path / "vectors.json", "--out", out)
        assert code == 0
        lines = out.read_text().splitlines()
        selected = [l.split(",") for l in lines[1:] if l.split(",")[2] == "1"]
        assert len(selected) == 4
        assert sorted(r[4] for r in selected) == ["0", "1", "2", "3"]

    @pytest.mark.filterwarnings("ignore:label class")
    def test_unbalanced_random_tracks_pool_imbalance(self, tmp_path):
        # pool with false:true >= 9 -> random k=4 picks mostly false on average
        sources = {f"S{i}": f"text {i}" for i in range(10)}
        targets = {f"T{i}": f"text {i}" for i in range(10)}
        links = [("S0", "T0"), ("S1", "T1")]  # 2 true out of 100
        manifest = write_dataset(tmp_path / "imb", sources, targets, links)
        run_cli("split", manifest, "--ratios", "8:1:1", "--seed", "2",
                "--out", tmp_path / "imb_split.json")
        split = corpus.DatasetSplit.load(tmp_path / "imb_split.json")
        from tracekit.selection import Demonstration, select_random
        ds = corpus.load_dataset(tmp_path / "imb", manifest)
        pool = [Demonstration(p, "r") for p in split.train]
        false_counts = []
        for seed in range(100):
            result = select_random(pool, 4, seed)
            false_counts.append(sum(1 for d in result.selected if not d.pair.label))
        assert sum(false_counts) / len(false_counts) >= 3.0

    def test_empty_pool_errors(self, small_project):
        tmp_path, manifest = small_project
        run_cli("split", manifest, "--ratios", "0:0:10", "--seed", "1",
                "--out", tmp_path / "empty_split.json")
        code, _, err = run_cli("select-dump", manifest, "--split", tmp_path / "empty_split.json",
                               "--strategy", "random", "--k", "4", "--out", tmp_path / "d.csv")
        assert code == 2
        assert "empty training partition" in err


class TestReport:
    @pytest.fixture()
    def two_runs(self, small_project):
        tmp_path, manifest = small_project
        dirs = []
        for i, prompt in enumerate(["P1", "P2"]):
            cfg = {
                "dataset": str(tmp_path / "data"),
                "split_file": str(tmp_path / "split.json"),
                "prompt_id": prompt,
                "shots": 0,
                "repeats": 3,
                "seeds": [1, 2, 3],
            }
            path = tmp_path / f"exp{i}.json"
            path.write_text(json.dumps(cfg), encoding="utf-8")
            code, out, _ = run_cli("run", path, "--out", tmp_path / "rr", "--scripted-gold")
            assert code == 0
            run_dir = [l for l in out.splitlines() if "artifacts in" in l][0].split()[-1]
            dirs.append(run_dir)
        return tmp_path, dirs

    def test_single_dir_aggregate(self, two_runs):
        tmp_path, dirs = two_runs
        code, out, _ = run_cli("report", dirs[0])
        assert code == 0
        assert "mean_f2=" in out

    def test_compare_wilcoxon(self, two_runs):
        tmp_path, dirs = two_runs
        code, out, _ = run_cli("report", *dirs, "--compare", "--test", "wilcoxon",
                               "--out", tmp_path / "stats.csv")
        assert code == 0
        assert "wilcoxon_signed_rank" in out
        lines = (tmp_path / "stats.csv").read_text().splitlines()
        assert lines[0] == "metric,statistic,p_value,method,exact"
        assert len(lines) == 5

    def test_compare_mannwhitney(self, two_runs):
        tmp_path, dirs = two_runs
        code, out, _ = run_cli("report", *dirs, "--compare", "--test", "mannwhitney")
        assert code == 0
        assert "mann_whitney_u" in out

    def test_mismatched_run_counts_rejected_for_wilcoxon(self, two_runs):
        tmp_path, dirs = two_runs
        metrics_csv = Path(dirs[0]) / "metrics.csv"
        lines = metrics_csv.read_text().splitlines()
        run_lines = [l for l in lines if l.startswith("run,")]
        kept = [l for l in lines if not l.startswith("run,")] + run_lines[:-1]
        header, rest = lines[0], kept[1:]
        metrics_csv.write_text("\n".join([header] + rest) + "\n", encoding="utf-8")
        code, _, err = run_cli("report", *dirs, "--compare", "--test", "wilcoxon")
        assert code == 2
        assert "equal run counts" in err


class TestCost:
    def test_cost_subcommand(self, tmp_path):
        usage = [{"input_tokens": 1_000_000, "output_tokens": 0},
                 {"input_tokens": 0, "output_tokens": 2_000_000}]
        pricing = {"mini": {"input_cost_per_million": 0.15, "output_cost_per_million": 0.60}}
        (tmp_path / "usage.json").write_text(json.dumps(usage), encoding="utf-8")
        (tmp_path / "pricing.json").write_text(json.dumps(pricing), encoding="utf-8")
        code, out, _ = run_cli("cost", "--usage", tmp_path / "usage.json",
                               "--pricing", tmp_path / "pricing.json", "--model", "mini")
        assert code == 0
        doc = json.loads(out)
        assert doc["input_cost"] == pytest.approx(0.15)
        assert doc["output_cost"] == pytest.approx(1.20)
        assert doc["total_cost"] == pytest.approx(1.35)

    def test_unknown_model_is_operational_error(self, tmp_path):
        (tmp_path / "usage.json").write_text("[]", encoding="utf-8")
        (tmp_path / "pricing.json").write_text("{}", encoding="utf-8")
        code, _, err = run_cli("cost", "--usage", tmp_path / "usage.json",
                               "--pricing", tmp_path / "pricing.json", "--model", "x")
        assert code == 1
        assert "unknown model" in err
