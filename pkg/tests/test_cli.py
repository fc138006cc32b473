from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import pytest

from editjudge.cli import main

from mockserver import MockLLMServer

TOY = resources.files("editjudge") / "data/toy"


def _toy_paths():
    return str(TOY / "samples.jsonl"), str(TOY / "drafts.jsonl")


def _write_jsonl(path, objs):
    path.write_text("\n".join(json.dumps(o) for o in objs) + "\n", encoding="utf-8")


def _snapshot(directory: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.is_file()}


def test_evaluate_smoke(tmp_path, capsys):
    samples, drafts = _toy_paths()
    out = tmp_path / "out"
    code = main(["evaluate", "--samples", samples, "--drafts", drafts, "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "content edit-F1" in printed
    for name in ("report.md", "summary.csv", "per_sample.csv",
                 "theme_per_class.csv", "content_recall_by_theme.csv", "errored.csv"):
        assert (out / name).exists(), name
    md = (out / "report.md").read_text()
    assert "precision | recall | f1" in md
    assert "```config" in md


def test_evaluate_rerun_is_byte_identical(tmp_path):
    samples, drafts = _toy_paths()
    out = tmp_path / "out"
    args = ["evaluate", "--samples", samples, "--drafts", drafts, "--out", str(out)]
    assert main(args) == 0
    first = _snapshot(out)
    assert main(args) == 0
    second = _snapshot(out)
    assert first == second


def test_evaluate_dry_run_writes_nothing(tmp_path, capsys):
    samples, drafts = _toy_paths()
    out = tmp_path / "out"
    code = main(
        ["evaluate", "--samples", samples, "--drafts", drafts, "--out", str(out), "--dry-run"]
    )
    assert code == 0
    assert not out.exists()
    printed = capsys.readouterr().out
    assert "dry-run: evaluate" in printed
    assert "pairs: 6" in printed


def test_evaluate_multi_model_adds_stdev_table(tmp_path):
    samples, _ = _toy_paths()
    loaded = [json.loads(l) for l in Path(samples).read_text().splitlines()]
    drafts = tmp_path / "drafts.jsonl"
    objs = []
    for obj in loaded[:3]:
        objs.append({"sample_id": obj["id"], "draft": obj["response"], "model": "model-a", "adaptation": "x"})
        objs.append({"sample_id": obj["id"], "draft": "unrelated zz yy filler.", "model": "model-b", "adaptation": "x"})
    _write_jsonl(drafts, objs)
    out = tmp_path / "out"
    assert main(["evaluate", "--samples", samples, "--drafts", str(drafts), "--out", str(out)]) == 0
    models_csv = (out / "models.csv").read_text()
    assert "model-a" in models_csv and "model-b" in models_csv
    assert "stdev" in models_csv


def test_evaluate_workers_flag_matches_default(tmp_path):
    samples, drafts = _toy_paths()
    out1 = tmp_path / "out1"
    out2 = tmp_path / "out2"
    assert main(["evaluate", "--samples", samples, "--drafts", drafts, "--out", str(out1)]) == 0
    assert main(
        ["evaluate", "--samples", samples, "--drafts", drafts, "--out", str(out2), "--workers", "4"]
    ) == 0
    # reports differ only in the embedded workers config value
    s1 = (out1 / "summary.csv").read_text().splitlines()[1:]
    s2 = (out2 / "summary.csv").read_text().splitlines()[1:]
    assert s1 == s2


def test_usage_error_exit_code():
    assert main(["evaluate", "--samples", "only.jsonl"]) == 1
    assert main(["not-a-command"]) == 1


def test_data_error_exit_code(tmp_path):
    bad = tmp_path / "bad.jsonl"
    _write_jsonl(
        bad,
        [
            {"id": "a", "message": "m", "chart_summary": "", "response": "r."},
            {"id": "a", "message": "m", "chart_summary": "", "response": "r."},
        ],
    )
    _, drafts = _toy_paths()
    assert main(["evaluate", "--samples", str(bad), "--drafts", drafts]) == 2


def test_backend_exhaustion_exit_code(tmp_path):
    samples, drafts = _toy_paths()
    with MockLLMServer(fail_all=True) as server:
        config = tmp_path / "backend.json"
        config.write_text(
            json.dumps(
                {
                    "base_url": server.base_url,
                    "model": "m",
                    "max_retries": 0,
                    "backoff_base": 0.001,
                }
            )
        )
        code = main(
            [
                "evaluate", "--samples", samples, "--drafts", drafts,
                "--matcher", "remote", "--backend-config", str(config),
                "--out", str(tmp_path / "out"),
            ]
        )
    assert code == 3


def test_remote_matcher_needs_config(tmp_path):
    samples, drafts = _toy_paths()
    code = main(
        ["evaluate", "--samples", samples, "--drafts", drafts, "--matcher", "remote",
         "--out", str(tmp_path / "out")]
    )
    assert code == 1


def test_judge_eval_command(tmp_path, capsys):
    annotations = tmp_path / "annotations.jsonl"
    _write_jsonl(
        annotations,
        [
            {
                "expert_sentence": "Please call our office.",
                "draft": "Thanks. Please call our office.",
                "gold": "Please call our office.",
            },
            {
                "expert_sentence": "Start ibuprofen.",
                "draft": "Get some rest tonight.",
                "gold": "NO MATCH",
            },
        ],
    )
    out = tmp_path / "out"
    code = main(["judge-eval", "--annotations", str(annotations), "--out", str(out)])
    assert code == 0
    assert "agreement: 1.0000" in capsys.readouterr().out
    assert (out / "judge_eval.csv").exists()


def test_iap_command_reports_comparisons(tmp_path, capsys):
    multi = tmp_path / "multi.jsonl"
    records = []
    for i in range(4):
        records.append(
            {
                "id": f"m{i}",
                "message": "msg",
                "chart_summary": "",
                "responses": [
                    {"annotator_id": "A", "response": f"Shared line{i}. OwnA{i} extra{i}."},
                    {"annotator_id": "B", "response": f"Shared line{i}. OwnB{i} other{i}."},
                ],
            }
        )
    _write_jsonl(multi, records)
    out = tmp_path / "out"
    code = main(["iap", "--multi", str(multi), "--out", str(out)])
    assert code == 0
    assert "comparisons: 8" in capsys.readouterr().out
    assert (out / "iap_summary.csv").exists()
    assert (out / "iap_pairs.csv").exists()


def test_iaa_command(tmp_path):
    multi = tmp_path / "multi.jsonl"
    _write_jsonl(
        multi,
        [
            {
                "id": "m0",
                "message": "msg",
                "chart_summary": "",
                "responses": [
                    {"annotator_id": "A", "response": "Have you noticed any fever?"},
                    {"annotator_id": "B", "response": "Our office hours are online."},
                ],
            }
        ],
    )
    out = tmp_path / "out"
    assert main(["iaa", "--multi", str(multi), "--out", str(out)]) == 0
    strict = (out / "iaa_strict.csv").read_text()
    assert "strict_inclusion" in strict
    assert (out / "iaa_cosine.csv").exists()


def test_theme_freq_fractions_sum_to_one(tmp_path):
    samples, _ = _toy_paths()
    out = tmp_path / "out"
    assert main(["theme-freq", "--responses", samples, "--out", str(out)]) == 0
    rows = (out / "theme_freq.csv").read_text().splitlines()
    header = rows[1].split(",")
    idx = header.index("sentence_fraction")
    total = sum(float(r.split(",")[idx]) for r in rows[2:])
    assert abs(total - 1.0) < 1e-3  # cells are rounded to 4 decimals


def test_rag_index_and_prompt(tmp_path):
    samples, _ = _toy_paths()
    stem = tmp_path / "train"
    assert main(["rag", "index", "--samples", samples, "--index", str(stem)]) == 0
    assert stem.with_suffix(".idx").exists()
    assert stem.with_suffix(".meta").exists()

    out = tmp_path / "out"
    code = main(
        ["rag", "prompt", "--index", str(stem), "--queries", samples, "--k", "3",
         "--out", str(out)]
    )
    assert code == 0
    lines = [json.loads(l) for l in (out / "rag_prompts.jsonl").read_text().splitlines()]
    assert len(lines) == 6
    assert all(len(l["retrieved_ids"]) == 3 for l in lines)
    assert all(l["id"] not in l["retrieved_ids"] for l in lines)


def test_tadpole_dry_run_plan(tmp_path, capsys):
    bases = tmp_path / "bases.jsonl"
    _write_jsonl(
        bases,
        [
            {"sample_id": f"b{i}", "draft": f"base reply {i}.", "model": "m", "adaptation": "sft"}
            for i in range(8)
        ],
    )
    code = main(["tadpole", "tuples", "--bases", str(bases), "--dry-run"])
    assert code == 0
    printed = capsys.readouterr().out
    assert "enhancement calls: 8" in printed
    assert "corruption calls: 8" in printed


def test_tadpole_tuples_and_pairs_end_to_end(tmp_path):
    bases = tmp_path / "bases.jsonl"
    _write_jsonl(
        bases,
        [
            {"sample_id": f"toy-00{i}", "draft": f"base reply {i}.", "model": "m", "adaptation": "sft"}
            for i in range(1, 7)
        ],
    )
    samples, _ = _toy_paths()
    out = tmp_path / "out"
    with MockLLMServer(chat_fn=lambda p: "variant: " + p[:24]) as server:
        config = tmp_path / "backend.json"
        config.write_text(
            json.dumps({"base_url": server.base_url, "model": "m", "backoff_base": 0.001})
        )
        code = main(
            ["tadpole", "tuples", "--bases", str(bases), "--backend-config", str(config),
             "--out", str(out)]
        )
    assert code == 0
    tuples_path = out / "tadpole_tuples.jsonl"
    assert len(tuples_path.read_text().splitlines()) == 6

    code = main(
        ["tadpole", "pairs", "--tuples", str(tuples_path), "--samples", samples,
         "--strategy", "blend", "--out", str(out)]
    )
    assert code == 0
    pairs = [json.loads(l) for l in (out / "preference_pairs.jsonl").read_text().splitlines()]
    assert len(pairs) == 6
    strategies = {p["strategy"] for p in pairs}
    assert strategies == {"enhanced", "corrupted", "hard-corrupted"}


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
