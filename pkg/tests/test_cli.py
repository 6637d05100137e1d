import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from resumeflow.cli import main

RESUME_TEXT = """Dana K. Rivera
dana.rivera@example.com
Built streaming ingestion services in Python and Go.
Cut P99 query latency from 900ms to 120ms.
"""

JOB_TEXT = """Senior Backend Engineer
Design and operate ingestion services in Python and Go.
"""


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def workdir(tmp_path):
    (tmp_path / "resume.txt").write_text(RESUME_TEXT, encoding="utf-8")
    (tmp_path / "job.txt").write_text(JOB_TEXT, encoding="utf-8")
    return tmp_path


def test_tailor_offline_run(runner, workdir):
    out = workdir / "out"
    result = runner.invoke(main, [
        "tailor", "--resume", str(workdir / "resume.txt"),
        "--job", str(workdir / "job.txt"),
        "--provider", "mock", "--out", str(out),
    ])
    assert result.exit_code == 0, result.stderr
    for name in ("tailored.json", "score.json", "resume.tex", "resume.md",
                 "user_data.json", "job_details.json"):
        assert (out / name).exists(), name
    tailored = json.loads((out / "tailored.json").read_text())
    user_data = json.loads((out / "user_data.json").read_text())
    assert tailored["resume"]["personal"] == user_data["personal"]
    score = json.loads((out / "score.json").read_text())
    assert score["content_preservation_token"] == 1.0
    # stdout lists artifact paths only
    for line in result.stdout.strip().splitlines():
        assert Path(line).exists()


def test_tailor_with_cover_letter(runner, workdir):
    out = workdir / "out"
    result = runner.invoke(main, [
        "tailor", "--resume", str(workdir / "resume.txt"),
        "--job", str(workdir / "job.txt"),
        "--provider", "mock", "--cover-letter", "--out", str(out),
    ])
    assert result.exit_code == 0
    assert (out / "cover_letter.md").exists()


def test_missing_resume_flag_is_usage_error(runner, workdir):
    result = runner.invoke(main, ["tailor", "--job", str(workdir / "job.txt")])
    assert result.exit_code == 2


def test_extract_user_stdout_json(runner, workdir):
    result = runner.invoke(main, [
        "extract-user", "--resume", str(workdir / "resume.txt"),
        "--provider", "mock",
    ])
    assert result.exit_code == 0
    doc = json.loads(result.stdout)
    assert doc["personal"]["full_name"] == "Dana K. Rivera"


def test_extract_user_from_pdf(runner, workdir):
    from test_ingest import make_pdf

    pdf_path = workdir / "resume.pdf"
    pdf_path.write_bytes(make_pdf(RESUME_TEXT.strip().splitlines(), compress=1))
    result = runner.invoke(main, [
        "extract-user", "--resume", str(pdf_path), "--provider", "mock",
    ])
    assert result.exit_code == 0
    assert json.loads(result.stdout)["personal"]["full_name"] == "Dana K. Rivera"


def test_extract_job_stdin(runner):
    result = runner.invoke(main, ["extract-job", "--job", "-", "--provider", "mock"],
                           input=JOB_TEXT)
    assert result.exit_code == 0
    details = json.loads(result.stdout)
    assert details["title"] == "Senior Backend Engineer"


def test_score_identical_texts(runner, tmp_path):
    original = tmp_path / "orig.txt"
    original.write_text("alpha beta\ngamma", encoding="utf-8")
    generated = tmp_path / "gen.json"
    generated.write_text(json.dumps({
        "personal": {"full_name": "alpha beta"},
        "achievements": ["gamma"],
    }), encoding="utf-8")
    job = tmp_path / "job.txt"
    job.write_text("alpha beta gamma", encoding="utf-8")
    result = runner.invoke(main, [
        "score", "--original", str(original), "--generated", str(generated),
        "--job", str(job),
    ])
    assert result.exit_code == 0, result.stderr
    report = json.loads(result.stdout)
    assert report["job_alignment_token"] == 1.0
    assert report["content_preservation_token"] == 1.0


def test_score_overlap_fixture(runner, tmp_path):
    (tmp_path / "orig.txt").write_text("a b c d", encoding="utf-8")
    (tmp_path / "job.txt").write_text("a b c d", encoding="utf-8")
    (tmp_path / "gen.json").write_text(json.dumps({
        "personal": {"full_name": "c"},
        "achievements": ["d", "e"],
    }), encoding="utf-8")
    result = runner.invoke(main, [
        "score", "--original", str(tmp_path / "orig.txt"),
        "--generated", str(tmp_path / "gen.json"),
        "--job", str(tmp_path / "job.txt"),
    ])
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert abs(report["content_preservation_token"] - 2 / 3) <= 1e-9
    assert abs(report["job_alignment_token"] - 2 / 3) <= 1e-9


def test_score_with_mock_embedder(runner, tmp_path):
    (tmp_path / "orig.txt").write_text("alpha beta", encoding="utf-8")
    (tmp_path / "job.txt").write_text("alpha beta", encoding="utf-8")
    (tmp_path / "gen.json").write_text(json.dumps({
        "personal": {"full_name": "alpha"}, "achievements": ["beta"],
    }), encoding="utf-8")
    result = runner.invoke(main, [
        "score", "--original", str(tmp_path / "orig.txt"),
        "--generated", str(tmp_path / "gen.json"),
        "--job", str(tmp_path / "job.txt"), "--embedder", "mock",
    ])
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["embedder_id"] == "mock-embedding-001"
    assert -1.0 <= report["job_alignment_latent"] <= 1.0


def test_score_empty_job_file(runner, tmp_path):
    (tmp_path / "orig.txt").write_text("alpha", encoding="utf-8")
    (tmp_path / "job.txt").write_text("!!! ...", encoding="utf-8")
    (tmp_path / "gen.json").write_text(json.dumps({
        "personal": {"full_name": "alpha"}, "achievements": ["x"],
    }), encoding="utf-8")
    result = runner.invoke(main, [
        "score", "--original", str(tmp_path / "orig.txt"),
        "--generated", str(tmp_path / "gen.json"),
        "--job", str(tmp_path / "job.txt"),
    ])
    assert result.exit_code != 0
    assert "empty" in result.stderr.lower()


def test_bad_credentials_exit_4(runner, workdir, monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    result = runner.invoke(main, [
        "extract-user", "--resume", str(workdir / "resume.txt"),
        "--provider", "openai",
    ])
    assert result.exit_code == 4
    assert "OPENAI_API_KEY" in result.stderr


def test_diagnostics_go_to_stderr(runner, workdir):
    result = runner.invoke(main, [
        "extract-user", "--resume", str(workdir / "resume.txt"),
        "--provider", "mock",
    ])
    json.loads(result.stdout)  # stdout is pure JSON
    assert result.stdout.rstrip().endswith("}")
