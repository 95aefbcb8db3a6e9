import json
import subprocess
import sys
from pathlib import Path

import pytest

from embed_exporter.cli import main
from embed_exporter.encoders import HashingEncoder, build_encoder
from embed_exporter.export import ExportJob, SourceFormatError, export, read_source

DATA = Path(__file__).parent / "data" / "sms_sample.jsonl"

VALIDATE_SNIPPET = (
    "import sys; from advfilter.dataset import read_dataset; "
    "ds = read_dataset(sys.argv[1]); print(len(ds))"
)


def run_export(out_path, **over):
    job = ExportJob(
        model_id="hash",
        input_path=str(DATA),
        output_path=str(out_path),
        num_classes=2,
        pooling="hash",
        dim=32,
        task_name="sms",
        split_name="train",
        **over,
    )
    return export(job)


def validate_with_primary_reader(path):
    """The exporter's contract is the file format; check it the way a user
    would, through the primary package's reader in a fresh process."""
    proc = subprocess.run(
        [sys.executable, "-c", VALIDATE_SNIPPET, str(path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return int(proc.stdout.strip())


def test_export_passes_primary_validation(tmp_path):
    out = tmp_path / "export.jsonl"
    count = run_export(out)
    assert validate_with_primary_reader(out) == count == 24


def test_ids_preserved_one_to_one(tmp_path):
    out = tmp_path / "export.jsonl"
    run_export(out)
    source_ids = [r["id"] for r in read_source(DATA)]
    exported_ids = [
        json.loads(l)["id"] for l in out.read_text().splitlines()[1:] if l.strip()
    ]
    assert exported_ids == source_ids


def test_two_runs_identical(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    run_export(a)
    run_export(b)
    assert a.read_bytes() == b.read_bytes()


def test_exclude_ids(tmp_path):
    out = tmp_path / "export.jsonl"
    count = run_export(out, exclude_ids=frozenset({"sms001", "sms002"}))
    assert count == 22
    ids = {json.loads(l)["id"] for l in out.read_text().splitlines()[1:]}
    assert "sms001" not in ids and "sms002" not in ids
    assert validate_with_primary_reader(out) == 22


def test_annotators_copied_through(tmp_path):
    src = tmp_path / "src.jsonl"
    src.write_text(
        '{"id": "a", "text": "hello there", "label": 0, "annotators": [0, 0, 1]}\n'
        '{"id": "b", "text": "spam offer now", "label": 1, "annotators": [1, 1, 1]}\n'
    )
    out = tmp_path / "out.jsonl"
    export(ExportJob("hash", str(src), str(out), num_classes=2, dim=16))
    rows = [json.loads(l) for l in out.read_text().splitlines()[1:]]
    assert rows[0]["annotators"] == [0, 0, 1]
    assert validate_with_primary_reader(out) == 2


def test_partial_annotator_coverage_rejected(tmp_path):
    src = tmp_path / "src.jsonl"
    src.write_text(
        '{"id": "a", "text": "hello", "label": 0, "annotators": [0]}\n'
        '{"id": "b", "text": "world", "label": 1}\n'
    )
    with pytest.raises(SourceFormatError, match="coverage"):
        export(ExportJob("hash", str(src), str(tmp_path / "out.jsonl"), num_classes=2))


def test_csv_source(tmp_path):
    src = tmp_path / "src.csv"
    src.write_text("id,text,label\nr1,hello world,0\nr2,free prize now,1\n")
    out = tmp_path / "out.jsonl"
    export(ExportJob("hash", str(src), str(out), num_classes=2, dim=16))
    assert validate_with_primary_reader(out) == 2


def test_label_out_of_range(tmp_path):
    src = tmp_path / "src.jsonl"
    src.write_text('{"id": "a", "text": "hello", "label": 5}\n')
    with pytest.raises(SourceFormatError, match="out of range"):
        export(ExportJob("hash", str(src), str(tmp_path / "out.jsonl"), num_classes=2))


def test_duplicate_source_ids(tmp_path):
    src = tmp_path / "src.jsonl"
    src.write_text(
        '{"id": "a", "text": "x", "label": 0}\n{"id": "a", "text": "y", "label": 1}\n'
    )
    with pytest.raises(SourceFormatError, match="duplicate"):
        export(ExportJob("hash", str(src), str(tmp_path / "out.jsonl"), num_classes=2))


def test_hashing_encoder_deterministic():
    enc = HashingEncoder(dim=16)
    a = enc.encode_batch(["the quick brown fox", ""])
    b = HashingEncoder(dim=16).encode_batch(["the quick brown fox", ""])
    assert (a == b).all()
    assert a.shape == (2, 16)


def test_unknown_pooling_rejected():
    with pytest.raises(ValueError, match="pooling"):
        build_encoder("hash", "max", 16, "cpu")


def test_cli_roundtrip(tmp_path, capsys):
    out = tmp_path / "out.jsonl"
    rc = main([
        "--model", "hash", "--input", str(DATA), "--output", str(out),
        "--num-classes", "2", "--dim", "24", "--task", "sms", "--split", "train",
    ])
    assert rc == 0
    assert "exported 24" in capsys.readouterr().out
    assert validate_with_primary_reader(out) == 24


def test_cli_bad_source_exit_2(tmp_path, capsys):
    src = tmp_path / "bad.jsonl"
    src.write_text("not json\n")
    rc = main(["--input", str(src), "--output", str(tmp_path / "o.jsonl"),
               "--num-classes", "2"])
    assert rc == 2
    assert "error" in capsys.readouterr().err
