import json
import math
import os
import subprocess

import numpy as np
import pytest

import tagrec


def write_corpus(path, n=120, tags=8):
    rng = np.random.default_rng(3)
    with open(path, "w") as f:
        for i in range(n):
            ts = sorted({f"tag{i % tags}", f"tag{rng.integers(tags)}"})
            words = [t.replace("tag", "tok") for t in ts] + ["alpha", "bravo", "charlie"]
            f.write(json.dumps({"id": f"o{i:03d}", "title": words[0], "description": " ".join(words[1:]),
                                "tags": ts}) + "\n")


def test_text_and_tokens():
    assert tagrec.preprocess_text("Hello  <b>World</b>") == "hello world"
    assert tagrec.preprocess_text("") == ""
    ids = tagrec.mock_token_ids("hello world")
    assert len(ids) == 4 and ids[0] == 1 and ids[-1] == 2


def test_embedding_store_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    records = [(f"id{i}", rng.standard_normal((i + 1, 5)).astype(np.float32)) for i in range(4)]
    assert tagrec.write_embedding_store(tmp_path / "e.tgbe", 5, records) == 4
    back = tagrec.read_embedding_store(tmp_path / "e.tgbe")
    assert [r[0] for r in back] == [r[0] for r in records]
    for (_, valid, arr), (_, want) in zip(back, records):
        assert valid == want.shape[0]
        assert np.array_equal(arr, want)
    (tmp_path / "bad.tgbe").write_bytes(b"XXXX" + b"\0" * 16)
    with pytest.raises(tagrec.DataError):
        tagrec.read_embedding_store(tmp_path / "bad.tgbe")


def test_head_model(tmp_path):
    m = tagrec.HeadModel(dim=6, num_tags=3, filters=4, hidden=8, seed=1)
    x = tagrec.mock_embed(tagrec.mock_token_ids("a b c d e f"), 6, 0)
    scores = m.forward(x)
    assert len(scores) == 3 and all(0 < s < 1 for s in scores)
    padded = np.zeros((64, 6), np.float32)
    padded[: x.shape[0]] = x
    assert m.forward(padded, valid_len=x.shape[0]) == scores
    m.save(tmp_path / "m.tgbh")
    assert tagrec.HeadModel.load(tmp_path / "m.tgbh") == m
    r = m.gradient_check(x, [1, 0, 1])
    assert r["failures"] == 0 and r["checked"] == m.parameter_count
    with pytest.raises(ValueError):
        m.forward(x[:2])


def test_metrics_and_recommendation():
    assert tagrec.select_threshold_topk([0.95, 0.93, 0.50], 0.92, 2) == [0, 1]
    assert tagrec.recall_at_k(6, 12, 10) == 0.6
    assert tagrec.precision_at_k(2, 3, 10, "strict") == 0.2
    assert tagrec.f1_at_k(0.2, 1.0) == pytest.approx(1 / 3)
    report = tagrec.evaluate([[0], [0, 5]], [[0, 1], [0]], 10)
    assert report["f1"] == 2 / 3
    cal = tagrec.calibrate_threshold([[0.9, 0.6]], [[0]], 10)
    assert cal["best_tau"] == pytest.approx(0.61)


def test_pipeline_and_jsonl_recompute(tmp_path):
    write_corpus(tmp_path / "c.jsonl")
    cfg = tagrec.default_config()
    cfg.update(corpus=str(tmp_path / "c.jsonl"), bundle=str(tmp_path / "d.json"),
               embeddings=str(tmp_path / "e.tgbe"), model=str(tmp_path / "m.tgbh"),
               min_tag_freq=5, test_size=30, seed=7, mock_dim=16, filters=8, hidden=32,
               epochs=20, batch_size=8, lr=3e-3, k=5, tau=0.5)
    tagrec.run_ingest(dict(cfg, out=cfg["bundle"]))
    tagrec.run_embed_mock(dict(cfg, out=cfg["embeddings"]))
    tagrec.run_train(dict(cfg, out=cfg["model"]))
    n, _ = tagrec.run_recommend(dict(cfg, out=str(tmp_path / "r.jsonl")))
    assert n == 30
    report, log = tagrec.run_evaluate(cfg)
    assert "F1-score@5" in log

    # Standalone recomputation from the recommendation lines.
    truth = {}
    for line in open(tmp_path / "c.jsonl"):
        o = json.loads(line)
        truth[o["id"]] = set(o["tags"])
    vocab = set(json.load(open(tmp_path / "d.json"))["vocabulary"]["tags"])
    f1s = []
    for line in open(tmp_path / "r.jsonl"):
        r = json.loads(line)
        ot = truth[r["id"]] & vocab
        hits = len(set(r["tags"]) & ot)
        rec = hits / min(5, len(ot))
        prec = hits / len(r["tags"]) if r["tags"] else 0.0
        f1s.append(0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec))
    effective = next(x for x in report["reports"] if x["mode"] == "effective")
    assert math.isclose(sum(f1s) / len(f1s), effective["f1"], abs_tol=1e-12)


@pytest.mark.skipif(not os.environ.get("TAGREC_CLI"), reason="CLI binary not provided")
def test_cli_exit_codes(tmp_path):
    cli = os.environ["TAGREC_CLI"]
    missing = subprocess.run([cli, "ingest", "--corpus", str(tmp_path / "nope.jsonl"), "--out",
                              str(tmp_path / "d.json")], capture_output=True, text=True)
    assert missing.returncode == 2
    assert "nope.jsonl" in missing.stderr
    usage = subprocess.run([cli, "train", "--bogus"], capture_output=True, text=True)
    assert usage.returncode == 1
