"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

exalign = pytest.importorskip("exalign")
scipy_optimize = pytest.importorskip("scipy.optimize")

EPS = 1e-8


def guarded_cosine(r_p, r_q):
    r_p = np.asarray(r_p)
    r_q = np.asarray(r_q)
    if np.linalg.norm(r_p) < EPS and np.linalg.norm(r_q) < EPS:
        return 1.0
    denom = max(np.linalg.norm(r_p), EPS) * max(np.linalg.norm(r_q), EPS)
    return float(r_p.dot(r_q) / denom)


def test_solver_matches_scipy():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m, n = rng.integers(1, 9, size=2)
        w = rng.uniform(-1.0, 1.0, size=(m, n))
        pairs = exalign.solve_max_assignment(w)
        assert len(pairs) == min(m, n)
        rows, cols = scipy_optimize.linear_sum_assignment(w, maximize=True)
        ours = exalign.assignment_total(w, pairs)
        assert math.isclose(ours, float(w[rows, cols].sum()), abs_tol=1e-9)


def test_brute_force_oracle_agrees():
    rng = np.random.default_rng(11)
    for _ in range(10):
        w = rng.uniform(-1.0, 1.0, size=(4, 6))
        a = exalign.assignment_total(w, exalign.solve_max_assignment(w))
        b = exalign.assignment_total(w, exalign.brute_force_assignment(w))
        assert math.isclose(a, b, abs_tol=1e-9)


def test_bad_matrices_rejected():
    with pytest.raises(ValueError):
        exalign.solve_max_assignment(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        exalign.solve_max_assignment(np.zeros((0, 3)))


@pytest.fixture(scope="module")
def trained():
    return exalign.train_synthetic(pairs=2000, seed=7)


def test_synthetic_training_learns(trained):
    assert trained["test_accuracy"] >= 0.9
    assert trained["epochs"] <= 50
    assert trained["model"].threshold is not None


def test_identical_sentences_score_one(trained):
    model = trained["model"]
    score = model.score("run big cat", "run big cat")
    assert score["y"] == 1.0
    assert score["label"] == "paraphrase"


def test_align_report_structure(trained):
    model = trained["model"]
    report = model.align("run big cat red", "walk big cat")
    assert len(report["pairs"]) == 3  # min(M, N)
    for row in report["pairs"]:
        assert row["status"] in {"matched", "unmatched"}
        assert 1 <= row["g"] <= 4 and 1 <= row["h"] <= 3
        assert math.isclose(row["alpha"], 1.0 - row["m"], abs_tol=1e-12)
    # 4 source tokens vs 3 target tokens: exactly one source token stays unaligned
    assert [u["side"] for u in report["unaligned"]] == ["source"]
    assert math.isfinite(report["y"])


def test_reported_y_recomputable_from_halves(trained):
    model = trained["model"]
    for src, tgt in [("run big cat", "walk big cat"), ("happy dog red", "red happy dog"),
                     ("run big cat", "run big cat")]:
        report = model.align(src, tgt)
        assert abs(guarded_cosine(report["r_p"], report["r_q"]) - report["y"]) < 1e-9


def test_swap_symmetry(trained):
    model = trained["model"]
    for src, tgt in [("run big cat", "walk big cat"), ("sad dog blue", "blue sad hound")]:
        a = model.score(src, tgt)["y"]
        b = model.score(tgt, src)["y"]
        assert abs(a - b) < 1e-9


def test_non_paraphrase_diagnostics(trained):
    model = trained["model"]
    corpus = exalign.synthetic_pairs(pairs=2000, seed=7)
    negatives = [ex for ex in corpus if ex["label"] == 0][:40]

    correct = 0
    one_unmatched_at_slot = 0
    for ex in negatives:
        report = model.align(" ".join(ex["source"]), " ".join(ex["target"]))
        if report["label"] == "non-paraphrase":
            correct += 1
        unmatched = [p for p in report["pairs"] if p["status"] == "unmatched"]
        if len(unmatched) == 1 and unmatched[0]["h"] == ex["substituted_target_position"]:
            one_unmatched_at_slot += 1
    assert correct >= 0.9 * len(negatives)
    assert one_unmatched_at_slot >= 0.7 * len(negatives)


def test_checkpoint_roundtrip(trained, tmp_path):
    model = trained["model"]
    path = str(tmp_path / "model.json")
    model.save(path)
    loaded = exalign.Model.load(path)
    assert loaded.threshold == model.threshold
    assert loaded.hidden_dim == model.hidden_dim
    for src, tgt in [("run big cat", "walk big cat"), ("red blue dog", "dog red blue")]:
        assert loaded.score(src, tgt)["y"] == model.score(src, tgt)["y"]


def test_cut_validation(trained):
    with pytest.raises(ValueError):
        trained["model"].align("run big", "walk big", cut=1.5)
