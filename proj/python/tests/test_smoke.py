import numpy as np
import pytest

import kpboost as kb


def test_integral_box_sum_matches_numpy():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 256, size=(23, 31), dtype=np.uint8)
    ii = kb.IntegralImage(kb.GrayImage(a))
    for x, y, w, h in [(0, 0, 31, 23), (4, 5, 1, 1), (10, 2, 7, 13)]:
        assert ii.box_sum(kb.Rect(x, y, w, h)) == int(a[y:y + h, x:x + w].sum(dtype=np.uint64))
    with pytest.raises(ValueError):
        ii.box_sum(kb.Rect(30, 0, 2, 1))


def test_image_roundtrip_and_pgm(tmp_path):
    a = np.arange(12, dtype=np.uint8).reshape(3, 4)
    img = kb.GrayImage(a)
    assert (img.width, img.height) == (4, 3)
    assert img[3, 2] == 11
    np.testing.assert_array_equal(img.to_array(), a)
    p = tmp_path / "x.pgm"
    kb.save_pgm(img, p)
    assert kb.load_pgm(p) == img
    assert kb.decode_pgm(p.read_bytes()) == img
    with pytest.raises(OSError):
        kb.load_pgm(tmp_path / "missing.pgm")


def test_keypoints_on_disc():
    yy, xx = np.mgrid[0:64, 0:64]
    a = np.where((xx - 32) ** 2 + (yy - 32) ** 2 <= 64, 200, 20).astype(np.uint8)
    p = kb.DetectorParams()
    p.response_threshold = 10**11
    kps = kb.detect_keypoints(kb.integral(kb.GrayImage(a)), p)
    assert len(kps) >= 1
    assert abs(kps[0].x - 32) <= 2 and abs(kps[0].y - 32) <= 2


def test_descriptor_norm_and_sad():
    c = kb.generate(1, 0, 5)
    f = kb.features_of(c.positives[0].image)
    assert len(f) > 0
    d = f.descriptors[0]
    assert sum(abs(v) for v in d.values) == 4096
    assert kb.sad(d, d) == 0
    assert kb.dist_to_image(d, f) == 0
    assert kb.dist_to_image(d, kb.ImageFeatures()) == kb.NO_KEYPOINT_DISTANCE


def test_train_classify_detect(tmp_path):
    corpus = kb.generate(40, 40, 11)
    pos = kb.extract_all(corpus.positives)
    neg = kb.extract_all(corpus.negatives)
    m = kb.build_distance_matrix(pos, neg)
    assert m.cols == 80 and m.rows == sum(len(f) for f in pos)
    res = kb.train_adaboost(m, 10)
    model = res.model
    assert len(model) == 10 and len(res.trace) == 10
    assert model.default_theta == (model.alpha_sum() + 1) // 2

    path = tmp_path / "model.txt"
    kb.save_model(model, path)
    assert kb.load_model(path) == model

    curve = kb.eval_pr(model, pos, neg)
    assert curve[-1].recall_fp20 == 1 << 20

    votes = kb.learn_votes(model, [(f, s.truth) for f, s in zip(pos, corpus.positives)])
    assert len(votes) > 0
    vp = tmp_path / "votes.txt"
    kb.save_votes(votes, vp)
    assert kb.load_votes(vp) == votes

    sc = kb.scene(200, 150, 1, 77)
    frame = kb.features_of(sc.image)
    hp = kb.HoughParams()
    hp.min_mass = model.default_theta
    dets = kb.hough_detect(model, votes, frame, 200, 150, hp)
    for d in dets:
        assert d.score >= hp.min_mass


def test_contract_errors():
    with pytest.raises(kb.ContractError):
        kb.train_adaboost(kb.build_distance_matrix([], []), 0)
    p = kb.DetectorParams()
    p.filter_sizes = [9, 12]
    with pytest.raises(ValueError):
        p.validate()


def test_pr_curve_small():
    rows = kb.pr_curve([3, 1, 2], [1, 0, 1])
    best = [r for r in rows if r.tp == 2 and r.fp == 0]
    assert best and best[0].precision_fp20 == 1 << 20
