import numpy as np
import pytest

from hgnnmatch.data.baseline import jaccard, jaccard_scores
from hgnnmatch.data.pairs import (
    PairExample,
    read_pairs,
    read_users,
    sample_pairs,
    split_users,
    user_components,
    write_pairs,
    write_users,
)
from hgnnmatch.data.synth import SynthConfig, generate_corpus, generate_dataset, sample_device_urls
from hgnnmatch.errors import DataError
from hgnnmatch.graph.logs import load_logs, write_logs
from hgnnmatch.training.evaluation import sweep_scores

SMALL = SynthConfig(n_users=6, devices_per_user=2, mean_log_len=30, vocab_size=60, profile_dim=8, noise=0.2, seed=1)


# ---------- Corpus ----------
def test_corpus_counts_and_ids():
    logs, users = generate_corpus(SMALL)
    assert len(logs) == 12
    assert len(set(users.values())) == 6
    assert logs[0].device_id == "u00000_d0"
    assert users["u00005_d1"] == "u00005"
    for log in logs:
        assert log.n >= 10
        assert all(0 <= t < SMALL.vocab_size for ev in log.events for t in ev.tokens)
        ts = [ev.ts for ev in log.events]
        assert ts == sorted(ts)


def test_corpus_is_deterministic_per_seed():
    a, _ = generate_corpus(SMALL)
    b, _ = generate_corpus(SMALL)
    c, _ = generate_corpus(SynthConfig(**(SMALL.to_dict() | {"seed": 2})))
    assert a == b
    assert a != c


def test_users_do_not_depend_on_corpus_size():
    small, _ = generate_corpus(SMALL)
    large, _ = generate_corpus(SynthConfig(**(SMALL.to_dict() | {"n_users": 9})))
    assert large[: len(small)] == small


def test_mean_log_length_is_calibrated():
    cfg = SynthConfig(n_users=500, devices_per_user=2, mean_log_len=197, vocab_size=400, profile_dim=20, seed=3)
    logs, _ = generate_corpus(cfg)
    assert len(logs) >= 1000
    mean = np.mean([log.n for log in logs])
    assert abs(mean - 197) <= 0.1 * 197
    assert max(log.n for log in logs) <= 5 * 197


def test_noise_free_devices_share_transition_structure():
    rng = np.random.default_rng(0)
    profile = np.array([10, 11, 12, 13, 14])
    transitions = rng.dirichlet(np.full(5, 0.5), size=5)
    cum = np.cumsum(transitions, axis=1)

    estimates, visits = [], []
    for seed in (1, 2):
        urls = sample_device_urls(profile, cum, 60_000, 0.0, 50, np.random.default_rng(seed))
        assert set(urls) <= set(profile.tolist())
        states = np.asarray(urls) - 10
        counts = np.zeros((5, 5))
        np.add.at(counts, (states[:-1], states[1:]), 1)
        visits.append(counts.sum(axis=1))
        estimates.append(counts / np.maximum(visits[-1][:, None], 1))

    # rows with few visits are too noisy to compare
    busy = (visits[0] >= 2000) & (visits[1] >= 2000)
    assert busy.any()
    np.testing.assert_allclose(estimates[0][busy], transitions[busy], atol=0.05)
    np.testing.assert_allclose(estimates[0][busy], estimates[1][busy], atol=0.06)


def test_noise_free_users_stay_inside_their_profile():
    cfg = SynthConfig(**(SMALL.to_dict() | {"noise": 0.0}))
    logs, users = generate_corpus(cfg)
    for user in set(users.values()):
        seen = {t for log in logs if users[log.device_id] == user for ev in log.events for t in ev.tokens}
        assert len(seen) <= cfg.profile_dim


@pytest.mark.parametrize(
    "overrides",
    [{"vocab_size": 5, "profile_dim": 6}, {"n_users": 0}, {"noise": 1.5}, {"mean_log_len": 0}],
)
def test_synth_config_validation(overrides):
    with pytest.raises(ValueError):
        SynthConfig(**overrides)


# ---------- Datasets and pairs ----------
def test_single_user_gives_one_positive():
    logs, pairs = generate_dataset(SynthConfig(**(SMALL.to_dict() | {"n_users": 1})))
    assert len(logs) == 2
    assert pairs == [PairExample("u00000_d0", "u00000_d1", 1)]


def test_two_users_two_devices():
    logs, pairs = generate_dataset(SynthConfig(**(SMALL.to_dict() | {"n_users": 2})))
    labels = [p.label for p in pairs]
    assert labels.count(1) == 2 and labels.count(0) == 2
    assert len({(p.device_a, p.device_b) for p in pairs}) == 4


def test_pair_labels_match_users():
    logs, users = generate_corpus(SMALL)
    pairs = sample_pairs(logs, users, neg_ratio=2.0, seed=4)
    for p in pairs:
        assert (users[p.device_a] == users[p.device_b]) == bool(p.label)
    assert sum(p.label for p in pairs) == 6
    assert len(pairs) - 6 == 12
    assert len({frozenset((p.device_a, p.device_b)) for p in pairs}) == len(pairs)


def test_sample_pairs_options():
    logs, users = generate_corpus(SMALL)
    assert all(p.label == 1 for p in sample_pairs(logs, users, neg_ratio=0.0, seed=4))
    assert sample_pairs(logs, users, 1.0, seed=4) == sample_pairs(logs, users, 1.0, seed=4)
    assert sample_pairs(logs, users, 1.0, seed=4) != sample_pairs(logs, users, 1.0, seed=5)


def test_sample_pairs_errors():
    with pytest.raises(ValueError, match="No positive pairs"):
        sample_pairs(["a", "b"], {"a": "u1", "b": "u2"})
    with pytest.raises(ValueError, match="at least two"):
        sample_pairs(["a"], {"a": "u1"})
    with pytest.raises(DataError, match="No user id"):
        sample_pairs(["a", "b"], {"a": "u1"})


def test_negatives_capped_when_exhausted(caplog):
    pairs = sample_pairs(["a", "b", "c"], {"a": "u1", "b": "u1", "c": "u2"}, neg_ratio=5.0)
    assert sum(1 - p.label for p in pairs) == 2
    assert "only 2 cross-user pairs" in caplog.text


def test_split_users():
    _, users = generate_corpus(SMALL)
    kept, held = split_users(users, 0.25, seed=1)
    assert len(held) == 2 and len(kept) == 4
    assert not kept & held
    assert split_users(users, 0.25, seed=1) == (kept, held)
    assert split_users(users, 0.0, seed=1)[1] == set()


def test_user_components_recover_users():
    logs, users = generate_corpus(SMALL)
    component = user_components(sample_pairs(logs, users, 1.0, seed=0))
    for a in component:
        for b in component:
            assert (component[a] == component[b]) == (users[a] == users[b])


# ---------- Files ----------
def test_logs_round_trip(tmp_path):
    logs, _ = generate_dataset(SMALL)
    assert load_logs(write_logs(logs, tmp_path / "logs.jsonl")) == logs


def test_empty_and_single_line_log_files(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("", encoding="utf-8")
    assert load_logs(empty) == []

    one = tmp_path / "one.jsonl"
    one.write_text('{"device_id": "x", "events": [{"ts": 3, "tokens": [1, 2]}]}\n', encoding="utf-8")
    [log] = load_logs(one)
    assert log.device_id == "x" and log.events[0].tokens == (1, 2)


def test_pairs_and_users_round_trip(tmp_path):
    logs, users = generate_corpus(SMALL)
    pairs = sample_pairs(logs, users, 1.0, seed=0)
    assert read_pairs(write_pairs(pairs, tmp_path / "pairs.csv")) == pairs
    assert read_users(write_users(users, tmp_path / "users.csv")) == users
    assert read_pairs(write_pairs([], tmp_path / "none.csv")) == []


@pytest.mark.parametrize(
    "body, line",
    [
        ("device_a,device_b\nx,y\n", 1),
        ("device_a,device_b,label\nx,y,1\nx,z,maybe\n", 3),
        ("device_a,device_b,label\nx,x,1\n", 2),
    ],
)
def test_bad_pair_files(tmp_path, body, line):
    path = tmp_path / "pairs.csv"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(DataError) as info:
        read_pairs(path)
    assert info.value.line == line


def test_pair_file_with_invalid_utf8(tmp_path):
    path = tmp_path / "pairs.csv"
    path.write_bytes(b"device_a,device_b,label\n\xff\xfe,y,1\n")
    with pytest.raises(DataError, match="UTF-8"):
        read_pairs(path)


# ---------- Jaccard oracle ----------
def test_jaccard():
    assert jaccard({(1,), (2,)}, {(2,), (3,)}) == pytest.approx(1 / 3)
    assert jaccard(set(), set()) == 0.0


def test_jaccard_scores_follow_pair_order():
    logs, pairs = generate_dataset(SMALL)
    by_id = {log.device_id: log for log in logs}
    scores = jaccard_scores(by_id, pairs)
    assert scores.shape == (len(pairs),)
    first = pairs[0]
    expected = jaccard(set(by_id[first.device_a].url_keys()), set(by_id[first.device_b].url_keys()))
    assert scores[0] == expected


@pytest.mark.slow
def test_default_corpus_is_learnable_but_not_trivial():
    logs, pairs = generate_dataset(SynthConfig())
    report = sweep_scores(jaccard_scores({log.device_id: log for log in logs}, pairs), [p.label for p in pairs])
    assert 0.6 <= report.best_f1 <= 0.95
