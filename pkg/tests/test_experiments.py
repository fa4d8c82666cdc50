import pytest

from rwkplus.errors import DomainError
from rwkplus.experiments import (
    PROFILES,
    ExperimentProfile,
    add_extra_features,
    evaluate,
    get_profile,
    prepare,
    run,
    summarize,
)
from rwkplus.testbeds import AccuracyReport, GedReport


def test_profile_names_are_unique_and_cover_all_tasks():
    prefixes = {name.split("/")[0] for name in PROFILES}
    assert prefixes == {"task1-1", "task1-2", "task2-1", "task2-2"}
    assert all(p.name == name for name, p in PROFILES.items())
    assert all(p.train.restarts == 50 for p in PROFILES.values())


def test_profile_digest_is_stable():
    p = get_profile("task1-1/plus-last-t2")
    assert p.digest() == get_profile("task1-1/plus-last-t2").digest()
    assert p.digest() != get_profile("task1-1/rwnn-last-t2").digest()
    with pytest.raises(DomainError):
        get_profile("task9")


def test_profile_validation():
    base = get_profile("task1-1/plus-last-t2")
    with pytest.raises(DomainError):
        ExperimentProfile("x", base.testbed, base.train, evaluation="f1")
    with pytest.raises(DomainError):
        ExperimentProfile("x", base.testbed, base.train, extra="sc")


def test_extra_features_set_blocks():
    db, truth, cfg = prepare(get_profile("task2-2/regular3/plus-identity"))
    assert db.d == 1 + 6
    assert cfg.feature_blocks == (1, 6)
    db, _, cfg = prepare(get_profile("task2-2/regular2/plus-sc"))
    assert cfg.feature_blocks[0] == 3 and db.d == sum(cfg.feature_blocks)
    db, _, cfg = prepare(get_profile("task2-1/ring/plus-t2"))
    assert cfg.feature_blocks is None
    with pytest.raises(DomainError):
        add_extra_features(db, "laplacian")


def test_small_runs_evaluate():
    acc = evaluate(get_profile("task1-1/plus-last-t2"), run(get_profile("task1-1/plus-last-t2"), restarts=2, epochs=2))
    assert isinstance(acc, AccuracyReport) and acc.matches.shape == (2, 3)
    prof = get_profile("task2-1/tailed-triangle/rwnn-t2")
    ged = evaluate(prof, run(prof, restarts=2, epochs=2))
    assert isinstance(ged, GedReport) and ged.values.shape == (2,)
    d = summarize(ged)
    assert all(isinstance(v, float) for v in d["values"])
