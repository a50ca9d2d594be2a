import pytest

from valironkit import verify
from valironkit.corpus import by_name
from valironkit.maps import MapDescriptor, var

z = var()


@pytest.fixture(scope="module")
def default_run():
    return verify.run_all(n_pairs=500)


def test_default_corpus_passes(default_run):
    failed = [c for c in default_run if not c.passed]
    assert not failed, failed
    s = verify.summarize(default_run)
    assert s["passed"] and s["n_failed"] == 0 and s["n_checks"] == len(default_run)


def test_every_corpus_map_is_covered(default_run):
    maps = {c.map for c in default_run}
    for name in ("mobius_a05", "two_z_plus_sqrt", "translation_i", "siegel_claim_A8", "ball_mobius_a05"):
        assert name in maps
    suites = {c.suite for c in default_run}
    assert suites == {"dynamics1d", "ball", "siegel"}


def test_injected_bad_map_fails():
    checks = verify.run_all(entries=[by_name("mobius_a05")], extra=[MapDescriptor("disk", 2 * z)], n_pairs=200)
    bad = [c for c in checks if not c.passed]
    assert bad and all(c.map.startswith("extra0_") for c in bad)
    assert not verify.summarize(checks)["passed"]


def test_thread_count_does_not_change_results():
    entries = [by_name(n) for n in ("mobius_a05", "two_z_plus_sqrt", "siegel_claim_A8")]
    one = [c.to_dict() for c in verify.run_all(entries, n_pairs=300, threads=1)]
    four = [c.to_dict() for c in verify.run_all(entries, n_pairs=300, threads=4)]
    assert one == four


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("VALIRONKIT_THREADS", "3")
    assert verify.thread_cap() == 3
    monkeypatch.setenv("VALIRONKIT_THREADS", "zero")
    assert verify.thread_cap() == 1
    monkeypatch.setenv("VALIRONKIT_THREADS", "-2")
    assert verify.thread_cap() == 1


def test_check_serializes_non_finite():
    c = verify.Check("s", "m", "inv", float("inf"), 1e-9, False)
    assert c.to_dict()["value"] == "inf"
