import json

import pytest

import dpaudit


def present(report):
    return {c for c, v in report["labels"].items() if v == "present"}


def test_catalog():
    catalog = dpaudit.subtype_catalog()
    assert len(catalog) == 29
    assert len({s["category"] for s in catalog}) == 8


def test_oracle_round_trip():
    for entry in dpaudit.subtype_catalog():
        trace = dpaudit.generate([entry["slug"]], seed=3, broker_id="py")
        assert dpaudit.validate_trace(trace) == []
        report = dpaudit.detect_all(trace)
        assert present(report) == {entry["category"]}
        assert dpaudit.validate_report(report, trace) == []


def test_benign_portal_is_clean():
    report = dpaudit.detect_all(dpaudit.generate([], seed=42))
    assert report["findings"] == []
    assert not present(report)


def test_unsatisfiable_plant():
    with pytest.raises(dpaudit.UnsatisfiablePlant):
        dpaudit.generate(["cross_page_fragmentation"], seed=1, page_count=2)
    with pytest.raises(dpaudit.Error):
        dpaudit.generate(["no_such_subtype"], seed=1)


def test_session_with_fault():
    trace = dpaudit.generate([], seed=5, page_count=3, form_stages=2)
    before = dpaudit.submit_count()
    log = dpaudit.run_session(trace, fault="captcha_page", step=1)
    assert log["failure"]["category"] == "SecurityBarrier"
    clean = dpaudit.agent_run(trace)
    assert clean["completion"]["verified_success"]
    assert dpaudit.submit_count() == before == 0


def test_metrics():
    m = dpaudit.classification_metrics(2, 1, 1, 4)
    assert m["accuracy"]["value"] == pytest.approx(0.75, abs=1e-12)
    assert m["f1"]["value"] == pytest.approx(2 / 3, abs=1e-12)
    assert dpaudit.classification_metrics(0, 0, 0, 3)["precision"]["value"] is None
    assert dpaudit.cohen_kappa([True, False, True, False], [False, True, False, True]) == -1.0
    w = dpaudit.wald(50, 100)
    assert (round(w["ci_low"], 3), round(w["ci_high"], 3)) == (0.402, 0.598)


def test_evaluate_corpus():
    traces, truth = dpaudit.generate_corpus(20, 7)
    reports = [dpaudit.detect_all(t) for t in traces]
    metrics = dpaudit.evaluate(reports, truth, traces)
    assert metrics["n_evaluated"] == 20
    assert metrics["aggregate"]["accuracy"]["value"] == 1.0


def test_prompt_levels():
    tags = [[t for t, _ in dpaudit.assemble(level)] for level in range(1, 5)]
    assert "ROLE" not in tags[0] and "ROLE" in tags[1]
    assert all(set(a) < set(b) for a, b in zip(tags, tags[1:]))


def test_gate():
    trace = dpaudit.generate(["coupled_outcomes"], seed=2)
    good = dpaudit.detect_all(trace)
    report, _ = dpaudit.gate_response(good, trace)
    assert report == good
    bad = json.loads(json.dumps(good))
    del bad["labels"]["HiddenInfo"]
    report, reason = dpaudit.gate_response(bad, trace)
    assert report is None and reason


def test_cli(tmp_path):
    corpus = tmp_path / "corpus"
    code, out, err = dpaudit.run_command(["synth", "--n", "5", "--seed", "1", "--out", corpus])
    assert code == 0, err
    code, _, _ = dpaudit.run_command(["audit", corpus, "--out", tmp_path / "preds"])
    assert code == 0
    assert dpaudit.run_command(["bogus"])[0] == 2
