import numpy as np
import pytest

from corefgap.errors import ConfigError, InvariantError
from corefgap.fixtures import recorded_gap_reports, recorded_runs
from corefgap.generalization import (
    BODY,
    DocRecord,
    GapConfig,
    GapReport,
    ModelRun,
    TypeGap,
    agg,
    build_gap_report,
    gap_report,
    permutation_gap_test,
    tgg,
    unpaired_permutation_gap_test,
)
from corefgap.metrics import ALL, B_CUBED, CEAF_E, MUC, Counts
from corefgap.oracles import exact_permutation_p, gap_statistic


def counts(r, p, n):
    return Counts(r * n, n, p * n, n, n, n)


def make_run(name, docs, test_set="t"):
    """docs: list of (all_r, all_p, typed_r, typed_p); 30 mentions, 5 typed per document."""
    records = []
    for i, (ar, ap, tr, tp) in enumerate(docs):
        c = {}
        for metric in (MUC, B_CUBED, CEAF_E):
            c[(metric, ALL)] = counts(ar, ap, 30)
        c[(B_CUBED, "T")] = counts(tr, tp, 5)
        records.append(DocRecord(f"d{i}", c))
    return ModelRun.from_documents(name, test_set, records)


def random_docs(rng, n, typed_drop=0.0):
    out = []
    for _ in range(n):
        ar, ap = rng.uniform(0.6, 0.9, 2)
        tr, tp = rng.uniform(0.5, 0.9, 2)
        out.append((ar, ap, max(0.0, tr - typed_drop), max(0.0, tp - typed_drop)))
    return out


def test_agg_examples():
    assert 100 * agg(0.795, 0.529) == pytest.approx(26.6)
    assert agg(0.5, 0.5) == 0
    assert 100 * agg(0.826, 0.699) == pytest.approx(12.7)
    assert agg(None, 0.5) is None


def test_tgg_examples():
    assert 100 * tgg(0.556, 0.036) == pytest.approx(52.0)
    assert 100 * tgg(0.810, 0.0) == pytest.approx(81.0)
    assert tgg(0.3, 0.3) == 0


def test_same_run_is_null():
    rng = np.random.default_rng(0)
    run = make_run("a", random_docs(rng, 10))
    p, sig = permutation_gap_test(run, run, "T", n_perms=2000)
    assert p == 1.0 and not sig


def test_typed_failure_is_significant_and_matches_exact():
    rng = np.random.default_rng(3)
    docs = random_docs(rng, 12)
    in_run = make_run("in", docs)
    out_run = make_run("out", [(ar, ap, 0.0, 0.0) for ar, ap, _, _ in docs])
    result = permutation_gap_test(in_run, out_run, "T", n_perms=10000, seed=1)
    assert result.p_value <= 0.01 and result.significant
    exact = exact_permutation_p(
        [r.counts for r in in_run.per_document], [r.counts for r in out_run.per_document], gap_statistic("T")
    )
    assert abs(result.p_value - exact) <= 0.02


@pytest.mark.parametrize("metric", [B_CUBED, "conll"])
def test_monte_carlo_converges_to_exact(metric):
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        docs_in = random_docs(rng, 8 + seed)
        docs_out = random_docs(rng, 8 + seed, typed_drop=0.1 * (seed % 2))
        a, b = make_run("in", docs_in), make_run("out", docs_out)
        mc = permutation_gap_test(a, b, "T", n_perms=10000, seed=seed, metric=metric).p_value
        ex = exact_permutation_p(
            [r.counts for r in a.per_document], [r.counts for r in b.per_document], gap_statistic("T", metric)
        )
        assert abs(mc - ex) <= 0.02


def test_seed_determinism_and_workers():
    rng = np.random.default_rng(5)
    a, b = make_run("in", random_docs(rng, 20)), make_run("out", random_docs(rng, 20, 0.1))
    p1 = permutation_gap_test(a, b, "T", n_perms=3500, seed=9).p_value
    p2 = permutation_gap_test(a, b, "T", n_perms=3500, seed=9).p_value
    p3 = permutation_gap_test(a, b, "T", n_perms=3500, seed=9, workers=4).p_value
    assert p1 == p2 == p3


def test_zero_typed_support_skips_test():
    rng = np.random.default_rng(6)
    a = make_run("in", random_docs(rng, 5))
    assert tuple(permutation_gap_test(a, a, "Missing", n_perms=100)) == (None, False)


def test_mismatched_documents():
    rng = np.random.default_rng(7)
    a, b = make_run("in", random_docs(rng, 5)), make_run("out", random_docs(rng, 6))
    with pytest.raises(InvariantError):
        permutation_gap_test(a, b, "T", n_perms=10)


def test_unpaired_identical_sets_are_not_significant():
    rng = np.random.default_rng(8)
    docs = random_docs(rng, 10)
    a, b = make_run("m", docs, "x"), make_run("m", docs, "y")
    # observed statistic is 0; reassignments fall on both sides of it
    p, sig = unpaired_permutation_gap_test(a, b, "T", n_perms=2000)
    assert p > 0.3 and not sig


def test_unpaired_detects_typed_shift():
    rng = np.random.default_rng(9)
    a = make_run("m", random_docs(rng, 15), "x")
    b = make_run("m", random_docs(rng, 15, typed_drop=0.5), "y")
    assert unpaired_permutation_gap_test(a, b, "T", n_perms=2000, seed=2).significant


def test_unpaired_calibration_is_roughly_nominal():
    hits = 0
    for s in range(200):
        rng = np.random.default_rng(1000 + s)
        a = make_run("m", random_docs(rng, 12), "x")
        b = make_run("m", random_docs(rng, 12), "y")
        hits += unpaired_permutation_gap_test(a, b, "T", n_perms=500, seed=s).significant
    assert 0.03 <= hits / 200 <= 0.16


def test_gap_report_of_run_against_itself():
    rng = np.random.default_rng(10)
    run = make_run("a", random_docs(rng, 6))
    (rep,) = build_gap_report(run, [run], ["T"], GapConfig(n_perms=200))
    assert rep.agg == 0 and rep.per_type["T"].tgg == 0
    assert not rep.per_type["T"].significant


def test_recorded_runs_give_gaps_without_p_values():
    reps = recorded_gap_reports("appendix-table4-gaps")
    assert reps and all(g.p_value is None for r in reps for g in r.per_type.values())


def test_orientation_checks():
    runs = recorded_runs("table2-results")
    on, onto_gum = runs["OntoNotes"]["LingMess_ON"], runs["OntoGUM"]["LingMess_ON"]
    with pytest.raises(InvariantError):
        gap_report(on, onto_gum, [], GapConfig())
    with pytest.raises(InvariantError):
        gap_report(on, runs["OntoNotes"]["LingMess_PC"], [], GapConfig(orientation=BODY))
    rep = gap_report(on, onto_gum, ["Nested"], GapConfig(orientation=BODY))
    assert rep.in_test_set == "OntoNotes" and rep.test_set == "OntoGUM"
    # LingMess_ON B-cubed: 79.5 on OntoNotes, 65.7 on OntoGUM
    assert rep.agg == pytest.approx(13.8)


def test_gap_report_invariants_and_round_trip():
    rep = GapReport("t", "a", "b", 1.5, {"T": TypeGap(3.0, 0.05, True)}, alpha=0.1)
    assert GapReport.from_dict(rep.to_dict()) == rep
    assert [r["scope"] for r in rep.rows()] == [ALL, "T"]
    with pytest.raises(InvariantError):
        GapReport("t", "a", "b", 1.5, {"T": TypeGap(3.0, 0.5, True)})
    with pytest.raises(InvariantError):
        GapReport("t", "a", "b", -1.0, {})


@pytest.mark.parametrize(
    "kwargs",
    [{"orientation": "sideways"}, {"metric": "blanc"}, {"alpha": 1.5}, {"n_perms": 0}],
)
def test_gap_config_validation(kwargs):
    with pytest.raises(ConfigError):
        GapConfig(**kwargs)
