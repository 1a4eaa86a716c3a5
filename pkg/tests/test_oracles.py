import pytest

from conftest import letters
from corefgap.ingest import EntityPartition
from corefgap.metrics import b_cubed, ceaf_e, ceaf_e_similarity, muc
from corefgap.oracles import (
    RandomInstanceSpec,
    exact_fraction_b_cubed,
    exact_permutation_p,
    naive_b_cubed,
    naive_ceaf_e,
    naive_ceaf_matching,
    naive_muc,
    random_instance,
)


def test_naive_b_cubed_hand_case():
    r, p, f = naive_b_cubed(letters("ab", "cd"), letters("abcd"))
    assert (r, p) == (1.0, 0.5)
    assert f == pytest.approx(2 / 3)


def test_naive_identity():
    g = letters("abc", "de")
    assert naive_b_cubed(g, g) == (1.0, 1.0, 1.0)
    assert naive_muc(g, g) == (1.0, 1.0, 1.0)
    assert naive_ceaf_e(g, g)[2] == pytest.approx(1.0)


def test_ceaf_matching_edges():
    assert naive_ceaf_matching(letters("ab"), letters("ac")) == pytest.approx(0.5)
    assert naive_ceaf_matching(EntityPartition(), letters("ab")) == 0.0
    big = letters(*[chr(97 + 2 * i) + chr(98 + 2 * i) for i in range(9)])
    with pytest.raises(ValueError):
        naive_ceaf_matching(big, big)


def test_exact_permutation_identical_runs():
    docs = [1.0, 2.0, 3.0]
    assert exact_permutation_p(docs, docs, lambda a, b: sum(a) - sum(b)) == 1.0


def test_exact_permutation_one_document_signed():
    # two assignments: observed (1 - 0) and swapped (0 - 1); one of two reaches 1
    assert exact_permutation_p([1.0], [0.0], lambda a, b: sum(a) - sum(b)) == 0.5


def test_exact_permutation_one_document_absolute_gap():
    # a swap-symmetric statistic takes the same value under both assignments
    assert exact_permutation_p([1.0], [0.0], lambda a, b: abs(sum(a) - sum(b))) == 1.0


def test_exact_permutation_limit():
    with pytest.raises(ValueError):
        exact_permutation_p([0.0] * 13, [0.0] * 13, lambda a, b: 0.0)
    with pytest.raises(ValueError):
        exact_permutation_p([0.0] * 2, [0.0] * 3, lambda a, b: 0.0)


def test_random_instances_are_valid_partitions():
    for seed in range(100):
        for overlap in (False, True):
            g, p = random_instance(RandomInstanceSpec(12, 4, seed, overlap))
            for part in (g, p):
                assert all(len(c) >= 2 for c in part.clusters)
                seen = [m for c in part.clusters for m in c]
                assert len(seen) == len(set(seen))


def test_random_instance_spec_bounds():
    with pytest.raises(ValueError):
        RandomInstanceSpec(n_mentions=13)
    with pytest.raises(ValueError):
        RandomInstanceSpec(max_clusters=0)


def test_exact_fractions_agree_with_floats():
    for seed in range(30):
        g, p = random_instance(RandomInstanceSpec(10, 3, seed))
        r, pr = exact_fraction_b_cubed(g, p)
        t = b_cubed(g, p)
        assert (r is None) == (t.recall is None)
        if r is not None:
            assert float(r) == pytest.approx(t.recall, abs=1e-12)
        if pr is not None:
            assert float(pr) == pytest.approx(t.precision, abs=1e-12)


@pytest.mark.parametrize("seed", range(50))
def test_metrics_match_oracles(seed):
    g, p = random_instance(RandomInstanceSpec(10, 4, seed, overlap_allowed=seed % 2 == 1))
    for fast, slow in ((b_cubed, naive_b_cubed), (muc, naive_muc), (ceaf_e, naive_ceaf_e)):
        t = fast(g, p)
        expected = slow(g, p)
        for got, want in zip((t.recall, t.precision, t.f1), expected):
            assert (got is None) == (want is None)
            if got is not None:
                assert abs(got - want) <= 1e-12
    assert ceaf_e_similarity(g, p) == pytest.approx(naive_ceaf_matching(g, p), abs=1e-12)
