from fractions import Fraction

import pytest

from parkbeam import tags
from parkbeam.tags import TagTable, clean_tags, cluster_tag_profile, relative_importance, tag_probability


def table(counts):
    return TagTable.from_counts(counts)


APPENDIX_FIXTURE = table({("park1", "a"): 3, ("park1", "b"): 1, ("park2", "a"): 1, ("park2", "b"): 3})


class TestProbability:
    def test_single_tag(self):
        probs = tag_probability(table({("z", "only"): 7}))
        assert probs["only"] == 1

    def test_symmetric_pair(self):
        probs = tag_probability(table({("z1", "a"): 4, ("z1", "b"): 4}))
        assert probs["a"] == probs["b"] == Fraction(1, 2)

    def test_appendix_fixture(self):
        probs = tag_probability(APPENDIX_FIXTURE)
        assert probs["a"] == Fraction(1, 2)
        assert sum(probs.values()) == 1  # exact, rational arithmetic

    def test_empty_table_rejected(self):
        with pytest.raises(ValueError):
            tag_probability(table({}))


class TestExpectedCount:
    def test_fixture_value(self):
        assert tags.expected_count(Fraction(1, 2), 4) == 2

    def test_full_probability(self):
        assert tags.expected_count(Fraction(1), 9) == 9

    def test_zero_total(self):
        assert tags.expected_count(Fraction(1, 3), 0) == 0


class TestRelativeImportance:
    def test_uniform_tag_is_one(self):
        t = table({("z1", "a"): 2, ("z1", "b"): 6, ("z2", "a"): 1, ("z2", "b"): 3})
        r = relative_importance(t)
        assert r[("z1", "a")] == 1
        assert r[("z2", "b")] == 1

    def test_appendix_fixture_value(self):
        r = relative_importance(APPENDIX_FIXTURE)
        assert r[("park1", "a")] == Fraction(3, 2)
        assert float(r[("park1", "a")]) == 1.5

    def test_per_zone_weighted_identity(self):
        t = table(
            {
                ("z1", "a"): 5,
                ("z1", "b"): 2,
                ("z1", "c"): 9,
                ("z2", "a"): 1,
                ("z2", "c"): 4,
                ("z3", "b"): 7,
            }
        )
        probs = tag_probability(t)
        r = relative_importance(t)
        for zone in t.zones():
            total = sum(probs[tag] * r[(z, tag)] for (z, tag) in r if z == zone)
            assert total == 1  # exact with fractions
            assert abs(float(total) - 1.0) < 1e-9


class TestCleanTags:
    def test_stopword_only_table_empties(self):
        t = table({("z1", "the"): 5, ("z2", "le"): 3})
        cleaned = clean_tags(t, stopwords={"the", "le"})
        assert cleaned.counts == {}

    def test_zone_name_tag_removed_by_single_zone_rule(self):
        t = table(
            {
                ("z1", "tree"): 10,
                ("z1", "myparkname"): 8,
                ("z2", "tree"): 10,
                ("z3", "tree"): 11,
            }
        )
        cleaned = clean_tags(t, stopwords=set())
        assert all(tag != "myparkname" for _, tag in cleaned.counts)
        assert ("z1", "tree") in cleaned.counts

    def test_two_zone_tag_survives(self):
        # Like the landmark tag present above expectation in exactly two zones.
        t = table(
            {
                ("z1", "tree"): 10,
                ("z1", "tower"): 9,
                ("z2", "tree"): 10,
                ("z2", "tower"): 9,
                ("z3", "tree"): 30,
                ("z4", "tree"): 30,
            }
        )
        r = relative_importance(t)
        above = [z for z in ("z1", "z2", "z3", "z4") if r.get((z, "tower"), 0) > 1]
        assert len(above) == 2
        cleaned = clean_tags(t, stopwords=set())
        assert ("z1", "tower") in cleaned.counts
        assert ("z2", "tower") in cleaned.counts

    def test_fixpoint_is_idempotent(self):
        t = table(
            {
                ("z1", "tree"): 10,
                ("z1", "unique1"): 9,
                ("z2", "tree"): 10,
                ("z2", "unique2"): 4,
                ("z3", "tree"): 12,
            }
        )
        once = clean_tags(t, stopwords=set())
        twice = clean_tags(once, stopwords=set())
        assert once.counts == twice.counts

    def test_irrelevant_list_removed(self):
        t = table({("z1", "paris"): 5, ("z1", "tree"): 5, ("z2", "tree"): 6})
        cleaned = clean_tags(t, stopwords=set(), irrelevant={"paris"})
        assert all(tag != "paris" for _, tag in cleaned.counts)


class TestClusterProfiles:
    def test_single_zone_cluster_matches_zone_importance(self):
        t = table({("z1", "a"): 6, ("z1", "b"): 2, ("z2", "a"): 2, ("z2", "b"): 6})
        labels = {"z1": 0, "z2": 1}
        profiles = cluster_tag_profile(t, labels)
        r = relative_importance(t)
        expected = [(tag, float(r[("z1", tag)])) for tag in ("a",) if r[("z1", tag)] > 1]
        assert profiles[0] == expected

    def test_planted_vocabulary_ranks_top(self):
        counts = {}
        for z in ("z1", "z2"):
            counts[(z, "special")] = 30
            counts[(z, "common")] = 10
        for z in ("z3", "z4"):
            counts[(z, "common")] = 40
        profiles = cluster_tag_profile(table(counts), {"z1": 0, "z2": 0, "z3": 1, "z4": 1})
        assert profiles[0][0][0] == "special"

    def test_uniform_tags_give_empty_profiles(self):
        t = table({("z1", "a"): 5, ("z2", "a"): 5})
        profiles = cluster_tag_profile(t, {"z1": 0, "z2": 1})
        assert profiles[0] == [] and profiles[1] == []

    def test_missing_labels_rejected(self):
        t = table({("z1", "a"): 5, ("z2", "a"): 5})
        with pytest.raises(ValueError):
            cluster_tag_profile(t, {"z1": 0})


class TestStopwordLoading:
    def test_packaged_lists(self):
        from importlib import resources

        pkg = resources.files("parkbeam") / "data"
        words = tags.load_stopwords([str(pkg / "stopwords_en.txt"), str(pkg / "stopwords_fr.txt")])
        assert "the" in words and "le" in words
        assert not any(w.startswith("#") for w in words)
