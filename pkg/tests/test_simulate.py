"""Tests for the seeded simulator and its edit-distance matcher."""

import random

import pytest

from oracle import binomial_bounds, dp_levenshtein

from er_evalkit.catalog import Catalog, Title, parse_catalog
from er_evalkit.clickstream import normalize_query
from er_evalkit.errors import ConfigError
from er_evalkit.metrics import ConfidenceBin, RankedEntity, RunResult, evaluate_run
from er_evalkit.simulate import (
    SimConfig,
    gen_catalog,
    gen_clicklog,
    gen_queries,
    levenshtein,
    run_mock_er,
    similarity,
    write_catalog_tsv,
    write_truth_qrels,
)


class TestSimConfig:
    def test_defaults_accepted(self):
        config = SimConfig(seed=42)
        assert config.n_titles == 1000
        assert config.n_queries == 500
        assert config.bin_thresholds == (0.8, 0.5)

    @pytest.mark.parametrize("kwargs", [
        {"n_titles": 0},
        {"n_queries": 0},
        {"n_titles": 5, "n_queries": 6},
        {"typo_rate": -0.1},
        {"typo_rate": 1.5},
        {"score_noise_sigma": -1.0},
        {"bin_thresholds": (0.5, 0.8)},
        {"bin_thresholds": (0.5, 0.5)},
        {"bin_thresholds": (0.0, 0.0)},
        {"bin_thresholds": (1.1, 0.5)},
        {"bin_thresholds": (0.8, -0.1)},
        {"retrieve_m": 0},
        {"click_position_decay": 0.0},
        {"click_position_decay": 1.0001},
        {"n_replays": 0},
    ])
    def test_invalid_config_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            SimConfig(seed=1, **kwargs)

    def test_boundary_decay_one_accepted(self):
        assert SimConfig(seed=1, click_position_decay=1.0)


class TestLevenshtein:
    def test_known_distances(self):
        assert levenshtein("kitten", "sitting") == 3
        assert levenshtein("abc", "abc") == 0
        assert levenshtein("", "abc") == 3
        assert levenshtein("abc", "") == 3
        assert levenshtein("", "") == 0

    def test_matches_dp_oracle_on_random_strings(self):
        rng = random.Random(99)
        alphabet = "abcd"
        for _ in range(300):
            a = "".join(rng.choice(alphabet)
                        for _ in range(rng.randint(0, 12)))
            b = "".join(rng.choice(alphabet)
                        for _ in range(rng.randint(0, 12)))
            assert levenshtein(a, b) == dp_levenshtein(a, b)

    def test_long_pattern_exceeding_word_size(self):
        a = "x" * 100
        b = "x" * 90 + "y" * 10
        assert levenshtein(a, b) == dp_levenshtein(a, b) == 10

    def test_similarity_examples(self):
        assert similarity("bridgerton", "bridgetown") == 0.8
        assert similarity("same", "same") == 1.0
        assert similarity("", "") == 1.0
        assert similarity("ab", "") == 0.0

    def test_similarity_bounds(self):
        rng = random.Random(5)
        for _ in range(100):
            a = "".join(rng.choice("ab") for _ in range(rng.randint(0, 8)))
            b = "".join(rng.choice("ab") for _ in range(rng.randint(0, 8)))
            assert 0.0 <= similarity(a, b) <= 1.0


class TestGenCatalog:
    def test_deterministic(self):
        config = SimConfig(seed=7, n_titles=50, n_queries=10)
        assert gen_catalog(config).titles == gen_catalog(config).titles

    def test_different_seeds_differ(self):
        a = gen_catalog(SimConfig(seed=1, n_titles=20, n_queries=5))
        b = gen_catalog(SimConfig(seed=2, n_titles=20, n_queries=5))
        assert a.titles != b.titles

    def test_ids_and_names_unique(self):
        catalog = gen_catalog(SimConfig(seed=3, n_titles=200, n_queries=10))
        ids = [t.entity_id for t in catalog.titles]
        names = [normalize_query(t.name) for t in catalog.titles]
        assert len(set(ids)) == len(ids) == 200
        assert len(set(names)) == len(names)

    def test_field_ranges(self):
        catalog = gen_catalog(SimConfig(seed=4, n_titles=100, n_queries=10))
        for title in catalog.titles:
            assert 1950 <= title.release_year <= 2024
            assert title.rating_count >= 1
            assert 1.0 <= title.rating <= 10.0

    def test_ranks_are_a_permutation_ordered_by_popularity(self):
        catalog = gen_catalog(SimConfig(seed=5, n_titles=100, n_queries=10))
        assert sorted(t.rank for t in catalog.titles) == list(range(1, 101))
        by_rank = sorted(catalog.titles, key=lambda t: t.rank)
        keys = [(-t.rating_count, t.entity_id) for t in by_rank]
        assert keys == sorted(keys)

    def test_single_title_gets_rank_one(self):
        catalog = gen_catalog(SimConfig(seed=6, n_titles=1, n_queries=1))
        assert catalog.titles[0].rank == 1


class TestGenQueries:
    def test_zero_typo_rate_yields_exact_normalized_names(self):
        config = SimConfig(seed=8, n_titles=60, n_queries=25, typo_rate=0.0)
        catalog = gen_catalog(config)
        for query, truth_id in gen_queries(catalog, config):
            assert query == normalize_query(catalog.lookup(truth_id).name)

    def test_truth_ids_distinct(self):
        config = SimConfig(seed=8, n_titles=60, n_queries=25)
        queries = gen_queries(gen_catalog(config), config)
        truths = [truth for _, truth in queries]
        assert len(set(truths)) == len(truths) == 25

    def test_queries_distinct_and_nonempty_even_at_full_typo_rate(self):
        config = SimConfig(seed=9, n_titles=40, n_queries=40, typo_rate=1.0)
        queries = gen_queries(gen_catalog(config), config)
        texts = [q for q, _ in queries]
        assert all(texts)
        assert len(set(texts)) == len(texts) == 40

    def test_deterministic(self):
        config = SimConfig(seed=10, n_titles=30, n_queries=15)
        catalog = gen_catalog(config)
        assert gen_queries(catalog, config) == gen_queries(catalog, config)

    def test_typos_change_some_queries(self):
        config = SimConfig(seed=11, n_titles=80, n_queries=40, typo_rate=0.2)
        catalog = gen_catalog(config)
        names = {normalize_query(t.name) for t in catalog.titles}
        queries = gen_queries(catalog, config)
        assert any(q not in names for q, _ in queries)


class TestRunMockEr:
    def test_zero_noise_puts_truth_first_in_high_bin(self):
        config = SimConfig(seed=12, n_titles=50, n_queries=20,
                           typo_rate=0.0, score_noise_sigma=0.0)
        catalog = gen_catalog(config)
        queries = gen_queries(catalog, config)
        for (query, truth_id), result in zip(queries,
                                             run_mock_er(catalog, queries,
                                                         config)):
            assert result.query == query
            top = result.ranked[0]
            assert top.entity_id == truth_id
            assert top.score == 1.0
            assert top.bin is ConfidenceBin.HIGH

    def test_result_length_capped_at_retrieve_m(self):
        config = SimConfig(seed=13, n_titles=50, n_queries=5, retrieve_m=7)
        catalog = gen_catalog(config)
        queries = gen_queries(catalog, config)
        for result in run_mock_er(catalog, queries, config):
            assert len(result.ranked) == 7

    def test_small_catalog_returns_everything(self):
        config = SimConfig(seed=13, n_titles=3, n_queries=2, retrieve_m=10)
        catalog = gen_catalog(config)
        queries = gen_queries(catalog, config)
        for result in run_mock_er(catalog, queries, config):
            assert len(result.ranked) == 3

    def test_score_ties_break_by_entity_id(self):
        catalog = Catalog(titles=[Title(entity_id="tt2", name="Same Words"),
                                  Title(entity_id="tt1", name="Same Words")])
        config = SimConfig(seed=14, n_titles=2, n_queries=1,
                           typo_rate=0.0, score_noise_sigma=0.0)
        results = run_mock_er(catalog, [("same words", "tt1")], config)
        assert [r.entity_id for r in results[0].ranked] == ["tt1", "tt2"]

    def test_degenerate_thresholds_make_bins_vacuous_for_recall(self):
        """With t_high near zero every retrieved entity bins high, so
        high-conditioned recall collapses to plain recall."""
        config = SimConfig(seed=15, n_titles=60, n_queries=30,
                           typo_rate=0.1, score_noise_sigma=0.0,
                           bin_thresholds=(1e-9, 0.0))
        catalog = gen_catalog(config)
        queries = gen_queries(catalog, config)
        run = run_mock_er(catalog, queries, config)
        qrels = {query: {truth} for query, truth in queries}
        report = evaluate_run(qrels, run, k=5)
        assert (report.aggregates["recall@5@high"]
                == report.aggregates["recall@5"])

    def test_noise_draws_do_not_perturb_other_streams(self):
        base = dict(seed=16, n_titles=30, n_queries=10, typo_rate=0.0)
        noisy = SimConfig(score_noise_sigma=0.3, **base)
        clean = SimConfig(score_noise_sigma=0.0, **base)
        assert gen_catalog(noisy).titles == gen_catalog(clean).titles
        catalog = gen_catalog(clean)
        assert gen_queries(catalog, noisy) == gen_queries(catalog, clean)


def one_query_run(truth_position, list_len=5):
    """A single RunResult with the truth at a given 1-based position."""
    specs = [(f"x{i}", 0.9 - 0.1 * i) for i in range(list_len)]
    if truth_position is not None:
        specs[truth_position - 1] = ("T", 0.9 - 0.1 * (truth_position - 1))
    ranked = tuple(RankedEntity(entity_id=eid, score=score,
                                bin=ConfidenceBin.HIGH)
                   for eid, score in specs)
    return [RunResult(query="q", ranked=ranked)]


class TestGenClicklog:
    def test_replay_count(self):
        config = SimConfig(seed=20, n_titles=10, n_queries=1, n_replays=50)
        events = list(gen_clicklog(one_query_run(1), {"q": "T"}, config))
        assert len(events) == 50

    def test_decay_one_always_clicks_truth(self):
        config = SimConfig(seed=21, n_titles=10, n_queries=1,
                           click_position_decay=1.0, n_replays=100)
        events = list(gen_clicklog(one_query_run(4), {"q": "T"}, config))
        assert all(e.clicked == "T" for e in events)

    def test_truth_absent_never_clicks(self):
        config = SimConfig(seed=22, n_titles=10, n_queries=1, n_replays=100)
        events = list(gen_clicklog(one_query_run(None), {"q": "T"}, config))
        assert all(e.clicked is None for e in events)

    def test_unknown_query_never_clicks(self):
        config = SimConfig(seed=23, n_titles=10, n_queries=1, n_replays=100)
        events = list(gen_clicklog(one_query_run(1), {}, config))
        assert all(e.clicked is None for e in events)

    def test_position_two_click_rate_matches_decay(self):
        """At decay 0.5 and position 2 the click probability is 0.5; the
        empirical rate over 1000 replays must sit inside a 99% binomial
        interval."""
        config = SimConfig(seed=24, n_titles=10, n_queries=1,
                           click_position_decay=0.5, n_replays=1000)
        events = list(gen_clicklog(one_query_run(2), {"q": "T"}, config))
        rate = sum(e.clicked == "T" for e in events) / len(events)
        lo, hi = binomial_bounds(0.5, 1000)
        assert lo <= rate <= hi

    def test_impressions_mirror_the_ranking(self):
        config = SimConfig(seed=25, n_titles=10, n_queries=1, n_replays=3)
        run = one_query_run(1)
        expected = tuple(item.entity_id for item in run[0].ranked)
        for event in gen_clicklog(run, {"q": "T"}, config):
            assert event.impressions == expected

    def test_deterministic(self):
        config = SimConfig(seed=26, n_titles=10, n_queries=1, n_replays=200)
        first = list(gen_clicklog(one_query_run(3), {"q": "T"}, config))
        second = list(gen_clicklog(one_query_run(3), {"q": "T"}, config))
        assert first == second


class TestFixtureFiles:
    def test_tsv_round_trip_through_parser(self, tmp_path):
        config = SimConfig(seed=30, n_titles=40, n_queries=10)
        catalog = gen_catalog(config)
        basics, ratings, ranks = write_catalog_tsv(catalog, tmp_path)
        parsed = parse_catalog(basics, ratings, ranks, strict=True)
        assert len(parsed) == 40
        for title in catalog.titles:
            assert parsed.lookup(title.entity_id) == title

    def test_tsv_bytes_deterministic(self, tmp_path):
        config = SimConfig(seed=31, n_titles=25, n_queries=5)
        first = write_catalog_tsv(gen_catalog(config), tmp_path / "a")
        second = write_catalog_tsv(gen_catalog(config), tmp_path / "b")
        for path_a, path_b in zip(first, second):
            assert path_a.read_bytes() == path_b.read_bytes()

    def test_truth_qrels_sorted_and_loadable(self, tmp_path):
        config = SimConfig(seed=32, n_titles=30, n_queries=12, typo_rate=0.1)
        catalog = gen_catalog(config)
        queries = gen_queries(catalog, config)
        path = tmp_path / "truth_qrels.jsonl"
        assert write_truth_qrels(queries, path) == 12
        from er_evalkit.relevance import load_qrels
        relset = load_qrels(path)
        assert relset.entries == {q: {t} for q, t in queries}
        assert list(relset.entries) == sorted(relset.entries)
