#include <random>
#include <set>

#include <gtest/gtest.h>

#include "calltopics/analytics.hpp"
#include "calltopics/error.hpp"
#include "calltopics/text.hpp"
#include "support.hpp"

using namespace calltopics;

namespace {

const testsupport::SyntheticRun& synthetic() {
    static const auto run = testsupport::run_synthetic(7);
    return run;
}

std::vector<Mention> synthetic_mentions() {
    const auto& s = synthetic();
    return join_mentions(s.bundle.corpus, s.run.enrichments);
}

TopicSet synthetic_products() {
    const auto& s = synthetic();
    return classify_product_topics(s.tree, s.bundle.products, nullptr);
}

std::vector<std::string> names(const std::vector<TrendResult>& v) {
    std::vector<std::string> out;
    for (const auto& t : v) out.push_back(t.name);
    return out;
}

const TrendResult* find_trend(const TrendReport& r, const std::string& name) {
    for (const auto* list : {&r.trending_up, &r.trending_down, &r.no_trend})
        for (const auto& t : *list)
            if (t.name == name) return &t;
    return nullptr;
}

}  // namespace

TEST(Jaccard, RandomSetProperties) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10000; ++trial) {
        std::set<int> a, b;
        const auto na = rng() % 12, nb = rng() % 12;
        for (std::size_t i = 0; i < na; ++i) a.insert(static_cast<int>(rng() % 20));
        for (std::size_t i = 0; i < nb; ++i) b.insert(static_cast<int>(rng() % 20));
        const double ab = jaccard(a, b);
        ASSERT_DOUBLE_EQ(ab, jaccard(b, a));
        ASSERT_GE(ab, 0.0);
        ASSERT_LE(ab, 1.0);
        ASSERT_DOUBLE_EQ(jaccard(a, a), 1.0);
        std::set<int> shifted;
        for (int x : a) shifted.insert(x + 100);
        if (!a.empty()) {
            ASSERT_DOUBLE_EQ(jaccard(a, shifted), 0.0);
        }
        std::size_t common = 0;
        for (int x : a) common += b.count(x);
        const auto uni = a.size() + b.size() - common;
        ASSERT_DOUBLE_EQ(ab, uni == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(uni));
    }
}

TEST(Jaccard, PlantedOverlapMatrix) {
    auto f = testsupport::planted_overlap_fixture();
    const std::vector<std::string> companies = {"AAA", "BBB", "CCC"};
    auto m = jaccard_matrix(f.mentions, f.tree, companies, 4);
    EXPECT_EQ(m.companies, companies);
    const std::vector<std::vector<double>> want = {
        {1.0, 1.0 / 3.0, 1.0 / 7.0}, {1.0 / 3.0, 1.0, 0.0}, {1.0 / 7.0, 0.0, 1.0}};
    EXPECT_EQ(m.values, want);
    EXPECT_EQ(to_csv(m), "company,AAA,BBB,CCC\nAAA,1,0.3333333333,0.1428571429\nBBB,0.3333333333,1,0\n"
                         "CCC,0.1428571429,0,1\n");
    EXPECT_THROW(jaccard_matrix(f.mentions, f.tree, std::vector<std::string>{"AAA"}, 4), ParameterError);
}

TEST(Jaccard, TopTopicsCommonAndUnique) {
    auto f = testsupport::planted_overlap_fixture();
    auto top = top_topics(f.mentions, f.tree, "CCC", 4);
    std::vector<std::string> top_names;
    for (const auto& id : top) top_names.push_back(f.tree.at(id).name);
    EXPECT_EQ(top_names, (std::vector<std::string>{"T7", "T8", "T9", "T1"}));
    EXPECT_EQ(common_topics(f.mentions, f.tree, "AAA", "BBB", 4, false), (std::vector<std::string>{"T3", "T4"}));
    EXPECT_EQ(unique_topics(f.mentions, f.tree, "AAA", "BBB", 4, false), (std::vector<std::string>{"T1", "T2"}));
    EXPECT_EQ(unique_topics(f.mentions, f.tree, "BBB", "CCC", 4, false),
              (std::vector<std::string>{"T3", "T4", "T5", "T6"}));
    TopicSet products = {f.tree.find_by_name_or_alias("T1")->topic_id};
    auto no_t1 = top_topics(f.mentions, f.tree, "AAA", 4, products);
    EXPECT_EQ(f.tree.at(no_t1.back()).name, "T10");
}

TEST(Mentions, JoinModes) {
    DocumentMetadata meta{"TSLA", "EV", parse_date("2024-01-24"), FiscalQuarter{2023, 4}};
    Corpus corpus;
    corpus.add(make_document("one\n\ntwo", meta));
    const auto a = topic_id_for("a");
    std::vector<Enrichment> es = {{"TSLA-2023Q4-p0", "TSLA-2023Q4", meta.call_date, a, "x"},
                                  {"TSLA-2023Q4-p0", "TSLA-2023Q4", meta.call_date, a, "y"},
                                  {"TSLA-2023Q4-p1", "TSLA-2023Q4", meta.call_date, a, "z"}};
    auto per_excerpt = join_mentions(corpus, es);
    ASSERT_EQ(per_excerpt.size(), 3u);
    EXPECT_EQ(per_excerpt[0].ticker, "TSLA");
    EXPECT_EQ(per_excerpt[0].quarter, (FiscalQuarter{2023, 4}));
    EXPECT_EQ(join_mentions(corpus, es, CountMode::per_paragraph).size(), 2u);
    es.push_back({"X-p0", "GHOST-2023Q4", meta.call_date, a, "?"});
    EXPECT_THROW(join_mentions(corpus, es), LoadError);
}

TEST(Mentions, SeriesZeroFilledWithOptionalRollup) {
    Ontology tree;
    const auto t0 = parse_timestamp("2024-01-01T00:00:00Z");
    const auto parent = tree.insert_node("Operations", std::nullopt, t0).topic_id;
    const auto child = tree.insert_node("Supply Chain", parent, t0).topic_id;
    std::vector<Mention> ms = {{parent, "GM", {2023, 1}, parse_date("2023-04-20"), "p"},
                               {child, "GM", {2023, 3}, parse_date("2023-10-20"), "p"},
                               {child, "GM", {2023, 3}, parse_date("2023-10-20"), "q"},
                               {child, "TSLA", {2023, 3}, parse_date("2023-10-20"), "r"}};
    QuarterRange range{{2023, 1}, {2023, 4}};
    EXPECT_EQ(range.size(), 4u);
    auto flat = mention_series(ms, tree, parent, "GM", range);
    EXPECT_EQ(flat.counts(), (std::vector<double>{1, 0, 0, 0}));
    auto rolled = mention_series(ms, tree, parent, "GM", range, true);
    EXPECT_EQ(rolled.counts(), (std::vector<double>{1, 0, 2, 0}));
    EXPECT_THROW(mention_series(ms, tree, topic_id_for("nope"), "GM", range), NotFoundError);
    EXPECT_THROW(mention_series(ms, tree, parent, "GM", QuarterRange{{2023, 4}, {2023, 1}}), ParameterError);
}

TEST(Trends, ClassifyRule) {
    EXPECT_EQ(classify_trend(-1.0, 0.001, 0.05), TrendDirection::down);
    EXPECT_EQ(classify_trend(0.8, 0.01, 0.05), TrendDirection::up);
    EXPECT_EQ(classify_trend(0.8, 0.06, 0.05), TrendDirection::none);
    EXPECT_EQ(classify_trend(0.0, 0.0, 0.05), TrendDirection::none);
    EXPECT_EQ(to_string(TrendDirection::down), "down");
}

TEST(Trends, SyntheticSupplyChainDownAndProductSkipped) {
    const auto& s = synthetic();
    auto ms = synthetic_mentions();
    auto report = detect_trends(ms, s.bundle.corpus, s.tree, "TSLA", {}, synthetic_products());
    ASSERT_FALSE(report.trending_down.empty());
    const auto& sc = report.trending_down.front();
    EXPECT_EQ(sc.name, "Supply Chain");
    EXPECT_DOUBLE_EQ(sc.tau, -1.0);
    EXPECT_NEAR(sc.p_value, 8.303070332644999e-05, 1e-15);
    EXPECT_EQ(sc.series.counts(), (std::vector<double>{9, 8, 7, 6, 5, 4, 3, 2, 1, 0}));
    EXPECT_EQ(sc.smoothed.size(), 10u);
    EXPECT_EQ(find_trend(report, "Cybertruck"), nullptr);
    bool cyber_skipped = false;
    for (const auto& sk : report.skipped) cyber_skipped = cyber_skipped || sk.name == "Cybertruck";
    EXPECT_TRUE(cyber_skipped);

    // Without the product flag the planted rise would have been reported.
    auto unflagged = detect_trends(ms, s.bundle.corpus, s.tree, "TSLA", {}, {});
    const auto* cyber = find_trend(unflagged, "Cybertruck");
    ASSERT_NE(cyber, nullptr);
    EXPECT_EQ(cyber->direction, TrendDirection::up);
}

TEST(Trends, SyntheticGenerativeAiUp) {
    const auto& s = synthetic();
    auto ms = synthetic_mentions();
    auto report = detect_trends(ms, s.bundle.corpus, s.tree, "NVDA", {}, synthetic_products());
    ASSERT_FALSE(report.trending_up.empty());
    EXPECT_EQ(report.trending_up.front().name, "Generative AI");
    EXPECT_DOUBLE_EQ(report.trending_up.front().tau, 1.0);
    const auto* dc = find_trend(report, "Data Center");
    ASSERT_NE(dc, nullptr);
    EXPECT_EQ(dc->direction, TrendDirection::none);
}

TEST(Trends, SortedByAbsTauThenName) {
    const auto& s = synthetic();
    auto ms = synthetic_mentions();
    auto report = detect_trends(ms, s.bundle.corpus, s.tree, "TSLA", {}, {});
    for (const auto* list : {&report.trending_up, &report.trending_down, &report.no_trend})
        for (std::size_t i = 1; i < list->size(); ++i) {
            const auto& a = (*list)[i - 1];
            const auto& b = (*list)[i];
            EXPECT_TRUE(std::abs(a.tau) > std::abs(b.tau) ||
                        (std::abs(a.tau) == std::abs(b.tau) && text::normalize_label(a.name) <= text::normalize_label(b.name)));
        }
}

TEST(Trends, TooFewQuartersSkipped) {
    const auto& s = synthetic();
    auto ms = synthetic_mentions();
    TrendOptions opts;
    opts.min_quarters = 11;
    auto report = detect_trends(ms, s.bundle.corpus, s.tree, "TSLA", {}, {}, opts);
    EXPECT_TRUE(report.trending_down.empty());
    EXPECT_TRUE(report.trending_up.empty());
    EXPECT_TRUE(report.no_trend.empty());
    EXPECT_FALSE(report.skipped.empty());
}

TEST(Trends, ExplicitTopicList) {
    const auto& s = synthetic();
    auto ms = synthetic_mentions();
    std::vector<TopicId> one = {s.tree.find_by_name_or_alias("Supply Chain")->topic_id};
    auto report = detect_trends(ms, s.bundle.corpus, s.tree, "TSLA", one, {});
    EXPECT_EQ(names(report.trending_down), std::vector<std::string>{"Supply Chain"});
    EXPECT_TRUE(report.trending_up.empty());
    EXPECT_TRUE(report.no_trend.empty());
}

TEST(Emerging, SyntheticRecoversExactlyLowCostVehicles) {
    const auto& s = synthetic();
    auto ms = synthetic_mentions();
    auto got = emerging_topics(ms, s.tree, parse_date("2023-01-01"), 5, synthetic_products());
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].name, "Low-cost vehicles");
    EXPECT_EQ(got[0].early_count, 0u);
    EXPECT_EQ(got[0].late_count, 7u);
    EXPECT_TRUE(emerging_topics(ms, s.tree, parse_date("2023-01-01"), 8, synthetic_products()).empty());
}

TEST(Emerging, LateEndBoundsTheWindow) {
    Ontology tree;
    const auto t0 = parse_timestamp("2024-01-01T00:00:00Z");
    const auto a = tree.insert_node("A", std::nullopt, t0).topic_id;
    std::vector<Mention> ms;
    for (int k = 0; k < 3; ++k) ms.push_back({a, "X", {2023, 1}, parse_date("2023-04-20"), "p"});
    for (int k = 0; k < 3; ++k) ms.push_back({a, "X", {2023, 3}, parse_date("2023-10-20"), "q"});
    EXPECT_EQ(emerging_topics(ms, tree, parse_date("2023-01-01"), 5).size(), 1u);
    EXPECT_TRUE(emerging_topics(ms, tree, parse_date("2023-01-01"), 5, {}, parse_date("2023-06-30")).empty());
    EXPECT_TRUE(emerging_topics(ms, tree, parse_date("2023-06-01"), 1).empty());
}

TEST(Timeline, CountsNewTopicsPerDayExcludingSeeds) {
    const auto& s = synthetic();
    auto t = discovery_timeline(s.tree);
    std::size_t total = 0;
    for (std::size_t i = 0; i < t.points.size(); ++i) {
        total += t.points[i].new_topics;
        if (i > 0) {
            EXPECT_LT(t.points[i - 1].date, t.points[i].date);
        }
    }
    EXPECT_EQ(total, s.run.report.topics_created);
    EXPECT_TRUE(t.smoothed.empty());
    auto smoothed = discovery_timeline(s.tree, LoessParams{1.0, 1});
    EXPECT_EQ(smoothed.smoothed.size(), t.points.size());
}

TEST(Coherence, OverlapTreeSeparatesTrueFromRandom) {
    auto tree = testsupport::lexical_overlap_tree();
    HashedBagEmbedder embedder;
    auto r = coherence_eval(tree, embedder, 5, 7);
    EXPECT_EQ(r.rows.size(), 5u);
    EXPECT_GT(r.overall_true_avg - r.overall_random_avg, 0.1);
    for (const auto& row : r.rows) {
        EXPECT_NE(row.parent_name, row.random_parent_name);
        EXPECT_EQ(row.sampled_children.size(), 3u);
    }
    auto again = coherence_eval(tree, embedder, 5, 7);
    EXPECT_EQ(to_json(again), to_json(r));
    EXPECT_TRUE(testsupport::schema_errors(testsupport::load_schema("coherence"), to_json(r)).empty());
}

TEST(Coherence, InsufficientParents) {
    auto tree = testsupport::lexical_overlap_tree();
    HashedBagEmbedder embedder;
    EXPECT_THROW(coherence_eval(tree, embedder, 7, 1), InsufficientDataError);
    EXPECT_THROW(coherence_eval(tree, embedder, 0, 1), ParameterError);
}

TEST(Products, LabelsAndClassifier) {
    const auto& s = synthetic();
    auto labelled = classify_product_topics(s.tree, std::vector<std::string>{"cybertruck", "Not A Topic"}, nullptr);
    EXPECT_EQ(labelled.size(), 1u);
    MockProvider mock(s.bundle.script);
    std::vector<std::string> warnings;
    auto classified = classify_product_topics(s.tree, std::vector<std::string>{}, &mock, &warnings);
    EXPECT_EQ(classified, labelled);
    EXPECT_TRUE(warnings.empty());

    MockProvider unscripted(MockScript{});
    auto fallback = classify_product_topics(s.tree, std::vector<std::string>{"Cybertruck"}, &unscripted, &warnings);
    EXPECT_EQ(fallback, labelled);
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(Csv, FieldQuoting) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
}
