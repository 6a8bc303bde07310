#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "calltopics/corpus.hpp"
#include "calltopics/ontologist.hpp"
#include "calltopics/ontology.hpp"
#include "calltopics/providers.hpp"
#include "calltopics/stats.hpp"

namespace calltopics {

using TopicSet = std::unordered_set<TopicId, TopicIdHash>;

/// One counted mention: an enrichment joined with its document's metadata.
struct Mention {
    TopicId topic_id;
    std::string ticker;
    FiscalQuarter quarter;
    Date call_date;
    std::string para_id;
};

enum class CountMode { per_excerpt, per_paragraph };

/// Joins enrichments to the corpus by doc_id. per_paragraph keeps one
/// mention per (paragraph, topic). Throws LoadError for an unknown doc_id.
std::vector<Mention> join_mentions(const Corpus& corpus, std::span<const Enrichment> enrichments,
                                   CountMode mode = CountMode::per_excerpt);

struct QuarterRange {
    FiscalQuarter first;
    FiscalQuarter last;

    std::size_t size() const { return static_cast<std::size_t>(last.ordinal() - first.ordinal() + 1); }
};

/// First and last fiscal quarter of a company's calls; nullopt if it has none.
std::optional<QuarterRange> company_quarters(const Corpus& corpus, std::string_view ticker);

struct MentionSeries {
    TopicId topic_id;
    std::string company;
    std::vector<std::pair<FiscalQuarter, std::size_t>> points;

    std::vector<double> counts() const;
};

/// Per-quarter mention counts, zero-filled over `range`. With rollup the
/// topic's descendants count too. Throws NotFoundError for an unknown topic
/// and ParameterError for a reversed range.
MentionSeries mention_series(std::span<const Mention> mentions, const Ontology& tree, const TopicId& topic,
                             std::string_view company, QuarterRange range, bool rollup = false);

enum class TrendDirection { up, down, none };
std::string_view to_string(TrendDirection d);

struct TrendResult {
    TopicId topic_id;
    std::string name;
    std::string company;
    double tau = 0.0;
    double p_value = 1.0;
    TrendDirection direction = TrendDirection::none;
    MentionSeries series;
    std::vector<double> smoothed;  // LOESS overlay; empty if the series is too short
};

struct SkippedTopic {
    TopicId topic_id;
    std::string name;
    std::string reason;
};

struct TrendOptions {
    double alpha = 0.05;
    std::size_t min_quarters = 6;
    bool rollup = false;
    double loess_span = 0.5;
    int loess_degree = 1;
};

struct TrendReport {
    std::string company;
    double alpha = 0.05;
    std::vector<TrendResult> trending_up;
    std::vector<TrendResult> trending_down;
    std::vector<TrendResult> no_trend;
    std::vector<SkippedTopic> skipped;
};

TrendDirection classify_trend(double tau, double p_value, double alpha);

/// Kendall trend test per topic. `topics` empty means every topic the company
/// mentions. Products are skipped; so are topics whose company has fewer than
/// min_quarters covered quarters. Lists are sorted by |tau| descending, then
/// normalized name.
TrendReport detect_trends(std::span<const Mention> mentions, const Corpus& corpus, const Ontology& tree,
                          std::string_view company, std::span<const TopicId> topics, const TopicSet& products,
                          const TrendOptions& options = {});

/// The company's n most mentioned non-product topics, ties by normalized name.
std::vector<TopicId> top_topics(std::span<const Mention> mentions, const Ontology& tree, std::string_view company,
                                std::size_t n, const TopicSet& products = {});

template <class Set>
double jaccard(const Set& a, const Set& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t common = 0;
    for (const auto& x : a) common += b.count(x);
    return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

struct JaccardMatrix {
    std::vector<std::string> companies;
    std::vector<std::vector<double>> values;
};

/// Pairwise Jaccard of top_topics sets; diagonal forced to 1. Throws
/// ParameterError for fewer than two companies.
JaccardMatrix jaccard_matrix(std::span<const Mention> mentions, const Ontology& tree,
                             std::span<const std::string> companies, std::size_t n, const TopicSet& products = {});

/// Labels in both companies' top-n sets, sorted by name.
std::vector<std::string> common_topics(std::span<const Mention> mentions, const Ontology& tree,
                                       std::string_view company_a, std::string_view company_b, std::size_t n,
                                       bool leaf_only, const TopicSet& products = {});

/// Labels in company_a's top-n set but not company_b's, sorted by name.
std::vector<std::string> unique_topics(std::span<const Mention> mentions, const Ontology& tree,
                                       std::string_view company_a, std::string_view company_b, std::size_t n,
                                       bool leaf_only, const TopicSet& products = {});

struct EmergingTopic {
    TopicId topic_id;
    std::string name;
    std::size_t early_count = 0;
    std::size_t late_count = 0;
};

/// Topics with no mention before `split` and at least `min_late_mentions`
/// from `split` up to `late_end` (inclusive; open when absent). Sorted by
/// late_count descending, then name.
std::vector<EmergingTopic> emerging_topics(std::span<const Mention> mentions, const Ontology& tree, Date split,
                                           std::size_t min_late_mentions = 5, const TopicSet& products = {},
                                           std::optional<Date> late_end = std::nullopt);

struct LoessParams {
    double span = 0.5;
    int degree = 1;
};

struct TimelinePoint {
    Date date;
    std::size_t new_topics = 0;
};

struct DiscoveryTimeline {
    std::vector<TimelinePoint> points;
    std::vector<double> smoothed;
};

/// New (non-seed) topics per created_on date, ascending. Smoothing is applied
/// only when the timeline is long enough for the LOESS window.
DiscoveryTimeline discovery_timeline(const Ontology& tree, std::optional<LoessParams> smooth = std::nullopt);

struct CoherenceRow {
    std::string parent_name;
    std::vector<std::string> sampled_children;
    double avg_cos_true = 0.0;
    std::string random_parent_name;
    double avg_cos_random = 0.0;
};

struct CoherenceReport {
    std::vector<CoherenceRow> rows;
    double overall_true_avg = 0.0;
    double overall_random_avg = 0.0;
    std::uint64_t seed = 0;
};

inline constexpr std::size_t kCoherenceMaxChildren = 5;

/// Samples `num_parents` parents with at least two children and compares
/// their children's mean cosine to their own name against a different,
/// randomly drawn parent. Throws InsufficientDataError when the tree has too
/// few eligible parents.
CoherenceReport coherence_eval(const Ontology& tree, const EmbeddingProvider& embedder, std::size_t num_parents,
                               std::uint64_t seed);

/// Product topics: configured labels that resolve in the tree, plus (when a
/// classifier is given) nodes it answers "yes" for. A classifier failure
/// drops all classifier answers and records a warning.
TopicSet classify_product_topics(const Ontology& tree, std::span<const std::string> product_labels,
                                 const ChatProvider* classifier, std::vector<std::string>* warnings = nullptr);

nlohmann::json to_json(const MentionSeries& s);
nlohmann::json to_json(const TrendResult& r);
nlohmann::json to_json(const TrendReport& r);
nlohmann::json to_json(const JaccardMatrix& m);
nlohmann::json to_json(const EmergingTopic& e);
nlohmann::json to_json(const DiscoveryTimeline& t);
nlohmann::json to_json(const CoherenceReport& r);

std::string to_csv(const TrendReport& r);
std::string to_csv(const JaccardMatrix& m);
std::string to_csv(std::span<const EmergingTopic> topics);
std::string to_csv(const DiscoveryTimeline& t);
std::string to_csv(const CoherenceReport& r);

/// RFC 4180 field quoting.
std::string csv_field(std::string_view value);

}  // namespace calltopics
