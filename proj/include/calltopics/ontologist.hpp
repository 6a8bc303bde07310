#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "calltopics/corpus.hpp"
#include "calltopics/ontology.hpp"
#include "calltopics/providers.hpp"
#include "calltopics/retriever.hpp"

namespace calltopics {

struct TopicMatch {
    std::string topic;
    int similarity = 0;  // 0..100
};

struct MatchAnalysis {
    std::string topic;
    int similarity = 0;
    std::string reasoning;
    std::string parent_subset_check;
};

/// Outcome of the semantic-equivalence check for one query topic.
struct MatchDecision {
    std::string query_topic;
    std::vector<TopicMatch> matches;
    std::vector<MatchAnalysis> analysis;
    std::optional<TopicId> accepted;
    /// False when the reply was unusable (unparseable twice, or the best
    /// match names a label outside the candidates).
    bool valid = true;
    int chat_calls = 0;
};

/// Parses the matcher's structured output. Similarities outside [0, 100]
/// and missing "matches" are ParseErrors.
MatchDecision parse_match_response(std::string_view reply);

struct ParentReply {
    std::optional<std::string> parent;  // nullopt: explicit "no suitable parent"
    std::string reasoning;
};

/// Parses the ontologist's structured output {"reasoning", "parent"}. A null,
/// empty or "none" parent is an explicit no-parent answer.
ParentReply parse_parent_response(std::string_view reply);

struct ParentDecision {
    std::string query_topic;
    std::string chosen_parent;  // empty when no parent was resolved
    std::string reasoning;
    std::optional<TopicId> resolved_parent_id;
    int rounds = 0;
    int chat_calls = 0;
};

/// Links one excerpt of a paragraph to an ontology topic.
struct Enrichment {
    std::string para_id;
    std::string doc_id;
    Date call_date;
    TopicId topic_id;
    std::string excerpt;

    friend bool operator==(const Enrichment&, const Enrichment&) = default;
};

nlohmann::json to_json(const Enrichment& e);
Enrichment enrichment_from_json(const nlohmann::json& j);
void save_enrichments_jsonl(const std::vector<Enrichment>& enrichments, const std::filesystem::path& path);
std::vector<Enrichment> load_enrichments_jsonl(const std::filesystem::path& path);

struct PipelineConfig {
    int match_threshold = 85;
    std::size_t candidate_k = 25;
    std::size_t max_in_flight = 4;
    int max_depth = Ontology::kDefaultMaxDepth;
    double temperature = 0.0;
    int max_output_tokens = 2048;
    /// Retry a malformed matcher/ontologist/retriever reply once before
    /// falling back (no-match, no-parent, skipped paragraph).
    bool retry_malformed_replies = true;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
    static PipelineConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct SkippedParagraph {
    std::string para_id;
    std::string doc_id;
    std::string error;
};

struct RunReport {
    std::size_t paragraphs_processed = 0;
    std::size_t paragraphs_enriched = 0;
    std::size_t paragraphs_empty = 0;
    std::size_t paragraphs_skipped = 0;
    std::size_t topics_created = 0;
    std::size_t aliases_added = 0;
    std::size_t exact_matches = 0;
    std::size_t enrichments = 0;
    std::vector<SkippedParagraph> skipped;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

struct EnrichmentRun {
    std::vector<Enrichment> enrichments;
    RunReport report;
};

enum class IntegrationPath { exact, alias, inserted };

struct IntegrationResult {
    TopicId topic_id;
    IntegrationPath path = IntegrationPath::exact;
};

/// The ontologist agent: decides whether a retrieved topic already exists
/// (exact label, then LLM semantic match over an embedding shortlist) and
/// otherwise inserts it under the most specific parent found by a top-down
/// descent. Owns an embedding cache for node names; not thread-safe, the
/// pipeline drives it from one thread.
class Ontologist {
public:
    Ontologist(const ChatProvider& chat, const EmbeddingProvider& embedder, PipelineConfig config);

    /// Top-k nodes by cosine(embed(query), embed(node name)); ties broken by
    /// normalized name ascending.
    std::vector<const TopicNode*> candidate_topics(std::string_view query, const Ontology& tree, std::size_t k);

    MatchDecision check_exists(std::string_view query, const std::vector<const TopicNode*>& candidates,
                               const Ontology& tree);

    ParentDecision choose_parent(std::string_view query, const Ontology& tree);

    IntegrationResult integrate_topic(std::string_view query, Ontology& tree, Timestamp now);

    /// Runs retrieval (concurrently, up to max_in_flight requests) and then
    /// integrates drafts strictly in corpus order: documents by
    /// (call_date, ticker), paragraphs by index. Per-paragraph failures are
    /// recorded in the report and never abort the run.
    EnrichmentRun enrich_corpus(const Corpus& corpus, Ontology& tree);

    const PipelineConfig& config() const { return config_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    const EmbeddingVector& name_embedding(const std::string& name);
    std::optional<ParentReply> ask_parent(std::string_view query, const nlohmann::ordered_json& offered,
                                          const std::map<std::string, TopicId>& offered_ids, ParentDecision& decision);

    const ChatProvider& chat_;
    const EmbeddingProvider& embedder_;
    PipelineConfig config_;
    std::map<std::string, EmbeddingVector> embedding_cache_;
    std::vector<std::string> warnings_;
};

}  // namespace calltopics
