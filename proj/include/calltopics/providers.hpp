#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace calltopics {

struct ChatRequest {
    std::string system_prompt;
    std::string user_message;
    double temperature = 0.0;
    int max_output_tokens = 2048;

    /// Throws ParameterError on empty prompts, non-finite or out-of-range
    /// temperature, or a non-positive token budget.
    void validate() const;
};

struct ChatResponse {
    std::string text;
    std::map<std::string, std::string> provider_meta;
};

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }
    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Cosine of the angle between two vectors; 0 when either has zero norm.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    /// Returns the model's reply verbatim. Must be safe to call concurrently.
    virtual ChatResponse chat(const ChatRequest& request) const = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    /// One vector per input, same order, constant dimension.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const = 0;
};

/// Deterministic bag-of-tokens embedding: every token from text::tokenize is
/// hashed (FNV-1a 64) into one of `dimension` buckets, bucket counts are then
/// L2-normalized. Texts sharing tokens get positive cosine similarity.
class HashedBagEmbedder : public EmbeddingProvider {
public:
    explicit HashedBagEmbedder(std::size_t dimension = 256);

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override;
    EmbeddingVector embed_one(const std::string& text) const;
    std::size_t dimension() const { return dimension_; }

private:
    std::size_t dimension_;
};

struct KeywordRule {
    std::string keyword;  // case-insensitive substring
    std::string topic;
};

struct SynonymRule {
    std::vector<std::string> labels;  // every pair in the group matches
    int similarity = 95;
};

/// Rule set for MockProvider. Lookup order for a chat request:
///   1. `exact`, keyed by the user message;
///   2. the rule mode matching the request's system prompt (retriever,
///      matcher, ontologist, product classifier).
/// Anything not covered raises UnscriptedPromptError.
struct MockScript {
    std::map<std::string, std::string> exact;

    /// Present => retriever prompts are answered from keyword rules (an
    /// empty list answers "[]").
    std::optional<std::vector<KeywordRule>> retriever_keywords;

    /// Present => matcher prompts are answered from synonym groups.
    std::optional<std::vector<SynonymRule>> matcher_synonyms;
    /// Canned matcher replies, keyed by query topic (normalized).
    std::map<std::string, std::string> matcher_replies;

    /// Planted ancestor path per topic (normalized key), root first. The mock
    /// answers the deepest path label that is on offer.
    std::map<std::string, std::vector<std::string>> parent_paths;
    /// Canned ontologist replies, keyed by topic (normalized).
    std::map<std::string, std::string> ontologist_replies;
    /// When true, unknown topics get an explicit null parent instead of an
    /// unscripted-prompt error.
    bool ontologist_default_no_parent = false;

    /// Present => product-classifier prompts answer "yes" for these names.
    std::optional<std::vector<std::string>> product_names;

    std::size_t embedding_dimension = 256;

    static MockScript from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Scripted provider for tests and offline runs. Immutable after
/// construction, so concurrent calls are safe; no clock or randomness.
class MockProvider : public ChatProvider, public EmbeddingProvider {
public:
    explicit MockProvider(MockScript script);

    ChatResponse chat(const ChatRequest& request) const override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override;

    const MockScript& script() const { return script_; }

private:
    std::string answer_retriever(const std::string& paragraph) const;
    std::string answer_matcher(const std::string& message) const;
    std::string answer_ontologist(const std::string& message) const;
    std::string answer_classifier(const std::string& message) const;

    MockScript script_;
    HashedBagEmbedder embedder_;
    std::set<std::string> product_keys_;
};

/// Convenience for the canonical "keyword table" mock mode: builds the
/// retriever JSON reply a keyword table yields for one paragraph.
std::string keyword_retriever_reply(const std::vector<KeywordRule>& rules, const std::string& paragraph);

struct ProviderConfig {
    std::string endpoint_url;
    std::string model_name;
    std::string embedding_model;
    std::string api_key_env_var;
    double timeout_seconds = 60.0;
    int max_retries = 2;
    double retry_backoff_seconds = 1.0;

    /// Throws ConfigError on max_retries < 0, timeout <= 0, negative backoff
    /// or an unusable endpoint URL.
    void validate() const;

    static ProviderConfig from_json(const nlohmann::json& j);
};

/// OpenAI-compatible chat/embeddings client over HTTP(S). Transport failures
/// and HTTP 429/5xx are retried up to max_retries times with exponential
/// backoff; other non-2xx replies fail immediately.
class HttpProvider : public ChatProvider, public EmbeddingProvider {
public:
    /// Reads the API key from the environment variable named in the config
    /// (ConfigError when that variable is named but unset).
    explicit HttpProvider(ProviderConfig config);

    ChatResponse chat(const ChatRequest& request) const override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override;

    const ProviderConfig& config() const { return config_; }

private:
    struct Reply {
        nlohmann::json body;
        int attempts = 0;
    };
    Reply post_json(const std::string& route, const nlohmann::json& payload) const;

    ProviderConfig config_;
    std::string api_key_;
    std::string scheme_host_port_;
    std::string path_prefix_;
};

}  // namespace calltopics
