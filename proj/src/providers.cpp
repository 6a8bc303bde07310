#include "calltopics/providers.hpp"

#include <cmath>
#include <regex>

#include "calltopics/error.hpp"
#include "calltopics/text.hpp"

namespace calltopics {

void ChatRequest::validate() const {
    if (text::trim(system_prompt).empty()) throw ParameterError("chat request has an empty system prompt");
    if (text::trim(user_message).empty()) throw ParameterError("chat request has an empty user message");
    if (!std::isfinite(temperature) || temperature < 0.0 || temperature > 2.0)
        throw ParameterError("chat temperature must be finite and within [0, 2]");
    if (max_output_tokens <= 0) throw ParameterError("max_output_tokens must be positive");
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension())
        throw ParameterError("cosine of vectors with different dimensions");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

HashedBagEmbedder::HashedBagEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw ParameterError("embedding dimension must be positive");
}

EmbeddingVector HashedBagEmbedder::embed_one(const std::string& input) const {
    EmbeddingVector v;
    v.values.assign(dimension_, 0.0);
    for (const auto& token : text::tokenize(input)) v.values[text::fnv1a(token) % dimension_] += 1.0;
    double norm = 0.0;
    for (double x : v.values) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v.values) x /= norm;
    }
    return v;
}

std::vector<EmbeddingVector> HashedBagEmbedder::embed(const std::vector<std::string>& texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

void ProviderConfig::validate() const {
    if (max_retries < 0) throw ConfigError("provider max_retries must be >= 0");
    if (!(timeout_seconds > 0.0)) throw ConfigError("provider timeout must be > 0");
    if (!(retry_backoff_seconds >= 0.0)) throw ConfigError("provider retry_backoff must be >= 0");
    static const std::regex url(R"(^https?://[^/:\s]+(:\d+)?(/\S*)?$)");
    if (!std::regex_match(endpoint_url, url))
        throw ConfigError("provider endpoint_url must be an http(s) URL, got '" + endpoint_url + "'");
    if (model_name.empty()) throw ConfigError("provider model_name is empty");
}

ProviderConfig ProviderConfig::from_json(const nlohmann::json& j) {
    ProviderConfig c;
    try {
        c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
        c.model_name = j.value("model_name", c.model_name);
        c.embedding_model = j.value("embedding_model", c.model_name);
        c.api_key_env_var = j.value("api_key_env_var", c.api_key_env_var);
        c.timeout_seconds = j.value("timeout", c.timeout_seconds);
        c.max_retries = j.value("max_retries", c.max_retries);
        c.retry_backoff_seconds = j.value("retry_backoff", c.retry_backoff_seconds);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad provider config: ") + e.what());
    }
    return c;
}

}  // namespace calltopics
