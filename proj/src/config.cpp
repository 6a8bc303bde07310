#include "calltopics/config.hpp"

#include <fstream>

#include "calltopics/error.hpp"

namespace calltopics {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const json& section, const char* key) {
    if (!section.contains(key)) return {};
    std::filesystem::path p = section.at(key).get<std::string>();
    return p.is_absolute() || p.empty() ? p : base / p;
}

std::optional<Date> optional_date(const json& section, const char* key) {
    if (!section.contains(key) || section.at(key).is_null()) return std::nullopt;
    return parse_date(section.at(key).get<std::string>());
}

}  // namespace

void AnalyticsConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("analytics.alpha must be in (0, 1)");
    if (min_quarters < 3) throw ConfigError("analytics.min_quarters must be at least 3");
    if (top_n < 1) throw ConfigError("analytics.top_n must be at least 1");
    if (!(loess_span > 0.0 && loess_span <= 1.0)) throw ConfigError("analytics.loess_span must be in (0, 1]");
    if (loess_degree != 0 && loess_degree != 1) throw ConfigError("analytics.loess_degree must be 0 or 1");
    if (min_late_mentions < 1) throw ConfigError("analytics.min_late_mentions must be at least 1");
    if (coherence_parents < 1) throw ConfigError("analytics.coherence_parents must be at least 1");
    if (split_date && late_end && *late_end < *split_date) throw ConfigError("analytics.late_end precedes split_date");
}

RunConfig RunConfig::from_json(const json& j, const std::filesystem::path& base) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    try {
        const auto provider = j.value("provider", json::object());
        const auto kind = provider.value("kind", std::string("mock"));
        if (kind == "mock") c.provider.kind = ProviderKind::mock;
        else if (kind == "http") c.provider.kind = ProviderKind::http;
        else throw ConfigError("provider.kind must be 'mock' or 'http'");
        c.provider.mock_script = resolve(base, provider, "mock_script");
        if (provider.contains("http")) c.provider.http = ProviderConfig::from_json(provider.at("http"));

        if (j.contains("pipeline")) c.pipeline = PipelineConfig::from_json(j.at("pipeline"));

        const auto a = j.value("analytics", json::object());
        auto& an = c.analytics;
        an.alpha = a.value("alpha", an.alpha);
        an.min_quarters = a.value("min_quarters", an.min_quarters);
        an.top_n = a.value("top_n", an.top_n);
        an.loess_span = a.value("loess_span", an.loess_span);
        an.loess_degree = a.value("loess_degree", an.loess_degree);
        an.min_late_mentions = a.value("min_late_mentions", an.min_late_mentions);
        an.split_date = optional_date(a, "split_date");
        an.late_end = optional_date(a, "late_end");
        an.product_topics = resolve(base, a, "product_topics");
        an.classify_products = a.value("classify_products", an.classify_products);
        an.rollup = a.value("rollup", an.rollup);
        const auto mode = a.value("count_mode", std::string("per_excerpt"));
        if (mode == "per_excerpt") an.count_mode = CountMode::per_excerpt;
        else if (mode == "per_paragraph") an.count_mode = CountMode::per_paragraph;
        else throw ConfigError("analytics.count_mode must be 'per_excerpt' or 'per_paragraph'");
        an.coherence_parents = a.value("coherence_parents", an.coherence_parents);
        an.rng_seed = a.value("rng_seed", an.rng_seed);
        an.validate();

        const auto io = j.value("io", json::object());
        c.io.corpus = resolve(base, io, "corpus");
        c.io.seed_topics = resolve(base, io, "seed_topics");
        c.io.ontology = resolve(base, io, "ontology");
        c.io.enrichments = resolve(base, io, "enrichments");
        c.io.run_report = resolve(base, io, "run_report");
        if (io.contains("seed_timestamp")) c.io.seed_timestamp = parse_timestamp(io.at("seed_timestamp").get<std::string>());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return RunConfig::from_json(j, path.parent_path());
}

std::vector<std::string> load_product_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read product list '" + path.string() + "'");
    try {
        return json::parse(in).get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ConfigError("product list '" + path.string() + "' must be a JSON array of names: " + e.what());
    }
}

}  // namespace calltopics
