#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "calltopics/analytics.hpp"
#include "calltopics/ontologist.hpp"
#include "calltopics/providers.hpp"

namespace calltopics {

enum class ProviderKind { mock, http };

struct ProviderSection {
    ProviderKind kind = ProviderKind::mock;
    std::filesystem::path mock_script;
    ProviderConfig http;
};

struct AnalyticsConfig {
    double alpha = 0.05;
    std::size_t min_quarters = 6;
    std::size_t top_n = 100;
    double loess_span = 0.5;
    int loess_degree = 1;
    std::size_t min_late_mentions = 5;
    std::optional<Date> split_date;
    std::optional<Date> late_end;
    std::filesystem::path product_topics;
    bool classify_products = false;
    bool rollup = false;
    CountMode count_mode = CountMode::per_excerpt;
    std::size_t coherence_parents = 5;
    std::uint64_t rng_seed = 7;

    void validate() const;
};

struct IoConfig {
    std::filesystem::path corpus;
    std::filesystem::path seed_topics;
    std::filesystem::path ontology;
    std::filesystem::path enrichments;
    std::filesystem::path run_report;
    Timestamp seed_timestamp{};
};

/// The CLI's config file. Relative paths resolve against the file's
/// directory. Secrets never live here: the HTTP provider names an
/// environment variable instead.
struct RunConfig {
    ProviderSection provider;
    PipelineConfig pipeline;
    AnalyticsConfig analytics;
    IoConfig io;

    /// Throws ConfigError on bad types or out-of-range values.
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
};

/// Throws ConfigError if the file is missing or malformed.
RunConfig load_run_config(const std::filesystem::path& path);

/// Product labels file: a JSON array of topic names.
std::vector<std::string> load_product_labels(const std::filesystem::path& path);

}  // namespace calltopics
