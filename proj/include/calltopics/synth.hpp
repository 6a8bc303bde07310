#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "calltopics/corpus.hpp"
#include "calltopics/ontologist.hpp"
#include "calltopics/ontology.hpp"
#include "calltopics/providers.hpp"

namespace calltopics {

struct SyntheticCompany {
    std::string ticker;
    std::string sector;
};

/// `counts[i]` sentences mentioning `keyword` in the company's i-th quarter.
struct MentionSchedule {
    std::string company;
    std::string keyword;
    std::string topic;
    std::vector<int> counts;
};

struct SyntheticCorpusSpec {
    std::vector<SyntheticCompany> companies;
    FiscalQuarter first_quarter{2021, 4};
    int quarters = 10;
    int paragraphs_per_call = 5;
    std::vector<MentionSchedule> schedules;
    std::vector<SeedTopic> seeds;
    std::vector<SynonymRule> synonyms;
    /// Root-first ancestor path per planted topic.
    std::map<std::string, std::vector<std::string>> parent_paths;
    std::vector<std::string> products;
    std::uint64_t seed = 7;

    /// Throws ConfigError on negative counts, schedule length mismatch,
    /// unknown companies or non-positive sizes.
    void validate() const;
    static SyntheticCorpusSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Four companies over ten quarters, 200 paragraphs, with planted trends,
/// an emerging topic, synonym pairs and planted parents.
SyntheticCorpusSpec default_synthetic_spec(std::uint64_t seed = 7);

struct SyntheticBundle {
    Corpus corpus;
    MockScript script;
    std::vector<SeedTopic> seeds;
    std::vector<std::string> products;
    PipelineConfig pipeline;
};

/// Conference-call date for a fiscal quarter: the 20th of the month after the
/// quarter ends, plus two days per company position.
Date synthetic_call_date(FiscalQuarter quarter, std::size_t company_index);

/// Deterministic for a fixed spec (filler text is drawn from the seeded RNG).
SyntheticBundle generate_synthetic(const SyntheticCorpusSpec& spec);

/// Writes corpus.jsonl, mock_script.json, seed_topics.json, products.json,
/// synth_spec.json and a ready-to-use config.json into `dir`.
void write_synthetic(const SyntheticBundle& bundle, const SyntheticCorpusSpec& spec, const std::filesystem::path& dir);

}  // namespace calltopics
