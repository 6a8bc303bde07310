#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "calltopics/ontology.hpp"
#include "calltopics/stats.hpp"

namespace testsupport {

// Validates the JSON Schema subset used by schemas/*.json: type (string or
// list), required, properties, additionalProperties (bool), items, enum,
// minimum, maximum, minLength, maxLength, minItems, maxItems.
std::vector<std::string> schema_errors(const nlohmann::json& schema, const nlohmann::json& doc);
nlohmann::json load_schema(const std::string& name);

struct KendallOracle {
    double tau;
    double p_value;
};

// Pair enumeration for tau-b and a full n! index-permutation distribution for p.
KendallOracle kendall_oracle(const std::vector<double>& y);

// Weighted least squares per point solved with a dense QR.
std::vector<double> loess_oracle(const std::vector<calltopics::stats::Point>& pts, double span, int degree);

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);
std::string read_file(const std::filesystem::path& path);

// The topic tree used in the ontologist prompt's worked examples.
calltopics::Ontology example_parent_tree();

std::string source_dir();

}  // namespace testsupport

namespace testsupport {

// Independent structural audit of a tree through its public API: acyclic
// parent chains, each child claimed by exactly its parent, unique labels,
// label lookup agreeing with the stored names, depth bound. Empty if sound.
std::vector<std::string> ontology_violations(const calltopics::Ontology& tree);

struct RandomOpsResult {
    calltopics::Ontology tree;
    std::size_t inserts = 0;
    std::size_t aliases = 0;
    std::size_t rejected = 0;
    std::vector<std::string> violations;  // first audit failures seen, if any
};

// Seeded mix of inserts (root or under a random node, including too-deep and
// duplicate labels) and alias additions (including clashing aliases). The
// audit runs after every operation.
RandomOpsResult random_ontology_ops(std::uint64_t seed, std::size_t ops);

}  // namespace testsupport

#include "calltopics/analytics.hpp"
#include "calltopics/synth.hpp"

namespace testsupport {

// Three companies with planted top-4 sets over topics T1..T9:
//   AAA {T1,T2,T3,T4}, BBB {T3,T4,T5,T6}, CCC {T1,T7,T8,T9}
// plus one less frequent extra topic each that falls outside the top 4.
struct PlantedOverlap {
    calltopics::Ontology tree;
    std::vector<calltopics::Mention> mentions;
};
PlantedOverlap planted_overlap_fixture();

// Six parents, each with three children whose labels repeat the parent's
// words; no two parents share a word.
calltopics::Ontology lexical_overlap_tree();

// Default synthetic corpus pushed through the mock pipeline, seeds stamped at
// the epoch as the CLI does.
struct SyntheticRun {
    calltopics::SyntheticBundle bundle;
    calltopics::Ontology tree;
    calltopics::EnrichmentRun run;
};
SyntheticRun run_synthetic(std::uint64_t seed = 7);

}  // namespace testsupport

namespace testsupport {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs the built calltopics binary with `args` from `cwd`.
CliResult run_cli(const std::vector<std::string>& args, const std::filesystem::path& cwd);

}  // namespace testsupport

namespace testsupport {

// Worked-example replies from the shipped matcher and ontologist prompts.
extern const char* const kMatcherExampleReply;
extern const char* const kRoboadvisorReply;
extern const char* const kRoboticsReply;

}  // namespace testsupport
