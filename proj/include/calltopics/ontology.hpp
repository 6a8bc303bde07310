#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <boost/functional/hash.hpp>
#include <boost/uuid/uuid.hpp>
#include <json.hpp>

#include "calltopics/corpus.hpp"
#include "calltopics/time.hpp"

namespace calltopics {

using TopicId = boost::uuids::uuid;
using TopicIdHash = boost::hash<TopicId>;

std::string id_str(const TopicId& id);
/// Throws ParameterError on a malformed UUID string.
TopicId parse_topic_id(std::string_view text);
/// Name-based (v5) UUID of a normalized label.
TopicId topic_id_for(std::string_view normalized_label);

struct TopicNode {
    TopicId topic_id;
    std::string name;
    std::vector<std::string> aliases;
    Timestamp created_on;
    Timestamp updated_on;
    std::optional<TopicId> parent_id;
    std::vector<TopicId> child_ids;

    bool is_leaf() const { return child_ids.empty(); }
    friend bool operator==(const TopicNode&, const TopicNode&) = default;
};

struct OntologyStats {
    std::size_t total_nodes = 0;
    std::size_t num_levels = 0;
    std::size_t num_leaf_nodes = 0;
    MeanStd avg_children_per_node;
    MeanStd avg_aliases_per_node;
    std::vector<std::size_t> nodes_per_level;
};

/// A forest of topics. Every name and alias is indexed under its normalized
/// form and maps to exactly one node. Depth is 0 at the roots and never
/// exceeds max_depth - 1. Nodes keep insertion order.
///
/// Single writer: callers serialize mutations. References returned by the
/// mutators are invalidated by the next insertion.
class Ontology {
public:
    static constexpr int kDefaultMaxDepth = 4;

    explicit Ontology(int max_depth = kDefaultMaxDepth);

    const TopicNode& insert_node(std::string_view name, std::optional<TopicId> parent_id, Timestamp now);

    /// Appends `alias` unless the node already carries that label; either way
    /// updated_on moves forward to `now`.
    const TopicNode& add_alias(const TopicId& topic_id, std::string_view alias, Timestamp now);

    /// Case-insensitive, whitespace-normalized exact lookup over names and
    /// aliases.
    const TopicNode* find_by_name_or_alias(std::string_view query) const;

    const TopicNode* get(const TopicId& id) const;
    /// Throws NotFoundError.
    const TopicNode& at(const TopicId& id) const;

    const std::vector<TopicNode>& nodes() const { return nodes_; }
    const std::vector<TopicId>& root_ids() const { return root_ids_; }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    int max_depth() const { return max_depth_; }

    int depth_of(const TopicId& id) const;
    /// Every node below `id`, pre-order.
    std::vector<TopicId> descendants(const TopicId& id) const;

    const std::optional<Timestamp>& seeded_on() const { return seeded_on_; }
    void set_seeded_on(Timestamp ts) { seeded_on_ = ts; }

    /// Re-derives the label index and checks forest shape, link symmetry,
    /// depth bound, label uniqueness and timestamp order. Throws LoadError
    /// naming the first violated invariant.
    void check_invariants() const;

    nlohmann::json to_json() const;
    static Ontology from_json(const nlohmann::json& j);

    friend bool operator==(const Ontology& a, const Ontology& b) {
        return a.max_depth_ == b.max_depth_ && a.seeded_on_ == b.seeded_on_ && a.root_ids_ == b.root_ids_ &&
               a.nodes_ == b.nodes_;
    }

private:
    TopicNode& mutable_at(const TopicId& id);

    int max_depth_;
    std::optional<Timestamp> seeded_on_;
    std::vector<TopicNode> nodes_;
    std::vector<TopicId> root_ids_;
    std::unordered_map<TopicId, std::size_t, TopicIdHash> by_id_;
    std::unordered_map<std::string, TopicId> label_index_;
};

void save_ontology(const Ontology& tree, const std::filesystem::path& path);
Ontology load_ontology(const std::filesystem::path& path);

OntologyStats ontology_stats(const Ontology& tree);
nlohmann::json to_json(const OntologyStats& stats);

struct SeedTopic {
    std::string name;
    std::vector<std::string> children;
};

/// Seed spec JSON: [{"name": ..., "children": [...]}, ...].
std::vector<SeedTopic> seed_spec_from_json(const nlohmann::json& j);
std::vector<SeedTopic> load_seed_spec(const std::filesystem::path& path);

/// Inserts roots and their children with one shared timestamp. Labels
/// already present are left alone, so reseeding is a no-op. Duplicate names
/// inside the spec are a ConflictError.
void seed(Ontology& tree, std::span<const SeedTopic> spec, Timestamp seeded_on);

}  // namespace calltopics
