#include "calltopics/ontology.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <boost/uuid/name_generator_sha1.hpp>
#include <boost/uuid/string_generator.hpp>
#include <boost/uuid/uuid_io.hpp>

#include "calltopics/error.hpp"
#include "calltopics/text.hpp"

namespace calltopics {

using nlohmann::json;

std::string id_str(const TopicId& id) { return boost::uuids::to_string(id); }

TopicId parse_topic_id(std::string_view text) {
    if (text.size() != 36) throw ParameterError("malformed topic_id '" + std::string(text) + "'");
    try {
        return boost::uuids::string_generator{}(std::string(text));
    } catch (const std::exception&) {
        throw ParameterError("malformed topic_id '" + std::string(text) + "'");
    }
}

TopicId topic_id_for(std::string_view normalized_label) {
    // Fixed namespace for topic labels.
    static const TopicId ns = boost::uuids::string_generator{}("3f0a6c52-8d1e-4b7a-9c55-1e2f6d4b8a90");
    boost::uuids::name_generator_sha1 gen(ns);
    return gen(normalized_label.data(), normalized_label.size());
}

Ontology::Ontology(int max_depth) : max_depth_(max_depth) {
    if (max_depth_ < 1) throw ParameterError("max_depth must be at least 1");
}

const TopicNode& Ontology::insert_node(std::string_view name, std::optional<TopicId> parent_id, Timestamp now) {
    auto trimmed = text::trim(name);
    if (trimmed.empty()) throw ParameterError("topic name is empty");
    int depth = 0;
    if (parent_id) {
        if (!get(*parent_id)) throw NotFoundError("unknown parent " + id_str(*parent_id));
        depth = depth_of(*parent_id) + 1;
    }
    if (depth > max_depth_ - 1)
        throw DepthError("inserting '" + std::string(trimmed) + "' at depth " + std::to_string(depth) +
                         " exceeds max_depth " + std::to_string(max_depth_));
    auto key = text::normalize_label(trimmed);
    if (label_index_.count(key)) throw ConflictError("topic label '" + std::string(trimmed) + "' already exists");
    auto id = topic_id_for(key);
    if (by_id_.count(id)) throw ConflictError("topic_id collision for '" + std::string(trimmed) + "'");

    TopicNode node;
    node.topic_id = id;
    node.name = std::string(trimmed);
    node.created_on = now;
    node.updated_on = now;
    node.parent_id = parent_id;

    by_id_.emplace(id, nodes_.size());
    label_index_.emplace(std::move(key), id);
    nodes_.push_back(std::move(node));
    if (parent_id) {
        mutable_at(*parent_id).child_ids.push_back(id);
    } else {
        root_ids_.push_back(id);
    }
    return nodes_.back();
}

const TopicNode& Ontology::add_alias(const TopicId& topic_id, std::string_view alias, Timestamp now) {
    auto& node = mutable_at(topic_id);
    auto trimmed = text::trim(alias);
    if (trimmed.empty()) throw ParameterError("alias is empty");
    auto key = text::normalize_label(trimmed);
    auto hit = label_index_.find(key);
    if (hit != label_index_.end() && hit->second != topic_id)
        throw ConflictError("alias '" + std::string(trimmed) + "' already labels another topic");
    if (hit == label_index_.end()) {
        node.aliases.emplace_back(trimmed);
        label_index_.emplace(std::move(key), topic_id);
    }
    if (now > node.updated_on) node.updated_on = now;
    return node;
}

const TopicNode* Ontology::find_by_name_or_alias(std::string_view query) const {
    auto it = label_index_.find(text::normalize_label(query));
    return it == label_index_.end() ? nullptr : get(it->second);
}

const TopicNode* Ontology::get(const TopicId& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &nodes_[it->second];
}

const TopicNode& Ontology::at(const TopicId& id) const {
    if (const auto* node = get(id)) return *node;
    throw NotFoundError("unknown topic " + id_str(id));
}

TopicNode& Ontology::mutable_at(const TopicId& id) {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw NotFoundError("unknown topic " + id_str(id));
    return nodes_[it->second];
}

int Ontology::depth_of(const TopicId& id) const {
    int depth = 0;
    const auto* node = &at(id);
    while (node->parent_id) {
        node = &at(*node->parent_id);
        if (++depth > static_cast<int>(nodes_.size())) throw LoadError("cycle detected at " + id_str(id));
    }
    return depth;
}

std::vector<TopicId> Ontology::descendants(const TopicId& id) const {
    std::vector<TopicId> out;
    std::vector<TopicId> stack(at(id).child_ids.rbegin(), at(id).child_ids.rend());
    while (!stack.empty()) {
        auto current = stack.back();
        stack.pop_back();
        out.push_back(current);
        const auto& children = at(current).child_ids;
        stack.insert(stack.end(), children.rbegin(), children.rend());
    }
    return out;
}

void Ontology::check_invariants() const {
    std::unordered_map<TopicId, std::size_t, TopicIdHash> ids;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (!ids.emplace(nodes_[i].topic_id, i).second)
            throw LoadError("duplicate topic_id " + id_str(nodes_[i].topic_id));
    if (ids != by_id_) throw LoadError("id index out of sync");

    std::unordered_map<std::string, TopicId> labels;
    auto claim = [&](const std::string& label, const TopicId& id) {
        if (text::trim(label).empty()) throw LoadError("empty name on " + id_str(id));
        if (!labels.emplace(text::normalize_label(label), id).second)
            throw LoadError("duplicate name '" + label + "'");
    };

    std::unordered_map<TopicId, int, TopicIdHash> claimed_as_child;
    std::vector<TopicId> expected_roots;
    for (const auto& node : nodes_) {
        claim(node.name, node.topic_id);
        for (const auto& alias : node.aliases) claim(alias, node.topic_id);
        if (node.updated_on < node.created_on)
            throw LoadError("updated_on before created_on on '" + node.name + "'");
        if (node.parent_id) {
            if (!ids.count(*node.parent_id)) throw LoadError("unknown parent of '" + node.name + "'");
        } else {
            expected_roots.push_back(node.topic_id);
        }
        for (const auto& child : node.child_ids) {
            auto it = ids.find(child);
            if (it == ids.end()) throw LoadError("unknown child of '" + node.name + "'");
            if (++claimed_as_child[child] > 1) throw LoadError("node listed under several parents");
            if (nodes_[it->second].parent_id != node.topic_id)
                throw LoadError("inconsistent parent/child links at '" + node.name + "'");
        }
    }
    for (const auto& node : nodes_)
        if (node.parent_id && !claimed_as_child.count(node.topic_id))
            throw LoadError("inconsistent parent/child links at '" + node.name + "'");

    std::set<TopicId> root_set(root_ids_.begin(), root_ids_.end());
    if (root_set.size() != root_ids_.size() || root_set != std::set<TopicId>(expected_roots.begin(), expected_roots.end()))
        throw LoadError("root list mismatch");

    for (const auto& node : nodes_) {
        int steps = 0;
        const TopicNode* cur = &node;
        while (cur->parent_id) {
            cur = &nodes_[ids.at(*cur->parent_id)];
            if (++steps > max_depth_ - 1) {
                // Either a cycle or a path deeper than allowed; distinguish for the message.
                int guard = 0;
                const TopicNode* probe = cur;
                while (probe->parent_id && guard <= static_cast<int>(nodes_.size())) {
                    probe = &nodes_[ids.at(*probe->parent_id)];
                    ++guard;
                }
                if (probe->parent_id) throw LoadError("cycle detected at '" + node.name + "'");
                throw LoadError("depth exceeds max_depth at '" + node.name + "'");
            }
        }
    }

    if (labels != label_index_) throw LoadError("label index out of sync");
}

json Ontology::to_json() const {
    json roots = json::array();
    for (const auto& id : root_ids_) roots.push_back(id_str(id));
    json nodes = json::array();
    for (const auto& n : nodes_) {
        json children = json::array();
        for (const auto& c : n.child_ids) children.push_back(id_str(c));
        nodes.push_back({{"topic_id", id_str(n.topic_id)},
                         {"name", n.name},
                         {"aliases", n.aliases},
                         {"created_on", format_timestamp(n.created_on)},
                         {"updated_on", format_timestamp(n.updated_on)},
                         {"parent_id", n.parent_id ? json(id_str(*n.parent_id)) : json(nullptr)},
                         {"child_ids", std::move(children)}});
    }
    json out = {{"max_depth", max_depth_}, {"roots", std::move(roots)}, {"nodes", std::move(nodes)}};
    if (seeded_on_) out["seeded_on"] = format_timestamp(*seeded_on_);
    return out;
}

Ontology Ontology::from_json(const json& j) {
    try {
        Ontology tree(j.at("max_depth").get<int>());
        if (j.contains("seeded_on") && !j["seeded_on"].is_null())
            tree.seeded_on_ = parse_timestamp(j["seeded_on"].get<std::string>());
        for (const auto& r : j.at("roots")) tree.root_ids_.push_back(parse_topic_id(r.get<std::string>()));
        for (const auto& n : j.at("nodes")) {
            TopicNode node;
            node.topic_id = parse_topic_id(n.at("topic_id").get<std::string>());
            node.name = n.at("name").get<std::string>();
            node.aliases = n.at("aliases").get<std::vector<std::string>>();
            node.created_on = parse_timestamp(n.at("created_on").get<std::string>());
            node.updated_on = parse_timestamp(n.at("updated_on").get<std::string>());
            if (!n.at("parent_id").is_null()) node.parent_id = parse_topic_id(n["parent_id"].get<std::string>());
            for (const auto& c : n.at("child_ids")) node.child_ids.push_back(parse_topic_id(c.get<std::string>()));
            if (!tree.by_id_.emplace(node.topic_id, tree.nodes_.size()).second)
                throw LoadError("duplicate topic_id " + id_str(node.topic_id));
            tree.nodes_.push_back(std::move(node));
        }
        for (const auto& node : tree.nodes_) {
            if (node.parent_id && !tree.by_id_.count(*node.parent_id))
                throw LoadError("unknown parent of '" + node.name + "'");
            auto add = [&](const std::string& label) {
                if (!tree.label_index_.emplace(text::normalize_label(label), node.topic_id).second)
                    throw LoadError("duplicate name '" + label + "'");
            };
            add(node.name);
            for (const auto& a : node.aliases) add(a);
        }
        tree.check_invariants();
        return tree;
    } catch (const json::exception& e) {
        throw LoadError(std::string("malformed ontology file: ") + e.what());
    } catch (const ParameterError& e) {
        throw LoadError(std::string("malformed ontology file: ") + e.what());
    }
}

void save_ontology(const Ontology& tree, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write ontology '" + path.string() + "'");
    out << tree.to_json().dump(2) << '\n';
}

Ontology load_ontology(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot read ontology '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw LoadError("malformed ontology file: " + std::string(e.what()));
    }
    return Ontology::from_json(j);
}

namespace {

MeanStd mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double sq = 0.0;
    for (double x : xs) sq += (x - mean) * (x - mean);
    return {mean, std::sqrt(sq / static_cast<double>(xs.size()))};
}

}  // namespace

OntologyStats ontology_stats(const Ontology& tree) {
    OntologyStats stats;
    stats.total_nodes = tree.size();
    std::vector<double> children, aliases;
    for (const auto& node : tree.nodes()) {
        if (node.is_leaf()) ++stats.num_leaf_nodes;
        children.push_back(static_cast<double>(node.child_ids.size()));
        aliases.push_back(static_cast<double>(node.aliases.size()));
        auto depth = static_cast<std::size_t>(tree.depth_of(node.topic_id));
        if (stats.nodes_per_level.size() <= depth) stats.nodes_per_level.resize(depth + 1, 0);
        ++stats.nodes_per_level[depth];
    }
    stats.num_levels = stats.nodes_per_level.size();
    stats.avg_children_per_node = mean_std(children);
    stats.avg_aliases_per_node = mean_std(aliases);
    return stats;
}

json to_json(const OntologyStats& s) {
    return {{"total_nodes", s.total_nodes},
            {"num_levels", s.num_levels},
            {"num_leaf_nodes", s.num_leaf_nodes},
            {"avg_children_per_node", {{"mean", s.avg_children_per_node.mean},
                                       {"stddev", s.avg_children_per_node.stddev}}},
            {"avg_aliases_per_node", {{"mean", s.avg_aliases_per_node.mean},
                                      {"stddev", s.avg_aliases_per_node.stddev}}},
            {"nodes_per_level", s.nodes_per_level}};
}

std::vector<SeedTopic> seed_spec_from_json(const json& j) {
    try {
        std::vector<SeedTopic> spec;
        for (const auto& entry : j) {
            SeedTopic t;
            t.name = entry.at("name").get<std::string>();
            if (entry.contains("children")) t.children = entry["children"].get<std::vector<std::string>>();
            spec.push_back(std::move(t));
        }
        return spec;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad seed spec: ") + e.what());
    }
}

std::vector<SeedTopic> load_seed_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read seed spec '" + path.string() + "'");
    try {
        return seed_spec_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed seed spec: " + std::string(e.what()));
    }
}

void seed(Ontology& tree, std::span<const SeedTopic> spec, Timestamp seeded_on) {
    std::set<std::string> seen;
    for (const auto& root : spec) {
        if (!seen.insert(text::normalize_label(root.name)).second)
            throw ConflictError("duplicate seed topic '" + root.name + "'");
        for (const auto& child : root.children)
            if (!seen.insert(text::normalize_label(child)).second)
                throw ConflictError("duplicate seed topic '" + child + "'");
    }

    for (const auto& root : spec) {
        const auto* existing = tree.find_by_name_or_alias(root.name);
        TopicId root_id = existing ? existing->topic_id : tree.insert_node(root.name, std::nullopt, seeded_on).topic_id;
        for (const auto& child : root.children)
            if (!tree.find_by_name_or_alias(child)) tree.insert_node(child, root_id, seeded_on);
    }
    if (!tree.seeded_on()) tree.set_seeded_on(seeded_on);
}

}  // namespace calltopics
