#include "calltopics/ontologist.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <future>

#include "calltopics/error.hpp"
#include "calltopics/prompts.hpp"
#include "calltopics/text.hpp"

namespace calltopics {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// First balanced {...} in `s`, honouring JSON string escapes.
std::string_view leading_object(std::string_view s) {
    auto start = s.find('{');
    if (start == std::string_view::npos) return {};
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return s.substr(start, i - start + 1);
    }
    return {};
}

json parse_structured(std::string_view reply) {
    auto payload = prompts::extract_structured_output(reply);
    try {
        return json::parse(payload);
    } catch (const json::parse_error&) {
    }
    auto object = leading_object(payload);
    try {
        if (!object.empty()) return json::parse(object);
    } catch (const json::parse_error&) {
    }
    throw ParseError("reply holds no parseable JSON object", std::string(reply));
}

int read_similarity(const json& value, std::string_view reply) {
    if (!value.is_number()) throw ParseError("similarity is not a number", std::string(reply));
    double s = value.get<double>();
    if (!std::isfinite(s) || s < 0.0 || s > 100.0)
        throw ParseError("similarity outside [0, 100]", std::string(reply));
    return static_cast<int>(std::lround(s));
}

std::string string_or_empty(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) return {};
    return j[key].get<std::string>();
}

}  // namespace

MatchDecision parse_match_response(std::string_view reply) {
    auto j = parse_structured(reply);
    if (!j.is_object() || !j.contains("matches") || !j["matches"].is_array())
        throw ParseError("matcher reply lacks a matches array", std::string(reply));
    MatchDecision d;
    d.query_topic = string_or_empty(j, "query_topic");
    for (const auto& m : j["matches"]) {
        if (!m.is_object() || !m.contains("topic") || !m["topic"].is_string() || !m.contains("similarity"))
            throw ParseError("matcher entry lacks topic/similarity", std::string(reply));
        d.matches.push_back({m["topic"].get<std::string>(), read_similarity(m["similarity"], reply)});
    }
    if (j.contains("detailed_analysis") && j["detailed_analysis"].is_object() &&
        j["detailed_analysis"].contains("matched_topics") && j["detailed_analysis"]["matched_topics"].is_array()) {
        for (const auto& a : j["detailed_analysis"]["matched_topics"]) {
            if (!a.is_object()) continue;
            MatchAnalysis rec;
            rec.topic = string_or_empty(a, "topic");
            if (a.contains("similarity")) rec.similarity = read_similarity(a["similarity"], reply);
            rec.reasoning = string_or_empty(a, "reasoning");
            rec.parent_subset_check = string_or_empty(a, "parent_subset_check");
            d.analysis.push_back(std::move(rec));
        }
    }
    return d;
}

ParentReply parse_parent_response(std::string_view reply) {
    auto j = parse_structured(reply);
    if (!j.is_object() || !j.contains("parent"))
        throw ParseError("ontologist reply lacks a parent field", std::string(reply));
    ParentReply out;
    out.reasoning = string_or_empty(j, "reasoning");
    const auto& p = j["parent"];
    if (p.is_null()) return out;
    if (!p.is_string()) throw ParseError("parent is neither a string nor null", std::string(reply));
    auto label = std::string(text::trim(p.get<std::string>()));
    auto lowered = text::to_lower(label);
    if (!label.empty() && lowered != "none" && lowered != "null") out.parent = std::move(label);
    return out;
}

json to_json(const Enrichment& e) {
    return {{"para_id", e.para_id},
            {"doc_id", e.doc_id},
            {"call_date", format_date(e.call_date)},
            {"topic_id", id_str(e.topic_id)},
            {"excerpt", e.excerpt}};
}

Enrichment enrichment_from_json(const json& j) {
    try {
        Enrichment e;
        e.para_id = j.at("para_id").get<std::string>();
        e.doc_id = j.at("doc_id").get<std::string>();
        e.call_date = parse_date(j.at("call_date").get<std::string>());
        e.topic_id = parse_topic_id(j.at("topic_id").get<std::string>());
        e.excerpt = j.at("excerpt").get<std::string>();
        if (text::trim(e.excerpt).empty()) throw LoadError("enrichment with empty excerpt");
        return e;
    } catch (const json::exception& ex) {
        throw LoadError(std::string("malformed enrichment record: ") + ex.what());
    } catch (const ParameterError& ex) {
        throw LoadError(std::string("malformed enrichment record: ") + ex.what());
    }
}

void save_enrichments_jsonl(const std::vector<Enrichment>& enrichments, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write enrichments '" + path.string() + "'");
    for (const auto& e : enrichments) out << to_json(e).dump() << '\n';
}

std::vector<Enrichment> load_enrichments_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot read enrichments '" + path.string() + "'");
    std::vector<Enrichment> out;
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(enrichment_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw LoadError(std::string("malformed enrichments line: ") + e.what());
        }
    }
    return out;
}

void PipelineConfig::validate() const {
    if (match_threshold < 0 || match_threshold > 100) throw ConfigError("match_threshold must be within [0, 100]");
    if (candidate_k < 1) throw ConfigError("candidate_k must be >= 1");
    if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (!std::isfinite(temperature) || temperature < 0.0 || temperature > 2.0)
        throw ConfigError("temperature must be within [0, 2]");
    if (max_output_tokens < 1) throw ConfigError("max_output_tokens must be positive");
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    try {
        c.match_threshold = j.value("match_threshold", c.match_threshold);
        c.candidate_k = j.value("candidate_k", c.candidate_k);
        c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
        c.max_depth = j.value("max_depth", c.max_depth);
        c.temperature = j.value("temperature", c.temperature);
        c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
        c.retry_malformed_replies = j.value("retry_malformed_replies", c.retry_malformed_replies);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad pipeline config: ") + e.what());
    }
    c.validate();
    return c;
}

json PipelineConfig::to_json() const {
    return {{"match_threshold", match_threshold}, {"candidate_k", candidate_k},
            {"max_in_flight", max_in_flight},     {"max_depth", max_depth},
            {"temperature", temperature},         {"max_output_tokens", max_output_tokens},
            {"retry_malformed_replies", retry_malformed_replies}};
}

json RunReport::to_json() const {
    json skipped_list = json::array();
    for (const auto& s : skipped)
        skipped_list.push_back({{"para_id", s.para_id}, {"doc_id", s.doc_id}, {"error", s.error}});
    return {{"paragraphs_processed", paragraphs_processed},
            {"paragraphs_enriched", paragraphs_enriched},
            {"paragraphs_empty", paragraphs_empty},
            {"paragraphs_skipped", paragraphs_skipped},
            {"topics_created", topics_created},
            {"aliases_added", aliases_added},
            {"exact_matches", exact_matches},
            {"enrichments", enrichments},
            {"skipped", std::move(skipped_list)},
            {"warnings", warnings}};
}

Ontologist::Ontologist(const ChatProvider& chat, const EmbeddingProvider& embedder, PipelineConfig config)
    : chat_(chat), embedder_(embedder), config_(std::move(config)) {
    config_.validate();
}

const EmbeddingVector& Ontologist::name_embedding(const std::string& name) {
    auto it = embedding_cache_.find(name);
    if (it != embedding_cache_.end()) return it->second;
    auto vectors = embedder_.embed({name});
    if (vectors.size() != 1) throw ProviderError("embedding provider returned wrong count", 1, 0, true);
    return embedding_cache_.emplace(name, std::move(vectors.front())).first->second;
}

std::vector<const TopicNode*> Ontologist::candidate_topics(std::string_view query, const Ontology& tree,
                                                           std::size_t k) {
    if (k == 0) throw ParameterError("candidate k must be positive");
    if (tree.empty()) return {};

    std::vector<std::string> missing;
    for (const auto& node : tree.nodes())
        if (!embedding_cache_.count(node.name)) missing.push_back(node.name);
    if (!missing.empty()) {
        auto vectors = embedder_.embed(missing);
        if (vectors.size() != missing.size()) throw ProviderError("embedding provider returned wrong count", 1, 0, true);
        for (std::size_t i = 0; i < missing.size(); ++i) embedding_cache_.emplace(missing[i], std::move(vectors[i]));
    }
    auto query_vec = embedder_.embed({std::string(query)});
    if (query_vec.size() != 1) throw ProviderError("embedding provider returned wrong count", 1, 0, true);

    struct Scored {
        double score;
        std::string key;
        const TopicNode* node;
    };
    std::vector<Scored> scored;
    scored.reserve(tree.size());
    for (const auto& node : tree.nodes())
        scored.push_back({cosine_similarity(query_vec.front(), embedding_cache_.at(node.name)),
                          text::normalize_label(node.name), &node});
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.key < b.key;
    });
    std::vector<const TopicNode*> out;
    for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(scored[i].node);
    return out;
}

MatchDecision Ontologist::check_exists(std::string_view query, const std::vector<const TopicNode*>& candidates,
                                       const Ontology& tree) {
    MatchDecision decision;
    decision.query_topic = std::string(query);
    if (candidates.empty()) return decision;

    std::vector<std::string> labels;
    std::map<std::string, TopicId> candidate_ids;
    for (const auto* node : candidates) {
        labels.push_back(node->name);
        candidate_ids.emplace(text::normalize_label(node->name), node->topic_id);
        for (const auto& alias : node->aliases) {
            labels.push_back(alias);
            candidate_ids.emplace(text::normalize_label(alias), node->topic_id);
        }
    }

    ChatRequest request;
    request.system_prompt = std::string(prompts::topic_matcher());
    request.user_message = prompts::render_matcher_input(labels, query);
    request.temperature = config_.temperature;
    request.max_output_tokens = config_.max_output_tokens;

    const int attempts = config_.retry_malformed_replies ? 2 : 1;
    std::optional<MatchDecision> parsed;
    for (int i = 0; i < attempts && !parsed; ++i) {
        auto reply = chat_.chat(request);
        ++decision.chat_calls;
        try {
            parsed = parse_match_response(reply.text);
        } catch (const ParseError& e) {
            if (i + 1 == attempts)
                warnings_.push_back("matcher reply for '" + std::string(query) + "' unparseable: " + e.what());
        }
    }
    if (!parsed) {
        decision.valid = false;
        return decision;
    }
    decision.matches = std::move(parsed->matches);
    decision.analysis = std::move(parsed->analysis);
    if (decision.matches.empty()) return decision;

    const auto best = std::max_element(decision.matches.begin(), decision.matches.end(),
                                       [](const auto& a, const auto& b) { return a.similarity < b.similarity; });
    if (best->similarity < config_.match_threshold) return decision;

    const auto* resolved = tree.find_by_name_or_alias(best->topic);
    auto offered = candidate_ids.find(text::normalize_label(best->topic));
    if (!resolved || offered == candidate_ids.end() || offered->second != resolved->topic_id) {
        decision.valid = false;
        warnings_.push_back("matcher named '" + best->topic + "' for '" + std::string(query) +
                            "', which is not among the candidates");
        return decision;
    }
    decision.accepted = resolved->topic_id;
    return decision;
}

std::optional<ParentReply> Ontologist::ask_parent(std::string_view query, const ordered_json& offered,
                                                  const std::map<std::string, TopicId>& offered_ids,
                                                  ParentDecision& decision) {
    ChatRequest request;
    request.system_prompt = std::string(prompts::topic_ontologist());
    request.user_message = prompts::render_ontologist_input(query, offered);
    request.temperature = config_.temperature;
    request.max_output_tokens = config_.max_output_tokens;

    const int attempts = config_.retry_malformed_replies ? 2 : 1;
    std::string last_problem;
    for (int i = 0; i < attempts; ++i) {
        auto reply = chat_.chat(request);
        ++decision.chat_calls;
        try {
            auto parsed = parse_parent_response(reply.text);
            if (!parsed.parent || offered_ids.count(text::normalize_label(*parsed.parent))) return parsed;
            last_problem = "chose '" + *parsed.parent + "', which was not offered";
        } catch (const ParseError& e) {
            last_problem = e.what();
        }
    }
    warnings_.push_back("ontologist gave no usable parent for '" + std::string(query) + "': " + last_problem);
    return std::nullopt;
}

ParentDecision Ontologist::choose_parent(std::string_view query, const Ontology& tree) {
    ParentDecision decision;
    decision.query_topic = std::string(query);
    // A parent at depth d only accepts children if d + 1 <= max_depth - 1.
    const int max_parent_depth = tree.max_depth() - 2;
    if (tree.root_ids().empty() || max_parent_depth < 0) return decision;

    auto label_of = [&](const TopicId& id) -> const std::string& { return tree.at(id).name; };

    ordered_json offered = ordered_json::object();
    std::map<std::string, TopicId> offered_ids;
    std::optional<TopicId> current;  // node whose children are on offer (after round 1)

    for (const auto& root : tree.root_ids()) {
        ordered_json children = ordered_json::array();
        if (max_parent_depth >= 1)
            for (const auto& child : tree.at(root).child_ids) {
                children.push_back(label_of(child));
                offered_ids.emplace(text::normalize_label(label_of(child)), child);
            }
        offered[label_of(root)] = std::move(children);
        offered_ids.emplace(text::normalize_label(label_of(root)), root);
    }

    while (decision.rounds < tree.max_depth()) {
        ++decision.rounds;
        auto reply = ask_parent(query, offered, offered_ids, decision);
        if (!reply || !reply->parent) break;  // current (if any) stays the answer

        const auto chosen = offered_ids.at(text::normalize_label(*reply->parent));
        decision.reasoning = reply->reasoning;
        const bool is_key = offered.contains(label_of(chosen));
        current = chosen;
        if (is_key) break;  // chose the super-parent itself, or repeated the last choice

        const auto& node = tree.at(chosen);
        if (node.child_ids.empty() || tree.depth_of(chosen) + 1 > max_parent_depth) break;

        offered = ordered_json::object();
        offered_ids.clear();
        ordered_json children = ordered_json::array();
        for (const auto& child : node.child_ids) {
            children.push_back(label_of(child));
            offered_ids.emplace(text::normalize_label(label_of(child)), child);
        }
        offered[node.name] = std::move(children);
        offered_ids.emplace(text::normalize_label(node.name), chosen);
    }

    if (current) {
        decision.resolved_parent_id = current;
        decision.chosen_parent = tree.at(*current).name;
    }
    return decision;
}

IntegrationResult Ontologist::integrate_topic(std::string_view query, Ontology& tree, Timestamp now) {
    auto name = text::trim(query);
    if (name.empty()) throw ParameterError("cannot integrate an empty topic name");

    if (const auto* existing = tree.find_by_name_or_alias(name)) return {existing->topic_id, IntegrationPath::exact};

    if (!tree.empty()) {
        auto candidates = candidate_topics(name, tree, config_.candidate_k);
        auto decision = check_exists(name, candidates, tree);
        if (decision.accepted) {
            tree.add_alias(*decision.accepted, name, now);
            return {*decision.accepted, IntegrationPath::alias};
        }
    }

    auto parent = choose_parent(name, tree);
    const auto& node = tree.insert_node(name, parent.resolved_parent_id, now);
    embedding_cache_.erase(node.name);
    return {node.topic_id, IntegrationPath::inserted};
}

EnrichmentRun Ontologist::enrich_corpus(const Corpus& corpus, Ontology& tree) {
    struct Job {
        const TranscriptDocument* doc;
        const Paragraph* para;
    };
    std::vector<Job> jobs;
    for (const auto* doc : corpus.chronological())
        for (const auto& p : doc->paragraphs) jobs.push_back({doc, &p});

    struct Fetched {
        RetrievalOutcome outcome;
        std::string provider_error;
        bool failed = false;
    };
    const RetrievalOptions options{config_.temperature, config_.max_output_tokens};
    const ChatProvider& chat = chat_;
    auto launch = [&](const Job& job) {
        return std::async(std::launch::async, [&chat, options, para = job.para]() {
            Fetched f;
            try {
                f.outcome = retrieve_topics(*para, chat, options);
            } catch (const std::exception& e) {
                f.failed = true;
                f.provider_error = e.what();
            }
            return f;
        });
    };

    EnrichmentRun run;
    auto& report = run.report;
    const auto warnings_before = warnings_.size();

    std::deque<std::future<Fetched>> window;
    std::size_t next_launch = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        while (next_launch < jobs.size() && window.size() < config_.max_in_flight) window.push_back(launch(jobs[next_launch++]));
        auto fetched = window.front().get();
        window.pop_front();

        const auto& job = jobs[i];
        ++report.paragraphs_processed;
        if (fetched.failed || fetched.outcome.skipped) {
            ++report.paragraphs_skipped;
            report.skipped.push_back({job.para->para_id, job.doc->doc_id,
                                      fetched.failed ? fetched.provider_error : fetched.outcome.error});
            continue;
        }
        if (fetched.outcome.drafts.empty()) {
            ++report.paragraphs_empty;
            continue;
        }

        const auto now = start_of(job.doc->call_date);
        std::size_t integrated = 0;
        std::string last_error;
        for (const auto& draft : fetched.outcome.drafts) {
            IntegrationResult result;
            try {
                result = integrate_topic(draft.topic_name, tree, now);
            } catch (const Error& e) {
                last_error = "topic '" + draft.topic_name + "': " + e.what();
                warnings_.push_back(job.para->para_id + ": " + last_error);
                continue;
            }
            ++integrated;
            switch (result.path) {
                case IntegrationPath::exact: ++report.exact_matches; break;
                case IntegrationPath::alias: ++report.aliases_added; break;
                case IntegrationPath::inserted: ++report.topics_created; break;
            }
            for (const auto& excerpt : draft.excerpts)
                run.enrichments.push_back({job.para->para_id, job.doc->doc_id, job.doc->call_date, result.topic_id, excerpt});
        }
        if (integrated == 0) {
            ++report.paragraphs_skipped;
            report.skipped.push_back({job.para->para_id, job.doc->doc_id, last_error});
        } else {
            ++report.paragraphs_enriched;
        }
    }

    report.enrichments = run.enrichments.size();
    report.warnings.assign(warnings_.begin() + static_cast<std::ptrdiff_t>(warnings_before), warnings_.end());
    return run;
}

}  // namespace calltopics
