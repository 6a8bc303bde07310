#include "calltopics/analytics.hpp"

#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include "calltopics/error.hpp"
#include "calltopics/prompts.hpp"
#include "calltopics/text.hpp"

namespace calltopics {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::map<TopicId, std::size_t> company_counts(std::span<const Mention> mentions, std::string_view company) {
    std::map<TopicId, std::size_t> counts;
    for (const auto& m : mentions)
        if (m.ticker == company) ++counts[m.topic_id];
    return counts;
}

// Ascending by normalized label; unknown ids sort last by their string form.
bool name_less(const Ontology& tree, const TopicId& a, const TopicId& b) {
    const auto* na = tree.get(a);
    const auto* nb = tree.get(b);
    if (na && nb) {
        auto la = text::normalize_label(na->name), lb = text::normalize_label(nb->name);
        if (la != lb) return la < lb;
    } else if (na || nb) {
        return na != nullptr;
    }
    return id_str(a) < id_str(b);
}

std::string name_of(const Ontology& tree, const TopicId& id) {
    const auto* node = tree.get(id);
    return node ? node->name : id_str(id);
}

std::vector<std::string> labels_of(const Ontology& tree, const std::vector<TopicId>& ids, bool leaf_only) {
    std::vector<std::string> out;
    for (const auto& id : ids) {
        const auto* node = tree.get(id);
        if (!node || (leaf_only && !node->is_leaf())) continue;
        out.push_back(node->name);
    }
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
        auto la = text::normalize_label(a), lb = text::normalize_label(b);
        return la != lb ? la < lb : a < b;
    });
    return out;
}

}  // namespace

std::vector<Mention> join_mentions(const Corpus& corpus, std::span<const Enrichment> enrichments, CountMode mode) {
    std::vector<Mention> out;
    out.reserve(enrichments.size());
    std::set<std::pair<std::string, TopicId>> seen;
    for (const auto& e : enrichments) {
        const auto* doc = corpus.find(e.doc_id);
        if (!doc) throw LoadError("enrichment cites unknown document '" + e.doc_id + "'");
        if (mode == CountMode::per_paragraph && !seen.emplace(e.para_id, e.topic_id).second) continue;
        out.push_back({e.topic_id, doc->ticker, doc->fiscal_quarter, doc->call_date, e.para_id});
    }
    return out;
}

std::optional<QuarterRange> company_quarters(const Corpus& corpus, std::string_view ticker) {
    std::optional<QuarterRange> range;
    for (const auto& doc : corpus.documents()) {
        if (doc.ticker != ticker) continue;
        if (!range) range = QuarterRange{doc.fiscal_quarter, doc.fiscal_quarter};
        range->first = std::min(range->first, doc.fiscal_quarter);
        range->last = std::max(range->last, doc.fiscal_quarter);
    }
    return range;
}

std::vector<double> MentionSeries::counts() const {
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(static_cast<double>(p.second));
    return out;
}

MentionSeries mention_series(std::span<const Mention> mentions, const Ontology& tree, const TopicId& topic,
                             std::string_view company, QuarterRange range, bool rollup) {
    tree.at(topic);
    if (range.last < range.first) throw ParameterError("quarter range is reversed");

    TopicSet wanted{topic};
    if (rollup)
        for (const auto& d : tree.descendants(topic)) wanted.insert(d);

    MentionSeries s{topic, std::string(company), {}};
    for (auto q = range.first; q <= range.last; q = q.next()) s.points.emplace_back(q, 0);
    for (const auto& m : mentions) {
        if (m.ticker != company || !wanted.count(m.topic_id)) continue;
        if (m.quarter < range.first || range.last < m.quarter) continue;
        ++s.points[static_cast<std::size_t>(m.quarter.ordinal() - range.first.ordinal())].second;
    }
    return s;
}

std::string_view to_string(TrendDirection d) {
    switch (d) {
        case TrendDirection::up: return "up";
        case TrendDirection::down: return "down";
        case TrendDirection::none: break;
    }
    return "none";
}

TrendDirection classify_trend(double tau, double p_value, double alpha) {
    if (p_value <= alpha && tau > 0) return TrendDirection::up;
    if (p_value <= alpha && tau < 0) return TrendDirection::down;
    return TrendDirection::none;
}

TrendReport detect_trends(std::span<const Mention> mentions, const Corpus& corpus, const Ontology& tree,
                          std::string_view company, std::span<const TopicId> topics, const TopicSet& products,
                          const TrendOptions& options) {
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw ParameterError("alpha must be in (0, 1)");
    if (options.min_quarters < 3) throw ParameterError("min_quarters must be at least 3");

    TrendReport report;
    report.company = std::string(company);
    report.alpha = options.alpha;

    std::vector<TopicId> candidates(topics.begin(), topics.end());
    if (candidates.empty())
        for (const auto& [id, count] : company_counts(mentions, company)) candidates.push_back(id);
    std::sort(candidates.begin(), candidates.end(),
              [&](const TopicId& a, const TopicId& b) { return name_less(tree, a, b); });
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    const auto range = company_quarters(corpus, company);
    for (const auto& id : candidates) {
        if (!tree.get(id)) {
            report.skipped.push_back({id, id_str(id), "unknown topic"});
            continue;
        }
        const auto& name = tree.at(id).name;
        if (products.count(id)) {
            report.skipped.push_back({id, name, "product topic"});
            continue;
        }
        if (!range || range->size() < options.min_quarters) {
            report.skipped.push_back({id, name, "fewer than " + std::to_string(options.min_quarters) + " quarters"});
            continue;
        }
        TrendResult r;
        r.topic_id = id;
        r.name = name;
        r.company = report.company;
        r.series = mention_series(mentions, tree, id, company, *range, options.rollup);
        const auto counts = r.series.counts();
        const auto kt = stats::kendall_tau(counts);
        r.tau = kt.tau;
        r.p_value = kt.p_value;
        r.direction = classify_trend(r.tau, r.p_value, options.alpha);

        std::vector<stats::Point> pts;
        for (const auto& [q, c] : r.series.points) pts.push_back({static_cast<double>(q.ordinal()), static_cast<double>(c)});
        const auto window = static_cast<std::size_t>(std::ceil(options.loess_span * static_cast<double>(pts.size())));
        if (window >= static_cast<std::size_t>(options.loess_degree) + 1)
            r.smoothed = stats::loess_smooth(pts, options.loess_span, options.loess_degree);

        switch (r.direction) {
            case TrendDirection::up: report.trending_up.push_back(std::move(r)); break;
            case TrendDirection::down: report.trending_down.push_back(std::move(r)); break;
            case TrendDirection::none: report.no_trend.push_back(std::move(r)); break;
        }
    }

    auto by_strength = [&](const TrendResult& a, const TrendResult& b) {
        if (std::abs(a.tau) != std::abs(b.tau)) return std::abs(a.tau) > std::abs(b.tau);
        return name_less(tree, a.topic_id, b.topic_id);
    };
    std::sort(report.trending_up.begin(), report.trending_up.end(), by_strength);
    std::sort(report.trending_down.begin(), report.trending_down.end(), by_strength);
    std::sort(report.no_trend.begin(), report.no_trend.end(), by_strength);
    return report;
}

std::vector<TopicId> top_topics(std::span<const Mention> mentions, const Ontology& tree, std::string_view company,
                                std::size_t n, const TopicSet& products) {
    if (n == 0) throw ParameterError("top_topics n must be at least 1");
    std::vector<std::pair<TopicId, std::size_t>> ranked;
    for (const auto& [id, count] : company_counts(mentions, company))
        if (!products.count(id)) ranked.emplace_back(id, count);
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return name_less(tree, a.first, b.first);
    });
    if (ranked.size() > n) ranked.resize(n);
    std::vector<TopicId> out;
    for (const auto& r : ranked) out.push_back(r.first);
    return out;
}

JaccardMatrix jaccard_matrix(std::span<const Mention> mentions, const Ontology& tree,
                             std::span<const std::string> companies, std::size_t n, const TopicSet& products) {
    if (companies.size() < 2) throw ParameterError("jaccard_matrix needs at least two companies");
    std::vector<TopicSet> sets;
    for (const auto& c : companies) {
        auto top = top_topics(mentions, tree, c, n, products);
        sets.emplace_back(top.begin(), top.end());
    }
    JaccardMatrix m;
    m.companies.assign(companies.begin(), companies.end());
    m.values.assign(companies.size(), std::vector<double>(companies.size(), 1.0));
    for (std::size_t i = 0; i < companies.size(); ++i)
        for (std::size_t j = i + 1; j < companies.size(); ++j) m.values[i][j] = m.values[j][i] = jaccard(sets[i], sets[j]);
    return m;
}

std::vector<std::string> common_topics(std::span<const Mention> mentions, const Ontology& tree,
                                       std::string_view company_a, std::string_view company_b, std::size_t n,
                                       bool leaf_only, const TopicSet& products) {
    auto a = top_topics(mentions, tree, company_a, n, products);
    auto b_vec = top_topics(mentions, tree, company_b, n, products);
    TopicSet b(b_vec.begin(), b_vec.end());
    std::vector<TopicId> both;
    for (const auto& id : a)
        if (b.count(id)) both.push_back(id);
    return labels_of(tree, both, leaf_only);
}

std::vector<std::string> unique_topics(std::span<const Mention> mentions, const Ontology& tree,
                                       std::string_view company_a, std::string_view company_b, std::size_t n,
                                       bool leaf_only, const TopicSet& products) {
    auto a = top_topics(mentions, tree, company_a, n, products);
    auto b_vec = top_topics(mentions, tree, company_b, n, products);
    TopicSet b(b_vec.begin(), b_vec.end());
    std::vector<TopicId> only_a;
    for (const auto& id : a)
        if (!b.count(id)) only_a.push_back(id);
    return labels_of(tree, only_a, leaf_only);
}

std::vector<EmergingTopic> emerging_topics(std::span<const Mention> mentions, const Ontology& tree, Date split,
                                           std::size_t min_late_mentions, const TopicSet& products,
                                           std::optional<Date> late_end) {
    if (min_late_mentions < 1) throw ParameterError("min_late_mentions must be at least 1");
    if (late_end && *late_end < split) throw ParameterError("late window ends before the split");

    std::map<TopicId, EmergingTopic> tally;
    for (const auto& m : mentions) {
        if (products.count(m.topic_id)) continue;
        auto& t = tally[m.topic_id];
        t.topic_id = m.topic_id;
        if (m.call_date < split) ++t.early_count;
        else if (!late_end || m.call_date <= *late_end) ++t.late_count;
    }
    std::vector<EmergingTopic> out;
    for (auto& [id, t] : tally) {
        if (t.early_count != 0 || t.late_count < min_late_mentions) continue;
        t.name = name_of(tree, id);
        out.push_back(std::move(t));
    }
    std::sort(out.begin(), out.end(), [&](const EmergingTopic& a, const EmergingTopic& b) {
        if (a.late_count != b.late_count) return a.late_count > b.late_count;
        return name_less(tree, a.topic_id, b.topic_id);
    });
    return out;
}

DiscoveryTimeline discovery_timeline(const Ontology& tree, std::optional<LoessParams> smooth) {
    std::map<Date, std::size_t> per_day;
    for (const auto& node : tree.nodes()) {
        if (tree.seeded_on() && node.created_on == *tree.seeded_on()) continue;
        ++per_day[std::chrono::floor<std::chrono::days>(node.created_on)];
    }
    DiscoveryTimeline t;
    for (const auto& [day, count] : per_day) t.points.push_back({day, count});
    if (smooth && t.points.size() >= 2) {
        const auto window = static_cast<std::size_t>(std::ceil(smooth->span * static_cast<double>(t.points.size())));
        if (window >= static_cast<std::size_t>(smooth->degree) + 1) {
            std::vector<stats::Point> pts;
            for (const auto& p : t.points)
                pts.push_back({static_cast<double>(p.date.time_since_epoch().count()), static_cast<double>(p.new_topics)});
            t.smoothed = stats::loess_smooth(pts, smooth->span, smooth->degree);
        }
    }
    return t;
}

CoherenceReport coherence_eval(const Ontology& tree, const EmbeddingProvider& embedder, std::size_t num_parents,
                               std::uint64_t seed) {
    if (num_parents == 0) throw ParameterError("num_parents must be at least 1");
    std::vector<const TopicNode*> parents, eligible;
    for (const auto& node : tree.nodes()) {
        if (node.child_ids.empty()) continue;
        parents.push_back(&node);
        if (node.child_ids.size() >= 2) eligible.push_back(&node);
    }
    if (eligible.size() < num_parents || parents.size() < 2)
        throw InsufficientDataError("coherence needs " + std::to_string(num_parents) +
                                    " parents with two or more children and at least two parents overall");

    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < num_parents; ++i) {
        const auto j = i + static_cast<std::size_t>(rng() % (eligible.size() - i));
        std::swap(eligible[i], eligible[j]);
    }

    CoherenceReport report;
    report.seed = seed;
    auto embed_one = [&](const std::string& s) {
        auto v = embedder.embed({s});
        if (v.size() != 1) throw ProviderError("embedding provider returned wrong count", 1, 0, true);
        return v.front();
    };
    for (std::size_t i = 0; i < num_parents; ++i) {
        const auto* parent = eligible[i];
        std::vector<const TopicNode*> others;
        for (const auto* p : parents)
            if (p != parent) others.push_back(p);
        const auto* random_parent = others[static_cast<std::size_t>(rng() % others.size())];

        CoherenceRow row;
        row.parent_name = parent->name;
        row.random_parent_name = random_parent->name;
        const auto true_vec = embed_one(parent->name);
        const auto random_vec = embed_one(random_parent->name);
        const auto take = std::min(kCoherenceMaxChildren, parent->child_ids.size());
        for (std::size_t c = 0; c < take; ++c) {
            const auto& child = tree.at(parent->child_ids[c]).name;
            row.sampled_children.push_back(child);
            const auto v = embed_one(child);
            row.avg_cos_true += cosine_similarity(true_vec, v);
            row.avg_cos_random += cosine_similarity(random_vec, v);
        }
        row.avg_cos_true /= static_cast<double>(take);
        row.avg_cos_random /= static_cast<double>(take);
        report.overall_true_avg += row.avg_cos_true;
        report.overall_random_avg += row.avg_cos_random;
        report.rows.push_back(std::move(row));
    }
    report.overall_true_avg /= static_cast<double>(num_parents);
    report.overall_random_avg /= static_cast<double>(num_parents);
    return report;
}

TopicSet classify_product_topics(const Ontology& tree, std::span<const std::string> product_labels,
                                 const ChatProvider* classifier, std::vector<std::string>* warnings) {
    TopicSet out;
    for (const auto& label : product_labels) {
        if (const auto* node = tree.find_by_name_or_alias(label)) out.insert(node->topic_id);
        else if (warnings) warnings->push_back("product label '" + label + "' is not in the ontology");
    }
    if (!classifier) return out;

    TopicSet flagged;
    try {
        for (const auto& node : tree.nodes()) {
            ChatRequest request;
            request.system_prompt = std::string(prompts::product_classifier());
            request.user_message = node.name;
            auto answer = text::to_lower(text::trim(classifier->chat(request).text));
            if (answer.rfind("yes", 0) == 0) flagged.insert(node.topic_id);
        }
    } catch (const Error& e) {
        if (warnings) warnings->push_back(std::string("product classifier failed, using configured list only: ") + e.what());
        return out;
    }
    out.insert(flagged.begin(), flagged.end());
    return out;
}

json to_json(const MentionSeries& s) {
    json points = json::array();
    for (const auto& [q, c] : s.points) points.push_back({{"quarter", q.str()}, {"count", c}});
    return {{"topic_id", id_str(s.topic_id)}, {"company", s.company}, {"points", std::move(points)}};
}

json to_json(const TrendResult& r) {
    json points = json::array();
    for (std::size_t i = 0; i < r.series.points.size(); ++i) {
        json p = {{"quarter", r.series.points[i].first.str()}, {"count", r.series.points[i].second}};
        if (i < r.smoothed.size()) p["smoothed"] = r.smoothed[i];
        points.push_back(std::move(p));
    }
    return {{"topic_id", id_str(r.topic_id)}, {"name", r.name},
            {"company", r.company},              {"tau", r.tau},
            {"p_value", r.p_value},              {"direction", std::string(to_string(r.direction))},
            {"points", std::move(points)}};
}

json to_json(const TrendReport& r) {
    auto list = [](const std::vector<TrendResult>& v) {
        json a = json::array();
        for (const auto& t : v) a.push_back(to_json(t));
        return a;
    };
    json skipped = json::array();
    for (const auto& s : r.skipped)
        skipped.push_back({{"topic_id", id_str(s.topic_id)}, {"name", s.name}, {"reason", s.reason}});
    return {{"company", r.company},
            {"alpha", r.alpha},
            {"trending_up", list(r.trending_up)},
            {"trending_down", list(r.trending_down)},
            {"no_trend", list(r.no_trend)},
            {"skipped", std::move(skipped)}};
}

json to_json(const JaccardMatrix& m) { return {{"companies", m.companies}, {"values", m.values}}; }

json to_json(const EmergingTopic& e) {
    return {{"topic_id", id_str(e.topic_id)},
            {"name", e.name},
            {"early_count", e.early_count},
            {"late_count", e.late_count}};
}

json to_json(const DiscoveryTimeline& t) {
    json points = json::array();
    for (std::size_t i = 0; i < t.points.size(); ++i) {
        json p = {{"date", format_date(t.points[i].date)}, {"new_topics", t.points[i].new_topics}};
        if (i < t.smoothed.size()) p["smoothed"] = t.smoothed[i];
        points.push_back(std::move(p));
    }
    return {{"points", std::move(points)}};
}

json to_json(const CoherenceReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"parent_name", row.parent_name},
                        {"sampled_children", row.sampled_children},
                        {"avg_cos_true", row.avg_cos_true},
                        {"random_parent_name", row.random_parent_name},
                        {"avg_cos_random", row.avg_cos_random}});
    return {{"rows", std::move(rows)},
            {"overall_true_avg", r.overall_true_avg},
            {"overall_random_avg", r.overall_random_avg},
            {"seed", r.seed}};
}

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string to_csv(const TrendReport& r) {
    std::ostringstream out;
    out << "company,topic_id,name,direction,tau,p_value,quarter,count,smoothed\n";
    auto rows = [&](const std::vector<TrendResult>& v) {
        for (const auto& t : v)
            for (std::size_t i = 0; i < t.series.points.size(); ++i) {
                out << csv_field(t.company) << ',' << id_str(t.topic_id) << ',' << csv_field(t.name) << ','
                    << to_string(t.direction) << ',' << fmt(t.tau) << ',' << fmt(t.p_value) << ','
                    << t.series.points[i].first.str() << ',' << t.series.points[i].second << ','
                    << (i < t.smoothed.size() ? fmt(t.smoothed[i]) : "") << '\n';
            }
    };
    rows(r.trending_up);
    rows(r.trending_down);
    rows(r.no_trend);
    return out.str();
}

std::string to_csv(const JaccardMatrix& m) {
    std::ostringstream out;
    out << "company";
    for (const auto& c : m.companies) out << ',' << csv_field(c);
    out << '\n';
    for (std::size_t i = 0; i < m.companies.size(); ++i) {
        out << csv_field(m.companies[i]);
        for (double v : m.values[i]) out << ',' << fmt(v);
        out << '\n';
    }
    return out.str();
}

std::string to_csv(std::span<const EmergingTopic> topics) {
    std::ostringstream out;
    out << "topic_id,name,early_count,late_count\n";
    for (const auto& t : topics)
        out << id_str(t.topic_id) << ',' << csv_field(t.name) << ',' << t.early_count << ',' << t.late_count << '\n';
    return out.str();
}

std::string to_csv(const DiscoveryTimeline& t) {
    std::ostringstream out;
    out << "date,new_topics,smoothed\n";
    for (std::size_t i = 0; i < t.points.size(); ++i)
        out << format_date(t.points[i].date) << ',' << t.points[i].new_topics << ','
            << (i < t.smoothed.size() ? fmt(t.smoothed[i]) : "") << '\n';
    return out.str();
}

std::string to_csv(const CoherenceReport& r) {
    std::ostringstream out;
    out << "parent_name,sampled_children,avg_cos_true,random_parent_name,avg_cos_random\n";
    for (const auto& row : r.rows) {
        std::string children;
        for (const auto& c : row.sampled_children) children += (children.empty() ? "" : "|") + c;
        out << csv_field(row.parent_name) << ',' << csv_field(children) << ',' << fmt(row.avg_cos_true) << ','
            << csv_field(row.random_parent_name) << ',' << fmt(row.avg_cos_random) << '\n';
    }
    return out.str();
}

}  // namespace calltopics
