#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Dense>

#include "calltopics/error.hpp"

namespace testsupport {

using nlohmann::json;

namespace {

bool type_matches(const std::string& t, const json& v) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    return false;
}

void check(const json& s, const json& v, const std::string& at, std::vector<std::string>& errs) {
    if (s.contains("type")) {
        bool ok = false;
        if (s["type"].is_array()) {
            for (const auto& t : s["type"]) ok = ok || type_matches(t.get<std::string>(), v);
        } else {
            ok = type_matches(s["type"].get<std::string>(), v);
        }
        if (!ok) {
            errs.push_back(at + ": expected type " + s["type"].dump() + ", got " + v.dump().substr(0, 60));
            return;
        }
    }
    if (s.contains("enum") && std::find(s["enum"].begin(), s["enum"].end(), v) == s["enum"].end())
        errs.push_back(at + ": value not in enum");
    if (v.is_number()) {
        if (s.contains("minimum") && v.get<double>() < s["minimum"].get<double>()) errs.push_back(at + ": below minimum");
        if (s.contains("maximum") && v.get<double>() > s["maximum"].get<double>()) errs.push_back(at + ": above maximum");
    }
    if (v.is_string()) {
        const auto n = v.get_ref<const std::string&>().size();
        if (s.contains("minLength") && n < s["minLength"].get<std::size_t>()) errs.push_back(at + ": string too short");
        if (s.contains("maxLength") && n > s["maxLength"].get<std::size_t>()) errs.push_back(at + ": string too long");
    }
    if (v.is_array()) {
        if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) errs.push_back(at + ": too few items");
        if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) errs.push_back(at + ": too many items");
        if (s.contains("items"))
            for (std::size_t i = 0; i < v.size(); ++i) check(s["items"], v[i], at + "[" + std::to_string(i) + "]", errs);
    }
    if (v.is_object()) {
        if (s.contains("required"))
            for (const auto& k : s["required"])
                if (!v.contains(k.get<std::string>())) errs.push_back(at + ": missing " + k.get<std::string>());
        const auto props = s.value("properties", json::object());
        for (const auto& [k, child] : v.items()) {
            if (props.contains(k)) check(props[k], child, at + "." + k, errs);
            else if (s.contains("additionalProperties") && s["additionalProperties"] == false)
                errs.push_back(at + ": unexpected key " + k);
        }
    }
}

}  // namespace

std::vector<std::string> schema_errors(const json& schema, const json& doc) {
    std::vector<std::string> errs;
    check(schema, doc, "$", errs);
    return errs;
}

json load_schema(const std::string& name) {
    std::ifstream in(source_dir() + "/schemas/" + name + ".schema.json");
    return json::parse(in);
}

KendallOracle kendall_oracle(const std::vector<double>& y) {
    const std::size_t n = y.size();
    auto s_of = [&](const std::vector<std::size_t>& order) {
        long long s = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double a = y[order[i]], b = y[order[j]];
                if (b > a) ++s;
                else if (b < a) --s;
            }
        return s;
    };
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);

    long long concordant = 0, discordant = 0, tied_y = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (y[j] > y[i]) ++concordant;
            else if (y[j] < y[i]) ++discordant;
            else ++tied_y;
        }
    const double pairs = static_cast<double>(n * (n - 1) / 2);
    if (tied_y == static_cast<long long>(pairs)) return {0.0, 1.0};
    const double tau = static_cast<double>(concordant - discordant) / std::sqrt(pairs * (pairs - static_cast<double>(tied_y)));

    const long long observed = std::llabs(concordant - discordant);
    long long total = 0, extreme = 0;
    do {
        ++total;
        if (std::llabs(s_of(idx)) >= observed) ++extreme;
    } while (std::next_permutation(idx.begin(), idx.end()));
    return {tau, static_cast<double>(extreme) / static_cast<double>(total)};
}

std::vector<double> loess_oracle(const std::vector<calltopics::stats::Point>& pts, double span, int degree) {
    const std::size_t n = pts.size();
    const auto q = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(span * static_cast<double>(n) - 1e-12)));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(pts[a].x - pts[i].x) < std::abs(pts[b].x - pts[i].x);
        });
        order.resize(q);
        double dmax = 0;
        for (auto j : order) dmax = std::max(dmax, std::abs(pts[j].x - pts[i].x));

        const int cols = degree + 1;
        Eigen::MatrixXd A(static_cast<Eigen::Index>(q), cols);
        Eigen::VectorXd b(static_cast<Eigen::Index>(q));
        double wsum = 0, wy = 0;
        for (std::size_t r = 0; r < q; ++r) {
            const auto j = order[r];
            const double d = std::abs(pts[j].x - pts[i].x);
            const double w = dmax > 0 ? std::pow(1 - std::pow(d / dmax, 3), 3) : 1.0;
            const double sw = std::sqrt(w);
            A(static_cast<Eigen::Index>(r), 0) = sw;
            if (degree == 1) A(static_cast<Eigen::Index>(r), 1) = sw * (pts[j].x - pts[i].x);
            b(static_cast<Eigen::Index>(r)) = sw * pts[j].y;
            wsum += w;
            wy += w * pts[j].y;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() < cols) {
            out[i] = wy / wsum;
            continue;
        }
        out[i] = qr.solve(b)(0);
    }
    return out;
}

std::filesystem::path temp_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    auto dir = std::filesystem::temp_directory_path() / ("calltopics_" + tag + "_" + std::to_string(rng() % 1000000007));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

calltopics::Ontology example_parent_tree() {
    calltopics::Ontology tree;
    const std::vector<calltopics::SeedTopic> spec = {
        {"Technology and Innovation", {"5G", "Automation", "Batteries"}},
        {"Environmental Issues", {"Air Quality", "Biodiversity", "Carbon Neutral"}},
        {"Financial Technology", {"Digital Payments", "Digital Wallet", "Fintech"}},
    };
    calltopics::seed(tree, spec, calltopics::parse_timestamp("2024-01-01T00:00:00Z"));
    return tree;
}

std::string source_dir() { return CALLTOPICS_SOURCE_DIR; }

}  // namespace testsupport

namespace testsupport {

std::vector<std::string> ontology_violations(const calltopics::Ontology& tree) {
    using namespace calltopics;
    std::vector<std::string> bad;
    std::map<std::string, std::string> label_owner;
    std::size_t roots = 0;
    for (const auto& node : tree.nodes()) {
        const auto id = id_str(node.topic_id);
        int steps = 0;
        for (const TopicNode* p = &node; p->parent_id; p = tree.get(*p->parent_id)) {
            if (!tree.get(*p->parent_id)) {
                bad.push_back("dangling parent at " + node.name);
                break;
            }
            if (++steps > static_cast<int>(tree.size())) {
                bad.push_back("cycle through " + node.name);
                break;
            }
        }
        if (steps >= tree.max_depth()) bad.push_back("too deep: " + node.name);
        if (!node.parent_id) {
            ++roots;
            if (std::find(tree.root_ids().begin(), tree.root_ids().end(), node.topic_id) == tree.root_ids().end())
                bad.push_back("root not listed: " + node.name);
        } else if (const auto* parent = tree.get(*node.parent_id)) {
            if (std::count(parent->child_ids.begin(), parent->child_ids.end(), node.topic_id) != 1)
                bad.push_back("parent does not list child exactly once: " + node.name);
        }
        for (const auto& c : node.child_ids) {
            const auto* child = tree.get(c);
            if (!child || child->parent_id != node.topic_id) bad.push_back("child link mismatch under " + node.name);
        }
        std::vector<std::string> labels = node.aliases;
        labels.push_back(node.name);
        for (const auto& label : labels) {
            std::string key;
            std::istringstream words(label);
            for (std::string w; words >> w;) {
                if (!key.empty()) key += ' ';
                for (auto& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
                key += w;
            }
            auto [it, fresh] = label_owner.emplace(key, id);
            if (!fresh) bad.push_back("label used twice: " + label);
            const auto* hit = tree.find_by_name_or_alias(label);
            if (!hit || hit->topic_id != node.topic_id) bad.push_back("index disagrees for " + label);
        }
    }
    if (roots != tree.root_ids().size()) bad.push_back("root count mismatch");
    return bad;
}

RandomOpsResult random_ontology_ops(std::uint64_t seed, std::size_t ops) {
    using namespace calltopics;
    RandomOpsResult r;
    std::mt19937_64 rng(seed);
    const auto t0 = parse_timestamp("2024-01-01T00:00:00Z");
    auto label = [&] {
        auto n = rng() % 400;
        std::string s = "Topic " + std::to_string(n);
        if (rng() % 4 == 0) s = "  topic   " + std::to_string(n) + " ";
        return s;
    };
    for (std::size_t op = 0; op < ops; ++op) {
        const auto now = t0 + std::chrono::seconds(static_cast<long long>(op));
        const auto& nodes = r.tree.nodes();
        try {
            if (nodes.empty() || rng() % 3 != 0) {
                std::optional<TopicId> parent;
                if (!nodes.empty() && rng() % 4 != 0) parent = nodes[rng() % nodes.size()].topic_id;
                r.tree.insert_node(label(), parent, now);
                ++r.inserts;
            } else {
                r.tree.add_alias(nodes[rng() % nodes.size()].topic_id, label(), now);
                ++r.aliases;
            }
        } catch (const ConflictError&) {
            ++r.rejected;
        } catch (const DepthError&) {
            ++r.rejected;
        }
        if (r.violations.empty()) r.violations = ontology_violations(r.tree);
    }
    return r;
}

}  // namespace testsupport

namespace testsupport {

PlantedOverlap planted_overlap_fixture() {
    using namespace calltopics;
    PlantedOverlap f;
    const auto t0 = parse_timestamp("2024-01-01T00:00:00Z");
    for (int i = 1; i <= 12; ++i) f.tree.insert_node("T" + std::to_string(i), std::nullopt, t0);
    auto id = [&](int i) { return f.tree.find_by_name_or_alias("T" + std::to_string(i))->topic_id; };
    const std::vector<std::pair<std::string, std::vector<std::pair<int, int>>>> plan = {
        {"AAA", {{1, 9}, {2, 8}, {3, 7}, {4, 6}, {10, 2}}},
        {"BBB", {{3, 9}, {4, 8}, {5, 7}, {6, 6}, {11, 1}}},
        {"CCC", {{1, 5}, {7, 9}, {8, 8}, {9, 7}, {12, 3}}},
    };
    const FiscalQuarter q{2023, 1};
    const auto day = parse_date("2023-04-20");
    for (const auto& [ticker, counts] : plan)
        for (const auto& [topic, count] : counts)
            for (int k = 0; k < count; ++k)
                f.mentions.push_back({id(topic), ticker, q, day, ticker + "-p" + std::to_string(k)});
    return f;
}

calltopics::Ontology lexical_overlap_tree() {
    using namespace calltopics;
    const std::vector<SeedTopic> spec = {
        {"Supply Chain", {"Supply Chain Disruption", "Supply Chain Costs", "Global Supply Chain"}},
        {"Artificial Intelligence", {"Generative Artificial Intelligence", "Artificial Intelligence Chips",
                                     "Artificial Intelligence Regulation"}},
        {"Capital Returns", {"Capital Returns Policy", "Shareholder Capital Returns", "Capital Returns Pace"}},
        {"Battery Technology", {"Solid State Battery Technology", "Battery Technology Costs",
                                "Battery Technology Partners"}},
        {"Interest Rates", {"Rising Interest Rates", "Interest Rates Outlook", "Interest Rates Hedging"}},
        {"Labor Market", {"Labor Market Tightness", "Labor Market Wages", "Union Labor Market"}},
    };
    Ontology tree;
    seed(tree, spec, parse_timestamp("2024-01-01T00:00:00Z"));
    return tree;
}

SyntheticRun run_synthetic(std::uint64_t seed_value) {
    using namespace calltopics;
    SyntheticRun r{generate_synthetic(default_synthetic_spec(seed_value)), Ontology{}, {}};
    seed(r.tree, r.bundle.seeds, Timestamp{});
    MockProvider mock(r.bundle.script);
    Ontologist agent(mock, mock, r.bundle.pipeline);
    r.run = agent.enrich_corpus(r.bundle.corpus, r.tree);
    return r;
}

}  // namespace testsupport

namespace testsupport {

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

}  // namespace

CliResult run_cli(const std::vector<std::string>& args, const std::filesystem::path& cwd) {
    static int counter = 0;
    const auto scratch = std::filesystem::temp_directory_path() /
                         ("calltopics_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::string cmd = "cd " + shell_quote(cwd.string()) + " && " + shell_quote(CALLTOPICS_CLI);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " > " + shell_quote(scratch.string() + ".out") + " 2> " + shell_quote(scratch.string() + ".err");
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(scratch.string() + ".out");
    r.err = read_file(scratch.string() + ".err");
    std::filesystem::remove(scratch.string() + ".out");
    std::filesystem::remove(scratch.string() + ".err");
    return r;
}

}  // namespace testsupport

namespace testsupport {

const char* const kMatcherExampleReply = R"(<structured_output>
{
    "query_topic": "Web user acquisition",
    "matches": [
        {
            "topic": "Online customer acquisition",
            "similarity": 95
        },
        {
            "topic": "User growth techniques",
            "similarity": 90
        }
    ],
    "detailed_analysis": {
        "matched_topics": [
            {
                "topic": "Online customer acquisition",
                "similarity": 95,
                "reasoning": "Both terms describe the specific process of gaining new users through online channels",
                "parent_subset_check": "Neither term is broader than the other; they describe the same scope of activity"
            },
            {
                "topic": "User growth techniques",
                "similarity": 90,
                "reasoning": "Both terms refer to the same core activity of expanding user base",
                "parent_subset_check": "Both terms operate at the same level of specificity, focusing on the tactical aspect of gaining users"
            }
        ]
    }
}
</structured_output>)";
// Example 1 has no closing tag.
const char* const kRoboadvisorReply = "<structured_output>\n{    \n    \"reasoning\": \"Roboadvisor can be assigned to "
                                  "super-parent Financial Technology, and within that I found Fintech as the most "
                                  "granular parent topic.\",\n    \"parent\": \"Fintech\"\n}\n";
const char* const kRoboticsReply =
    "<structured_output>\n{    \n    \"reasoning\": \"Robotics can be assigned to super-parent Technology and "
    "Innovation, and within that I did not find any more granular parents for Robotics.\",\n    \"parent\": "
    "\"Technology and Innovation\"\n}\n\n</structured_output>";

}  // namespace testsupport
