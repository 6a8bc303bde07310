#include "calltopics/synth.hpp"

#include <fstream>
#include <random>

#include "calltopics/error.hpp"
#include "calltopics/text.hpp"

namespace calltopics {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kFiller[] = {
    "Thank you for joining us on the call today.",
    "Our teams executed well throughout the period.",
    "We appreciate the continued support of our shareholders.",
    "Let me walk through a few highlights before we open the line.",
    "The quarter played out broadly in line with our expectations.",
    "We remain focused on disciplined execution.",
    "Customer feedback has been encouraging across regions.",
    "We will share more detail at the upcoming investor day.",
    "Our employees deserve credit for the progress this year.",
    "We continue to monitor conditions closely.",
    "Next question, please.",
    "That concludes the prepared remarks.",
};

constexpr const char* kMentionTemplates[] = {
    "Management noted progress on {} in area {}.",
    "We saw notable developments around {} in segment {}.",
    "Analysts asked about {} during item {}.",
    "Our update on {} covers program {}.",
};

std::string fill(std::string_view tmpl, std::string_view keyword, std::size_t n) {
    std::string out(tmpl);
    auto first = out.find("{}");
    out.replace(first, 2, keyword);
    auto second = out.find("{}");
    out.replace(second, 2, std::to_string(n));
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
}

}  // namespace

void SyntheticCorpusSpec::validate() const {
    if (companies.empty()) throw ConfigError("synthetic spec needs at least one company");
    if (quarters < 1) throw ConfigError("synthetic spec needs at least one quarter");
    if (paragraphs_per_call < 2) throw ConfigError("paragraphs_per_call must be at least 2");
    for (const auto& s : schedules) {
        bool known = false;
        for (const auto& c : companies) known = known || c.ticker == s.company;
        if (!known) throw ConfigError("schedule for unknown company '" + s.company + "'");
        if (s.keyword.empty() || s.topic.empty()) throw ConfigError("schedule needs a keyword and a topic");
        if (static_cast<int>(s.counts.size()) != quarters)
            throw ConfigError("schedule for '" + s.topic + "' must have one count per quarter");
        for (int c : s.counts)
            if (c < 0) throw ConfigError("schedule counts must be non-negative");
    }
}

SyntheticCorpusSpec SyntheticCorpusSpec::from_json(const json& j) {
    SyntheticCorpusSpec s;
    try {
        for (const auto& c : j.at("companies")) s.companies.push_back({c.at("ticker"), c.at("sector")});
        s.first_quarter = FiscalQuarter::parse(j.at("first_quarter").get<std::string>());
        s.quarters = j.at("quarters").get<int>();
        s.paragraphs_per_call = j.value("paragraphs_per_call", s.paragraphs_per_call);
        for (const auto& m : j.at("schedules"))
            s.schedules.push_back({m.at("company"), m.at("keyword"), m.at("topic"), m.at("counts").get<std::vector<int>>()});
        s.seeds = seed_spec_from_json(j.at("seeds"));
        for (const auto& r : j.value("synonyms", json::array()))
            s.synonyms.push_back({r.at("labels").get<std::vector<std::string>>(), r.value("similarity", 95)});
        const auto paths = j.value("parent_paths", json::object());
        for (const auto& [k, v] : paths.items()) s.parent_paths[k] = v.get<std::vector<std::string>>();
        s.products = j.value("products", std::vector<std::string>{});
        s.seed = j.value("seed", s.seed);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad synthetic spec: ") + e.what());
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("bad synthetic spec: ") + e.what());
    } catch (const ConflictError& e) {
        throw ConfigError(std::string("bad synthetic spec: ") + e.what());
    }
    s.validate();
    return s;
}

json SyntheticCorpusSpec::to_json() const {
    ordered_json j;
    j["companies"] = ordered_json::array();
    for (const auto& c : companies) j["companies"].push_back({{"ticker", c.ticker}, {"sector", c.sector}});
    j["first_quarter"] = first_quarter.str();
    j["quarters"] = quarters;
    j["paragraphs_per_call"] = paragraphs_per_call;
    j["schedules"] = ordered_json::array();
    for (const auto& s : schedules)
        j["schedules"].push_back({{"company", s.company}, {"keyword", s.keyword}, {"topic", s.topic}, {"counts", s.counts}});
    j["seeds"] = ordered_json::array();
    for (const auto& s : seeds) j["seeds"].push_back({{"name", s.name}, {"children", s.children}});
    j["synonyms"] = ordered_json::array();
    for (const auto& r : synonyms) j["synonyms"].push_back({{"labels", r.labels}, {"similarity", r.similarity}});
    j["parent_paths"] = parent_paths;
    j["products"] = products;
    j["seed"] = seed;
    return json::parse(j.dump());
}

SyntheticCorpusSpec default_synthetic_spec(std::uint64_t seed) {
    SyntheticCorpusSpec s;
    s.seed = seed;
    s.companies = {{"TSLA", "EV"}, {"GM", "EV"}, {"NVDA", "Semiconductors"}, {"AMD", "Semiconductors"}};
    s.seeds = {
        {"Technology and Innovation", {"5G", "Automation", "Batteries", "Artificial Intelligence"}},
        {"Environmental Issues", {"Air Quality", "Biodiversity", "Carbon Neutral"}},
        {"Financial Technology", {"Digital Payments", "Digital Wallet", "Fintech"}},
        {"Corporate Finance", {"Mergers & Acquisitions", "Dividends", "Guidance", "Capital Expenditures"}},
        {"Operations", {"Supply Chain", "Cost Reduction", "Manufacturing"}},
        {"Products", {"Vehicles", "Chips"}},
        {"Business Strategy", {"Pricing", "Market Expansion"}},
    };
    s.schedules = {
        {"TSLA", "supply chain", "Supply Chain", {9, 8, 7, 6, 5, 4, 3, 2, 1, 0}},
        {"TSLA", "cybertruck", "Cybertruck", {0, 1, 1, 2, 2, 3, 3, 4, 4, 5}},
        {"TSLA", "robotics", "Robotics", {0, 1, 0, 1, 0, 1, 0, 1, 0, 1}},
        {"TSLA", "acquisition strategy", "Acquisition Strategy", {0, 0, 0, 1, 0, 0, 0, 0, 0, 0}},
        {"TSLA", "batteries", "Batteries", {2, 2, 2, 2, 2, 2, 2, 2, 2, 2}},
        {"TSLA", "guidance", "Guidance", {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}},
        {"GM", "low-cost vehicles", "Low-cost vehicles", {0, 0, 0, 0, 1, 1, 1, 1, 1, 2}},
        {"GM", "m&a", "M&A", {1, 0, 1, 0, 0, 0, 0, 0, 0, 0}},
        {"GM", "chip shortage", "Chip Shortage", {2, 1, 0, 0, 0, 0, 0, 0, 0, 0}},
        {"GM", "batteries", "Batteries", {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}},
        {"GM", "dividend", "Dividends", {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}},
        {"GM", "guidance", "Guidance", {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}},
        {"NVDA", "generative ai", "Generative AI", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}},
        {"NVDA", "data center", "Data Center", {2, 2, 2, 2, 2, 2, 2, 2, 2, 2}},
        {"NVDA", "capital expenditures", "Capital Expenditures", {0, 0, 1, 0, 0, 1, 0, 0, 0, 0}},
        {"NVDA", "guidance", "Guidance", {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}},
        {"AMD", "data center", "Data Center", {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}},
        {"AMD", "mergers & acquisitions", "Mergers & Acquisitions", {0, 1, 0, 1, 0, 0, 0, 0, 0, 0}},
        {"AMD", "capex", "Capex", {1, 0, 0, 1, 0, 0, 0, 0, 0, 0}},
        {"AMD", "semiconductor shortage", "Semiconductor Shortage", {0, 1, 1, 0, 0, 0, 0, 0, 0, 0}},
        {"AMD", "roboadvisor", "Roboadvisor", {0, 0, 1, 0, 0, 0, 0, 0, 0, 0}},
        {"AMD", "dividend", "Dividends", {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}},
    };
    s.synonyms = {
        {{"M&A", "Mergers & Acquisitions"}, 95},
        {{"Capex", "Capital Expenditures"}, 95},
        {{"Semiconductor Shortage", "Chip Shortage"}, 90},
        {{"Acquisition Strategy", "Mergers & Acquisitions"}, 80},
    };
    s.parent_paths = {
        {"Generative AI", {"Technology and Innovation", "Artificial Intelligence"}},
        {"Cybertruck", {"Products", "Vehicles"}},
        {"Low-cost vehicles", {"Business Strategy", "Pricing"}},
        {"Chip Shortage", {"Operations", "Supply Chain"}},
        {"Semiconductor Shortage", {"Operations", "Supply Chain"}},
        {"Acquisition Strategy", {"Corporate Finance"}},
        {"Roboadvisor", {"Financial Technology", "Fintech"}},
        {"Robotics", {"Technology and Innovation"}},
        {"Data Center", {"Products", "Chips"}},
        {"Capex", {"Corporate Finance"}},
        {"M&A", {"Corporate Finance"}},
    };
    s.products = {"Cybertruck"};
    return s;
}

Date synthetic_call_date(FiscalQuarter quarter, std::size_t company_index) {
    using namespace std::chrono;
    const auto next = quarter.next();
    const auto first_month = year_month_day{year{next.year}, month{static_cast<unsigned>(3 * next.quarter - 2)}, day{1}};
    return sys_days{first_month} + days{19 + 2 * static_cast<int>(company_index)};
}

SyntheticBundle generate_synthetic(const SyntheticCorpusSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    constexpr std::size_t kFillerCount = std::size(kFiller);

    SyntheticBundle bundle;
    const auto paras = static_cast<std::size_t>(spec.paragraphs_per_call);
    for (std::size_t ci = 0; ci < spec.companies.size(); ++ci) {
        const auto& company = spec.companies[ci];
        auto quarter = spec.first_quarter;
        for (int qi = 0; qi < spec.quarters; ++qi, quarter = quarter.next()) {
            // Paragraph 0 is an opening remark; mentions rotate over the rest.
            std::vector<std::vector<std::string>> sentences(paras);
            std::size_t slot = 0, serial = 0;
            for (const auto& sched : spec.schedules) {
                if (sched.company != company.ticker) continue;
                for (int k = 0; k < sched.counts[static_cast<std::size_t>(qi)]; ++k) {
                    const auto* tmpl = kMentionTemplates[serial % std::size(kMentionTemplates)];
                    sentences[1 + slot % (paras - 1)].push_back(fill(tmpl, sched.keyword, ++serial));
                    ++slot;
                }
            }
            std::string raw;
            for (std::size_t p = 0; p < paras; ++p) {
                auto& block = sentences[p];
                const auto filler_count = 1 + static_cast<std::size_t>(rng() % 2);
                for (std::size_t f = 0; f < filler_count; ++f) {
                    const auto pos = static_cast<std::size_t>(rng() % (block.size() + 1));
                    block.insert(block.begin() + static_cast<std::ptrdiff_t>(pos), kFiller[rng() % kFillerCount]);
                }
                if (!raw.empty()) raw += "\n\n";
                for (std::size_t s = 0; s < block.size(); ++s) raw += (s ? " " : "") + block[s];
            }
            DocumentMetadata meta{company.ticker, company.sector, synthetic_call_date(quarter, ci), quarter};
            bundle.corpus.add(make_document(raw, meta));
        }
    }

    std::vector<KeywordRule> keywords;
    for (const auto& sched : spec.schedules) {
        bool seen = false;
        for (const auto& k : keywords) seen = seen || (k.keyword == sched.keyword && k.topic == sched.topic);
        if (!seen) keywords.push_back({sched.keyword, sched.topic});
    }
    bundle.script.retriever_keywords = std::move(keywords);
    bundle.script.matcher_synonyms = spec.synonyms;
    for (const auto& [topic, path] : spec.parent_paths) bundle.script.parent_paths[text::normalize_label(topic)] = path;
    bundle.script.ontologist_default_no_parent = true;
    bundle.script.product_names = spec.products;

    bundle.seeds = spec.seeds;
    bundle.products = spec.products;
    // The hashed-bag embedder cannot see that "M&A" and "Mergers &
    // Acquisitions" are related, so the shortlist must cover the whole tree.
    bundle.pipeline.candidate_k = 64;
    return bundle;
}

void write_synthetic(const SyntheticBundle& bundle, const SyntheticCorpusSpec& spec, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_corpus_jsonl(bundle.corpus, dir / "corpus.jsonl");
    write_text(dir / "mock_script.json", bundle.script.to_json().dump(2) + "\n");

    json seeds = json::array();
    for (const auto& s : bundle.seeds) seeds.push_back({{"name", s.name}, {"children", s.children}});
    write_text(dir / "seed_topics.json", seeds.dump(2) + "\n");
    write_text(dir / "products.json", json(bundle.products).dump(2) + "\n");
    write_text(dir / "synth_spec.json", spec.to_json().dump(2) + "\n");

    json config = {
        {"provider", {{"kind", "mock"}, {"mock_script", "mock_script.json"}}},
        {"pipeline", bundle.pipeline.to_json()},
        {"analytics",
         {{"alpha", 0.05},
          {"min_quarters", 6},
          {"top_n", 100},
          {"loess_span", 0.5},
          {"loess_degree", 1},
          {"min_late_mentions", 5},
          {"split_date", "2023-01-01"},
          {"product_topics", "products.json"},
          {"classify_products", false},
          {"coherence_parents", 5},
          {"rng_seed", spec.seed}}},
        {"io",
         {{"corpus", "corpus.jsonl"},
          {"seed_topics", "seed_topics.json"},
          {"ontology", "ontology.json"},
          {"enrichments", "enrichments.jsonl"},
          {"run_report", "run_report.json"}}},
    };
    write_text(dir / "config.json", config.dump(2) + "\n");
}

}  // namespace calltopics
