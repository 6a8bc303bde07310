// calltopics: ingest transcripts, build the topic ontology, report analytics.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "calltopics/analytics.hpp"
#include "calltopics/config.hpp"
#include "calltopics/corpus.hpp"
#include "calltopics/error.hpp"
#include "calltopics/ontologist.hpp"
#include "calltopics/ontology.hpp"
#include "calltopics/providers.hpp"
#include "calltopics/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace calltopics;

namespace {

class UsageError : public Error {
public:
    using Error::Error;
};

struct Globals {
    std::string config_path;
    std::string provider;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string format = "json";
};

struct Paths {
    std::string corpus, ontology, enrichments, seeds, mock_script, products;
};

struct Context {
    Globals g;
    Paths p;
    RunConfig config;

    void load() {
        if (!g.config_path.empty()) config = load_run_config(g.config_path);
        if (g.provider == "mock") config.provider.kind = ProviderKind::mock;
        else if (g.provider == "http") config.provider.kind = ProviderKind::http;
        if (g.seed) config.analytics.rng_seed = *g.seed;
    }

    fs::path pick(const std::string& flag, const fs::path& configured, const char* what) const {
        if (!flag.empty()) return flag;
        if (!configured.empty()) return configured;
        throw UsageError(std::string("no ") + what + " path: pass it as a flag or set it in --config");
    }

    bool csv() const { return g.format == "csv"; }
};

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
}

// Report commands write to --out-dir when given, else to stdout.
void emit(const Context& ctx, const std::string& stem, const json& j, const std::string& csv_text) {
    const bool csv = ctx.csv();
    const std::string body = csv ? csv_text : j.dump(2) + "\n";
    if (ctx.g.out_dir.empty()) {
        std::cout << body;
        return;
    }
    const auto path = fs::path(ctx.g.out_dir) / (stem + (csv ? ".csv" : ".json"));
    write_file(path, body);
    std::cout << json{{"written", json::array({path.string()})}}.dump() << "\n";
}

struct Providers {
    std::unique_ptr<MockProvider> mock;
    std::unique_ptr<HttpProvider> http;

    const ChatProvider& chat() const {
        if (mock) return *mock;
        return *http;
    }
    const EmbeddingProvider& embedder() const {
        if (mock) return *mock;
        return *http;
    }
};

Providers make_providers(const Context& ctx) {
    Providers p;
    if (ctx.config.provider.kind == ProviderKind::mock) {
        const auto path = ctx.pick(ctx.p.mock_script, ctx.config.provider.mock_script, "mock script");
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read mock script '" + path.string() + "'");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("mock script '" + path.string() + "' is not valid JSON: " + e.what());
        }
        p.mock = std::make_unique<MockProvider>(MockScript::from_json(j));
    } else {
        ctx.config.provider.http.validate();
        p.http = std::make_unique<HttpProvider>(ctx.config.provider.http);
    }
    return p;
}

Corpus read_corpus(const Context& ctx) {
    return load_corpus_jsonl(ctx.pick(ctx.p.corpus, ctx.config.io.corpus, "corpus"));
}

Ontology read_ontology(const Context& ctx) {
    return load_ontology(ctx.pick(ctx.p.ontology, ctx.config.io.ontology, "ontology"));
}

std::vector<Mention> read_mentions(const Context& ctx, const Corpus& corpus) {
    auto enrichments = load_enrichments_jsonl(ctx.pick(ctx.p.enrichments, ctx.config.io.enrichments, "enrichments"));
    return join_mentions(corpus, enrichments, ctx.config.analytics.count_mode);
}

TopicSet read_products(const Context& ctx, const Ontology& tree, std::vector<std::string>& warnings) {
    std::vector<std::string> labels;
    fs::path path = ctx.p.products.empty() ? ctx.config.analytics.product_topics : fs::path(ctx.p.products);
    if (!path.empty()) labels = load_product_labels(path);
    if (!ctx.config.analytics.classify_products) return classify_product_topics(tree, labels, nullptr, &warnings);
    auto providers = make_providers(ctx);
    return classify_product_topics(tree, labels, &providers.chat(), &warnings);
}

std::vector<std::string> tickers_of(const Corpus& corpus) {
    std::set<std::string> t;
    for (const auto& d : corpus.documents()) t.insert(d.ticker);
    return {t.begin(), t.end()};
}

int cmd_ingest(Context& ctx, const std::string& input, std::string output) {
    Corpus corpus;
    if (fs::is_directory(input)) corpus = ingest_directory(input);
    else if (fs::is_regular_file(input)) corpus = load_corpus_jsonl(input);
    else throw IngestError("input '" + input + "' is neither a directory nor a corpus file");

    if (output.empty())
        output = ctx.g.out_dir.empty() ? ctx.pick("", ctx.config.io.corpus, "output corpus").string()
                                       : (fs::path(ctx.g.out_dir) / "corpus.jsonl").string();
    if (fs::path(output).has_parent_path()) fs::create_directories(fs::path(output).parent_path());
    save_corpus_jsonl(corpus, output);

    std::size_t paragraphs = 0;
    for (const auto& d : corpus.documents()) paragraphs += d.paragraphs.size();
    std::cout << json{{"documents", corpus.size()}, {"paragraphs", paragraphs}, {"output", output}}.dump() << "\n";
    return 0;
}

int cmd_build(Context& ctx, const std::string& start_from) {
    const auto corpus = read_corpus(ctx);
    auto providers = make_providers(ctx);

    Ontology tree(ctx.config.pipeline.max_depth);
    if (!start_from.empty()) tree = load_ontology(start_from);
    const auto seeds_path = ctx.p.seeds.empty() ? ctx.config.io.seed_topics : fs::path(ctx.p.seeds);
    if (!seeds_path.empty()) seed(tree, load_seed_spec(seeds_path), ctx.config.io.seed_timestamp);

    Ontologist agent(providers.chat(), providers.embedder(), ctx.config.pipeline);
    auto run = agent.enrich_corpus(corpus, tree);

    fs::path ontology_out, enrichments_out, report_out;
    if (!ctx.g.out_dir.empty()) {
        ontology_out = fs::path(ctx.g.out_dir) / "ontology.json";
        enrichments_out = fs::path(ctx.g.out_dir) / "enrichments.jsonl";
        report_out = fs::path(ctx.g.out_dir) / "run_report.json";
    } else {
        ontology_out = ctx.pick(ctx.p.ontology, ctx.config.io.ontology, "ontology output");
        enrichments_out = ctx.pick(ctx.p.enrichments, ctx.config.io.enrichments, "enrichments output");
        report_out = ctx.config.io.run_report;
    }
    for (const auto& p : {ontology_out, enrichments_out, report_out})
        if (!p.empty() && p.has_parent_path()) fs::create_directories(p.parent_path());
    save_ontology(tree, ontology_out);
    save_enrichments_jsonl(run.enrichments, enrichments_out);
    const auto report = run.report.to_json();
    if (!report_out.empty()) write_file(report_out, report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_stats(Context& ctx, std::size_t bin_width) {
    json out = json::object();
    std::string csv = "section,metric,value\n";
    const bool want_corpus = !ctx.p.corpus.empty() || (ctx.p.ontology.empty() && !ctx.config.io.corpus.empty());
    const bool want_tree = !ctx.p.ontology.empty() || (ctx.p.corpus.empty() && !ctx.config.io.ontology.empty());
    if (!want_corpus && !want_tree) throw UsageError("stats needs --corpus and/or --ontology");

    if (want_corpus) {
        const auto corpus = read_corpus(ctx);
        const auto& docs = corpus.documents();
        auto stats = to_json(corpus_stats(docs));
        json hist = json::array();
        for (const auto& b : paragraph_length_histogram(docs, bin_width)) {
            hist.push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count}});
            csv += "histogram," + std::to_string(b.lower) + "-" + std::to_string(b.upper) + "," +
                   std::to_string(b.count) + "\n";
        }
        for (const auto& [k, v] : stats.items()) csv += "corpus," + k + "," + csv_field(v.dump()) + "\n";
        out["corpus"] = std::move(stats);
        out["paragraph_length_histogram"] = std::move(hist);
    }
    if (want_tree) {
        auto stats = to_json(ontology_stats(read_ontology(ctx)));
        for (const auto& [k, v] : stats.items()) csv += "ontology," + k + "," + csv_field(v.dump()) + "\n";
        out["ontology"] = std::move(stats);
    }
    emit(ctx, "stats", out, csv);
    return 0;
}

int cmd_trends(Context& ctx, const std::string& company, std::optional<double> alpha,
               const std::vector<std::string>& topic_names, std::optional<std::size_t> min_quarters) {
    const auto corpus = read_corpus(ctx);
    const auto tree = read_ontology(ctx);
    const auto mentions = read_mentions(ctx, corpus);
    std::vector<std::string> warnings;
    const auto products = read_products(ctx, tree, warnings);

    const auto& a = ctx.config.analytics;
    TrendOptions options{alpha.value_or(a.alpha), min_quarters.value_or(a.min_quarters), a.rollup, a.loess_span,
                         a.loess_degree};
    std::vector<TopicId> topics;
    for (const auto& name : topic_names) {
        const auto* node = tree.find_by_name_or_alias(name);
        if (!node) throw NotFoundError("topic '" + name + "' is not in the ontology");
        topics.push_back(node->topic_id);
    }
    const auto report = detect_trends(mentions, corpus, tree, company, topics, products, options);
    auto j = to_json(report);
    j["warnings"] = warnings;
    emit(ctx, "trends_" + company, j, to_csv(report));
    return 0;
}

int cmd_compare(Context& ctx, std::vector<std::string> companies, std::optional<std::size_t> top_n, bool leaf_only) {
    const auto corpus = read_corpus(ctx);
    const auto tree = read_ontology(ctx);
    const auto mentions = read_mentions(ctx, corpus);
    std::vector<std::string> warnings;
    const auto products = read_products(ctx, tree, warnings);
    if (companies.empty()) companies = tickers_of(corpus);
    const auto n = top_n.value_or(ctx.config.analytics.top_n);

    const auto matrix = jaccard_matrix(mentions, tree, companies, n, products);
    json pairs = json::array();
    for (std::size_t i = 0; i < companies.size(); ++i)
        for (std::size_t k = i + 1; k < companies.size(); ++k) {
            const auto& x = companies[i];
            const auto& y = companies[k];
            pairs.push_back({{"company_a", x},
                             {"company_b", y},
                             {"jaccard", matrix.values[i][k]},
                             {"common", common_topics(mentions, tree, x, y, n, leaf_only, products)},
                             {"unique_a", unique_topics(mentions, tree, x, y, n, leaf_only, products)},
                             {"unique_b", unique_topics(mentions, tree, y, x, n, leaf_only, products)}});
        }
    json j = {{"top_n", n}, {"leaf_only", leaf_only}, {"matrix", to_json(matrix)}, {"pairs", std::move(pairs)},
              {"warnings", warnings}};
    emit(ctx, "compare", j, to_csv(matrix));
    return 0;
}

int cmd_emerging(Context& ctx, const std::string& split_text, std::optional<std::size_t> min_late,
                 const std::string& late_end_text) {
    const auto corpus = read_corpus(ctx);
    const auto tree = read_ontology(ctx);
    const auto mentions = read_mentions(ctx, corpus);
    std::vector<std::string> warnings;
    const auto products = read_products(ctx, tree, warnings);

    std::optional<Date> split = ctx.config.analytics.split_date;
    auto flag_date = [](const std::string& text, const char* flag) {
        try {
            return parse_date(text);
        } catch (const ParameterError&) {
            throw UsageError(std::string(flag) + " must be a date YYYY-MM-DD, got '" + text + "'");
        }
    };
    if (!split_text.empty()) split = flag_date(split_text, "--split");
    if (!split) throw UsageError("emerging needs --split or analytics.split_date in the config");
    std::optional<Date> late_end = ctx.config.analytics.late_end;
    if (!late_end_text.empty()) late_end = flag_date(late_end_text, "--late-end");
    const auto threshold = min_late.value_or(ctx.config.analytics.min_late_mentions);

    const auto topics = emerging_topics(mentions, tree, *split, threshold, products, late_end);
    json list = json::array();
    for (const auto& t : topics) list.push_back(to_json(t));
    json j = {{"split", format_date(*split)},
              {"late_end", late_end ? json(format_date(*late_end)) : json(nullptr)},
              {"min_late_mentions", threshold},
              {"topics", std::move(list)},
              {"warnings", warnings}};
    emit(ctx, "emerging", j, to_csv(topics));
    return 0;
}

int cmd_coherence(Context& ctx, std::optional<std::size_t> parents) {
    const auto tree = read_ontology(ctx);
    auto providers = make_providers(ctx);
    const auto report = coherence_eval(tree, providers.embedder(), parents.value_or(ctx.config.analytics.coherence_parents),
                                       ctx.config.analytics.rng_seed);
    emit(ctx, "coherence", to_json(report), to_csv(report));
    return 0;
}

int cmd_timeline(Context& ctx, std::optional<double> span, std::optional<int> degree, bool no_smooth) {
    const auto tree = read_ontology(ctx);
    std::optional<LoessParams> smooth;
    if (!no_smooth)
        smooth = LoessParams{span.value_or(ctx.config.analytics.loess_span), degree.value_or(ctx.config.analytics.loess_degree)};
    if (smooth && (!(smooth->span > 0.0 && smooth->span <= 1.0) || (smooth->degree != 0 && smooth->degree != 1)))
        throw UsageError("--span must be in (0, 1] and --degree 0 or 1");
    const auto timeline = discovery_timeline(tree, smooth);
    auto j = to_json(timeline);
    j["smoothing"] = smooth ? json{{"span", smooth->span}, {"degree", smooth->degree}} : json(nullptr);
    emit(ctx, "timeline", j, to_csv(timeline));
    return 0;
}

int cmd_synth(Context& ctx, const std::string& spec_path) {
    SyntheticCorpusSpec spec;
    if (spec_path.empty()) {
        spec = default_synthetic_spec(ctx.g.seed.value_or(7));
    } else {
        std::ifstream in(spec_path);
        if (!in) throw ConfigError("cannot read synthetic spec '" + spec_path + "'");
        try {
            spec = SyntheticCorpusSpec::from_json(json::parse(in));
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("synthetic spec is not valid JSON: ") + e.what());
        }
        if (ctx.g.seed) spec.seed = *ctx.g.seed;
    }
    const fs::path dir = ctx.g.out_dir.empty() ? fs::path("synthetic") : fs::path(ctx.g.out_dir);
    const auto bundle = generate_synthetic(spec);
    write_synthetic(bundle, spec, dir);

    std::size_t paragraphs = 0;
    for (const auto& d : bundle.corpus.documents()) paragraphs += d.paragraphs.size();
    std::cout << json{{"directory", dir.string()},
                      {"documents", bundle.corpus.size()},
                      {"paragraphs", paragraphs},
                      {"seed", spec.seed},
                      {"config", (dir / "config.json").string()}}
                     .dump()
              << "\n";
    return 0;
}

int fail(int code, const char* kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topic ontology pipeline and analytics for earnings-call transcripts", "calltopics"};
    app.require_subcommand(1);
    Context ctx;

    app.add_option("--config", ctx.g.config_path, "Run config JSON")->check(CLI::ExistingFile);
    app.add_option("--provider", ctx.g.provider, "Chat/embedding provider")->check(CLI::IsMember({"mock", "http"}));
    app.add_option("--seed", ctx.g.seed, "RNG seed (synth, coherence)");
    app.add_option("--out-dir", ctx.g.out_dir, "Write outputs here instead of stdout/config paths");
    app.add_option("--format", ctx.g.format, "Report format")->check(CLI::IsMember({"json", "csv"}));

    auto add_paths = [&](CLI::App* sub, bool corpus, bool ontology, bool enrichments, bool products) {
        if (corpus) sub->add_option("--corpus", ctx.p.corpus, "Corpus JSONL");
        if (ontology) sub->add_option("--ontology", ctx.p.ontology, "Ontology JSON");
        if (enrichments) sub->add_option("--enrichments", ctx.p.enrichments, "Enrichments JSONL");
        if (products) sub->add_option("--products", ctx.p.products, "Product topic list (JSON array)");
    };

    std::string ingest_input, ingest_output;
    auto* ingest = app.add_subcommand("ingest", "Build a corpus JSONL from transcripts");
    ingest->add_option("--input", ingest_input, "Directory with metadata.json, or a corpus JSONL")->required();
    ingest->add_option("--output", ingest_output, "Corpus JSONL to write");

    std::string start_from;
    auto* build = app.add_subcommand("build", "Run the agent pipeline: ontology + enrichments + run report");
    add_paths(build, true, true, true, false);
    build->add_option("--seeds", ctx.p.seeds, "Seed topics JSON");
    build->add_option("--mock-script", ctx.p.mock_script, "Mock provider script");
    build->add_option("--start-from", start_from, "Existing ontology to extend");

    std::size_t bin_width = 10;
    auto* stats = app.add_subcommand("stats", "Corpus and/or ontology statistics");
    add_paths(stats, true, true, false, false);
    stats->add_option("--bin-width", bin_width, "Paragraph-length histogram bin width")->check(CLI::PositiveNumber);

    std::string company;
    std::optional<double> alpha;
    std::vector<std::string> topic_names;
    std::optional<std::size_t> min_quarters;
    auto* trends = app.add_subcommand("trends", "Kendall trend test per topic for one company");
    add_paths(trends, true, true, true, true);
    trends->add_option("--company", company, "Ticker")->required();
    trends->add_option("--alpha", alpha, "Significance level");
    trends->add_option("--topic", topic_names, "Restrict to these topics (repeatable)");
    trends->add_option("--min-quarters", min_quarters, "Minimum covered quarters");

    std::vector<std::string> companies;
    std::optional<std::size_t> top_n;
    bool leaf_only = false;
    auto* compare = app.add_subcommand("compare", "Jaccard matrix and common/unique topics");
    add_paths(compare, true, true, true, true);
    compare->add_option("--companies", companies, "Tickers (default: all)")->delimiter(',');
    compare->add_option("--top-n", top_n, "Top topics per company");
    compare->add_flag("--leaf-only", leaf_only, "Only list leaf topics in common/unique lists");

    std::string split_text, late_end_text;
    std::optional<std::size_t> min_late;
    auto* emerging = app.add_subcommand("emerging", "Topics absent before a date and prominent after");
    add_paths(emerging, true, true, true, true);
    emerging->add_option("--split", split_text, "Split date YYYY-MM-DD");
    emerging->add_option("--min-late", min_late, "Minimum mentions from the split on");
    emerging->add_option("--late-end", late_end_text, "Last date of the late window");

    std::optional<std::size_t> parents;
    auto* coherence = app.add_subcommand("coherence", "Parent/child embedding coherence vs random parents");
    add_paths(coherence, false, true, false, false);
    coherence->add_option("--parents", parents, "Number of sampled parents");
    coherence->add_option("--mock-script", ctx.p.mock_script, "Mock provider script");

    std::optional<double> span;
    std::optional<int> degree;
    bool no_smooth = false;
    auto* timeline = app.add_subcommand("timeline", "New topics per date with a LOESS overlay");
    add_paths(timeline, false, true, false, false);
    timeline->add_option("--span", span, "LOESS span");
    timeline->add_option("--degree", degree, "LOESS degree (0 or 1)");
    timeline->add_flag("--no-smooth", no_smooth, "Skip LOESS");

    std::string spec_path;
    auto* synth = app.add_subcommand("synth", "Write a synthetic corpus, mock script and config");
    synth->add_option("--spec", spec_path, "Synthetic corpus spec JSON (default: built-in)");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(2, "usage", e.what());
    }

    try {
        ctx.load();
        if (*ingest) return cmd_ingest(ctx, ingest_input, ingest_output);
        if (*build) return cmd_build(ctx, start_from);
        if (*stats) return cmd_stats(ctx, bin_width);
        if (*trends) return cmd_trends(ctx, company, alpha, topic_names, min_quarters);
        if (*compare) return cmd_compare(ctx, companies, top_n, leaf_only);
        if (*emerging) return cmd_emerging(ctx, split_text, min_late, late_end_text);
        if (*coherence) return cmd_coherence(ctx, parents);
        if (*timeline) return cmd_timeline(ctx, span, degree, no_smooth);
        if (*synth) return cmd_synth(ctx, spec_path);
    } catch (const UsageError& e) {
        return fail(2, "usage", e.what());
    } catch (const ConfigError& e) {
        return fail(2, "config", e.what());
    } catch (const ProviderError& e) {
        return fail(1, "provider", e.what());
    } catch (const std::exception& e) {
        return fail(1, "runtime", e.what());
    }
    return fail(2, "usage", "no subcommand");
}
