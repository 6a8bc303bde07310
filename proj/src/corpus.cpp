#include "calltopics/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "calltopics/error.hpp"
#include "calltopics/text.hpp"

namespace calltopics {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t TranscriptDocument::word_total() const {
    std::size_t total = 0;
    for (const auto& p : paragraphs) total += p.word_count;
    return total;
}

std::vector<Paragraph> segment_paragraphs(std::string_view raw_text) {
    std::vector<Paragraph> out;
    std::string block;
    auto flush = [&] {
        auto trimmed = text::trim(block);
        if (!trimmed.empty()) {
            Paragraph p;
            p.doc_index = out.size();
            p.para_id = "p" + std::to_string(p.doc_index);
            p.text = std::string(trimmed);
            p.word_count = text::word_count(p.text);
            out.push_back(std::move(p));
        }
        block.clear();
    };

    std::size_t pos = 0;
    while (pos <= raw_text.size()) {
        auto nl = raw_text.find('\n', pos);
        if (nl == std::string_view::npos) nl = raw_text.size();
        auto line = raw_text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (text::trim(line).empty()) {
            flush();
        } else {
            if (!block.empty()) block.push_back('\n');
            block.append(line);
        }
        pos = nl + 1;
    }
    flush();
    return out;
}

std::string make_doc_id(std::string_view ticker, FiscalQuarter quarter) {
    return std::string(ticker) + "-" + quarter.str();
}

TranscriptDocument make_document(std::string_view raw_text, const DocumentMetadata& meta) {
    TranscriptDocument doc;
    doc.ticker = meta.ticker;
    doc.sector = meta.sector;
    doc.call_date = meta.call_date;
    doc.fiscal_quarter = meta.fiscal_quarter;
    doc.doc_id = make_doc_id(meta.ticker, meta.fiscal_quarter);
    doc.paragraphs = segment_paragraphs(raw_text);
    for (auto& p : doc.paragraphs) p.para_id = doc.doc_id + "-" + p.para_id;
    return doc;
}

TranscriptDocument ingest_text_file(const fs::path& path, const DocumentMetadata& meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot read transcript '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IngestError("read failure on '" + path.string() + "'");
    auto doc = make_document(buf.str(), meta);
    if (doc.paragraphs.empty()) throw IngestError("transcript '" + path.string() + "' has no paragraphs");
    return doc;
}

json to_json(const TranscriptDocument& doc) {
    json paragraphs = json::array();
    for (const auto& p : doc.paragraphs)
        paragraphs.push_back({{"para_id", p.para_id}, {"doc_index", p.doc_index}, {"text", p.text}});
    return {{"doc_id", doc.doc_id},
            {"ticker", doc.ticker},
            {"sector", doc.sector},
            {"call_date", format_date(doc.call_date)},
            {"fiscal_quarter", doc.fiscal_quarter.str()},
            {"paragraphs", std::move(paragraphs)}};
}

DocumentMetadata metadata_from_json(const json& j) {
    try {
        DocumentMetadata meta;
        meta.ticker = j.at("ticker").get<std::string>();
        meta.sector = j.at("sector").get<std::string>();
        meta.call_date = parse_date(j.at("call_date").get<std::string>());
        meta.fiscal_quarter = FiscalQuarter::parse(j.at("fiscal_quarter").get<std::string>());
        if (meta.ticker.empty()) throw IngestError("empty ticker");
        return meta;
    } catch (const json::exception& e) {
        throw IngestError(std::string("bad document metadata: ") + e.what());
    } catch (const ParameterError& e) {
        throw IngestError(std::string("bad document metadata: ") + e.what());
    }
}

TranscriptDocument document_from_json(const json& record) {
    TranscriptDocument doc;
    auto meta = metadata_from_json(record);
    doc.ticker = meta.ticker;
    doc.sector = meta.sector;
    doc.call_date = meta.call_date;
    doc.fiscal_quarter = meta.fiscal_quarter;
    try {
        doc.doc_id = record.at("doc_id").get<std::string>();
        for (const auto& p : record.at("paragraphs")) {
            Paragraph para;
            para.para_id = p.at("para_id").get<std::string>();
            para.doc_index = p.at("doc_index").get<std::size_t>();
            para.text = p.at("text").get<std::string>();
            para.word_count = text::word_count(para.text);
            doc.paragraphs.push_back(std::move(para));
        }
    } catch (const json::exception& e) {
        throw IngestError(std::string("bad corpus record: ") + e.what());
    }
    if (doc.doc_id.empty()) throw IngestError("corpus record with empty doc_id");
    if (doc.paragraphs.empty()) throw IngestError("document '" + doc.doc_id + "' has no paragraphs");
    for (std::size_t i = 0; i < doc.paragraphs.size(); ++i) {
        const auto& p = doc.paragraphs[i];
        if (text::trim(p.text).empty())
            throw IngestError("document '" + doc.doc_id + "' has an empty paragraph '" + p.para_id + "'");
        if (i > 0 && p.doc_index <= doc.paragraphs[i - 1].doc_index)
            throw IngestError("document '" + doc.doc_id + "' paragraphs are not ordered by doc_index");
    }
    return doc;
}

void Corpus::add(TranscriptDocument doc) {
    if (index_.count(doc.doc_id)) throw ConflictError("duplicate doc_id '" + doc.doc_id + "'");
    index_.emplace(doc.doc_id, docs_.size());
    docs_.push_back(std::move(doc));
}

const TranscriptDocument* Corpus::find(std::string_view doc_id) const {
    auto it = index_.find(std::string(doc_id));
    return it == index_.end() ? nullptr : &docs_[it->second];
}

std::vector<const TranscriptDocument*> Corpus::chronological() const {
    std::vector<const TranscriptDocument*> out;
    out.reserve(docs_.size());
    for (const auto& d : docs_) out.push_back(&d);
    std::stable_sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
        if (a->call_date != b->call_date) return a->call_date < b->call_date;
        return a->ticker < b->ticker;
    });
    return out;
}

Corpus load_corpus_jsonl(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot read corpus '" + path.string() + "'");
    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw IngestError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        corpus.add(document_from_json(record));
    }
    return corpus;
}

void save_corpus_jsonl(const Corpus& corpus, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write corpus '" + path.string() + "'");
    for (const auto& doc : corpus.documents()) out << to_json(doc).dump() << '\n';
}

Corpus ingest_directory(const fs::path& dir) {
    auto sidecar = dir / "metadata.json";
    std::ifstream in(sidecar);
    if (!in) throw IngestError("missing sidecar metadata file '" + sidecar.string() + "'");
    json meta;
    try {
        meta = json::parse(in);
    } catch (const json::parse_error& e) {
        throw IngestError("malformed '" + sidecar.string() + "': " + e.what());
    }

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    Corpus corpus;
    for (const auto& file : files) {
        auto name = file.filename().string();
        if (!meta.contains(name)) throw IngestError("no sidecar metadata for '" + name + "'");
        corpus.add(ingest_text_file(file, metadata_from_json(meta.at(name))));
    }
    return corpus;
}

CorpusStats corpus_stats(std::span<const TranscriptDocument> docs) {
    CorpusStats stats;
    stats.total_transcripts = docs.size();
    if (docs.empty()) return stats;

    std::set<std::string> vocabulary;
    std::set<int> quarters;
    std::vector<double> para_lengths;
    std::size_t total_words = 0;
    std::size_t sentence_count = 0;
    std::size_t sentence_words = 0;

    for (const auto& doc : docs) {
        quarters.insert(doc.fiscal_quarter.ordinal());
        for (const auto& p : doc.paragraphs) {
            auto tokens = text::tokenize(p.text);
            vocabulary.insert(tokens.begin(), tokens.end());
            para_lengths.push_back(static_cast<double>(tokens.size()));
            total_words += tokens.size();
            for (const auto& sentence : text::split_sentences(p.text)) {
                auto n = text::word_count(sentence);
                if (n == 0) continue;
                ++sentence_count;
                sentence_words += n;
            }
        }
    }

    stats.total_paragraphs = para_lengths.size();
    stats.total_quarters = quarters.size();
    stats.vocabulary_size = vocabulary.size();
    if (!para_lengths.empty()) {
        double mean = static_cast<double>(total_words) / static_cast<double>(para_lengths.size());
        double sq = 0.0;
        for (double len : para_lengths) sq += (len - mean) * (len - mean);
        stats.avg_paragraph_len_words = {mean, std::sqrt(sq / static_cast<double>(para_lengths.size()))};
    }
    stats.avg_document_len_words = static_cast<double>(total_words) / static_cast<double>(docs.size());
    stats.avg_document_len_paragraphs =
        static_cast<double>(stats.total_paragraphs) / static_cast<double>(docs.size());
    if (sentence_count > 0)
        stats.avg_sentence_len_words = static_cast<double>(sentence_words) / static_cast<double>(sentence_count);
    return stats;
}

std::vector<HistogramBin> paragraph_length_histogram(std::span<const TranscriptDocument> docs,
                                                     std::size_t bin_width) {
    if (bin_width == 0) throw ParameterError("histogram bin width must be positive");
    std::vector<HistogramBin> bins;
    for (const auto& doc : docs) {
        for (const auto& p : doc.paragraphs) {
            std::size_t b = p.word_count / bin_width;
            while (bins.size() <= b) {
                std::size_t lo = bins.size() * bin_width;
                bins.push_back({lo, lo + bin_width, 0});
            }
            ++bins[b].count;
        }
    }
    return bins;
}

json to_json(const CorpusStats& s) {
    return {{"total_transcripts", s.total_transcripts},
            {"total_paragraphs", s.total_paragraphs},
            {"total_quarters", s.total_quarters},
            {"vocabulary_size", s.vocabulary_size},
            {"avg_paragraph_len_words", {{"mean", s.avg_paragraph_len_words.mean},
                                         {"stddev", s.avg_paragraph_len_words.stddev}}},
            {"avg_document_len_words", s.avg_document_len_words},
            {"avg_document_len_paragraphs", s.avg_document_len_paragraphs},
            {"avg_sentence_len_words", s.avg_sentence_len_words}};
}

}  // namespace calltopics
