#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "calltopics/time.hpp"

namespace calltopics {

struct Paragraph {
    std::string para_id;
    std::size_t doc_index = 0;
    std::string text;
    std::size_t word_count = 0;

    friend bool operator==(const Paragraph&, const Paragraph&) = default;
};

struct DocumentMetadata {
    std::string ticker;
    std::string sector;
    Date call_date;
    FiscalQuarter fiscal_quarter;
};

struct TranscriptDocument {
    std::string doc_id;
    std::string ticker;
    std::string sector;
    Date call_date;
    FiscalQuarter fiscal_quarter;
    std::vector<Paragraph> paragraphs;

    std::size_t word_total() const;

    friend bool operator==(const TranscriptDocument&, const TranscriptDocument&) = default;
};

/// Splits on runs of blank (whitespace-only) lines. Blocks are trimmed, empty
/// blocks dropped, and para_id is "p<index>" until a document claims it.
std::vector<Paragraph> segment_paragraphs(std::string_view raw_text);

/// "TICKER-YYYYQn"
std::string make_doc_id(std::string_view ticker, FiscalQuarter quarter);

/// Builds a document from plain transcript text; paragraphs get ids
/// "<doc_id>-p<index>".
TranscriptDocument make_document(std::string_view raw_text, const DocumentMetadata& meta);

/// Reads a plain-text transcript. Throws IngestError if unreadable.
TranscriptDocument ingest_text_file(const std::filesystem::path& path, const DocumentMetadata& meta);

nlohmann::json to_json(const TranscriptDocument& doc);
/// Parses one corpus-JSONL record and checks the document invariants.
TranscriptDocument document_from_json(const nlohmann::json& record);

DocumentMetadata metadata_from_json(const nlohmann::json& j);

/// An ordered set of documents with unique doc_ids.
class Corpus {
public:
    /// Throws ConflictError when doc_id is already present.
    void add(TranscriptDocument doc);

    const std::vector<TranscriptDocument>& documents() const { return docs_; }
    const TranscriptDocument* find(std::string_view doc_id) const;
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }

    /// Documents sorted by (call_date, ticker); the pipeline's processing order.
    std::vector<const TranscriptDocument*> chronological() const;

private:
    std::vector<TranscriptDocument> docs_;
    std::unordered_map<std::string, std::size_t> index_;
};

Corpus load_corpus_jsonl(const std::filesystem::path& path);
void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);

/// Ingests every *.txt in `dir` using the sidecar `metadata.json`, which maps
/// file name -> {ticker, sector, call_date, fiscal_quarter}. Files missing
/// from the sidecar are an IngestError.
Corpus ingest_directory(const std::filesystem::path& dir);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

struct CorpusStats {
    std::size_t total_transcripts = 0;
    std::size_t total_paragraphs = 0;
    std::size_t total_quarters = 0;
    std::size_t vocabulary_size = 0;
    MeanStd avg_paragraph_len_words;
    double avg_document_len_words = 0.0;
    double avg_document_len_paragraphs = 0.0;
    double avg_sentence_len_words = 0.0;
};

/// Population standard deviation; an empty corpus yields all zeros.
CorpusStats corpus_stats(std::span<const TranscriptDocument> docs);

struct HistogramBin {
    std::size_t lower = 0;  // inclusive, words
    std::size_t upper = 0;  // exclusive
    std::size_t count = 0;
};

/// Paragraph-length distribution in fixed-width word bins starting at 0.
std::vector<HistogramBin> paragraph_length_histogram(std::span<const TranscriptDocument> docs,
                                                     std::size_t bin_width = 10);

nlohmann::json to_json(const CorpusStats& stats);

}  // namespace calltopics
