#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "calltopics/corpus.hpp"
#include "calltopics/error.hpp"
#include "calltopics/text.hpp"
#include "support/support.hpp"

using namespace calltopics;

namespace {

DocumentMetadata meta(const std::string& ticker, const std::string& date, const std::string& quarter) {
    return {ticker, "EV", parse_date(date), FiscalQuarter::parse(quarter)};
}

}  // namespace

TEST(Text, TokenizeLowercasesAndStripsPunctuation) {
    EXPECT_EQ(text::tokenize("  Hello, WORLD! (x) -- "), (std::vector<std::string>{"hello", "world", "x"}));
    EXPECT_EQ(text::word_count("A. B b."), 3u);
    EXPECT_EQ(text::word_count(""), 0u);
}

TEST(Text, SentencesEndAtTerminatorFollowedBySpace) {
    EXPECT_EQ(text::split_sentences("One two. Three four."), (std::vector<std::string>{"One two.", "Three four."}));
    EXPECT_EQ(text::split_sentences("Version 2.5 shipped! Really?").size(), 2u);
}

TEST(Text, NormalizeLabel) {
    EXPECT_EQ(text::normalize_label("  Mergers   &\tAcquisitions "), "mergers & acquisitions");
}

TEST(Segment, BlankLineSplit) {
    auto paras = segment_paragraphs("A.\n\nB b.\n\n\nC.");
    ASSERT_EQ(paras.size(), 3u);
    EXPECT_EQ(paras[0].word_count, 1u);
    EXPECT_EQ(paras[1].word_count, 2u);
    EXPECT_EQ(paras[2].word_count, 1u);
    EXPECT_EQ(paras[2].doc_index, 2u);
}

TEST(Segment, EmptyAndSingle) {
    EXPECT_TRUE(segment_paragraphs("").empty());
    EXPECT_TRUE(segment_paragraphs(" \n \n\t\n").empty());
    auto one = segment_paragraphs("one two three");
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].word_count, 3u);
}

TEST(Segment, WhitespaceOnlyLinesSeparate) {
    EXPECT_EQ(segment_paragraphs("a\n   \nb").size(), 2u);
    EXPECT_EQ(segment_paragraphs("a\nb").size(), 1u);
}

TEST(Segment, IdempotentUnderRejoin) {
    std::mt19937_64 rng(11);
    const char* words[] = {"alpha", "beta.", "gamma", "delta!", "eps"};
    for (int round = 0; round < 200; ++round) {
        std::string raw;
        const int blocks = static_cast<int>(rng() % 6);
        for (int b = 0; b < blocks; ++b) {
            for (int w = 0; w < 1 + static_cast<int>(rng() % 5); ++w) raw += std::string(words[rng() % 5]) + (rng() % 3 ? " " : "\n");
            raw += std::string(1 + rng() % 3, '\n') + (rng() % 2 ? "  \n" : "");
        }
        auto first = segment_paragraphs(raw);
        std::string joined;
        for (const auto& p : first) joined += (joined.empty() ? "" : "\n\n") + p.text;
        auto second = segment_paragraphs(joined);
        ASSERT_EQ(first.size(), second.size());
        for (std::size_t i = 0; i < first.size(); ++i) {
            EXPECT_EQ(first[i].text, second[i].text);
            EXPECT_EQ(first[i].word_count, text::word_count(first[i].text));
        }
    }
}

TEST(Ingest, DocumentFromText) {
    auto doc = make_document("P one.\n\nP two.\n\nP three.", meta("TSLA", "2022-01-26", "2021Q4"));
    EXPECT_EQ(doc.doc_id, "TSLA-2021Q4");
    ASSERT_EQ(doc.paragraphs.size(), 3u);
    EXPECT_EQ(doc.paragraphs[1].para_id, "TSLA-2021Q4-p1");
    EXPECT_EQ(doc.word_total(), 6u);
}

TEST(Ingest, DirectoryWithSidecar) {
    auto dir = testsupport::temp_dir("ingest");
    std::ofstream(dir / "a.txt") << "First block.\n\nSecond block here.\n\nThird.";
    std::ofstream(dir / "b.txt") << "Only one.";
    std::ofstream(dir / "metadata.json") << R"({
        "a.txt": {"ticker": "TSLA", "sector": "EV", "call_date": "2022-01-26", "fiscal_quarter": "2021Q4"},
        "b.txt": {"ticker": "GM", "sector": "EV", "call_date": "2022-02-01", "fiscal_quarter": "2021Q4"}})";
    auto corpus = ingest_directory(dir);
    ASSERT_EQ(corpus.size(), 2u);
    EXPECT_EQ(corpus.find("TSLA-2021Q4")->paragraphs.size(), 3u);

    std::ofstream(dir / "c.txt") << "Dup.";
    std::ofstream(dir / "metadata.json") << R"({
        "a.txt": {"ticker": "TSLA", "sector": "EV", "call_date": "2022-01-26", "fiscal_quarter": "2021Q4"},
        "b.txt": {"ticker": "GM", "sector": "EV", "call_date": "2022-02-01", "fiscal_quarter": "2021Q4"},
        "c.txt": {"ticker": "TSLA", "sector": "EV", "call_date": "2022-01-27", "fiscal_quarter": "2021Q4"}})";
    EXPECT_THROW(ingest_directory(dir), ConflictError);
    std::filesystem::remove_all(dir);
}

TEST(Ingest, UnreadableFile) {
    EXPECT_THROW(ingest_text_file("/nonexistent/x.txt", meta("T", "2022-01-01", "2021Q4")), IngestError);
}

TEST(Ingest, JsonlRoundTripKeepsParagraphs) {
    Corpus corpus;
    corpus.add(make_document("a b.\n\nc d e.", meta("TSLA", "2022-01-26", "2021Q4")));
    corpus.add(make_document("x.", meta("GM", "2022-01-20", "2021Q4")));
    auto dir = testsupport::temp_dir("jsonl");
    save_corpus_jsonl(corpus, dir / "c.jsonl");
    auto back = load_corpus_jsonl(dir / "c.jsonl");
    EXPECT_EQ(back.documents(), corpus.documents());
    std::filesystem::remove_all(dir);
}

TEST(Ingest, RecordValidation) {
    auto good = to_json(make_document("a.", meta("T", "2022-01-01", "2021Q4")));
    EXPECT_NO_THROW(document_from_json(good));
    auto bad_quarter = good;
    bad_quarter["fiscal_quarter"] = "2021Q5";
    EXPECT_THROW(document_from_json(bad_quarter), IngestError);
    auto empty = good;
    empty["paragraphs"] = nlohmann::json::array();
    EXPECT_THROW(document_from_json(empty), IngestError);
    auto blank = good;
    blank["paragraphs"][0]["text"] = "   ";
    EXPECT_THROW(document_from_json(blank), IngestError);
}

TEST(Ingest, DuplicateDocIdConflicts) {
    Corpus corpus;
    corpus.add(make_document("a.", meta("T", "2022-01-01", "2021Q4")));
    EXPECT_THROW(corpus.add(make_document("b.", meta("T", "2022-01-02", "2021Q4"))), ConflictError);
}

TEST(Ingest, ChronologicalOrderByDateThenTicker) {
    Corpus corpus;
    corpus.add(make_document("a.", meta("ZZ", "2022-01-01", "2021Q4")));
    corpus.add(make_document("a.", meta("AA", "2022-01-01", "2021Q4")));
    corpus.add(make_document("a.", meta("MM", "2021-10-01", "2021Q3")));
    auto order = corpus.chronological();
    EXPECT_EQ(order[0]->ticker, "MM");
    EXPECT_EQ(order[1]->ticker, "AA");
    EXPECT_EQ(order[2]->ticker, "ZZ");
}

TEST(Quarter, ParseBounds) {
    EXPECT_EQ(FiscalQuarter::parse("2021Q4").str(), "2021Q4");
    EXPECT_THROW(FiscalQuarter::parse("1899Q1"), ParameterError);
    EXPECT_THROW(FiscalQuarter::parse("2101Q1"), ParameterError);
    EXPECT_THROW(FiscalQuarter::parse("2021Q0"), ParameterError);
    EXPECT_EQ(FiscalQuarter::parse("2021Q4").next().str(), "2022Q1");
}

TEST(CorpusStats, HandCountedExample) {
    std::vector<TranscriptDocument> docs{make_document("One two. Three four.", meta("T", "2022-01-01", "2021Q4"))};
    auto s = corpus_stats(docs);
    EXPECT_EQ(s.total_paragraphs, 1u);
    EXPECT_EQ(s.vocabulary_size, 4u);
    EXPECT_DOUBLE_EQ(s.avg_sentence_len_words, 2.0);
    EXPECT_DOUBLE_EQ(s.avg_paragraph_len_words.mean, 4.0);
    EXPECT_DOUBLE_EQ(s.avg_paragraph_len_words.stddev, 0.0);
}

TEST(CorpusStats, PopulationStddev) {
    std::vector<TranscriptDocument> docs{make_document("a.\n\na b c.", meta("T", "2022-01-01", "2021Q4"))};
    auto s = corpus_stats(docs);
    EXPECT_DOUBLE_EQ(s.avg_paragraph_len_words.mean, 2.0);
    EXPECT_DOUBLE_EQ(s.avg_paragraph_len_words.stddev, 1.0);
    EXPECT_DOUBLE_EQ(s.avg_document_len_words, 4.0);
    EXPECT_DOUBLE_EQ(s.avg_document_len_paragraphs, 2.0);
}

TEST(CorpusStats, EmptyCorpusAllZero) {
    auto s = corpus_stats({});
    EXPECT_EQ(s.total_transcripts, 0u);
    EXPECT_EQ(s.vocabulary_size, 0u);
    EXPECT_EQ(s.avg_paragraph_len_words.mean, 0.0);
}

TEST(CorpusStats, IdenticalDocsShareVocabulary) {
    auto a = make_document("Alpha beta, gamma.", meta("T", "2022-01-01", "2021Q4"));
    auto b = make_document("Alpha beta, gamma.", meta("U", "2022-01-01", "2021Q4"));
    std::vector<TranscriptDocument> one{a}, two{a, b};
    EXPECT_EQ(corpus_stats(two).vocabulary_size, corpus_stats(one).vocabulary_size);
}

TEST(CorpusStats, CountsAddUpAcrossConcatenation) {
    std::mt19937_64 rng(5);
    const char* vocab[] = {"supply", "chain", "guidance", "margin", "demand."};
    auto random_doc = [&](int k) {
        std::string raw;
        for (int p = 0; p < 1 + static_cast<int>(rng() % 4); ++p) {
            for (int w = 0; w < 1 + static_cast<int>(rng() % 7); ++w) raw += std::string(vocab[rng() % 5]) + " ";
            raw += "\n\n";
        }
        return make_document(raw, meta("T" + std::to_string(k), "2022-01-01", "2021Q" + std::to_string(1 + k % 4)));
    };
    for (int round = 0; round < 50; ++round) {
        std::vector<TranscriptDocument> a, b, all;
        for (int i = 0; i < 3; ++i) a.push_back(random_doc(i));
        for (int i = 3; i < 5; ++i) b.push_back(random_doc(i));
        all = a;
        all.insert(all.end(), b.begin(), b.end());
        auto sa = corpus_stats(a), sb = corpus_stats(b), s = corpus_stats(all);
        EXPECT_EQ(s.total_transcripts, sa.total_transcripts + sb.total_transcripts);
        EXPECT_EQ(s.total_paragraphs, sa.total_paragraphs + sb.total_paragraphs);

        std::size_t words = 0;
        for (const auto& d : all) {
            std::size_t sum = 0;
            for (const auto& p : d.paragraphs) sum += p.word_count;
            EXPECT_EQ(sum, d.word_total());
            words += sum;
        }
        EXPECT_NEAR(s.avg_document_len_words * static_cast<double>(all.size()), static_cast<double>(words), 1e-9);

        std::size_t hist_total = 0;
        for (const auto& bin : paragraph_length_histogram(all, 3)) hist_total += bin.count;
        EXPECT_EQ(hist_total, s.total_paragraphs);
    }
}
