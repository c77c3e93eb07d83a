#pragma once

// Transcript and general-domain document model, JSONL ingestion and the
// span <-> BIO label codec.

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpe {

// Half-open token range [start, end) over a flattened paragraph.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - start; }
    auto operator<=>(const Span&) const = default;
};

struct Sentence {
    std::vector<std::string> tokens;
};

// Raised for malformed input files and for values violating corpus invariants.
class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Immutable after construction. Gold keyphrases are stored sorted by start.
class Paragraph {
public:
    Paragraph() = default;
    // Validates the sentences and spans; throws CorpusError naming `id`.
    Paragraph(std::string id, std::vector<Sentence> sentences, std::vector<Span> keyphrases);

    const std::string& id() const { return id_; }
    const std::vector<Sentence>& sentences() const { return sentences_; }
    const std::vector<Span>& keyphrases() const { return keyphrases_; }
    const std::vector<std::string>& words() const { return words_; }
    std::size_t size() const { return words_.size(); }

    // Token range of sentence `i` in the flattened paragraph.
    Span sentence_span(std::size_t i) const;
    // Index of the sentence containing token `token`.
    std::size_t sentence_of(std::size_t token) const;

    // Tokens of `span` joined by single spaces.
    std::string phrase_text(Span span) const;
    // Gold keyphrase strings in span order, duplicates removed.
    std::vector<std::string> keyphrase_texts() const;

private:
    std::string id_;
    std::vector<Sentence> sentences_;
    std::vector<Span> keyphrases_;
    std::vector<std::string> words_;
    std::vector<std::size_t> sentence_starts_;
};

struct Transcript {
    std::string id;
    std::vector<Paragraph> paragraphs;
};

enum class Domain { Transcript, General };

struct CorpusSample {
    Paragraph paragraph;
    Domain domain = Domain::Transcript;
    // Phrases of the previous paragraph, in rank order. Empty for the first
    // paragraph of a transcript and for every general-domain sample.
    std::vector<std::string> prev_keyphrases;
};

enum class Label : int { O = 0, B = 1, I = 2 };
using LabelSequence = std::vector<Label>;

char label_char(Label l);

std::vector<Transcript> parse_transcripts(std::istream& in, const std::string& source = "<stream>");
std::vector<Transcript> load_transcripts(const std::filesystem::path& path);

std::vector<CorpusSample> parse_general_corpus(std::istream& in, const std::string& source = "<stream>");
std::vector<CorpusSample> load_general_corpus(const std::filesystem::path& path);

// One sample per transcript paragraph; prev_keyphrases are the previous
// paragraph's gold keyphrase strings.
std::vector<CorpusSample> transcript_samples(const std::vector<Transcript>& transcripts);

// Serializers producing the same JSONL schemas the loaders read.
std::string transcript_to_json_line(const Transcript& t);
std::string general_document_to_json_line(const Paragraph& p);

LabelSequence spans_to_bio(const Paragraph& paragraph);
LabelSequence spans_to_bio(std::size_t length, std::span<const Span> spans);

// Maximal B I* runs become spans. An I that does not follow B or I opens a
// new span. Output is sorted and non-overlapping for any input.
std::vector<Span> bio_to_spans(std::span<const Label> labels);

// Lowercase and collapse whitespace to single spaces.
std::string normalize_phrase(const std::string& phrase);
std::vector<std::string> split_whitespace(const std::string& text);
std::string to_lower(std::string s);

}  // namespace kpe
