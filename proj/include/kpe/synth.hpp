#pragma once

// Deterministic two-domain synthetic corpus. Transcripts talk about image
// editing with one planted keyphrase per paragraph; general documents use a
// disjoint topic vocabulary. Transcripts also carry chitchat sentences built
// from a shared filler vocabulary and re-mentions of the previous
// paragraph's keyphrase, both labeled O.

#include "kpe/corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace kpe {

struct SynthConfig {
    std::uint64_t seed = 1;
    // Transcript paragraphs.
    std::size_t size = 32;
    // General documents; defaults to size.
    std::optional<std::size_t> general_size;
    std::size_t paragraphs_per_transcript = 4;
    // Probability that a non-keyphrase sentence is chitchat.
    double chitchat_rate = 0.3;
    // Probability that a paragraph re-mentions the previous keyphrase.
    double overlap_rate = 0.4;
    // Probability that a chitchat sentence mentions a domain key term.
    double chitchat_mention_rate = 0.5;
    std::size_t min_sentences = 3;
    std::size_t max_sentences = 5;

    void validate() const;
};

struct SynthCorpus {
    std::vector<Transcript> transcripts;
    std::vector<CorpusSample> general;
    // Per paragraph (transcript order), 1 for injected chitchat sentences.
    std::vector<std::vector<int>> chitchat_sentences;
};

SynthCorpus generate_synthetic(const SynthConfig& config);

// Writes transcripts.jsonl and general.jsonl under `dir`.
void write_synthetic(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace kpe
