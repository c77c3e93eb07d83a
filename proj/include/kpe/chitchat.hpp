#pragma once

// Unsupervised chitchat detection: sentences whose softmax profile agrees
// poorly with the paragraph's [CLS] profile are flagged, and predicted
// keyphrases inside flagged sentences are penalized.

#include "kpe/corpus.hpp"
#include "kpe/encoder.hpp"
#include "kpe/extractor.hpp"

#include <span>
#include <string>
#include <vector>

namespace kpe {

struct ChitchatFlags {
    std::vector<double> alpha;
    std::vector<int> flags;
    double beta = 0.0;
};

// Element-wise max over rows [sentence.start, sentence.end) of word_vectors.
std::vector<double> sentence_representation(const Matrix& word_vectors, Span sentence);

// Inner product of softmax(paragraph) and softmax(sentence); lies in (0, 1].
double chitchat_score(std::span<const double> paragraph_vector, std::span<const double> sentence_vector);

// flags[i] = 1 iff alpha[i] <= beta.
ChitchatFlags detect_chitchat(const Paragraph& paragraph, const EncodedSequence& encoded, double beta);
ChitchatFlags detect_chitchat(const Paragraph& paragraph, const Matrix& word_vectors,
                              std::span<const double> paragraph_vector, double beta);

// Minus the number of predicted keyphrases whose first word sits in a
// flagged sentence.
double chitchat_reward(const RankedKeyphrases& predicted, const ChitchatFlags& flags, const Paragraph& paragraph);

// {"paragraph_id", "alpha", "flags", "beta"}
std::string chitchat_to_json_line(const std::string& paragraph_id, const ChitchatFlags& flags);

}  // namespace kpe
