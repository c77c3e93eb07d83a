#pragma once

// Keyphrase head: per-word O/B/I distributions, the supervised labeling loss
// and decoding into ranked keyphrases.

#include "kpe/autograd.hpp"
#include "kpe/corpus.hpp"
#include "kpe/head.hpp"

#include <array>
#include <random>
#include <span>
#include <vector>

namespace kpe {

inline constexpr double kLogClamp = 1e-12;

struct LabelDistribution {
    // Probabilities of (O, B, I).
    std::array<double, 3> probs{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

    double operator[](Label l) const { return probs[static_cast<std::size_t>(l)]; }
    // Ties resolve in O, B, I order.
    Label argmax() const;
};

// Hidden width equals the encoder width; output is the three label logits.
struct ExtractorHead : TwoLayerHead {
    ExtractorHead() = default;
    ExtractorHead(std::size_t hidden_dim, std::mt19937_64& rng) : TwoLayerHead(hidden_dim, hidden_dim, 3, rng) {}
};

struct ScoredKeyphrase {
    Span span;
    double score = 0.0;
};

// Sorted by score descending, ties by earlier start.
using RankedKeyphrases = std::vector<ScoredKeyphrase>;

std::vector<LabelDistribution> predict_label_distributions(const Matrix& word_vectors, const ExtractorHead& head);
// n×3 probability node.
ag::Var label_probabilities(ag::Graph& g, ag::Var word_vectors, const ExtractorHead& head);
std::vector<LabelDistribution> distributions_from(const Matrix& probs);

// -sum_i log P(gold_i), each probability clamped below at kLogClamp.
double keyphrase_loss(std::span<const LabelDistribution> dists, std::span<const Label> gold);
ag::Var keyphrase_loss(ag::Var probs, std::span<const Label> gold);

LabelSequence argmax_labels(std::span<const LabelDistribution> dists);

// Greedy decode: argmax labels -> spans, each scored by P(B) of its first word.
RankedKeyphrases decode_keyphrases(std::span<const LabelDistribution> dists);

std::vector<int> label_indices(std::span<const Label> labels);

}  // namespace kpe
