#include "kpe/extractor.hpp"

#include "kpe/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kpe {

Label LabelDistribution::argmax() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < probs.size(); ++k) {
        if (probs[k] > probs[best]) best = k;
    }
    return static_cast<Label>(best);
}

std::vector<LabelDistribution> distributions_from(const Matrix& probs) {
    if (probs.cols() != 3) throw std::invalid_argument("distributions_from: expected n x 3 probabilities");
    std::vector<LabelDistribution> out(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        for (std::size_t k = 0; k < 3; ++k) out[i].probs[k] = probs(i, k);
    }
    return out;
}

std::vector<LabelDistribution> predict_label_distributions(const Matrix& word_vectors, const ExtractorHead& head) {
    return distributions_from(kernels::softmax_rows(head.logits(word_vectors)));
}

ag::Var label_probabilities(ag::Graph& g, ag::Var word_vectors, const ExtractorHead& head) {
    return ag::softmax_rows(head.logits(g, word_vectors));
}

std::vector<int> label_indices(std::span<const Label> labels) {
    std::vector<int> out;
    out.reserve(labels.size());
    for (Label l : labels) out.push_back(static_cast<int>(l));
    return out;
}

double keyphrase_loss(std::span<const LabelDistribution> dists, std::span<const Label> gold) {
    if (dists.size() != gold.size()) throw std::invalid_argument("keyphrase_loss: length mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < dists.size(); ++i) loss -= std::log(std::max(dists[i][gold[i]], kLogClamp));
    return loss;
}

ag::Var keyphrase_loss(ag::Var probs, std::span<const Label> gold) {
    const auto idx = label_indices(gold);
    return ag::label_nll(probs, idx, kLogClamp);
}

LabelSequence argmax_labels(std::span<const LabelDistribution> dists) {
    LabelSequence out;
    out.reserve(dists.size());
    for (const auto& d : dists) out.push_back(d.argmax());
    return out;
}

RankedKeyphrases decode_keyphrases(std::span<const LabelDistribution> dists) {
    const LabelSequence labels = argmax_labels(dists);
    RankedKeyphrases out;
    for (const Span& sp : bio_to_spans(labels)) out.push_back({sp, dists[sp.start][Label::B]});
    std::stable_sort(out.begin(), out.end(), [](const ScoredKeyphrase& a, const ScoredKeyphrase& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.span.start < b.span.start;
    });
    return out;
}

}  // namespace kpe
