#include "kpe/chitchat.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kpe {

namespace {

std::vector<double> softmax(std::span<const double> x) {
    const double mx = *std::max_element(x.begin(), x.end());
    std::vector<double> out(x.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        out[j] = std::exp(x[j] - mx);
        sum += out[j];
    }
    for (double& v : out) v /= sum;
    return out;
}

}  // namespace

std::vector<double> sentence_representation(const Matrix& word_vectors, Span sentence) {
    if (sentence.start >= sentence.end) throw std::invalid_argument("sentence_representation: empty sentence");
    if (sentence.end > word_vectors.rows()) throw std::out_of_range("sentence_representation: sentence out of range");
    const auto first = word_vectors.row(sentence.start);
    std::vector<double> out(first.begin(), first.end());
    for (std::size_t i = sentence.start + 1; i < sentence.end; ++i) {
        const auto r = word_vectors.row(i);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::max(out[j], r[j]);
    }
    return out;
}

double chitchat_score(std::span<const double> paragraph_vector, std::span<const double> sentence_vector) {
    if (paragraph_vector.size() != sentence_vector.size() || paragraph_vector.empty()) {
        throw std::invalid_argument("chitchat_score: dimension mismatch");
    }
    const auto sp = softmax(paragraph_vector);
    const auto ss = softmax(sentence_vector);
    double alpha = 0.0;
    for (std::size_t j = 0; j < sp.size(); ++j) alpha += sp[j] * ss[j];
    return alpha;
}

ChitchatFlags detect_chitchat(const Paragraph& paragraph, const Matrix& word_vectors,
                              std::span<const double> paragraph_vector, double beta) {
    ChitchatFlags out;
    out.beta = beta;
    for (std::size_t s = 0; s < paragraph.sentences().size(); ++s) {
        const double a = chitchat_score(paragraph_vector,
                                        sentence_representation(word_vectors, paragraph.sentence_span(s)));
        out.alpha.push_back(a);
        out.flags.push_back(a <= beta ? 1 : 0);
    }
    return out;
}

ChitchatFlags detect_chitchat(const Paragraph& paragraph, const EncodedSequence& encoded, double beta) {
    return detect_chitchat(paragraph, encoded.word_vectors, encoded.paragraph_vector, beta);
}

double chitchat_reward(const RankedKeyphrases& predicted, const ChitchatFlags& flags, const Paragraph& paragraph) {
    double reward = 0.0;
    for (const auto& kp : predicted) {
        const std::size_t s = paragraph.sentence_of(kp.span.start);
        if (flags.flags.at(s) != 0) reward -= 1.0;
    }
    return reward;
}

std::string chitchat_to_json_line(const std::string& paragraph_id, const ChitchatFlags& flags) {
    nlohmann::json j;
    j["paragraph_id"] = paragraph_id;
    j["alpha"] = flags.alpha;
    j["flags"] = flags.flags;
    j["beta"] = flags.beta;
    return j.dump();
}

}  // namespace kpe
