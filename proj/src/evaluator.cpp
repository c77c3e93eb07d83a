#include "kpe/evaluator.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace kpe {

namespace {

std::vector<std::string> normalized_unique(std::span<const std::string> phrases) {
    std::vector<std::string> out;
    for (const auto& p : phrases) {
        std::string n = normalize_phrase(p);
        if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(std::move(n));
    }
    return out;
}

std::size_t matches_at_k(const std::vector<std::string>& pred, const std::vector<std::string>& gold, std::size_t k) {
    std::size_t m = 0;
    for (std::size_t i = 0; i < std::min(k, pred.size()); ++i) {
        if (std::find(gold.begin(), gold.end(), pred[i]) != gold.end()) ++m;
    }
    return m;
}

std::vector<std::string> span_texts(std::span<const Span> spans, const Paragraph& paragraph) {
    std::vector<std::string> out;
    for (const auto& s : spans) out.push_back(paragraph.phrase_text(s));
    return out;
}

}  // namespace

double f1_at_k(std::span<const std::string> predicted, std::span<const std::string> gold, std::size_t k) {
    if (k == 0) throw std::invalid_argument("f1_at_k: k must be >= 1");
    const auto pred = normalized_unique(predicted);
    const auto ref = normalized_unique(gold);
    if (ref.empty()) return pred.empty() ? 1.0 : 0.0;
    const std::size_t top = std::min(k, pred.size());
    if (top == 0) return 0.0;
    const std::size_t m = matches_at_k(pred, ref, k);
    if (m == 0) return 0.0;
    const double precision = static_cast<double>(m) / static_cast<double>(top);
    const double recall = static_cast<double>(m) / static_cast<double>(ref.size());
    return 2.0 * precision * recall / (precision + recall);
}

double f1_at_k(const RankedKeyphrases& predicted, std::span<const Span> gold, std::size_t k,
               const Paragraph& paragraph) {
    std::vector<std::string> pred;
    for (const auto& kp : predicted) pred.push_back(paragraph.phrase_text(kp.span));
    const auto ref = span_texts(gold, paragraph);
    return f1_at_k(pred, ref, k);
}

double recall_at_k(std::span<const std::string> predicted, std::span<const std::string> gold, std::size_t k) {
    const auto pred = normalized_unique(predicted);
    const auto ref = normalized_unique(gold);
    if (ref.empty()) return 1.0;
    return static_cast<double>(matches_at_k(pred, ref, k)) / static_cast<double>(ref.size());
}

double EvalReport::f1_at(std::size_t k) const {
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] == k) return f1[i];
    }
    throw std::out_of_range("EvalReport: k=" + std::to_string(k) + " was not evaluated");
}

nlohmann::json EvalReport::to_json(bool with_paragraphs) const {
    nlohmann::json j;
    for (std::size_t i = 0; i < ks.size(); ++i) j["f1_at_" + std::to_string(ks[i])] = f1[i];
    j["repetition_rate"] = repetition_rate;
    j["chitchat_violation_rate"] = chitchat_violation_rate;
    j["paragraph_count"] = paragraphs.size();
    if (with_paragraphs) {
        j["paragraphs"] = nlohmann::json::array();
        for (const auto& p : paragraphs) {
            j["paragraphs"].push_back({{"paragraph_id", p.paragraph_id},
                                       {"f1", p.f1},
                                       {"predicted", p.predicted},
                                       {"repeated", p.repeated},
                                       {"in_chitchat", p.in_chitchat}});
        }
    }
    return j;
}

EvalReport score_predictions(const std::vector<Transcript>& transcripts,
                             const std::vector<std::vector<ParagraphPrediction>>& predictions,
                             std::span<const std::size_t> ks) {
    if (ks.empty()) throw std::invalid_argument("evaluate: no k values");
    if (predictions.size() != transcripts.size()) throw std::invalid_argument("evaluate: prediction count mismatch");
    EvalReport report;
    report.ks.assign(ks.begin(), ks.end());
    report.f1.assign(ks.size(), 0.0);
    std::size_t total_predicted = 0, total_repeated = 0, total_chitchat = 0;

    for (std::size_t t = 0; t < transcripts.size(); ++t) {
        const auto& paragraphs = transcripts[t].paragraphs;
        if (predictions[t].size() != paragraphs.size()) {
            throw std::invalid_argument("evaluate: prediction count mismatch in transcript '" + transcripts[t].id + "'");
        }
        std::unordered_set<std::string> prev_tokens;
        for (std::size_t i = 0; i < paragraphs.size(); ++i) {
            const Paragraph& p = paragraphs[i];
            const ParagraphPrediction& pred = predictions[t][i];
            ParagraphEval pe;
            pe.paragraph_id = p.id();
            for (std::size_t k : ks) pe.f1.push_back(f1_at_k(pred.keyphrases, p.keyphrases(), k, p));

            std::unordered_set<std::string> tokens;
            for (const auto& kp : pred.keyphrases) {
                ++pe.predicted;
                bool all_repeated = !prev_tokens.empty();
                for (std::size_t w = kp.span.start; w < kp.span.end; ++w) {
                    const std::string tok = to_lower(p.words()[w]);
                    tokens.insert(tok);
                    if (!prev_tokens.contains(tok)) all_repeated = false;
                }
                if (all_repeated) ++pe.repeated;
                if (!pred.flags.flags.empty() && pred.flags.flags.at(p.sentence_of(kp.span.start)) != 0) {
                    ++pe.in_chitchat;
                }
            }
            prev_tokens = std::move(tokens);
            total_predicted += pe.predicted;
            total_repeated += pe.repeated;
            total_chitchat += pe.in_chitchat;
            for (std::size_t k = 0; k < ks.size(); ++k) report.f1[k] += pe.f1[k];
            report.paragraphs.push_back(std::move(pe));
        }
    }
    if (report.paragraphs.empty()) throw std::invalid_argument("evaluate: empty dataset");
    for (double& f : report.f1) f /= static_cast<double>(report.paragraphs.size());
    if (total_predicted > 0) {
        report.repetition_rate = static_cast<double>(total_repeated) / static_cast<double>(total_predicted);
        report.chitchat_violation_rate = static_cast<double>(total_chitchat) / static_cast<double>(total_predicted);
    }
    return report;
}

EvalReport evaluate(const KeyphraseModel& model, const std::vector<Transcript>& transcripts, double beta,
                    std::span<const std::size_t> ks) {
    std::vector<std::vector<ParagraphPrediction>> predictions(transcripts.size());
    detail::parallel_for(transcripts.size(), [&](std::size_t t) {
        const auto preds = extract_transcript(model, transcripts[t]);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            predictions[t].push_back(
                {preds[i].keyphrases, detect_chitchat(transcripts[t].paragraphs[i], preds[i].encoded, beta)});
        }
    });
    return score_predictions(transcripts, predictions, ks);
}

std::vector<std::size_t> parse_k_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("invalid k list '" + text + "'");
        }
        if (item.find_first_not_of(" \t", pos) != std::string::npos || v < 1) throw std::invalid_argument("invalid k list '" + text + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw std::invalid_argument("empty k list");
    return out;
}

}  // namespace kpe
