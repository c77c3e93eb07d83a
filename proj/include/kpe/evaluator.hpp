#pragma once

// F1@k over normalized keyphrase strings, macro-averaged per paragraph, plus
// repetition and chitchat diagnostics.

#include "kpe/chitchat.hpp"
#include "kpe/corpus.hpp"
#include "kpe/extractor.hpp"
#include "kpe/model.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace kpe {

// Predictions are normalized and deduplicated (keeping rank order) before
// truncation to the top k; gold is normalized and deduplicated. A paragraph
// without gold scores 1 iff nothing is predicted.
double f1_at_k(std::span<const std::string> predicted, std::span<const std::string> gold, std::size_t k);
double f1_at_k(const RankedKeyphrases& predicted, std::span<const Span> gold, std::size_t k,
               const Paragraph& paragraph);
double recall_at_k(std::span<const std::string> predicted, std::span<const std::string> gold, std::size_t k);

struct ParagraphEval {
    std::string paragraph_id;
    std::vector<double> f1;
    std::size_t predicted = 0;
    std::size_t repeated = 0;
    std::size_t in_chitchat = 0;
};

struct EvalReport {
    std::vector<std::size_t> ks;
    // Macro-averaged F1, aligned with ks.
    std::vector<double> f1;
    double repetition_rate = 0.0;
    double chitchat_violation_rate = 0.0;
    std::vector<ParagraphEval> paragraphs;

    double f1_at(std::size_t k) const;
    nlohmann::json to_json(bool with_paragraphs = true) const;
};

struct ParagraphPrediction {
    RankedKeyphrases keyphrases;
    ChitchatFlags flags;
};

// Scores precomputed predictions; predictions[t][p] belongs to
// transcripts[t].paragraphs[p].
EvalReport score_predictions(const std::vector<Transcript>& transcripts,
                             const std::vector<std::vector<ParagraphPrediction>>& predictions,
                             std::span<const std::size_t> ks);

// Runs the model with chained conditioning and scores it. Chitchat flags come
// from the model's own encoder at threshold beta.
EvalReport evaluate(const KeyphraseModel& model, const std::vector<Transcript>& transcripts, double beta,
                    std::span<const std::size_t> ks);

std::vector<std::size_t> parse_k_list(const std::string& text);

}  // namespace kpe
