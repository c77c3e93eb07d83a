#pragma once

// Main extraction model: encoder, keyphrase head and bridge head sharing the
// encoder.

#include "kpe/augmentation.hpp"
#include "kpe/chitchat.hpp"
#include "kpe/encoder.hpp"
#include "kpe/extractor.hpp"

#include <span>
#include <string>
#include <vector>

namespace kpe {

struct KeyphraseModel {
    Encoder encoder;
    ExtractorHead head;
    BridgeHead bridge;

    KeyphraseModel() = default;
    explicit KeyphraseModel(const EncoderConfig& config);

    void visit_parameters(const ParameterVisitor& f);
    void visit_parameters(const ConstParameterVisitor& f) const;
    std::vector<Parameter*> parameters();
};

struct ModelOutputs {
    ag::Var word_vectors;
    ag::Var paragraph_vector;
    ag::Var label_probs;
    ag::Var bridge_probs;
};

ModelOutputs forward(ag::Graph& g, const KeyphraseModel& model, const Paragraph& paragraph,
                     std::span<const std::string> prev_keyphrases);

struct Prediction {
    std::vector<LabelDistribution> dists;
    RankedKeyphrases keyphrases;
    EncodedSequence encoded;
};

Prediction predict(const KeyphraseModel& model, const Paragraph& paragraph,
                   std::span<const std::string> prev_keyphrases);

// Ranked phrase strings of a prediction, duplicates removed.
std::vector<std::string> keyphrase_strings(const RankedKeyphrases& keyphrases, const Paragraph& paragraph);

// Runs a transcript in order, conditioning each paragraph on the previous
// paragraph's predicted keyphrases.
std::vector<Prediction> extract_transcript(const KeyphraseModel& model, const Transcript& transcript);

// {"paragraph_id", "keyphrases": [{"start", "end", "text", "score"}]}
std::string extraction_to_json_line(const Paragraph& paragraph, const RankedKeyphrases& keyphrases);

}  // namespace kpe
