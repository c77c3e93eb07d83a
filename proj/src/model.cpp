#include "kpe/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <random>

namespace kpe {

namespace {
constexpr std::uint64_t kHeadSalt = 0xa0761d6478bd642fULL;
constexpr std::uint64_t kBridgeSalt = 0xe7037ed1a0b428dbULL;
}  // namespace

KeyphraseModel::KeyphraseModel(const EncoderConfig& config) : encoder(config) {
    std::mt19937_64 head_rng(config.seed ^ kHeadSalt);
    head = ExtractorHead(config.hidden_dim, head_rng);
    std::mt19937_64 bridge_rng(config.seed ^ kBridgeSalt);
    bridge = BridgeHead(config.hidden_dim, bridge_rng);
}

void KeyphraseModel::visit_parameters(const ParameterVisitor& f) {
    encoder.visit_parameters("encoder.", f);
    head.visit_parameters("head.", f);
    bridge.visit_parameters("bridge.", f);
}

void KeyphraseModel::visit_parameters(const ConstParameterVisitor& f) const {
    encoder.visit_parameters("encoder.", f);
    head.visit_parameters("head.", f);
    bridge.visit_parameters("bridge.", f);
}

std::vector<Parameter*> KeyphraseModel::parameters() {
    std::vector<Parameter*> out;
    visit_parameters([&](const std::string&, Parameter& p) { out.push_back(&p); });
    return out;
}

ModelOutputs forward(ag::Graph& g, const KeyphraseModel& model, const Paragraph& paragraph,
                     std::span<const std::string> prev_keyphrases) {
    const InputSequence seq = build_sequence(paragraph, prev_keyphrases, model.encoder.config());
    const EncodedVars enc = model.encoder.encode(g, seq);
    ModelOutputs out;
    out.word_vectors = enc.word_vectors;
    out.paragraph_vector = enc.paragraph_vector;
    out.label_probs = label_probabilities(g, enc.word_vectors, model.head);
    out.bridge_probs = bridge_probabilities(g, enc.word_vectors, model.bridge);
    return out;
}

Prediction predict(const KeyphraseModel& model, const Paragraph& paragraph,
                   std::span<const std::string> prev_keyphrases) {
    Prediction out;
    out.encoded = model.encoder.encode(build_sequence(paragraph, prev_keyphrases, model.encoder.config()));
    out.dists = predict_label_distributions(out.encoded.word_vectors, model.head);
    out.keyphrases = decode_keyphrases(out.dists);
    return out;
}

std::vector<std::string> keyphrase_strings(const RankedKeyphrases& keyphrases, const Paragraph& paragraph) {
    std::vector<std::string> out;
    for (const auto& kp : keyphrases) {
        std::string text = paragraph.phrase_text(kp.span);
        if (std::find(out.begin(), out.end(), text) == out.end()) out.push_back(std::move(text));
    }
    return out;
}

std::vector<Prediction> extract_transcript(const KeyphraseModel& model, const Transcript& transcript) {
    std::vector<Prediction> out;
    std::vector<std::string> prev;
    for (const auto& p : transcript.paragraphs) {
        out.push_back(predict(model, p, prev));
        prev = keyphrase_strings(out.back().keyphrases, p);
    }
    return out;
}

std::string extraction_to_json_line(const Paragraph& paragraph, const RankedKeyphrases& keyphrases) {
    nlohmann::json j;
    j["paragraph_id"] = paragraph.id();
    j["keyphrases"] = nlohmann::json::array();
    for (const auto& kp : keyphrases) {
        j["keyphrases"].push_back({{"start", kp.span.start},
                                   {"end", kp.span.end},
                                   {"text", paragraph.phrase_text(kp.span)},
                                   {"score", kp.score}});
    }
    return j.dump();
}

}  // namespace kpe
