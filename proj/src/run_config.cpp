#include "kpe/run_config.hpp"

#include <fstream>
#include <stdexcept>

namespace kpe {

using nlohmann::json;

#define KPE_RUN_CONFIG_FIELDS(X)                                                                                   \
    X(seed) X(hidden_dim) X(num_layers) X(num_heads) X(ffn_dim) X(vocab_hash_buckets) X(max_sequence_length)        \
    X(piece_length) X(alpha_weight) X(lambda_bridge) X(lambda_rl) X(eta) X(beta) X(optimizer) X(learning_rate)      \
    X(batch_size) X(epochs) X(disc_epochs) X(disc_batch_size) X(disc_heldout_fraction) X(disc_optimizer)            \
    X(disc_learning_rate) X(transcripts) X(general) X(silver) X(checkpoint) X(discriminator) X(output)              \
    X(metrics_log) X(k) X(synth_size) X(synth_general_size) X(synth_paragraphs_per_transcript) X(chitchat_rate)     \
    X(overlap_rate)

json RunConfig::to_json() const {
    json j = json::object();
#define X(name) j[#name] = name;
    KPE_RUN_CONFIG_FIELDS(X)
#undef X
    return j;
}

namespace {

template <class T>
void read_field(const json& j, const std::string& key, T& out) {
    const json& v = j.at(key);
    if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("config key '" + key + "' must be a string");
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("config key '" + key + "' must be a number");
    } else if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned()) {
            throw std::invalid_argument("config key '" + key + "' must be a non-negative integer");
        }
    } else {
        if (!v.is_number_integer()) throw std::invalid_argument("config key '" + key + "' must be an integer");
    }
    out = v.get<T>();
}

}  // namespace

void RunConfig::merge_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    const json known = to_json();
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw std::invalid_argument("unknown config key '" + key + "'");
    }
#define X(name) \
    if (j.contains(#name)) read_field(j, #name, name);
    KPE_RUN_CONFIG_FIELDS(X)
#undef X
}

#undef KPE_RUN_CONFIG_FIELDS

void RunConfig::validate() const {
    encoder_config().validate();
    train_config().validate();
    parse_optimizer_kind(disc_optimizer);
    synth_config().validate();
}

EncoderConfig RunConfig::encoder_config() const {
    EncoderConfig c;
    c.hidden_dim = hidden_dim;
    c.num_layers = num_layers;
    c.num_heads = num_heads;
    c.ffn_dim = ffn_dim;
    c.vocab_hash_buckets = vocab_hash_buckets;
    c.max_sequence_length = max_sequence_length;
    c.piece_length = piece_length;
    c.seed = seed;
    return c;
}

DiscriminatorTrainConfig RunConfig::discriminator_config() const {
    DiscriminatorTrainConfig c;
    c.epochs = disc_epochs;
    c.batch_size = disc_batch_size;
    c.heldout_fraction = disc_heldout_fraction;
    c.optimizer.kind = parse_optimizer_kind(disc_optimizer);
    c.optimizer.learning_rate = disc_learning_rate;
    c.seed = seed;
    return c;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig c;
    c.alpha_weight = alpha_weight;
    c.lambda_bridge = lambda_bridge;
    c.lambda_rl = lambda_rl;
    c.eta = eta;
    c.beta = beta;
    c.optimizer.kind = parse_optimizer_kind(optimizer);
    c.optimizer.learning_rate = learning_rate;
    c.batch_size = batch_size;
    c.epochs = epochs;
    c.seed = seed;
    c.discriminator = discriminator_config();
    return c;
}

SynthConfig RunConfig::synth_config() const {
    SynthConfig c;
    c.seed = seed;
    c.size = synth_size;
    if (synth_general_size >= 0) c.general_size = static_cast<std::size_t>(synth_general_size);
    c.paragraphs_per_transcript = synth_paragraphs_per_transcript;
    c.chitchat_rate = chitchat_rate;
    c.overlap_rate = overlap_rate;
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw std::invalid_argument("invalid config " + path.string() + ": " + e.what());
    }
    RunConfig c;
    c.merge_json(j);
    return c;
}

void set_run_config_value(RunConfig& config, const std::string& key, const std::string& text) {
    const json current = config.to_json();
    if (!current.contains(key)) throw std::invalid_argument("unknown config key '" + key + "'");
    const json& v = current.at(key);
    json parsed;
    try {
        std::size_t pos = 0;
        if (v.is_string()) {
            parsed = text;
            pos = text.size();
        } else if (v.is_number_float()) {
            parsed = std::stod(text, &pos);
        } else if (v.is_number_unsigned()) {
            if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
            parsed = std::stoull(text, &pos);
        } else {
            parsed = std::stoll(text, &pos);
        }
        if (pos != text.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
        throw std::invalid_argument("invalid value '" + text + "' for --" + key);
    }
    config.merge_json(json{{key, parsed}});
}

}  // namespace kpe
