#pragma once

// Flat JSON run configuration shared by every CLI subcommand. Keys are
// snake_case; the matching command-line flag is "--" + key with '-' for '_'.

#include "kpe/augmentation.hpp"
#include "kpe/encoder.hpp"
#include "kpe/reinforcement.hpp"
#include "kpe/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace kpe {

struct RunConfig {
    std::uint64_t seed = 1;

    // encoder
    std::size_t hidden_dim = 16;
    std::size_t num_layers = 1;
    std::size_t num_heads = 2;
    std::size_t ffn_dim = 32;
    std::size_t vocab_hash_buckets = 4096;
    std::size_t max_sequence_length = 128;
    std::size_t piece_length = 6;

    // training
    double alpha_weight = 0.5;
    double lambda_bridge = 1.0;
    double lambda_rl = 1.0;
    double eta = 0.05;
    double beta = 0.1;
    std::string optimizer = "adam";
    double learning_rate = 1e-2;
    std::size_t batch_size = 4;
    std::size_t epochs = 10;

    // discriminator
    std::size_t disc_epochs = 4;
    std::size_t disc_batch_size = 8;
    double disc_heldout_fraction = 0.2;
    std::string disc_optimizer = "adam";
    double disc_learning_rate = 3e-3;

    // files
    std::string transcripts;
    std::string general;
    std::string silver;
    std::string checkpoint;
    std::string discriminator;
    std::string output;
    std::string metrics_log;

    // eval
    std::string k = "1,3,5";

    // synth; synth_general_size < 0 means "same as synth_size"
    std::size_t synth_size = 32;
    std::int64_t synth_general_size = -1;
    std::size_t synth_paragraphs_per_transcript = 4;
    double chitchat_rate = 0.3;
    double overlap_rate = 0.4;

    nlohmann::json to_json() const;
    // Rejects unknown keys and wrongly typed values. Missing keys keep their
    // current value.
    void merge_json(const nlohmann::json& j);
    void validate() const;

    EncoderConfig encoder_config() const;
    TrainConfig train_config() const;
    DiscriminatorTrainConfig discriminator_config() const;
    SynthConfig synth_config() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

// Parses `text` into the JSON type of `key`'s current value and merges it.
void set_run_config_value(RunConfig& config, const std::string& key, const std::string& text);

}  // namespace kpe
