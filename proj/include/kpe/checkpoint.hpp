#pragma once

// JSON checkpoint container: encoder config, free-form metadata and every
// parameter tensor under its dotted name. Doubles are written in shortest
// round-trip form, so save/load is bit-exact.

#include "kpe/augmentation.hpp"
#include "kpe/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>

namespace kpe {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kCheckpointFormat = "kpe-checkpoint";
inline constexpr int kCheckpointVersion = 1;

nlohmann::json encoder_config_to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const KeyphraseModel& model, const nlohmann::json& metadata = nlohmann::json::object());
KeyphraseModel model_from_json(const nlohmann::json& j);
nlohmann::json discriminator_to_json(const Discriminator& disc,
                                     const nlohmann::json& metadata = nlohmann::json::object());
Discriminator discriminator_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const KeyphraseModel& model,
                const nlohmann::json& metadata = nlohmann::json::object());
KeyphraseModel load_model(const std::filesystem::path& path);
void save_discriminator(const std::filesystem::path& path, const Discriminator& disc,
                        const nlohmann::json& metadata = nlohmann::json::object());
Discriminator load_discriminator(const std::filesystem::path& path);

// Metadata block of a checkpoint file without building the model.
nlohmann::json checkpoint_metadata(const std::filesystem::path& path);

}  // namespace kpe
