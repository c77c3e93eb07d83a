#include "kpe/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace kpe {

using nlohmann::json;

namespace {

constexpr const char* kModelKind = "keyphrase_model";
constexpr const char* kDiscriminatorKind = "discriminator";

json tensors_to_json(const std::function<void(const ConstParameterVisitor&)>& visit) {
    json tensors = json::object();
    visit([&](const std::string& name, const Parameter& p) {
        for (double v : p.value.data()) {
            if (!std::isfinite(v)) throw CheckpointError("parameter '" + name + "' is not finite");
        }
        tensors[name] = {{"rows", p.value.rows()}, {"cols", p.value.cols()}, {"data", p.value.data()}};
    });
    return tensors;
}

void tensors_from_json(const json& tensors, const std::function<void(const ParameterVisitor&)>& visit) {
    if (!tensors.is_object()) throw CheckpointError("checkpoint: 'tensors' must be an object");
    std::set<std::string> seen;
    visit([&](const std::string& name, Parameter& p) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw CheckpointError("checkpoint: missing tensor '" + name + "'");
        const auto rows = it->at("rows").get<std::size_t>();
        const auto cols = it->at("cols").get<std::size_t>();
        if (rows != p.value.rows() || cols != p.value.cols()) {
            throw CheckpointError("checkpoint: tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                                  std::to_string(cols) + ", expected " + p.value.shape_string());
        }
        const auto data = it->at("data").get<std::vector<double>>();
        if (data.size() != rows * cols) throw CheckpointError("checkpoint: tensor '" + name + "' has wrong size");
        std::copy(data.begin(), data.end(), p.value.data().begin());
        p.zero_grad();
        seen.insert(name);
    });
    for (const auto& [name, _] : tensors.items()) {
        if (!seen.contains(name)) throw CheckpointError("checkpoint: unexpected tensor '" + name + "'");
    }
}

json container(const char* kind, const EncoderConfig& config, const json& metadata, json tensors) {
    return {{"format", kCheckpointFormat},
            {"version", kCheckpointVersion},
            {"kind", kind},
            {"encoder_config", encoder_config_to_json(config)},
            {"metadata", metadata},
            {"tensors", std::move(tensors)}};
}

EncoderConfig check_container(const json& j, const char* kind) {
    if (!j.is_object() || j.value("format", "") != kCheckpointFormat) {
        throw CheckpointError("not a kpe checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + j.at("version").dump());
    }
    const auto actual = j.at("kind").get<std::string>();
    if (actual != kind) throw CheckpointError("checkpoint holds a " + actual + ", expected a " + kind);
    return encoder_config_from_json(j.at("encoder_config"));
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw CheckpointError("corrupt checkpoint " + path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    out << j.dump() << '\n';
    if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

template <class F>
auto wrap_json_errors(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw CheckpointError(what + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(what + ": " + e.what());
    }
}

}  // namespace

json encoder_config_to_json(const EncoderConfig& c) {
    return {{"hidden_dim", c.hidden_dim},
            {"num_layers", c.num_layers},
            {"num_heads", c.num_heads},
            {"ffn_dim", c.ffn_dim},
            {"vocab_hash_buckets", c.vocab_hash_buckets},
            {"max_sequence_length", c.max_sequence_length},
            {"piece_length", c.piece_length},
            {"seed", c.seed}};
}

EncoderConfig encoder_config_from_json(const json& j) {
    EncoderConfig c;
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.num_layers = j.at("num_layers").get<std::size_t>();
    c.num_heads = j.at("num_heads").get<std::size_t>();
    c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
    c.vocab_hash_buckets = j.at("vocab_hash_buckets").get<std::size_t>();
    c.max_sequence_length = j.at("max_sequence_length").get<std::size_t>();
    c.piece_length = j.at("piece_length").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

json model_to_json(const KeyphraseModel& model, const json& metadata) {
    return container(kModelKind, model.encoder.config(), metadata, tensors_to_json([&](const ConstParameterVisitor& f) {
                         model.visit_parameters(f);
                     }));
}

KeyphraseModel model_from_json(const json& j) {
    return wrap_json_errors("invalid checkpoint", [&] {
        KeyphraseModel model(check_container(j, kModelKind));
        tensors_from_json(j.at("tensors"), [&](const ParameterVisitor& f) { model.visit_parameters(f); });
        return model;
    });
}

json discriminator_to_json(const Discriminator& disc, const json& metadata) {
    return container(kDiscriminatorKind, disc.encoder.config(), metadata,
                     tensors_to_json([&](const ConstParameterVisitor& f) { disc.visit_parameters("", f); }));
}

Discriminator discriminator_from_json(const json& j) {
    return wrap_json_errors("invalid checkpoint", [&] {
        Discriminator disc(check_container(j, kDiscriminatorKind));
        tensors_from_json(j.at("tensors"), [&](const ParameterVisitor& f) { disc.visit_parameters("", f); });
        return disc;
    });
}

void save_model(const std::filesystem::path& path, const KeyphraseModel& model, const json& metadata) {
    write_json(path, model_to_json(model, metadata));
}

KeyphraseModel load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

void save_discriminator(const std::filesystem::path& path, const Discriminator& disc, const json& metadata) {
    write_json(path, discriminator_to_json(disc, metadata));
}

Discriminator load_discriminator(const std::filesystem::path& path) {
    return discriminator_from_json(read_json(path));
}

json checkpoint_metadata(const std::filesystem::path& path) {
    const json j = read_json(path);
    if (!j.is_object() || !j.contains("metadata")) throw CheckpointError("not a kpe checkpoint");
    return j.at("metadata");
}

}  // namespace kpe
