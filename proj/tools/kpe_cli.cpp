// kpe: command-line driver for training, extraction, evaluation and the
// data tools. Every config key is also a flag (--lambda-rl for lambda_rl);
// flags override values from --config.

#include "kpe/augmentation.hpp"
#include "kpe/checkpoint.hpp"
#include "kpe/chitchat.hpp"
#include "kpe/corpus.hpp"
#include "kpe/evaluator.hpp"
#include "kpe/model.hpp"
#include "kpe/reinforcement.hpp"
#include "kpe/run_config.hpp"
#include "kpe/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <stdexcept>

using namespace kpe;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const std::map<std::string, std::string> kHelp = {
    {"seed", "Seed for initialization, shuffling and synthesis"},
    {"hidden_dim", "Encoder width"},
    {"num_layers", "Encoder layers"},
    {"num_heads", "Attention heads per layer"},
    {"ffn_dim", "Feed-forward width"},
    {"vocab_hash_buckets", "Word-piece hash buckets"},
    {"max_sequence_length", "Word-piece budget per input sequence"},
    {"piece_length", "Characters per word piece"},
    {"alpha_weight", "Chitchat reward weight"},
    {"lambda_bridge", "Bridge loss weight"},
    {"lambda_rl", "Reward loss weight"},
    {"eta", "Pruning threshold for silver labels"},
    {"beta", "Chitchat flag threshold"},
    {"optimizer", "sgd or adam"},
    {"learning_rate", "Learning rate"},
    {"batch_size", "Mini-batch size"},
    {"epochs", "Training epochs"},
    {"disc_epochs", "Discriminator epochs"},
    {"disc_batch_size", "Discriminator mini-batch size"},
    {"disc_heldout_fraction", "Held-out fraction for discriminator accuracy"},
    {"disc_optimizer", "Discriminator optimizer, sgd or adam"},
    {"disc_learning_rate", "Discriminator learning rate"},
    {"transcripts", "Transcript JSONL"},
    {"general", "General-domain JSONL"},
    {"silver", "Silver-label JSONL"},
    {"checkpoint", "Model checkpoint"},
    {"discriminator", "Discriminator checkpoint"},
    {"output", "Output file or directory (stdout when empty or -)"},
    {"metrics_log", "Training metrics JSONL (default: <checkpoint>.metrics.jsonl)"},
    {"k", "Comma-separated cutoffs for F1@k"},
    {"synth_size", "Synthetic transcript paragraphs"},
    {"synth_general_size", "Synthetic general documents (-1: same as synth-size)"},
    {"synth_paragraphs_per_transcript", "Paragraphs per synthetic transcript"},
    {"chitchat_rate", "Probability of a chitchat sentence"},
    {"overlap_rate", "Probability of re-mentioning the previous keyphrase"},
};

const std::set<std::string> kEncoderKeys = {"hidden_dim", "num_layers",          "num_heads",   "ffn_dim",
                                            "vocab_hash_buckets", "max_sequence_length", "piece_length"};

std::string flag_name(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

const std::string& require(const std::string& value, const std::string& key) {
    if (value.empty()) throw UsageError("missing required option " + flag_name(key));
    return value;
}

void with_output(const std::string& path, const std::function<void(std::ostream&)>& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write(out);
    if (!out) throw std::runtime_error("failed writing " + path);
}

struct Context {
    RunConfig config;
    std::set<std::string> explicit_keys;
};

KeyphraseModel load_checked_model(const Context& ctx) {
    KeyphraseModel model = load_model(require(ctx.config.checkpoint, "checkpoint"));
    const EncoderConfig expected = ctx.config.encoder_config();
    const json have = encoder_config_to_json(model.encoder.config());
    const json want = encoder_config_to_json(expected);
    for (const auto& key : kEncoderKeys) {
        if (ctx.explicit_keys.contains(key) && have.at(key) != want.at(key)) {
            throw CheckpointError("checkpoint " + ctx.config.checkpoint + " has " + key + "=" + have.at(key).dump() +
                                  " but the configuration asks for " + want.at(key).dump());
        }
    }
    return model;
}

int cmd_train(const Context& ctx) {
    const RunConfig& c = ctx.config;
    TrainingData data;
    data.transcripts = load_transcripts(require(c.transcripts, "transcripts"));
    const std::string& checkpoint = require(c.checkpoint, "checkpoint");
    if (!c.general.empty()) data.general = load_general_corpus(c.general);
    if (!c.silver.empty()) {
        for (auto& r : load_silver_labels(c.silver)) data.silver.emplace(r.paragraph_id, std::move(r.silver));
    }
    const std::string log_path = c.metrics_log.empty() ? checkpoint + ".metrics.jsonl" : c.metrics_log;
    std::ofstream log(log_path);
    if (!log) throw std::runtime_error("cannot write " + log_path);

    const TrainResult result = train(data, c.encoder_config(), c.train_config(), &log);
    json meta;
    meta["run_config"] = c.to_json();
    meta["steps"] = result.log.size();
    if (result.discriminator_accuracy) meta["discriminator_accuracy"] = *result.discriminator_accuracy;
    save_model(checkpoint, result.model, meta);

    json summary;
    summary["checkpoint"] = checkpoint;
    summary["metrics_log"] = log_path;
    summary["steps"] = result.log.size();
    if (!result.log.empty()) summary["last"] = json::parse(metrics_to_json_line(result.log.back()));
    if (result.discriminator_accuracy) summary["discriminator_accuracy"] = *result.discriminator_accuracy;
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_extract(const Context& ctx) {
    const KeyphraseModel model = load_checked_model(ctx);
    const auto transcripts = load_transcripts(require(ctx.config.transcripts, "transcripts"));
    with_output(ctx.config.output, [&](std::ostream& out) {
        for (const auto& t : transcripts) {
            const auto preds = extract_transcript(model, t);
            for (std::size_t i = 0; i < preds.size(); ++i) {
                out << extraction_to_json_line(t.paragraphs[i], preds[i].keyphrases) << '\n';
            }
        }
    });
    return 0;
}

int cmd_eval(const Context& ctx) {
    const KeyphraseModel model = load_checked_model(ctx);
    const auto transcripts = load_transcripts(require(ctx.config.transcripts, "transcripts"));
    const auto ks = parse_k_list(ctx.config.k);
    const EvalReport report = evaluate(model, transcripts, ctx.config.beta, ks);
    std::cout << report.to_json(false).dump(2) << '\n';
    if (!ctx.config.output.empty() && ctx.config.output != "-") {
        with_output(ctx.config.output, [&](std::ostream& out) { out << report.to_json(true).dump(2) << '\n'; });
    }
    return 0;
}

int cmd_silver_annotate(const Context& ctx) {
    const RunConfig& c = ctx.config;
    if (c.eta < 0.0) throw UsageError("--eta must be >= 0");
    const Discriminator disc = load_discriminator(require(c.discriminator, "discriminator"));
    std::vector<CorpusSample> samples;
    if (!c.transcripts.empty()) samples = transcript_samples(load_transcripts(c.transcripts));
    if (!c.general.empty()) {
        auto general = load_general_corpus(c.general);
        samples.insert(samples.end(), general.begin(), general.end());
    }
    if (c.transcripts.empty() && c.general.empty()) throw UsageError("missing --transcripts or --general");
    if (samples.empty()) throw CorpusError("corpus is empty");
    const auto labels = annotate_corpus(samples, disc, c.eta);
    with_output(c.output, [&](std::ostream& out) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            out << silver_to_json_line({samples[i].paragraph.id(), labels[i], c.eta}) << '\n';
        }
    });
    return 0;
}

int cmd_chitchat_scan(const Context& ctx) {
    const KeyphraseModel model = load_checked_model(ctx);
    const auto transcripts = load_transcripts(require(ctx.config.transcripts, "transcripts"));
    with_output(ctx.config.output, [&](std::ostream& out) {
        for (const auto& t : transcripts) {
            const auto preds = extract_transcript(model, t);
            for (std::size_t i = 0; i < preds.size(); ++i) {
                const auto flags = detect_chitchat(t.paragraphs[i], preds[i].encoded, ctx.config.beta);
                out << chitchat_to_json_line(t.paragraphs[i].id(), flags) << '\n';
            }
        }
    });
    return 0;
}

int cmd_train_discriminator(const Context& ctx) {
    const RunConfig& c = ctx.config;
    auto samples = transcript_samples(load_transcripts(require(c.transcripts, "transcripts")));
    const auto general = load_general_corpus(require(c.general, "general"));
    samples.insert(samples.end(), general.begin(), general.end());
    const std::string& path = require(c.discriminator, "discriminator");
    const DiscriminatorTrainResult result = train_discriminator(samples, c.encoder_config(), c.discriminator_config());
    json meta;
    meta["run_config"] = c.to_json();
    meta["heldout_accuracy"] = result.heldout_accuracy;
    save_discriminator(path, result.discriminator, meta);
    json summary;
    summary["discriminator"] = path;
    summary["heldout_accuracy"] = result.heldout_accuracy;
    summary["train_size"] = result.train_size;
    summary["heldout_size"] = result.heldout_size;
    summary["epoch_loss"] = result.epoch_loss;
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_synth(const Context& ctx) {
    const std::string& dir = require(ctx.config.output, "output");
    const SynthCorpus corpus = generate_synthetic(ctx.config.synth_config());
    write_synthetic(corpus, dir);
    std::size_t paragraphs = 0;
    for (const auto& t : corpus.transcripts) paragraphs += t.paragraphs.size();
    json summary;
    summary["transcripts"] = corpus.transcripts.size();
    summary["paragraphs"] = paragraphs;
    summary["general"] = corpus.general.size();
    summary["output"] = dir;
    std::cout << summary.dump() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Keyphrase extraction for live-stream transcripts"};
    app.require_subcommand(0, 1);

    std::string config_path;
    bool show_config = false;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_flag("--show-config", show_config, "Print the resolved configuration as JSON and exit");

    const json defaults = RunConfig{}.to_json();
    std::map<std::string, std::string> raw;
    std::map<std::string, CLI::Option*> options;
    for (const auto& [key, value] : defaults.items()) {
        std::string help = kHelp.count(key) ? kHelp.at(key) : key;
        help += " (default " + value.dump() + ")";
        options[key] = app.add_option(flag_name(key), raw[key], help);
    }

    const std::map<std::string, std::pair<std::string, std::function<int(const Context&)>>> commands = {
        {"train", {"Train the extraction model", cmd_train}},
        {"extract", {"Extract keyphrases with a trained model", cmd_extract}},
        {"eval", {"Report F1@k and diagnostic rates", cmd_eval}},
        {"silver-annotate", {"Label domain-specific words with a discriminator", cmd_silver_annotate}},
        {"chitchat-scan", {"Score sentences for chitchat", cmd_chitchat_scan}},
        {"train-discriminator", {"Train the domain discriminator", cmd_train_discriminator}},
        {"synth", {"Generate a synthetic two-domain corpus", cmd_synth}},
    };
    for (const auto& [name, entry] : commands) app.add_subcommand(name, entry.first)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        Context ctx;
        if (!config_path.empty()) {
            ctx.config = load_run_config(config_path);
            std::ifstream in(config_path);
            const json given = json::parse(in);
            for (const auto& [key, _] : given.items()) ctx.explicit_keys.insert(key);
        }
        for (const auto& [key, opt] : options) {
            if (opt->count() == 0) continue;
            set_run_config_value(ctx.config, key, raw.at(key));
            ctx.explicit_keys.insert(key);
        }
        ctx.config.validate();

        if (show_config) {
            std::cout << ctx.config.to_json().dump(2) << '\n';
            return 0;
        }
        const auto subs = app.get_subcommands();
        if (subs.empty()) {
            std::cerr << app.help();
            return 2;
        }
        return commands.at(subs.front()->get_name()).second(ctx);
    } catch (const UsageError& e) {
        std::cerr << "kpe: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "kpe: error: " << e.what() << '\n';
        return 1;
    }
}
