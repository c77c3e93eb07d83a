#pragma once

// Rewards, the REINFORCE surrogate with a mini-batch mean baseline, and the
// training loop combining the labeling, bridge and reward losses.

#include "kpe/augmentation.hpp"
#include "kpe/chitchat.hpp"
#include "kpe/model.hpp"
#include "kpe/optim.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace kpe {

struct RewardBundle {
    double r_rep = 0.0;
    double r_chitchat = 0.0;
    double r_total = 0.0;
    double baseline = 0.0;
};

struct TrainConfig {
    double alpha_weight = 0.5;
    double lambda_bridge = 1.0;
    double lambda_rl = 1.0;
    double eta = 0.05;
    double beta = 0.1;
    OptimizerConfig optimizer{OptimizerKind::Adam, 1e-2};
    std::size_t batch_size = 4;
    std::size_t epochs = 10;
    std::uint64_t seed = 1;
    // Used when silver labels must be produced inside train().
    DiscriminatorTrainConfig discriminator;

    void validate() const;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// 1 iff the word is predicted inside a keyphrase and its lowercased token
// occurs among the lowercased tokens of the previous keyphrases.
int rep_indicator(std::size_t word_index, std::span<const LabelDistribution> dists,
                  std::span<const std::string> prev_keyphrases, const Paragraph& paragraph);

// -(1/n) sum_i REP(w_i), in [-1, 0].
double repetition_reward(std::span<const LabelDistribution> dists, std::span<const std::string> prev_keyphrases,
                         const Paragraph& paragraph);

double combine_rewards(double r_rep, double r_chitchat, double alpha_weight);

double batch_baseline(std::span<const double> rewards);

// -(r_total - b) * sum_i log P(argmax_i); the advantage is a constant.
double reinforce_loss(std::span<const LabelDistribution> dists, double r_total, double baseline);
// Same surrogate on a probability node with a fixed roll-out.
ag::Var reinforce_loss(ag::Var probs, std::span<const Label> rollout, double advantage);

struct TrainingSample {
    const CorpusSample* sample = nullptr;
    // Absent when no silver labels exist for the paragraph.
    const SilverLabels* silver = nullptr;
};

struct StepMetrics {
    std::size_t step = 0;
    double l_kp = 0.0;
    double l_bridge = 0.0;
    double l_rl = 0.0;
    double r_rep = 0.0;
    double r_chitchat = 0.0;
    double b = 0.0;
};

std::string metrics_to_json_line(const StepMetrics& m);

// One gradient update on `batch`. Loss = sum over the batch of
// L_kp + lambda_bridge * L_bridge + lambda_rl * L_R. Components whose weight
// is zero are not built. Reported losses are batch means.
StepMetrics train_step(KeyphraseModel& model, Optimizer& optimizer, std::span<const TrainingSample> batch,
                       const TrainConfig& config);

struct TrainingData {
    std::vector<Transcript> transcripts;
    std::vector<CorpusSample> general;
    // Keyed by paragraph id.
    std::unordered_map<std::string, SilverLabels> silver;
};

struct TrainResult {
    KeyphraseModel model;
    std::vector<StepMetrics> log;
    std::optional<double> discriminator_accuracy;
};

// Full loop: epochs of shuffled mini-batches. When the general corpus is
// present, lambda_bridge > 0 and no silver labels are supplied, a
// discriminator is trained and every sample is silver-annotated first.
TrainResult train(const TrainingData& data, const EncoderConfig& encoder, const TrainConfig& config,
                  std::ostream* metrics_log = nullptr);

}  // namespace kpe
