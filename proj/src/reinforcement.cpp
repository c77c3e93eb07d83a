#include "kpe/reinforcement.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

namespace kpe {

namespace {

constexpr std::uint64_t kDiscriminatorSalt = 0xd1b54a32d192ed03ULL;
constexpr std::uint64_t kShuffleSalt = 0x8bb84b93962eacc9ULL;

std::unordered_set<std::string> lowercase_tokens(std::span<const std::string> phrases) {
    std::unordered_set<std::string> out;
    for (const auto& p : phrases) {
        for (const auto& t : split_whitespace(p)) out.insert(to_lower(t));
    }
    return out;
}

bool in_keyphrase(Label l) { return l == Label::B || l == Label::I; }

double sum_log_rollout(std::span<const LabelDistribution> dists) {
    double s = 0.0;
    for (const auto& d : dists) s += std::log(std::max(d[d.argmax()], kLogClamp));
    return s;
}

}  // namespace

void TrainConfig::validate() const {
    if (alpha_weight < 0.0) throw std::invalid_argument("alpha_weight must be >= 0");
    if (lambda_bridge < 0.0) throw std::invalid_argument("lambda_bridge must be >= 0");
    if (lambda_rl < 0.0) throw std::invalid_argument("lambda_rl must be >= 0");
    if (eta < 0.0) throw std::invalid_argument("eta must be >= 0");
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("beta must be in [0, 1]");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
    if (!(optimizer.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
}

int rep_indicator(std::size_t word_index, std::span<const LabelDistribution> dists,
                  std::span<const std::string> prev_keyphrases, const Paragraph& paragraph) {
    if (word_index >= dists.size() || word_index >= paragraph.size()) return 0;
    if (!in_keyphrase(dists[word_index].argmax())) return 0;
    const auto prev = lowercase_tokens(prev_keyphrases);
    return prev.contains(to_lower(paragraph.words()[word_index])) ? 1 : 0;
}

double repetition_reward(std::span<const LabelDistribution> dists, std::span<const std::string> prev_keyphrases,
                         const Paragraph& paragraph) {
    const std::size_t n = paragraph.size();
    if (n == 0 || prev_keyphrases.empty()) return 0.0;
    if (dists.size() != n) throw std::invalid_argument("repetition_reward: length mismatch");
    const auto prev = lowercase_tokens(prev_keyphrases);
    std::size_t repeated = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (in_keyphrase(dists[i].argmax()) && prev.contains(to_lower(paragraph.words()[i]))) ++repeated;
    }
    return -static_cast<double>(repeated) / static_cast<double>(n);
}

double combine_rewards(double r_rep, double r_chitchat, double alpha_weight) {
    return r_rep + alpha_weight * r_chitchat;
}

double batch_baseline(std::span<const double> rewards) {
    if (rewards.empty()) throw std::invalid_argument("batch_baseline: empty batch");
    return std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
}

double reinforce_loss(std::span<const LabelDistribution> dists, double r_total, double baseline) {
    return -(r_total - baseline) * sum_log_rollout(dists);
}

ag::Var reinforce_loss(ag::Var probs, std::span<const Label> rollout, double advantage) {
    const auto idx = label_indices(rollout);
    // -(adv) * sum log p == adv * nll
    return ag::scale(ag::label_nll(probs, idx, kLogClamp), advantage);
}

std::string metrics_to_json_line(const StepMetrics& m) {
    nlohmann::json j;
    j["step"] = m.step;
    j["l_kp"] = m.l_kp;
    j["l_bridge"] = m.l_bridge;
    j["l_rl"] = m.l_rl;
    j["r_rep"] = m.r_rep;
    j["r_chitchat"] = m.r_chitchat;
    j["b"] = m.b;
    return j.dump();
}

StepMetrics train_step(KeyphraseModel& model, Optimizer& optimizer, std::span<const TrainingSample> batch,
                       const TrainConfig& config) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    const std::vector<Parameter*> params = model.parameters();
    for (Parameter* p : params) p->zero_grad();

    ag::Graph g;
    std::vector<ag::Var> label_probs;
    std::vector<LabelSequence> rollouts;
    std::vector<double> rewards;
    StepMetrics m;
    std::optional<ag::Var> total;
    auto accumulate = [&](ag::Var term) { total = total ? ag::add(*total, term) : term; };

    for (const TrainingSample& ts : batch) {
        const CorpusSample& s = *ts.sample;
        const Paragraph& p = s.paragraph;
        const ModelOutputs out = forward(g, model, p, s.prev_keyphrases);
        const LabelSequence gold = spans_to_bio(p);

        ag::Var l_kp = keyphrase_loss(out.label_probs, gold);
        m.l_kp += l_kp.scalar();
        accumulate(l_kp);

        if (ts.silver != nullptr) {
            if (ts.silver->labels.size() != p.size()) {
                throw TrainingError("silver labels for paragraph '" + p.id() + "' have length " +
                                    std::to_string(ts.silver->labels.size()) + ", expected " +
                                    std::to_string(p.size()));
            }
            if (config.lambda_bridge > 0.0) {
                ag::Var l_bridge = bridge_loss(out.bridge_probs, ts.silver->labels);
                m.l_bridge += l_bridge.scalar();
                accumulate(ag::scale(l_bridge, config.lambda_bridge));
            }
        }

        const auto dists = distributions_from(out.label_probs.value());
        const RankedKeyphrases kp = decode_keyphrases(dists);
        const double r_rep = repetition_reward(dists, s.prev_keyphrases, p);
        const ChitchatFlags flags =
            detect_chitchat(p, out.word_vectors.value(), out.paragraph_vector.value().row(0), config.beta);
        const double r_chat = chitchat_reward(kp, flags, p);
        m.r_rep += r_rep;
        m.r_chitchat += r_chat;
        rewards.push_back(combine_rewards(r_rep, r_chat, config.alpha_weight));
        label_probs.push_back(out.label_probs);
        rollouts.push_back(argmax_labels(dists));
    }

    m.b = batch_baseline(rewards);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double advantage = rewards[i] - m.b;
        m.l_rl += reinforce_loss(distributions_from(label_probs[i].value()), rewards[i], m.b);
        if (config.lambda_rl > 0.0) {
            accumulate(ag::scale(reinforce_loss(label_probs[i], rollouts[i], advantage), config.lambda_rl));
        }
    }

    const double loss = total->scalar();
    if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite loss " << loss << " (l_kp=" << m.l_kp << ", l_bridge=" << m.l_bridge
            << ", l_rl=" << m.l_rl << ") in batch starting with paragraph '" << batch[0].sample->paragraph.id()
            << "'";
        throw TrainingError(msg.str());
    }
    g.backward(*total);
    for (Parameter* p : params) {
        if (const Matrix* grad = g.gradient(*p)) p->grad += *grad;
    }
    optimizer.step(params);

    const double inv = 1.0 / static_cast<double>(batch.size());
    m.l_kp *= inv;
    m.l_bridge *= inv;
    m.l_rl *= inv;
    m.r_rep *= inv;
    m.r_chitchat *= inv;
    return m;
}

TrainResult train(const TrainingData& data, const EncoderConfig& encoder, const TrainConfig& config,
                  std::ostream* metrics_log) {
    config.validate();
    if (data.transcripts.empty()) throw std::invalid_argument("train: transcript corpus is empty");

    std::vector<CorpusSample> samples = transcript_samples(data.transcripts);
    if (samples.empty()) throw std::invalid_argument("train: transcript corpus has no paragraphs");
    samples.insert(samples.end(), data.general.begin(), data.general.end());
    std::unordered_set<std::string> ids;
    for (const auto& s : samples) {
        if (!ids.insert(s.paragraph.id()).second) {
            throw std::invalid_argument("train: paragraph id '" + s.paragraph.id() + "' occurs more than once");
        }
    }

    TrainResult result;
    std::unordered_map<std::string, SilverLabels> silver = data.silver;
    if (silver.empty() && !data.general.empty() && config.lambda_bridge > 0.0) {
        EncoderConfig disc_encoder = encoder;
        disc_encoder.seed = encoder.seed ^ kDiscriminatorSalt;
        DiscriminatorTrainConfig disc_config = config.discriminator;
        disc_config.seed = config.seed ^ kDiscriminatorSalt;
        const DiscriminatorTrainResult disc = train_discriminator(samples, disc_encoder, disc_config);
        result.discriminator_accuracy = disc.heldout_accuracy;
        const auto labels = annotate_corpus(samples, disc.discriminator, config.eta);
        for (std::size_t i = 0; i < samples.size(); ++i) silver.emplace(samples[i].paragraph.id(), labels[i]);
    }

    std::vector<TrainingSample> pool;
    pool.reserve(samples.size());
    for (const auto& s : samples) {
        auto it = silver.find(s.paragraph.id());
        pool.push_back({&s, it == silver.end() ? nullptr : &it->second});
    }

    result.model = KeyphraseModel(encoder);
    Optimizer optimizer(config.optimizer);
    std::mt19937_64 rng(config.seed ^ kShuffleSalt);
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);

    std::size_t step = 0;
    std::vector<TrainingSample> batch;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            batch.clear();
            for (std::size_t k = start; k < std::min(order.size(), start + config.batch_size); ++k) {
                batch.push_back(pool[order[k]]);
            }
            StepMetrics m = train_step(result.model, optimizer, batch, config);
            m.step = step++;
            if (metrics_log != nullptr) *metrics_log << metrics_to_json_line(m) << '\n';
            result.log.push_back(m);
        }
    }
    return result;
}

}  // namespace kpe
