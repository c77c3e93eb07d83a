#pragma once

// Cross-domain augmentation: a domain discriminator with its own encoder,
// attention-pruned silver labels for domain-specific words, and the bridge
// head trained on those labels.

#include "kpe/corpus.hpp"
#include "kpe/encoder.hpp"
#include "kpe/head.hpp"
#include "kpe/optim.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace kpe {

struct DomainDistribution {
    double p_transcript = 0.5;
    double p_general() const { return 1.0 - p_transcript; }
};

// Scalar-logit head over the max-pooled word vectors.
struct DomainHead : TwoLayerHead {
    DomainHead() = default;
    DomainHead(std::size_t hidden_dim, std::mt19937_64& rng) : TwoLayerHead(hidden_dim, hidden_dim, 1, rng) {}
};

// Separate parameter set from the main extraction model.
struct Discriminator {
    Encoder encoder;
    DomainHead head;

    Discriminator() = default;
    explicit Discriminator(const EncoderConfig& config);

    void visit_parameters(const std::string& prefix, const ParameterVisitor& f);
    void visit_parameters(const std::string& prefix, const ConstParameterVisitor& f) const;
};

struct DiscriminatorOutput {
    DomainDistribution distribution;
    // Final-layer [CLS] attention per word.
    std::vector<double> attention;
};

// Max-pool the word vectors and apply the domain head.
DomainDistribution discriminate_vectors(const Matrix& word_vectors, const DomainHead& head);

DiscriminatorOutput inspect(std::span<const std::string> words, const Discriminator& disc);
DomainDistribution discriminate(std::span<const std::string> words, const Discriminator& disc);
DomainDistribution discriminate(const Paragraph& paragraph, const Discriminator& disc);

struct DiscriminatorTrainConfig {
    std::size_t epochs = 4;
    std::size_t batch_size = 8;
    double heldout_fraction = 0.2;
    OptimizerConfig optimizer{OptimizerKind::Adam, 3e-3};
    std::uint64_t seed = 1;
};

struct DiscriminatorTrainResult {
    Discriminator discriminator;
    double heldout_accuracy = 0.0;
    std::size_t train_size = 0;
    std::size_t heldout_size = 0;
    std::vector<double> epoch_loss;
};

// Binary cross-entropy on domain labels (transcript = 1) over a seeded
// train/held-out split. Throws when the corpus lacks either domain.
DiscriminatorTrainResult train_discriminator(std::span<const CorpusSample> corpus, const EncoderConfig& encoder,
                                             const DiscriminatorTrainConfig& config);

double discriminator_accuracy(std::span<const CorpusSample> samples, const Discriminator& disc);

struct SilverLabels {
    std::vector<int> labels;
    std::size_t k_used = 0;
    bool converged = false;
};

// Domain probability of the document restricted to `kept` word indices
// (ascending, original order).
using SubsetProbability = std::function<double(std::span<const std::size_t> kept)>;

// Keeps the top-k words by attention (stable, descending), scanning
// k = 1..n-1 for the first k with |p(top-k) - p_full| <= eta. Falls back to
// k = n with converged = false.
SilverLabels select_by_attention(std::span<const double> attention, double p_full, const SubsetProbability& prob,
                                 double eta);

SilverLabels filter_document(const Paragraph& paragraph, const Discriminator& disc, double eta);

// Labels every sample with a frozen discriminator, in parallel.
std::vector<SilverLabels> annotate_corpus(std::span<const CorpusSample> samples, const Discriminator& disc,
                                          double eta);

struct BridgeHead : TwoLayerHead {
    BridgeHead() = default;
    BridgeHead(std::size_t hidden_dim, std::mt19937_64& rng) : TwoLayerHead(hidden_dim, hidden_dim, 1, rng) {}
};

std::vector<double> bridge_predict(const Matrix& word_vectors, const BridgeHead& head);
// n×1 probability node.
ag::Var bridge_probabilities(ag::Graph& g, ag::Var word_vectors, const BridgeHead& head);

double bridge_loss(std::span<const double> q, std::span<const int> labels);
ag::Var bridge_loss(ag::Var q, std::span<const int> labels);

struct SilverRecord {
    std::string paragraph_id;
    SilverLabels silver;
    double eta = 0.0;
};

std::string silver_to_json_line(const SilverRecord& record);
std::vector<SilverRecord> load_silver_labels(const std::filesystem::path& path);

}  // namespace kpe
