#include "kpe/augmentation.hpp"

#include "kpe/extractor.hpp"
#include "parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace kpe {

using nlohmann::json;

namespace {

constexpr std::uint64_t kHeadSeedSalt = 0x9e3779b97f4a7c15ULL;

ag::Var domain_probability(ag::Graph& g, std::span<const std::string> words, const Discriminator& disc) {
    const InputSequence seq = build_sequence(words, {}, disc.encoder.config());
    const EncodedVars enc = disc.encoder.encode(g, seq);
    return ag::sigmoid(disc.head.logits(g, ag::max_pool_rows(enc.word_vectors)));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<Parameter*> parameter_list(Discriminator& disc) {
    std::vector<Parameter*> out;
    disc.visit_parameters("", [&](const std::string&, Parameter& p) { out.push_back(&p); });
    return out;
}

}  // namespace

Discriminator::Discriminator(const EncoderConfig& config) : encoder(config) {
    std::mt19937_64 rng(config.seed ^ kHeadSeedSalt);
    head = DomainHead(config.hidden_dim, rng);
}

void Discriminator::visit_parameters(const std::string& prefix, const ParameterVisitor& f) {
    encoder.visit_parameters(prefix + "encoder.", f);
    head.visit_parameters(prefix + "head.", f);
}

void Discriminator::visit_parameters(const std::string& prefix, const ConstParameterVisitor& f) const {
    encoder.visit_parameters(prefix + "encoder.", f);
    head.visit_parameters(prefix + "head.", f);
}

DomainDistribution discriminate_vectors(const Matrix& word_vectors, const DomainHead& head) {
    if (word_vectors.rows() == 0) throw std::invalid_argument("discriminate: empty paragraph");
    Matrix pooled(1, word_vectors.cols());
    for (std::size_t j = 0; j < word_vectors.cols(); ++j) {
        double m = word_vectors(0, j);
        for (std::size_t i = 1; i < word_vectors.rows(); ++i) m = std::max(m, word_vectors(i, j));
        pooled(0, j) = m;
    }
    return {sigmoid(head.logits(pooled)(0, 0))};
}

DiscriminatorOutput inspect(std::span<const std::string> words, const Discriminator& disc) {
    if (words.empty()) throw std::invalid_argument("discriminate: empty paragraph");
    const EncodedSequence enc = disc.encoder.encode(build_sequence(words, {}, disc.encoder.config()));
    return {discriminate_vectors(enc.word_vectors, disc.head), enc.cls_attention};
}

DomainDistribution discriminate(std::span<const std::string> words, const Discriminator& disc) {
    return inspect(words, disc).distribution;
}

DomainDistribution discriminate(const Paragraph& paragraph, const Discriminator& disc) {
    return discriminate(paragraph.words(), disc);
}

double discriminator_accuracy(std::span<const CorpusSample> samples, const Discriminator& disc) {
    if (samples.empty()) return 0.0;
    std::vector<int> correct(samples.size(), 0);
    detail::parallel_for(samples.size(), [&](std::size_t i) {
        const double p = discriminate(samples[i].paragraph, disc).p_transcript;
        const bool predicted_transcript = p >= 0.5;
        correct[i] = predicted_transcript == (samples[i].domain == Domain::Transcript) ? 1 : 0;
    });
    return static_cast<double>(std::accumulate(correct.begin(), correct.end(), 0)) /
           static_cast<double>(samples.size());
}

DiscriminatorTrainResult train_discriminator(std::span<const CorpusSample> corpus, const EncoderConfig& encoder,
                                             const DiscriminatorTrainConfig& config) {
    const bool has_transcript = std::any_of(corpus.begin(), corpus.end(),
                                            [](const CorpusSample& s) { return s.domain == Domain::Transcript; });
    const bool has_general = std::any_of(corpus.begin(), corpus.end(),
                                         [](const CorpusSample& s) { return s.domain == Domain::General; });
    if (!has_transcript || !has_general) {
        throw std::invalid_argument("train_discriminator: corpus must contain both domains");
    }
    if (config.batch_size == 0) throw std::invalid_argument("train_discriminator: batch_size must be >= 1");
    if (config.heldout_fraction < 0.0 || config.heldout_fraction >= 1.0) {
        throw std::invalid_argument("train_discriminator: heldout_fraction must be in [0, 1)");
    }

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto heldout_size = static_cast<std::size_t>(std::llround(config.heldout_fraction * static_cast<double>(corpus.size())));
    std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(heldout_size));
    std::vector<CorpusSample> heldout;
    for (std::size_t k = corpus.size() - heldout_size; k < corpus.size(); ++k) heldout.push_back(corpus[order[k]]);

    DiscriminatorTrainResult result;
    result.discriminator = Discriminator(encoder);
    result.train_size = train_idx.size();
    result.heldout_size = heldout_size;

    Discriminator& disc = result.discriminator;
    const std::vector<Parameter*> params = parameter_list(disc);
    Optimizer optimizer(config.optimizer);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < train_idx.size(); start += config.batch_size) {
            const std::size_t end = std::min(train_idx.size(), start + config.batch_size);
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            for (Parameter* p : params) p->zero_grad();
            for (std::size_t k = start; k < end; ++k) {
                const CorpusSample& s = corpus[train_idx[k]];
                ag::Graph g;
                ag::Var p = domain_probability(g, s.paragraph.words(), disc);
                const int label = s.domain == Domain::Transcript ? 1 : 0;
                ag::Var loss = ag::binary_nll(p, std::span<const int>(&label, 1), kLogClamp);
                epoch_loss += loss.scalar();
                g.backward(ag::scale(loss, inv_batch));
                for (Parameter* param : params) {
                    if (const Matrix* grad = g.gradient(*param)) param->grad += *grad;
                }
            }
            optimizer.step(params);
        }
        result.epoch_loss.push_back(train_idx.empty() ? 0.0 : epoch_loss / static_cast<double>(train_idx.size()));
    }

    result.heldout_accuracy = discriminator_accuracy(heldout, disc);
    return result;
}

SilverLabels select_by_attention(std::span<const double> attention, double p_full, const SubsetProbability& prob,
                                 double eta) {
    if (eta < 0.0 || std::isnan(eta)) throw std::invalid_argument("filter_document: eta must be >= 0");
    const std::size_t n = attention.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return attention[a] > attention[b]; });

    SilverLabels out;
    out.labels.assign(n, 0);
    for (std::size_t k = 1; k < n; ++k) {
        std::vector<std::size_t> kept(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(kept.begin(), kept.end());
        if (std::abs(prob(kept) - p_full) <= eta) {
            for (std::size_t idx : kept) out.labels[idx] = 1;
            out.k_used = k;
            out.converged = true;
            return out;
        }
    }
    std::fill(out.labels.begin(), out.labels.end(), 1);
    out.k_used = n;
    out.converged = false;
    return out;
}

SilverLabels filter_document(const Paragraph& paragraph, const Discriminator& disc, double eta) {
    const auto& words = paragraph.words();
    const DiscriminatorOutput full = inspect(words, disc);
    return select_by_attention(
        full.attention, full.distribution.p_transcript,
        [&](std::span<const std::size_t> kept) {
            std::vector<std::string> subset;
            subset.reserve(kept.size());
            for (std::size_t i : kept) subset.push_back(words[i]);
            return discriminate(subset, disc).p_transcript;
        },
        eta);
}

std::vector<SilverLabels> annotate_corpus(std::span<const CorpusSample> samples, const Discriminator& disc,
                                          double eta) {
    std::vector<SilverLabels> out(samples.size());
    detail::parallel_for(samples.size(),
                         [&](std::size_t i) { out[i] = filter_document(samples[i].paragraph, disc, eta); });
    return out;
}

std::vector<double> bridge_predict(const Matrix& word_vectors, const BridgeHead& head) {
    const Matrix logits = head.logits(word_vectors);
    std::vector<double> q(logits.rows());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = sigmoid(logits(i, 0));
    return q;
}

ag::Var bridge_probabilities(ag::Graph& g, ag::Var word_vectors, const BridgeHead& head) {
    return ag::sigmoid(head.logits(g, word_vectors));
}

double bridge_loss(std::span<const double> q, std::span<const int> labels) {
    if (q.size() != labels.size()) throw std::invalid_argument("bridge_loss: length mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double p = labels[i] != 0 ? q[i] : 1.0 - q[i];
        loss -= std::log(std::max(p, kLogClamp));
    }
    return loss;
}

ag::Var bridge_loss(ag::Var q, std::span<const int> labels) { return ag::binary_nll(q, labels, kLogClamp); }

std::string silver_to_json_line(const SilverRecord& r) {
    json j;
    j["paragraph_id"] = r.paragraph_id;
    j["labels"] = r.silver.labels;
    j["k"] = r.silver.k_used;
    j["eta"] = r.eta;
    j["converged"] = r.silver.converged;
    return j.dump();
}

std::vector<SilverRecord> load_silver_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open " + path.string());
    std::vector<SilverRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            SilverRecord r;
            r.paragraph_id = j.at("paragraph_id").get<std::string>();
            r.silver.labels = j.at("labels").get<std::vector<int>>();
            r.silver.k_used = j.at("k").get<std::size_t>();
            r.eta = j.at("eta").get<double>();
            r.silver.converged = j.at("converged").get<bool>();
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw CorpusError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace kpe
