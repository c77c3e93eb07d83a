#include "kpe/reinforcement.hpp"
#include "kpe/synth.hpp"
#include "support.hpp"

#include <doctest.h>

#include <json.hpp>

#include <sstream>

using namespace kpe;

namespace {

LabelDistribution peaked(Label l, double p = 0.8) {
    LabelDistribution d;
    d.probs = {(1 - p) / 2, (1 - p) / 2, (1 - p) / 2};
    d.probs[static_cast<std::size_t>(l)] = p;
    return d;
}

EncoderConfig tiny_encoder() {
    EncoderConfig c;
    c.hidden_dim = 8;
    c.num_heads = 2;
    c.ffn_dim = 16;
    c.vocab_hash_buckets = 512;
    return c;
}

std::vector<Matrix> snapshot(const KeyphraseModel& m) {
    std::vector<Matrix> out;
    m.visit_parameters([&](const std::string&, const Parameter& p) { out.push_back(p.value); });
    return out;
}

SynthCorpus small_corpus(std::size_t size = 16) {
    SynthConfig sc;
    sc.size = size;
    return generate_synthetic(sc);
}

}  // namespace

TEST_SUITE("reinforcement") {

TEST_CASE("repetition reward examples") {
    const Paragraph p("p", {{{"the", "layer", "mask", "tool"}}}, {});
    const std::vector<std::string> prev{"Layer Mask"};
    std::vector<LabelDistribution> d{peaked(Label::O), peaked(Label::B), peaked(Label::I), peaked(Label::O)};
    CHECK(repetition_reward(d, prev, p) == doctest::Approx(-0.5));
    CHECK(rep_indicator(1, d, prev, p) == 1);
    CHECK(rep_indicator(3, d, prev, p) == 0);
    CHECK(repetition_reward(d, {}, p) == 0.0);

    const Paragraph all("q", {{{"layer", "MASK", "layer", "mask"}}}, {});
    std::vector<LabelDistribution> b(4, peaked(Label::B));
    CHECK(repetition_reward(b, prev, all) == doctest::Approx(-1.0));
    std::vector<LabelDistribution> o(4, peaked(Label::O));
    CHECK(repetition_reward(o, prev, all) == 0.0);
}

TEST_CASE("reward combination, baseline and surrogate examples") {
    CHECK(combine_rewards(-0.5, -1.0, 0.5) == doctest::Approx(-1.0));
    CHECK(combine_rewards(-0.25, -2.0, 0.0) == doctest::Approx(-0.25));
    const std::vector<double> r{-1.0, 0.0, -0.5};
    CHECK(batch_baseline(r) == doctest::Approx(-0.5));
    CHECK_THROWS_AS(batch_baseline(std::vector<double>{}), std::invalid_argument);

    const std::vector<LabelDistribution> one{peaked(Label::B, std::exp(-0.4))};
    CHECK(reinforce_loss(one, -1.0, -0.5) == doctest::Approx(-0.2));
    CHECK(reinforce_loss(one, -0.5, -0.5) == 0.0);
}

TEST_CASE("reward bounds over random predictions") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 300; ++trial) {
        const Paragraph p = test::random_paragraph(rng, 15, "p", 3);
        std::vector<LabelDistribution> d(p.size());
        for (auto& x : d) x = peaked(static_cast<Label>(test::uniform(rng, 0, 2)));
        std::vector<std::string> prev{test::random_word(rng, 3) + " " + test::random_word(rng, 3)};
        const double r = repetition_reward(d, prev, p);
        CHECK(r >= -1.0);
        CHECK(r <= 0.0);
        int count = 0;
        for (std::size_t i = 0; i < p.size(); ++i) count += rep_indicator(i, d, prev, p);
        CHECK(r == doctest::Approx(-static_cast<double>(count) / static_cast<double>(p.size())));
    }
}

TEST_CASE("surrogate gradient matches central differences") {
    std::mt19937_64 rng(22);
    ExtractorHead head(5, rng);
    const Matrix h = test::random_matrix(4, 5, rng);
    const LabelSequence rollout = argmax_labels(predict_label_distributions(h, head));
    const double advantage = -0.7;
    auto loss = [&](ag::Graph& g) { return reinforce_loss(label_probabilities(g, g.constant(h), head), rollout, advantage); };
    ag::Graph g;
    ag::Var l = loss(g);
    CHECK(l.scalar() == doctest::Approx(reinforce_loss(predict_label_distributions(h, head), advantage, 0.0)));
    g.backward(l);
    head.visit_parameters("", [&](const std::string& name, Parameter& p) {
        CAPTURE(name);
        const Matrix analytic = *g.gradient(p);
        CHECK(test::max_fd_error(p, analytic, [&] {
                  ag::Graph q;
                  return loss(q).scalar();
              }) <= 1e-5);
    });
}

TEST_CASE("zero reward weight reproduces the supervised update bitwise") {
    const SynthCorpus corpus = small_corpus(8);
    const auto samples = transcript_samples(corpus.transcripts);
    std::vector<TrainingSample> batch;
    for (std::size_t i = 0; i < 4; ++i) batch.push_back({&samples[i], nullptr});

    TrainConfig cfg;
    cfg.lambda_rl = 0.0;
    KeyphraseModel a(tiny_encoder());
    Optimizer opt_a(cfg.optimizer);
    train_step(a, opt_a, batch, cfg);

    cfg.alpha_weight = 7.0;
    KeyphraseModel b(tiny_encoder());
    Optimizer opt_b(cfg.optimizer);
    train_step(b, opt_b, batch, cfg);
    CHECK(snapshot(a) == snapshot(b));

    // Hand-built supervised objective.
    KeyphraseModel c(tiny_encoder());
    Optimizer opt_c(cfg.optimizer);
    const auto params = c.parameters();
    for (Parameter* p : params) p->zero_grad();
    ag::Graph g;
    std::optional<ag::Var> total;
    for (const auto& ts : batch) {
        const ModelOutputs out = forward(g, c, ts.sample->paragraph, ts.sample->prev_keyphrases);
        ag::Var l = keyphrase_loss(out.label_probs, spans_to_bio(ts.sample->paragraph));
        total = total ? ag::add(*total, l) : l;
    }
    g.backward(*total);
    for (Parameter* p : params)
        if (const Matrix* grad = g.gradient(*p)) p->grad += *grad;
    opt_c.step(params);
    CHECK(snapshot(a) == snapshot(c));
}

TEST_CASE("a single-sample batch has zero advantage") {
    const SynthCorpus corpus = small_corpus(4);
    const auto samples = transcript_samples(corpus.transcripts);
    const std::vector<TrainingSample> batch{{&samples[1], nullptr}};
    TrainConfig with, without;
    with.lambda_rl = 3.0;
    without.lambda_rl = 0.0;
    KeyphraseModel a(tiny_encoder()), b(tiny_encoder());
    Optimizer oa(with.optimizer), ob(without.optimizer);
    const StepMetrics m = train_step(a, oa, batch, with);
    train_step(b, ob, batch, without);
    CHECK(m.l_rl == 0.0);
    CHECK(snapshot(a) == snapshot(b));
}

TEST_CASE("silver label length mismatch is reported") {
    const SynthCorpus corpus = small_corpus(4);
    const auto samples = transcript_samples(corpus.transcripts);
    SilverLabels bad{{1}, 1, true};
    const std::vector<TrainingSample> batch{{&samples[0], &bad}};
    KeyphraseModel m(tiny_encoder());
    Optimizer opt({});
    CHECK_THROWS_AS(train_step(m, opt, batch, TrainConfig{}), TrainingError);
}

TEST_CASE("training lowers the labeling loss, is deterministic and logs every step") {
    const SynthCorpus corpus = small_corpus(16);
    TrainConfig cfg;
    cfg.epochs = 25;  // 32 samples / batch 4 = 8 steps per epoch
    cfg.discriminator.epochs = 1;
    const TrainingData data{corpus.transcripts, corpus.general, {}};
    std::ostringstream log;
    const TrainResult r = train(data, tiny_encoder(), cfg, &log);
    REQUIRE(r.log.size() == 200);
    CHECK(r.discriminator_accuracy.has_value());
    auto mean_lkp = [&](std::size_t from, std::size_t to) {
        double s = 0;
        for (std::size_t i = from; i < to; ++i) s += r.log[i].l_kp;
        return s / static_cast<double>(to - from);
    };
    CHECK(mean_lkp(192, 200) < 0.5 * mean_lkp(0, 8));

    std::istringstream lines(log.str());
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("step") == n);
        for (const char* key : {"l_kp", "l_bridge", "l_rl", "r_rep", "r_chitchat", "b"}) CHECK(j.contains(key));
        ++n;
    }
    CHECK(n == 200);

    cfg.epochs = 3;
    const TrainResult x = train(data, tiny_encoder(), cfg);
    const TrainResult y = train(data, tiny_encoder(), cfg);
    CHECK(snapshot(x.model) == snapshot(y.model));
    for (std::size_t i = 0; i < x.log.size(); ++i) CHECK(x.log[i].l_kp == y.log[i].l_kp);
}

TEST_CASE("zero epochs returns the initial model") {
    const SynthCorpus corpus = small_corpus(4);
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.lambda_bridge = 0.0;
    const TrainResult r = train({corpus.transcripts, corpus.general, {}}, tiny_encoder(), cfg);
    CHECK(r.log.empty());
    CHECK(snapshot(r.model) == snapshot(KeyphraseModel(tiny_encoder())));
    CHECK_THROWS_AS(train({{}, corpus.general, {}}, tiny_encoder(), cfg), std::invalid_argument);
    std::vector<CorpusSample> clash = corpus.general;
    clash[0].paragraph = corpus.transcripts[0].paragraphs[0];
    CHECK_THROWS_AS(train({corpus.transcripts, clash, {}}, tiny_encoder(), cfg), std::invalid_argument);
    cfg.beta = 2.0;
    CHECK_THROWS_AS(train({corpus.transcripts, {}, {}}, tiny_encoder(), cfg), std::invalid_argument);
}

}
