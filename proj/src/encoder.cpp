#include "kpe/encoder.hpp"

#include "init.hpp"
#include "kpe/kernels.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace kpe {

void EncoderConfig::validate() const {
    if (hidden_dim == 0 || num_layers == 0 || num_heads == 0 || ffn_dim == 0 || piece_length == 0) {
        throw std::invalid_argument("encoder config: dimensions must be positive");
    }
    if (hidden_dim % num_heads != 0) {
        throw std::invalid_argument("encoder config: hidden_dim must be divisible by num_heads");
    }
    if (vocab_hash_buckets < 3) throw std::invalid_argument("encoder config: vocab_hash_buckets must be >= 3");
    if (max_sequence_length < 3) throw std::invalid_argument("encoder config: max_sequence_length must be >= 3");
}

std::vector<std::string> InputSequence::texts() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.text);
    return out;
}

std::vector<std::string> word_pieces(const std::string& word, std::size_t piece_length) {
    const std::string lower = to_lower(word);
    std::vector<std::string> pieces;
    for (std::size_t pos = 0; pos < lower.size(); pos += piece_length) {
        std::string piece = lower.substr(pos, piece_length);
        pieces.push_back(pos == 0 ? piece : "##" + piece);
    }
    if (pieces.empty()) pieces.emplace_back();
    return pieces;
}

std::size_t piece_bucket(const std::string& piece, std::size_t buckets) {
    if (piece == kClsMarker) return 0;
    if (piece == kSepMarker) return 1;
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : piece) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return 2 + static_cast<std::size_t>(h % (buckets - 2));
}

namespace {

std::size_t piece_count(const std::string& word, std::size_t piece_length) {
    return word_pieces(word, piece_length).size();
}

}  // namespace

InputSequence build_sequence(std::span<const std::string> words, std::span<const std::string> prev_keyphrases,
                             const EncoderConfig& config) {
    std::vector<std::vector<std::string>> kp_tokens;
    for (const auto& kp : prev_keyphrases) {
        auto toks = split_whitespace(kp);
        if (!toks.empty()) kp_tokens.push_back(std::move(toks));
    }

    std::vector<std::size_t> word_cost;
    std::size_t words_total = 0;
    for (const auto& w : words) {
        word_cost.push_back(piece_count(w, config.piece_length));
        words_total += word_cost.back();
    }
    std::vector<std::size_t> kp_cost;
    for (std::size_t k = 0; k < kp_tokens.size(); ++k) {
        std::size_t c = k == 0 ? 0 : 1;  // separator before every keyphrase but the first
        for (const auto& t : kp_tokens[k]) c += piece_count(t, config.piece_length);
        kp_cost.push_back(c);
    }

    std::size_t total = 2 + words_total;
    for (std::size_t c : kp_cost) total += c;

    InputSequence seq;
    seq.paragraph_words = words.size();
    std::size_t kept_kps = kp_tokens.size();
    while (total > config.max_sequence_length && kept_kps > 0) {
        --kept_kps;
        total -= kp_cost[kept_kps];
        ++seq.dropped_keyphrases;
    }
    std::size_t kept_words = words.size();
    while (total > config.max_sequence_length && kept_words > 0) {
        --kept_words;
        total -= word_cost[kept_words];
    }
    seq.kept_words = kept_words;

    seq.tokens.push_back({kClsMarker, TokenRole::Cls, kNoWord});
    for (std::size_t i = 0; i < kept_words; ++i) seq.tokens.push_back({words[i], TokenRole::Word, i});
    seq.tokens.push_back({kSepMarker, TokenRole::Sep, kNoWord});
    for (std::size_t k = 0; k < kept_kps; ++k) {
        if (k > 0) seq.tokens.push_back({kSepMarker, TokenRole::Sep, kNoWord});
        for (const auto& t : kp_tokens[k]) seq.tokens.push_back({t, TokenRole::Keyphrase, kNoWord});
    }
    return seq;
}

InputSequence build_sequence(const Paragraph& paragraph, std::span<const std::string> prev_keyphrases,
                             const EncoderConfig& config) {
    return build_sequence(paragraph.words(), prev_keyphrases, config);
}

std::vector<double> aggregate_attention(const Matrix& cls_rows, std::span<const std::size_t> piece_word,
                                        std::size_t words) {
    if (piece_word.size() != cls_rows.cols()) {
        throw std::invalid_argument("aggregate_attention: piece map does not match attention width");
    }
    std::vector<double> sum(words, 0.0);
    std::vector<std::size_t> count(words, 0);
    const double heads = static_cast<double>(cls_rows.rows());
    for (std::size_t t = 0; t < piece_word.size(); ++t) {
        const std::size_t w = piece_word[t];
        if (w == kNoWord) continue;
        if (w >= words) throw std::out_of_range("aggregate_attention: word index out of range");
        double mean_over_heads = 0.0;
        for (std::size_t h = 0; h < cls_rows.rows(); ++h) mean_over_heads += cls_rows(h, t);
        sum[w] += mean_over_heads / heads;
        ++count[w];
    }
    for (std::size_t w = 0; w < words; ++w) {
        if (count[w] > 0) sum[w] /= static_cast<double>(count[w]);
    }
    return sum;
}

Encoder::Encoder(EncoderConfig config) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(config_.seed);
    const std::size_t d = config_.hidden_dim;
    token_embedding_ = Parameter(detail::random_normal(config_.vocab_hash_buckets, d, 1.0, rng));
    position_embedding_ = Parameter(detail::random_normal(config_.max_sequence_length, d, 0.1, rng));
    embed_norm_gain_ = detail::ones(1, d);
    embed_norm_bias_ = detail::zeros(1, d);
    for (std::size_t l = 0; l < config_.num_layers; ++l) {
        Layer layer;
        layer.wq = detail::dense_weight(d, d, rng);
        layer.bq = detail::zeros(1, d);
        layer.wk = detail::dense_weight(d, d, rng);
        layer.bk = detail::zeros(1, d);
        layer.wv = detail::dense_weight(d, d, rng);
        layer.bv = detail::zeros(1, d);
        layer.wo = detail::dense_weight(d, d, rng);
        layer.bo = detail::zeros(1, d);
        layer.norm1_gain = detail::ones(1, d);
        layer.norm1_bias = detail::zeros(1, d);
        layer.ffn_in = detail::dense_weight(d, config_.ffn_dim, rng);
        layer.ffn_in_bias = detail::zeros(1, config_.ffn_dim);
        layer.ffn_out = detail::dense_weight(config_.ffn_dim, d, rng);
        layer.ffn_out_bias = detail::zeros(1, d);
        layer.norm2_gain = detail::ones(1, d);
        layer.norm2_bias = detail::zeros(1, d);
        layers_.push_back(std::move(layer));
    }
}

template <typename Self, typename F>
void Encoder::visit_impl(Self& self, const std::string& prefix, F&& f) {
    f(prefix + "embedding.token", self.token_embedding_);
    f(prefix + "embedding.position", self.position_embedding_);
    f(prefix + "embedding.norm.gain", self.embed_norm_gain_);
    f(prefix + "embedding.norm.bias", self.embed_norm_bias_);
    for (std::size_t l = 0; l < self.layers_.size(); ++l) {
        auto& L = self.layers_[l];
        const std::string p = prefix + "layer" + std::to_string(l) + ".";
        f(p + "attention.query.weight", L.wq);
        f(p + "attention.query.bias", L.bq);
        f(p + "attention.key.weight", L.wk);
        f(p + "attention.key.bias", L.bk);
        f(p + "attention.value.weight", L.wv);
        f(p + "attention.value.bias", L.bv);
        f(p + "attention.output.weight", L.wo);
        f(p + "attention.output.bias", L.bo);
        f(p + "attention.norm.gain", L.norm1_gain);
        f(p + "attention.norm.bias", L.norm1_bias);
        f(p + "ffn.in.weight", L.ffn_in);
        f(p + "ffn.in.bias", L.ffn_in_bias);
        f(p + "ffn.out.weight", L.ffn_out);
        f(p + "ffn.out.bias", L.ffn_out_bias);
        f(p + "ffn.norm.gain", L.norm2_gain);
        f(p + "ffn.norm.bias", L.norm2_bias);
    }
}

void Encoder::visit_parameters(const std::string& prefix,
                               const ParameterVisitor& f) {
    visit_impl(*this, prefix, f);
}

void Encoder::visit_parameters(const std::string& prefix,
                               const ConstParameterVisitor& f) const {
    visit_impl(*this, prefix, f);
}

EncodedVars Encoder::encode(ag::Graph& g, const InputSequence& seq) const {
    if (seq.kept_words == 0) throw std::invalid_argument("encode: empty paragraph");
    const std::size_t d = config_.hidden_dim;
    const std::size_t heads = config_.num_heads;
    const std::size_t head_dim = d / heads;

    std::vector<std::size_t> ids, piece_word, piece_kp;
    std::size_t kp_tokens = 0;
    for (const auto& tok : seq.tokens) {
        switch (tok.role) {
            case TokenRole::Cls:
                ids.push_back(0);
                piece_word.push_back(kNoWord);
                piece_kp.push_back(kNoWord);
                break;
            case TokenRole::Sep:
                ids.push_back(1);
                piece_word.push_back(kNoWord);
                piece_kp.push_back(kNoWord);
                break;
            case TokenRole::Word:
            case TokenRole::Keyphrase:
                for (const auto& piece : word_pieces(tok.text, config_.piece_length)) {
                    ids.push_back(piece_bucket(piece, config_.vocab_hash_buckets));
                    piece_word.push_back(tok.role == TokenRole::Word ? tok.word_index : kNoWord);
                    piece_kp.push_back(tok.role == TokenRole::Keyphrase ? kp_tokens : kNoWord);
                }
                if (tok.role == TokenRole::Keyphrase) ++kp_tokens;
                break;
        }
    }
    const std::size_t T = ids.size();
    if (T > config_.max_sequence_length) {
        throw std::invalid_argument("encode: sequence of " + std::to_string(T) + " pieces exceeds max_sequence_length");
    }
    std::vector<std::size_t> positions(T);
    for (std::size_t t = 0; t < T; ++t) positions[t] = t;

    ag::Var x = ag::add(ag::gather_rows(g.parameter(token_embedding_), ids),
                        ag::gather_rows(g.parameter(position_embedding_), positions));
    x = ag::layer_norm(x, g.parameter(embed_norm_gain_), g.parameter(embed_norm_bias_));

    Matrix cls_rows(heads, T);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& L = layers_[l];
        ag::Var q = ag::add_row(ag::matmul(x, g.parameter(L.wq)), g.parameter(L.bq));
        ag::Var k = ag::add_row(ag::matmul(x, g.parameter(L.wk)), g.parameter(L.bk));
        ag::Var v = ag::add_row(ag::matmul(x, g.parameter(L.wv)), g.parameter(L.bv));
        std::vector<ag::Var> head_out;
        for (std::size_t h = 0; h < heads; ++h) {
            ag::Var qh = ag::slice_cols(q, h * head_dim, head_dim);
            ag::Var kh = ag::slice_cols(k, h * head_dim, head_dim);
            ag::Var vh = ag::slice_cols(v, h * head_dim, head_dim);
            ag::Var probs = ag::softmax_rows(ag::scale(ag::matmul_nt(qh, kh), inv_sqrt));
            if (l + 1 == layers_.size()) {
                const auto row0 = probs.value().row(0);
                std::copy(row0.begin(), row0.end(), cls_rows.row(h).begin());
            }
            head_out.push_back(ag::matmul(probs, vh));
        }
        ag::Var attn = ag::add_row(ag::matmul(ag::concat_cols(head_out), g.parameter(L.wo)), g.parameter(L.bo));
        x = ag::layer_norm(ag::add(x, attn), g.parameter(L.norm1_gain), g.parameter(L.norm1_bias));
        ag::Var hidden = ag::gelu(ag::add_row(ag::matmul(x, g.parameter(L.ffn_in)), g.parameter(L.ffn_in_bias)));
        ag::Var ffn = ag::add_row(ag::matmul(hidden, g.parameter(L.ffn_out)), g.parameter(L.ffn_out_bias));
        x = ag::layer_norm(ag::add(x, ffn), g.parameter(L.norm2_gain), g.parameter(L.norm2_bias));
    }

    // Piece -> word averaging as a constant left multiplication.
    const std::size_t n = seq.paragraph_words;
    Matrix word_avg(n, T);
    Matrix kp_avg(kp_tokens, T);
    {
        std::vector<std::size_t> wcount(n, 0), kcount(kp_tokens, 0);
        for (std::size_t t = 0; t < T; ++t) {
            if (piece_word[t] != kNoWord) ++wcount[piece_word[t]];
            if (piece_kp[t] != kNoWord) ++kcount[piece_kp[t]];
        }
        for (std::size_t t = 0; t < T; ++t) {
            if (piece_word[t] != kNoWord) word_avg(piece_word[t], t) = 1.0 / static_cast<double>(wcount[piece_word[t]]);
            if (piece_kp[t] != kNoWord) kp_avg(piece_kp[t], t) = 1.0 / static_cast<double>(kcount[piece_kp[t]]);
        }
    }

    EncodedVars out;
    out.word_vectors = ag::matmul(g.constant(std::move(word_avg)), x);
    const std::size_t cls_row = 0;
    out.paragraph_vector = ag::select_rows(x, std::span<const std::size_t>(&cls_row, 1));
    out.cls_attention = aggregate_attention(cls_rows, piece_word, n);
    out.appended_kp_vectors = kp_tokens > 0 ? kernels::matmul(kp_avg, x.value()) : Matrix(0, d);
    return out;
}

EncodedSequence Encoder::encode(const InputSequence& seq) const {
    ag::Graph g;
    EncodedVars vars = encode(g, seq);
    EncodedSequence out;
    out.word_vectors = vars.word_vectors.value();
    const auto hp = vars.paragraph_vector.value().row(0);
    out.paragraph_vector.assign(hp.begin(), hp.end());
    out.cls_attention = std::move(vars.cls_attention);
    out.appended_kp_vectors = std::move(vars.appended_kp_vectors);
    return out;
}

}  // namespace kpe
