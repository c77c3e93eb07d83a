#pragma once

// Contextual encoder for the conditioned input sequence
//   [CLS] w_1 .. w_n [SEP] kp_1 [SEP] kp_2 ...
//
// The built-in backend is a small trainable transformer (hashed word-piece
// embeddings, learned positions, post-norm self-attention blocks). Encoders
// are read-only during encoding, so concurrent encodes are safe.

#include "kpe/autograd.hpp"
#include "kpe/corpus.hpp"
#include "kpe/tensor.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace kpe {

struct EncoderConfig {
    std::size_t hidden_dim = 16;
    std::size_t num_layers = 1;
    std::size_t num_heads = 2;
    std::size_t ffn_dim = 32;
    std::size_t vocab_hash_buckets = 4096;
    std::size_t max_sequence_length = 128;
    // Words longer than this many characters are split into several pieces.
    std::size_t piece_length = 6;
    std::uint64_t seed = 1;

    void validate() const;
    bool operator==(const EncoderConfig&) const = default;
};

inline constexpr std::size_t kNoWord = std::numeric_limits<std::size_t>::max();
inline constexpr const char* kClsMarker = "[CLS]";
inline constexpr const char* kSepMarker = "[SEP]";

enum class TokenRole { Cls, Word, Sep, Keyphrase };

struct SequenceToken {
    std::string text;
    TokenRole role = TokenRole::Word;
    // Paragraph word index for Word tokens, kNoWord otherwise.
    std::size_t word_index = kNoWord;
};

struct InputSequence {
    std::vector<SequenceToken> tokens;
    std::size_t paragraph_words = 0;
    // Paragraph words that survived truncation (a prefix of the paragraph).
    std::size_t kept_words = 0;
    std::size_t dropped_keyphrases = 0;

    bool truncated() const { return dropped_keyphrases > 0 || kept_words < paragraph_words; }
    std::vector<std::string> texts() const;
};

// Word-piece segmentation: fixed-width character chunks, continuation pieces
// prefixed with "##". Lowercases first.
std::vector<std::string> word_pieces(const std::string& word, std::size_t piece_length);

// Embedding row of a piece. Rows 0 and 1 are reserved for [CLS] and [SEP].
std::size_t piece_bucket(const std::string& piece, std::size_t buckets);

// Builds the conditioned sequence. When the word-piece count exceeds
// config.max_sequence_length, keyphrases are dropped from the lowest rank up,
// then paragraph words from the tail.
InputSequence build_sequence(std::span<const std::string> words, std::span<const std::string> prev_keyphrases,
                             const EncoderConfig& config);
InputSequence build_sequence(const Paragraph& paragraph, std::span<const std::string> prev_keyphrases,
                             const EncoderConfig& config);

struct EncodedSequence {
    // One row per paragraph word (word-piece averaged). Words lost to
    // truncation get zero rows.
    Matrix word_vectors;
    std::vector<double> paragraph_vector;
    // Final-layer [CLS] attention per paragraph word; mean over heads, then
    // over the word's pieces.
    std::vector<double> cls_attention;
    // One row per appended keyphrase token.
    Matrix appended_kp_vectors;
};

struct EncodedVars {
    ag::Var word_vectors;
    ag::Var paragraph_vector;
    std::vector<double> cls_attention;
    Matrix appended_kp_vectors;
};

// Mean over heads of a [CLS]-query attention row (heads × pieces), then mean
// over each word's pieces. `piece_word[t]` is the word owning piece t or kNoWord.
std::vector<double> aggregate_attention(const Matrix& cls_rows, std::span<const std::size_t> piece_word,
                                        std::size_t words);

class Encoder {
public:
    Encoder() = default;
    explicit Encoder(EncoderConfig config);

    const EncoderConfig& config() const { return config_; }

    EncodedVars encode(ag::Graph& graph, const InputSequence& sequence) const;
    EncodedSequence encode(const InputSequence& sequence) const;

    void visit_parameters(const std::string& prefix, const ParameterVisitor& f);
    void visit_parameters(const std::string& prefix,
                          const ConstParameterVisitor& f) const;

private:
    struct Layer {
        Parameter wq, bq, wk, bk, wv, bv, wo, bo;
        Parameter norm1_gain, norm1_bias;
        Parameter ffn_in, ffn_in_bias, ffn_out, ffn_out_bias;
        Parameter norm2_gain, norm2_bias;
    };

    template <typename Self, typename F>
    static void visit_impl(Self& self, const std::string& prefix, F&& f);

    EncoderConfig config_;
    Parameter token_embedding_;
    Parameter position_embedding_;
    Parameter embed_norm_gain_;
    Parameter embed_norm_bias_;
    std::vector<Layer> layers_;
};

}  // namespace kpe
