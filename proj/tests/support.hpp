#pragma once

// Shared test helpers: random data, central finite differences and small
// brute-force oracles written independently of the library code paths.

#include "kpe/autograd.hpp"
#include "kpe/corpus.hpp"
#include "kpe/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace kpe::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = dist(rng);
    return m;
}

inline std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// |a - n| / max(|a|, |n|, floor)
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Largest relative error between `analytic` and the central difference of
// `loss` w.r.t. every entry of `p` (step h). `loss` must re-read p.value.
inline double max_fd_error(Parameter& p, const Matrix& analytic, const std::function<double()>& loss,
                           double h = 1e-5) {
    double worst = 0.0;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double saved = p.value.data()[i];
        p.value.data()[i] = saved + h;
        const double up = loss();
        p.value.data()[i] = saved - h;
        const double down = loss();
        p.value.data()[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        worst = std::max(worst, relative_error(analytic.data()[i], numeric));
    }
    return worst;
}

// Random non-overlapping sorted spans over n tokens.
inline std::vector<Span> random_spans(std::size_t n, std::mt19937_64& rng) {
    std::vector<Span> spans;
    std::size_t pos = 0;
    while (pos < n) {
        pos += uniform(rng, 0, 3);
        if (pos >= n) break;
        const std::size_t len = uniform(rng, 1, std::min<std::size_t>(4, n - pos));
        spans.push_back({pos, pos + len});
        pos += len;
    }
    return spans;
}

inline std::string random_word(std::mt19937_64& rng, std::size_t max_len = 12) {
    static const std::string letters = "abcdefghijklmnopqrstuvwxyz";
    std::string w;
    const std::size_t len = uniform(rng, 1, max_len);
    for (std::size_t i = 0; i < len; ++i) w += letters[uniform(rng, 0, letters.size() - 1)];
    return w;
}

inline Paragraph random_paragraph(std::mt19937_64& rng, std::size_t max_words, const std::string& id = "p",
                                  std::size_t max_word_len = 12) {
    const std::size_t n = uniform(rng, 1, max_words);
    std::vector<Sentence> sentences;
    std::size_t left = n;
    while (left > 0) {
        const std::size_t len = uniform(rng, 1, std::min<std::size_t>(left, 8));
        Sentence s;
        for (std::size_t i = 0; i < len; ++i) s.tokens.push_back(random_word(rng, max_word_len));
        sentences.push_back(std::move(s));
        left -= len;
    }
    return Paragraph(id, std::move(sentences), random_spans(n, rng));
}

// Brute-force F1@k over lowercased single-spaced strings: collect unique
// predictions by linear search, count hits against a std::set of gold.
inline double brute_force_f1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold,
                             std::size_t k) {
    auto norm = [](const std::string& s) {
        std::string out;
        bool space = false;
        for (char c : s) {
            if (c == ' ' || c == '\t' || c == '\n') {
                space = !out.empty();
                continue;
            }
            if (space) out += ' ';
            space = false;
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        return out;
    };
    std::vector<std::string> uniq;
    for (const auto& p : predicted) {
        const std::string n = norm(p);
        bool seen = false;
        for (const auto& u : uniq) seen = seen || u == n;
        if (!seen) uniq.push_back(n);
    }
    std::set<std::string> ref;
    for (const auto& g : gold) ref.insert(norm(g));
    if (ref.empty()) return uniq.empty() ? 1.0 : 0.0;
    std::size_t hits = 0, considered = 0;
    for (const auto& u : uniq) {
        if (considered == k) break;
        ++considered;
        if (ref.count(u)) ++hits;
    }
    if (hits == 0) return 0.0;
    const double p = double(hits) / double(considered);
    const double r = double(hits) / double(ref.size());
    return 2 * p * r / (p + r);
}

}  // namespace kpe::test
