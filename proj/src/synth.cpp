#include "kpe/synth.hpp"

#include <fstream>
#include <random>
#include <stdexcept>
#include <string_view>

namespace kpe {

namespace {

using Words = std::vector<std::string_view>;

const std::vector<Words> kDomainKeyphrases = {
    {"layer", "mask"},   {"clone", "stamp"},   {"gradient", "map"},  {"healing", "brush"}, {"pen", "tool"},
    {"blend", "mode"},   {"smart", "object"},  {"artboard"},         {"lasso"},            {"curves"},
    {"vignette"},        {"kerning"},          {"color", "grading"}, {"dodge", "tool"},    {"vector", "path"},
    {"typography"},      {"liquify"},          {"clipping", "mask"}, {"levels"},           {"noise", "filter"},
    {"warp", "tool"},    {"magic", "wand"},    {"bezier", "curve"},  {"halftone"},
};

const Words kDomainContent = {"canvas", "pixel",   "stroke",  "opacity", "palette", "render",
                              "sketch", "hue",     "texture", "shading", "outline", "highlight",
                              "shadow", "contour", "preset",  "swatch",  "raster",  "selection"};

const std::vector<Words> kGeneralKeyphrases = {
    {"interest", "rate"}, {"stock", "market"}, {"soccer", "league"}, {"tax", "return"},  {"climate", "policy"},
    {"recipe"},           {"marathon"},        {"election"},         {"vaccine"},        {"mortgage"},
    {"solar", "panel"},   {"train", "station"}, {"city", "council"}, {"jazz", "festival"}, {"hiking", "trail"},
    {"sourdough"},
};

const Words kGeneralContent = {"economy", "weather", "football", "senate", "harvest", "bakery",  "museum",
                               "airline", "hospital", "budget",  "tourism", "stadium", "orchestra", "garden",
                               "highway", "pension",  "retail",  "voters"};

const Words kFiller = {"the",  "we",   "is",  "this",   "a",    "so",   "now", "and",  "to",    "of",
                       "with", "it",   "then", "just",  "use",  "make", "look", "here", "you",  "can",
                       "on",   "for",  "that", "really", "going", "will", "see", "how",  "our",  "into"};

const Words kChitchat = {"hey",   "thanks", "follow",  "chat",  "guys",     "welcome", "stream", "hello",
                         "lol",   "coffee", "weekend", "music", "subscribe", "everyone", "awesome", "love",
                         "dinner", "cat",   "sleepy",  "emoji"};

class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
    std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
    bool chance(double p) { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p; }
    template <class T>
    const T& pick(const std::vector<T>& v) {
        return v[below(v.size())];
    }

private:
    std::mt19937_64 rng_;
};

struct Builder {
    std::vector<Sentence> sentences;
    std::vector<Span> spans;
    std::size_t offset = 0;

    void add(std::vector<std::string> tokens, std::optional<std::pair<std::size_t, std::size_t>> kp = std::nullopt) {
        if (kp) spans.push_back({offset + kp->first, offset + kp->second});
        offset += tokens.size();
        sentences.push_back({std::move(tokens)});
    }
};

std::vector<std::string> filler_sentence(Draw& d, const Words& content, std::size_t len) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < len; ++i) {
        out.emplace_back(d.chance(0.4) ? d.pick(content) : d.pick(kFiller));
    }
    return out;
}

// Inserts `phrase` at a random position; returns its [start, end) in the sentence.
std::pair<std::size_t, std::size_t> insert_phrase(Draw& d, std::vector<std::string>& sentence, const Words& phrase) {
    const std::size_t at = d.below(sentence.size() + 1);
    sentence.insert(sentence.begin() + static_cast<std::ptrdiff_t>(at), phrase.begin(), phrase.end());
    return {at, at + phrase.size()};
}

std::vector<std::string> chitchat_sentence(Draw& d, std::size_t len) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < len; ++i) out.emplace_back(d.chance(0.6) ? d.pick(kChitchat) : d.pick(kFiller));
    return out;
}

std::size_t pick_other(Draw& d, std::size_t n, std::optional<std::size_t> avoid) {
    std::size_t k = d.below(n);
    while (avoid && k == *avoid) k = d.below(n);
    return k;
}

}  // namespace

void SynthConfig::validate() const {
    if (paragraphs_per_transcript == 0) throw std::invalid_argument("paragraphs_per_transcript must be >= 1");
    for (double r : {chitchat_rate, overlap_rate, chitchat_mention_rate}) {
        if (r < 0.0 || r > 1.0) throw std::invalid_argument("synth rates must be in [0, 1]");
    }
    if (min_sentences < 2 || max_sentences < min_sentences) {
        throw std::invalid_argument("synth sentence counts must satisfy 2 <= min <= max");
    }
}

SynthCorpus generate_synthetic(const SynthConfig& config) {
    config.validate();
    Draw d(config.seed);
    SynthCorpus out;

    std::size_t produced = 0;
    for (std::size_t t = 0; produced < config.size; ++t) {
        Transcript tr;
        tr.id = "t" + std::to_string(t);
        std::optional<std::size_t> prev_kp;
        for (std::size_t p = 0; p < config.paragraphs_per_transcript && produced < config.size; ++p, ++produced) {
            const std::size_t kp = pick_other(d, kDomainKeyphrases.size(), prev_kp);
            const std::size_t n_sent = d.between(config.min_sentences, config.max_sentences);
            const std::size_t kp_sentence = d.below(n_sent);
            std::size_t overlap_sentence = n_sent;
            if (prev_kp && d.chance(config.overlap_rate)) {
                overlap_sentence = pick_other(d, n_sent, kp_sentence);
            }
            Builder b;
            std::vector<int> chat_flags;
            for (std::size_t s = 0; s < n_sent; ++s) {
                const std::size_t len = d.between(4, 8);
                if (s == kp_sentence) {
                    auto tokens = filler_sentence(d, kDomainContent, len);
                    const auto pos = insert_phrase(d, tokens, kDomainKeyphrases[kp]);
                    b.add(std::move(tokens), pos);
                    chat_flags.push_back(0);
                } else if (s == overlap_sentence) {
                    auto tokens = filler_sentence(d, kDomainContent, len);
                    insert_phrase(d, tokens, kDomainKeyphrases[*prev_kp]);
                    b.add(std::move(tokens));
                    chat_flags.push_back(0);
                } else if (d.chance(config.chitchat_rate)) {
                    auto tokens = chitchat_sentence(d, len);
                    if (d.chance(config.chitchat_mention_rate)) {
                        insert_phrase(d, tokens, kDomainKeyphrases[pick_other(d, kDomainKeyphrases.size(), kp)]);
                    }
                    b.add(std::move(tokens));
                    chat_flags.push_back(1);
                } else {
                    b.add(filler_sentence(d, kDomainContent, len));
                    chat_flags.push_back(0);
                }
            }
            tr.paragraphs.emplace_back(tr.id + "-p" + std::to_string(p), std::move(b.sentences), std::move(b.spans));
            out.chitchat_sentences.push_back(std::move(chat_flags));
            prev_kp = kp;
        }
        out.transcripts.push_back(std::move(tr));
    }

    const std::size_t general = config.general_size.value_or(config.size);
    for (std::size_t g = 0; g < general; ++g) {
        const std::size_t kp = d.below(kGeneralKeyphrases.size());
        const std::size_t n_sent = d.between(config.min_sentences, config.max_sentences);
        const std::size_t kp_sentence = d.below(n_sent);
        Builder b;
        for (std::size_t s = 0; s < n_sent; ++s) {
            auto tokens = filler_sentence(d, kGeneralContent, d.between(4, 8));
            if (s == kp_sentence) {
                const auto pos = insert_phrase(d, tokens, kGeneralKeyphrases[kp]);
                b.add(std::move(tokens), pos);
            } else {
                b.add(std::move(tokens));
            }
        }
        out.general.push_back(
            {Paragraph("g" + std::to_string(g), std::move(b.sentences), std::move(b.spans)), Domain::General, {}});
    }
    return out;
}

void write_synthetic(const SynthCorpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream tr(dir / "transcripts.jsonl");
    std::ofstream gen(dir / "general.jsonl");
    if (!tr || !gen) throw std::runtime_error("cannot write synthetic corpus to " + dir.string());
    for (const auto& t : corpus.transcripts) tr << transcript_to_json_line(t) << '\n';
    for (const auto& s : corpus.general) gen << general_document_to_json_line(s.paragraph) << '\n';
}

}  // namespace kpe
