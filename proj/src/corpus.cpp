#include "kpe/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_set>

namespace kpe {

using nlohmann::json;

namespace {

bool has_whitespace(const std::string& s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string where(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

std::vector<Sentence> parse_sentences(const json& j) {
    std::vector<Sentence> out;
    for (const auto& s : j) {
        Sentence sentence;
        for (const auto& tok : s) sentence.tokens.push_back(tok.get<std::string>());
        out.push_back(std::move(sentence));
    }
    return out;
}

std::vector<Span> parse_spans(const json& j) {
    std::vector<Span> out;
    for (const auto& s : j) {
        if (!s.is_array() || s.size() != 2) throw CorpusError("keyphrase must be a [start, end] pair");
        const auto start = s[0].get<long long>();
        const auto end = s[1].get<long long>();
        if (start < 0 || end < 0) throw CorpusError("negative keyphrase index");
        out.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(end)});
    }
    return out;
}

json sentences_json(const Paragraph& p) {
    json s = json::array();
    for (const auto& sent : p.sentences()) s.push_back(sent.tokens);
    return s;
}

json spans_json(const Paragraph& p) {
    json k = json::array();
    for (const auto& sp : p.keyphrases()) k.push_back({sp.start, sp.end});
    return k;
}

template <typename F>
void for_each_json_line(std::istream& in, const std::string& source, F&& f) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; })) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw CorpusError(where(source, lineno) + "parse error: " + e.what());
        }
        try {
            f(j);
        } catch (const CorpusError& e) {
            throw CorpusError(where(source, lineno) + e.what());
        } catch (const json::exception& e) {
            throw CorpusError(where(source, lineno) + "schema error: " + e.what());
        }
    }
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open " + path.string());
    return in;
}

}  // namespace

Paragraph::Paragraph(std::string id, std::vector<Sentence> sentences, std::vector<Span> keyphrases)
    : id_(std::move(id)), sentences_(std::move(sentences)), keyphrases_(std::move(keyphrases)) {
    const std::string who = "paragraph '" + id_ + "': ";
    if (sentences_.empty()) throw CorpusError(who + "no sentences");
    for (const auto& s : sentences_) {
        if (s.tokens.empty()) throw CorpusError(who + "empty sentence");
        sentence_starts_.push_back(words_.size());
        for (const auto& t : s.tokens) {
            if (t.empty() || has_whitespace(t)) throw CorpusError(who + "invalid token '" + t + "'");
            words_.push_back(t);
        }
    }
    std::sort(keyphrases_.begin(), keyphrases_.end());
    for (std::size_t i = 0; i < keyphrases_.size(); ++i) {
        const Span& sp = keyphrases_[i];
        if (sp.start >= sp.end || sp.end > words_.size()) {
            throw CorpusError(who + "keyphrase [" + std::to_string(sp.start) + "," + std::to_string(sp.end) +
                              ") out of bounds for " + std::to_string(words_.size()) + " tokens");
        }
        if (i > 0 && keyphrases_[i - 1].end > sp.start) {
            throw CorpusError(who + "overlapping keyphrases");
        }
    }
}

Span Paragraph::sentence_span(std::size_t i) const {
    const std::size_t start = sentence_starts_.at(i);
    return {start, start + sentences_[i].tokens.size()};
}

std::size_t Paragraph::sentence_of(std::size_t token) const {
    if (token >= words_.size()) throw std::out_of_range("sentence_of: token index out of range");
    auto it = std::upper_bound(sentence_starts_.begin(), sentence_starts_.end(), token);
    return static_cast<std::size_t>(it - sentence_starts_.begin()) - 1;
}

std::string Paragraph::phrase_text(Span span) const {
    std::string out;
    for (std::size_t i = span.start; i < span.end && i < words_.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += words_[i];
    }
    return out;
}

std::vector<std::string> Paragraph::keyphrase_texts() const {
    std::vector<std::string> out;
    for (const auto& sp : keyphrases_) {
        std::string text = phrase_text(sp);
        if (std::find(out.begin(), out.end(), text) == out.end()) out.push_back(std::move(text));
    }
    return out;
}

char label_char(Label l) {
    switch (l) {
        case Label::O: return 'O';
        case Label::B: return 'B';
        case Label::I: return 'I';
    }
    return '?';
}

std::vector<Transcript> parse_transcripts(std::istream& in, const std::string& source) {
    std::vector<Transcript> out;
    std::unordered_set<std::string> transcript_ids, paragraph_ids;
    for_each_json_line(in, source, [&](const json& j) {
        Transcript t;
        t.id = j.at("id").get<std::string>();
        if (!transcript_ids.insert(t.id).second) throw CorpusError("duplicate transcript id '" + t.id + "'");
        for (const auto& p : j.at("paragraphs")) {
            std::string pid = p.at("id").get<std::string>();
            if (!paragraph_ids.insert(pid).second) throw CorpusError("duplicate paragraph id '" + pid + "'");
            t.paragraphs.emplace_back(std::move(pid), parse_sentences(p.at("sentences")),
                                      parse_spans(p.at("keyphrases")));
        }
        out.push_back(std::move(t));
    });
    return out;
}

std::vector<Transcript> load_transcripts(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_transcripts(in, path.string());
}

std::vector<CorpusSample> parse_general_corpus(std::istream& in, const std::string& source) {
    std::vector<CorpusSample> out;
    std::unordered_set<std::string> ids;
    for_each_json_line(in, source, [&](const json& j) {
        std::string id = j.at("id").get<std::string>();
        if (!ids.insert(id).second) throw CorpusError("duplicate document id '" + id + "'");
        CorpusSample s;
        s.paragraph = Paragraph(std::move(id), parse_sentences(j.at("sentences")), parse_spans(j.at("keyphrases")));
        s.domain = Domain::General;
        out.push_back(std::move(s));
    });
    return out;
}

std::vector<CorpusSample> load_general_corpus(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_general_corpus(in, path.string());
}

std::vector<CorpusSample> transcript_samples(const std::vector<Transcript>& transcripts) {
    std::vector<CorpusSample> out;
    for (const auto& t : transcripts) {
        const Paragraph* prev = nullptr;
        for (const auto& p : t.paragraphs) {
            CorpusSample s{p, Domain::Transcript, {}};
            if (prev != nullptr) s.prev_keyphrases = prev->keyphrase_texts();
            out.push_back(std::move(s));
            prev = &p;
        }
    }
    return out;
}

std::string transcript_to_json_line(const Transcript& t) {
    json j;
    j["id"] = t.id;
    j["paragraphs"] = json::array();
    for (const auto& p : t.paragraphs) {
        j["paragraphs"].push_back({{"id", p.id()}, {"sentences", sentences_json(p)}, {"keyphrases", spans_json(p)}});
    }
    return j.dump();
}

std::string general_document_to_json_line(const Paragraph& p) {
    json j;
    j["id"] = p.id();
    j["sentences"] = sentences_json(p);
    j["keyphrases"] = spans_json(p);
    return j.dump();
}

LabelSequence spans_to_bio(std::size_t length, std::span<const Span> spans) {
    LabelSequence labels(length, Label::O);
    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const Span& sp = spans[i];
        if (sp.start >= sp.end || sp.end > length) throw CorpusError("spans_to_bio: span out of bounds");
        if (i > 0 && sp.start < prev_end) throw CorpusError("spans_to_bio: overlapping or unsorted spans");
        labels[sp.start] = Label::B;
        for (std::size_t k = sp.start + 1; k < sp.end; ++k) labels[k] = Label::I;
        prev_end = sp.end;
    }
    return labels;
}

LabelSequence spans_to_bio(const Paragraph& paragraph) {
    return spans_to_bio(paragraph.size(), paragraph.keyphrases());
}

std::vector<Span> bio_to_spans(std::span<const Label> labels) {
    std::vector<Span> out;
    bool open = false;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        switch (labels[i]) {
            case Label::O:
                open = false;
                break;
            case Label::B:
                out.push_back({i, i + 1});
                open = true;
                break;
            case Label::I:
                if (open) {
                    out.back().end = i + 1;
                } else {
                    out.push_back({i, i + 1});
                    open = true;
                }
                break;
        }
    }
    return out;
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_whitespace(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream ss(text);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

std::string normalize_phrase(const std::string& phrase) {
    std::string out;
    for (const auto& tok : split_whitespace(phrase)) {
        if (!out.empty()) out += ' ';
        out += to_lower(tok);
    }
    return out;
}

}  // namespace kpe
