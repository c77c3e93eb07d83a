#include "kpe/corpus.hpp"
#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace kpe;
using L = Label;

namespace {

Paragraph make(std::vector<std::vector<std::string>> sentences, std::vector<Span> spans, std::string id = "p") {
    std::vector<Sentence> s;
    for (auto& t : sentences) s.push_back({std::move(t)});
    return Paragraph(std::move(id), std::move(s), std::move(spans));
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("spans_to_bio examples") {
    CHECK(spans_to_bio(make({{"adjust", "the", "background", "layer"}}, {{2, 4}})) == LabelSequence{L::O, L::O, L::B, L::I});
    CHECK(spans_to_bio(make({{"a", "b", "c"}}, {})) == LabelSequence{L::O, L::O, L::O});
    CHECK(spans_to_bio(make({{"a", "b"}}, {{0, 1}, {1, 2}})) == LabelSequence{L::B, L::B});
}

TEST_CASE("spans_to_bio rejects overlapping spans") {
    const std::vector<Span> spans{{0, 2}, {1, 3}};
    CHECK_THROWS_AS(spans_to_bio(4, spans), CorpusError);
}

TEST_CASE("bio_to_spans examples") {
    CHECK(bio_to_spans(LabelSequence{L::O, L::O, L::B, L::I}) == std::vector<Span>{{2, 4}});
    CHECK(bio_to_spans(LabelSequence{L::I, L::O, L::B}) == std::vector<Span>{{0, 1}, {2, 3}});
    CHECK(bio_to_spans(LabelSequence{L::O, L::O}).empty());
    CHECK(bio_to_spans(LabelSequence{L::B, L::B, L::I, L::I, L::O, L::I, L::I}) ==
          std::vector<Span>{{0, 1}, {1, 4}, {5, 7}});
}

TEST_CASE("round trip over random paragraphs") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const Paragraph p = test::random_paragraph(rng, 64);
        CHECK(bio_to_spans(spans_to_bio(p)) == p.keyphrases());
    }
}

TEST_CASE("decoded spans are sorted and disjoint for arbitrary label sequences") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 500; ++i) {
        LabelSequence labels(test::uniform(rng, 0, 40));
        for (auto& l : labels) l = static_cast<Label>(test::uniform(rng, 0, 2));
        const auto spans = bio_to_spans(labels);
        for (std::size_t k = 0; k < spans.size(); ++k) {
            CHECK(spans[k].start < spans[k].end);
            CHECK(spans[k].end <= labels.size());
            if (k > 0) CHECK(spans[k - 1].end <= spans[k].start);
        }
        // Every non-O label is covered, every O is not.
        std::vector<int> covered(labels.size(), 0);
        for (const auto& s : spans)
            for (std::size_t t = s.start; t < s.end; ++t) covered[t] = 1;
        for (std::size_t t = 0; t < labels.size(); ++t) CHECK(covered[t] == (labels[t] != L::O ? 1 : 0));
    }
}

TEST_CASE("paragraph validation") {
    CHECK_THROWS_AS(make({}, {}), CorpusError);
    CHECK_THROWS_AS(make({{}}, {}), CorpusError);
    CHECK_THROWS_AS(make({{"a b"}}, {}), CorpusError);
    CHECK_THROWS_AS(make({{"a", "b"}}, {{1, 3}}), CorpusError);
    CHECK_THROWS_AS(make({{"a", "b"}}, {{1, 1}}), CorpusError);
    CHECK_THROWS_AS(make({{"a", "b", "c"}}, {{0, 2}, {1, 3}}), CorpusError);
    const Paragraph p = make({{"x", "y"}, {"z"}}, {{2, 3}, {0, 1}});
    CHECK(p.keyphrases() == std::vector<Span>{{0, 1}, {2, 3}});
    CHECK(p.size() == 3);
    CHECK(p.sentence_of(2) == 1);
    CHECK(p.sentence_span(1) == Span{2, 3});
}

TEST_CASE("phrase texts and normalization") {
    const Paragraph p = make({{"Layer", "Mask", "and", "layer", "mask"}}, {{0, 2}, {3, 5}});
    CHECK(p.phrase_text({0, 2}) == "Layer Mask");
    CHECK(p.keyphrase_texts() == std::vector<std::string>{"Layer Mask", "layer mask"});
    CHECK(normalize_phrase("  Layer \t MASK ") == "layer mask");
}

TEST_CASE("load_transcripts keeps file order and validates") {
    std::istringstream in(
        R"({"id": "t1", "paragraphs": [{"id": "a", "sentences": [["x", "y"]], "keyphrases": [[0, 1]]},)"
        R"( {"id": "b", "sentences": [["z"]], "keyphrases": []}]})"
        "\n\n");
    const auto ts = parse_transcripts(in);
    REQUIRE(ts.size() == 1);
    REQUIRE(ts[0].paragraphs.size() == 2);
    CHECK(ts[0].paragraphs[0].id() == "a");
    CHECK(ts[0].paragraphs[1].id() == "b");

    const auto samples = transcript_samples(ts);
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].prev_keyphrases.empty());
    CHECK(samples[1].prev_keyphrases == std::vector<std::string>{"x"});
    CHECK(samples[1].domain == Domain::Transcript);
}

TEST_CASE("loader errors name the line or the paragraph") {
    std::istringstream bad_json("{\"id\": \"t\", \"paragraphs\": []}\n{oops\n");
    try {
        parse_transcripts(bad_json, "f.jsonl");
        FAIL("expected error");
    } catch (const CorpusError& e) {
        CHECK(std::string(e.what()).find("f.jsonl:2") != std::string::npos);
    }
    std::istringstream bad_span(
        R"({"id": "t", "paragraphs": [{"id": "para7", "sentences": [["x"]], "keyphrases": [[0, 2]]}]})");
    try {
        parse_transcripts(bad_span);
        FAIL("expected error");
    } catch (const CorpusError& e) {
        CHECK(std::string(e.what()).find("para7") != std::string::npos);
    }
    std::istringstream empty("");
    CHECK(parse_transcripts(empty).empty());
}

TEST_CASE("general corpus loader") {
    std::istringstream in(R"({"id": "d1", "sentences": [["a"]], "keyphrases": [[0, 1]]}
{"id": "d2", "sentences": [["b"]], "keyphrases": []}
{"id": "d3", "sentences": [["c", "d"]], "keyphrases": [[0, 2]]}
)");
    const auto docs = parse_general_corpus(in);
    REQUIRE(docs.size() == 3);
    for (const auto& d : docs) {
        CHECK(d.domain == Domain::General);
        CHECK(d.prev_keyphrases.empty());
    }
    CHECK(docs[1].paragraph.keyphrases().empty());

    std::istringstream dup(R"({"id": "d", "sentences": [["a"]], "keyphrases": []}
{"id": "d", "sentences": [["b"]], "keyphrases": []})");
    CHECK_THROWS_AS(parse_general_corpus(dup), CorpusError);
}

TEST_CASE("serializers round trip through the loaders") {
    std::mt19937_64 rng(9);
    Transcript t{"tr", {}};
    for (int i = 0; i < 5; ++i) t.paragraphs.push_back(test::random_paragraph(rng, 30, "p" + std::to_string(i)));
    std::istringstream in(transcript_to_json_line(t));
    const auto back = parse_transcripts(in);
    REQUIRE(back.size() == 1);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(back[0].paragraphs[i].words() == t.paragraphs[i].words());
        CHECK(back[0].paragraphs[i].keyphrases() == t.paragraphs[i].keyphrases());
        CHECK(back[0].paragraphs[i].sentences().size() == t.paragraphs[i].sentences().size());
    }
}

}
