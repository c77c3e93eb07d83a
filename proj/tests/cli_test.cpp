#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "kpe_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run kpe(const std::string& args) {
    const fs::path out = work_dir() / "stdout.txt", err = work_dir() / "stderr.txt";
    const std::string cmd = "cd '" + work_dir().string() + "' && '" KPE_CLI_PATH "' " + args + " > '" +
                            out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::size_t count_lines(const std::string& text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

const std::string kSmall = " --hidden-dim 8 --ffn-dim 16 --vocab-hash-buckets 512";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("end-to-end pipeline on a synthetic corpus") {
    Run r = kpe("synth --synth-size 12 --output data");
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).at("paragraphs") == 12);
    CHECK(count_lines(slurp(work_dir() / "data/general.jsonl")) == 12);

    r = kpe("train-discriminator --transcripts data/transcripts.jsonl --general data/general.jsonl"
            " --discriminator disc.json --disc-epochs 1" + kSmall);
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).contains("heldout_accuracy"));

    r = kpe("silver-annotate --discriminator disc.json --transcripts data/transcripts.jsonl"
            " --general data/general.jsonl --output silver.jsonl");
    REQUIRE(r.code == 0);
    CHECK(count_lines(slurp(work_dir() / "silver.jsonl")) == 24);

    r = kpe("train --transcripts data/transcripts.jsonl --general data/general.jsonl --silver silver.jsonl"
            " --checkpoint model.json --epochs 2" + kSmall);
    REQUIRE(r.code == 0);
    const json summary = json::parse(r.out);
    CHECK(summary.at("steps") == 12);  // 24 samples / batch 4, 2 epochs
    CHECK(count_lines(slurp(work_dir() / "model.json.metrics.jsonl")) == 12);

    r = kpe("extract --checkpoint model.json --transcripts data/transcripts.jsonl");
    REQUIRE(r.code == 0);
    CHECK(count_lines(r.out) == 12);
    CHECK(json::parse(r.out.substr(0, r.out.find('\n'))).contains("keyphrases"));

    r = kpe("eval --checkpoint model.json --transcripts data/transcripts.jsonl --k 1,2 --output report.json");
    REQUIRE(r.code == 0);
    const json report = json::parse(r.out);
    CHECK(report.contains("f1_at_1"));
    CHECK(report.contains("f1_at_2"));
    CHECK(report.contains("repetition_rate"));
    CHECK(json::parse(slurp(work_dir() / "report.json")).at("paragraphs").size() == 12);

    r = kpe("chitchat-scan --checkpoint model.json --transcripts data/transcripts.jsonl --beta 0.2");
    REQUIRE(r.code == 0);
    CHECK(count_lines(r.out) == 12);

    // Encoder flags that contradict the checkpoint are refused.
    r = kpe("eval --checkpoint model.json --transcripts data/transcripts.jsonl --hidden-dim 16");
    CHECK(r.code == 1);
    CHECK(r.err.find("hidden_dim") != std::string::npos);
}

TEST_CASE("configuration files and flag overrides") {
    std::ofstream(work_dir() / "run.json") << R"({"epochs": 3, "beta": 0.2})";
    Run r = kpe("--config run.json --epochs 5 --show-config");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("epochs") == 5);
    CHECK(j.at("beta") == 0.2);

    std::ofstream(work_dir() / "bad.json") << R"({"epoch": 3})";
    r = kpe("--config bad.json --show-config");
    CHECK(r.code == 1);
    CHECK(r.err.find("epoch") != std::string::npos);
}

TEST_CASE("usage and input errors") {
    CHECK(kpe("").code == 2);
    Run r = kpe("train --checkpoint m.json");
    CHECK(r.code == 2);
    CHECK(r.err.find("--transcripts") != std::string::npos);
    CHECK(kpe("train --no-such-flag 1").code != 0);
    CHECK(kpe("train --epochs lots --transcripts x --checkpoint y").code == 1);

    std::ofstream(work_dir() / "broken.jsonl") << "{\"id\": \"t\"}\n";
    r = kpe("train --transcripts broken.jsonl --checkpoint m.json");
    CHECK(r.code == 1);
    CHECK(r.err.find("broken.jsonl:1") != std::string::npos);
    r = kpe("eval --checkpoint absent.json --transcripts broken.jsonl");
    CHECK(r.code == 1);
}

}
