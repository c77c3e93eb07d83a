#include "kpe/run_config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace kpe;

TEST_SUITE("run_config") {

TEST_CASE("json round trip and merging") {
    RunConfig c;
    c.epochs = 7;
    c.transcripts = "x.jsonl";
    RunConfig d;
    d.merge_json(c.to_json());
    CHECK(d.to_json() == c.to_json());

    d.merge_json({{"beta", 0.25}});
    CHECK(d.beta == 0.25);
    CHECK(d.epochs == 7);
    CHECK_THROWS(d.merge_json({{"no_such_key", 1}}));
    CHECK_THROWS(d.merge_json({{"epochs", "ten"}}));
    CHECK_THROWS(d.merge_json({{"epochs", -1}}));
}

TEST_CASE("string values are parsed by key type") {
    RunConfig c;
    set_run_config_value(c, "learning_rate", "0.003");
    set_run_config_value(c, "epochs", "12");
    set_run_config_value(c, "optimizer", "sgd");
    set_run_config_value(c, "synth_general_size", "-1");
    CHECK(c.learning_rate == 0.003);
    CHECK(c.epochs == 12);
    CHECK(c.optimizer == "sgd");
    CHECK(c.train_config().optimizer.kind == OptimizerKind::Sgd);
    CHECK_THROWS(set_run_config_value(c, "epochs", "many"));
    CHECK_THROWS(set_run_config_value(c, "bogus", "1"));
}

TEST_CASE("derived configs and validation") {
    RunConfig c;
    c.hidden_dim = 12;
    c.num_heads = 3;
    c.seed = 9;
    CHECK(c.encoder_config().hidden_dim == 12);
    CHECK(c.train_config().seed == 9);
    CHECK(c.discriminator_config().optimizer.learning_rate == 3e-3);
    CHECK(c.synth_config().size == 32);
    CHECK_FALSE(c.synth_config().general_size.has_value());
    CHECK_NOTHROW(c.validate());
    c.num_heads = 5;
    CHECK_THROWS(c.validate());
    c.num_heads = 3;
    c.optimizer = "rmsprop";
    CHECK_THROWS(c.validate());
}

TEST_CASE("file loading") {
    const auto path = std::filesystem::temp_directory_path() / "kpe_run_config.json";
    std::ofstream(path) << R"({"epochs": 3, "k": "1,2"})";
    const RunConfig c = load_run_config(path);
    CHECK(c.epochs == 3);
    CHECK(c.k == "1,2");
    std::ofstream(path) << "{oops";
    CHECK_THROWS(load_run_config(path));
    std::filesystem::remove(path);
    CHECK_THROWS(load_run_config(path));
}

}
