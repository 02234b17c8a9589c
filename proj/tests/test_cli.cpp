#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "reread/config.hpp"
#include "reread/corpus.hpp"
#include "test_util.hpp"

namespace testing = reread::testing;
using reread::testing::TempDir;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "reread");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = reread::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> small_train_args(const TempDir& dir, const std::string& out_dir) {
    return {"train", "--train", (dir / "train.jsonl").string(), "--dev", (dir / "dev.jsonl").string(), "--out-dir",
            (dir / out_dir).string(), "--set", "d=6", "--set", "h=6", "--set", "r=4", "--set", "n_buckets=32",
            "--set", "epochs_phase1=1", "--set", "epochs_phase2=1", "--set", "epochs_phase3=1", "--set",
            "lr=0.01", "--set", "k_percent=20"};
}

void write_small_corpus(const TempDir& dir) {
    const auto r = run_cli({"gen-synth", "--out", (dir / "train.jsonl").string(), "--n", "24", "--dev-out",
                            (dir / "dev.jsonl").string(), "--dev-n", "8", "--sentences", "5", "--seed", "4"});
    REQUIRE(r.code == 0);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen-synth is deterministic and honours the split sizes") {
    TempDir dir;
    for (const char* name : {"a.jsonl", "b.jsonl"}) {
        const auto r = run_cli({"gen-synth", "--out", (dir / name).string(), "--n", "30", "--seed", "42"});
        CHECK(r.code == 0);
    }
    const std::string a = testing::read_file(dir / "a.jsonl");
    CHECK(a == testing::read_file(dir / "b.jsonl"));
    CHECK(std::count(a.begin(), a.end(), '\n') == 30);

    reread::SynthConfig sc;
    sc.n_examples = 30;
    sc.seed = 42;
    reread::save_dataset(reread::generate_synthetic(sc), dir / "lib.jsonl");
    CHECK(testing::read_file(dir / "lib.jsonl") == a);

    write_small_corpus(dir);
    CHECK(reread::load_dataset(dir / "dev.jsonl", reread::Split::Dev).size() == 8);
    CHECK(reread::load_dataset(dir / "train.jsonl", reread::Split::Train).examples[0].num_sentences() == 5);
}

TEST_CASE("usage errors exit with 1") {
    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"gen-synth", "--bogus"}).code == 1);
    CHECK(run_cli({"frobnicate"}).code == 1);
    CHECK(run_cli({"gen-synth"}).code == 1);  // --out is required
    CHECK(run_cli({"--help"}).code == 0);

    TempDir dir;
    const auto bad_mix = run_cli({"gen-synth", "--out", (dir / "x.jsonl").string(), "--label-mix", "1,1"});
    CHECK(bad_mix.code == 1);
    const auto infeasible =
        run_cli({"gen-synth", "--out", (dir / "x.jsonl").string(), "--sentences", "2", "--evidence", "2"});
    CHECK(infeasible.code == 1);
    CHECK(infeasible.err.find("evidence") != std::string::npos);
}

TEST_CASE("missing input files exit with 2") {
    TempDir dir;
    const auto r = run_cli({"train", "--train", (dir / "nope.jsonl").string(), "--out-dir", (dir / "m").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("nope.jsonl") != std::string::npos);
    CHECK(run_cli({"eval", "--model", (dir / "none").string(), "--data", (dir / "nope.jsonl").string()}).code == 2);
}

TEST_CASE("ablation flags zero the documented weights") {
    TempDir dir;
    write_small_corpus(dir);

    auto args = small_train_args(dir, "plau");
    args.insert(args.end(), {"--ablate", "no-plau"});
    REQUIRE(run_cli(args).code == 0);
    const auto plau = reread::TrainConfig::load(dir / "plau/config.txt");
    CHECK(plau.weights.alpha_plau == 0.0);
    CHECK(plau.weights.alpha_full == 1.0);
    CHECK(plau.weights.alpha_suff == 1.0);

    args = small_train_args(dir, "faith");
    args.insert(args.end(), {"--ablate", "no-faith"});
    REQUIRE(run_cli(args).code == 0);
    const auto faith = reread::TrainConfig::load(dir / "faith/config.txt");
    CHECK(faith.weights.alpha_plau == 1.0);
    CHECK(faith.weights.alpha_full == 0.0);
    CHECK(faith.weights.alpha_suff == 0.0);

    args = small_train_args(dir, "bad");
    args.insert(args.end(), {"--ablate", "no-everything"});
    CHECK(run_cli(args).code == 1);

    args = small_train_args(dir, "badkey");
    args.insert(args.end(), {"--set", "speed=fast"});
    CHECK(run_cli(args).code == 1);
}

TEST_CASE("train, retrieve, eval and sweep-k round trip") {
    TempDir dir;
    write_small_corpus(dir);
    const auto tr = run_cli(small_train_args(dir, "model"));
    REQUIRE(tr.code == 0);
    CHECK(tr.out.find("config hash") != std::string::npos);
    for (const char* f : {"config.txt", "featurizer.rrck", "verifier_phase1.rrck", "retriever.rrck",
                          "verifier_revisited.rrck", "metrics_phase2.csv", "eval_dev.json"})
        CHECK(std::filesystem::exists(dir / "model" / f));

    const std::string model = (dir / "model").string();
    const std::string dev = (dir / "dev.jsonl").string();
    const auto ret = run_cli({"retrieve", "--model", model, "--data", dev, "--out", (dir / "r.jsonl").string()});
    REQUIRE(ret.code == 0);
    std::istringstream lines(testing::read_file(dir / "r.jsonl"));
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("scores").size() == 5);
        CHECK(j.at("selected").size() == 1);  // 20% of 5 sentences
        ++n;
    }
    CHECK(n == 8);

    const auto ev = run_cli({"eval", "--model", model, "--data", dev, "--k", "40"});
    REQUIRE(ev.code == 0);
    const auto rep = nlohmann::json::parse(ev.out);
    CHECK(rep.at("k_percent") == 40.0);
    CHECK(rep.at("n_examples") == 8);

    const auto sw = run_cli({"sweep-k", "--model", model, "--train", (dir / "train.jsonl").string(), "--dev", dev,
                             "--k", "20,100"});
    REQUIRE(sw.code == 0);
    CHECK(sw.out.rfind("k,micro_f1,macro_f1\n", 0) == 0);
    CHECK(std::count(sw.out.begin(), sw.out.end(), '\n') == 3);
}

TEST_CASE("grad-check reports pass and fail through the exit code") {
    const auto ok = run_cli({"grad-check"});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("ok") != std::string::npos);
    const auto strict = run_cli({"grad-check", "--tol", "1e-30"});
    CHECK(strict.code == 1);
    CHECK(strict.out.find("FAILED") != std::string::npos);
}

}  // TEST_SUITE
