#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "reread/config.hpp"
#include "reread/error.hpp"
#include "reread/trainer.hpp"
#include "test_util.hpp"

using namespace reread;
using reread::testing::TempDir;

namespace {

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.lr = 0.02;
    cfg.batch_size = 8;
    cfg.epochs = {3, 3, 2};
    cfg.k_percent = 20;
    cfg.d = 8;
    cfg.h = 8;
    cfg.r = 6;
    cfg.n_buckets = 64;
    cfg.seed = 5;
    return cfg;
}

template <class P>
bool same_values(P a, P b) {
    const auto ra = a.refs();
    const auto rb = b.refs();
    if (ra.size() != rb.size()) return false;
    for (std::size_t i = 0; i < ra.size(); ++i)
        if (!(ra[i].param->value == rb[i].param->value)) return false;
    return true;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("config text round trip and hash") {
    TrainConfig cfg = small_config();
    cfg.weights.alpha_plau = 0.25;
    const TrainConfig back = TrainConfig::parse(cfg.to_text());
    CHECK(back.to_text() == cfg.to_text());
    CHECK(back.hash() == cfg.hash());
    CHECK(TrainConfig{}.hash() == TrainConfig{}.hash());
    CHECK(TrainConfig{}.hash() != cfg.hash());
    CHECK(TrainConfig::keys().size() == 17);

    const TrainConfig parsed = TrainConfig::parse("# comment\n\nlr = 0.5\nepochs_phase2=0\n");
    CHECK(parsed.lr == 0.5);
    CHECK(parsed.epochs[1] == 0);
    CHECK(parsed.epochs[0] == 10);

    TrainConfig c;
    CHECK_THROWS_AS(c.set("learning_rate", "1"), ConfigError);
    CHECK_THROWS_AS(c.set("lr", "fast"), ConfigError);
    c.lr = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.k_percent = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config file on disk") {
    TempDir dir;
    const TrainConfig cfg = small_config();
    cfg.save(dir / "c.txt");
    CHECK(TrainConfig::load(dir / "c.txt").hash() == cfg.hash());
    CHECK_THROWS_AS(TrainConfig::load(dir / "missing.txt"), IoError);
}

TEST_CASE("epoch order is a seeded permutation") {
    const auto a = epoch_order(1, 1, 0, 50);
    CHECK(a == epoch_order(1, 1, 0, 50));
    CHECK(a != epoch_order(1, 1, 1, 50));
    CHECK(a != epoch_order(1, 2, 0, 50));
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> iota(50);
    std::iota(iota.begin(), iota.end(), std::size_t{0});
    CHECK(sorted == iota);
}

TEST_CASE("phase 1 overfits a single repeated example") {
    Dataset train = generate_synthetic(testing::tiny_synth(1, 9));
    const ClaimDocument ex = train.examples[0];
    for (int i = 1; i < 8; ++i) {
        train.examples.push_back(ex);
        train.examples.back().id += "_" + std::to_string(i);
    }
    TrainConfig cfg = small_config();
    cfg.epochs = {60, 0, 0};
    cfg.lr = 0.05;
    cfg.warmup_fraction = 0.0;
    TrainingLog log;
    const auto result = train_phase1_verifier(train, cfg, {nullptr, nullptr, &log});
    REQUIRE(log.epochs.size() == 60);
    CHECK(log.epochs.back().train_loss < 0.05);
    CHECK(accuracy_loss(encode(ex, *result.featurizer), ex.label, result.verifier) < 0.05);
}

TEST_CASE("zero epochs leave every phase at its starting point") {
    const Dataset train = generate_synthetic(testing::tiny_synth(20));
    TrainConfig cfg = small_config();
    cfg.epochs = {0, 0, 0};
    const auto p1 = train_phase1_verifier(train, cfg);
    CHECK(same_values(p1.verifier, initial_verifier(cfg)));
    CHECK(same_values(*p1.featurizer, *initial_featurizer(cfg, {})));

    const auto retriever = train_phase2_retriever(train, &*p1.featurizer, p1.verifier, cfg);
    CHECK(same_values(retriever, initial_retriever(cfg)));

    const VerifierParams trained = train_phase1_verifier(train, small_config()).verifier;
    const auto revisited = train_phase3_revisit(train, &*p1.featurizer, retriever, trained, cfg);
    CHECK(same_values(revisited, trained));
}

TEST_CASE("phase 2 leaves the frozen verifier and featurizer untouched") {
    const Dataset train = generate_synthetic(testing::tiny_synth(30));
    const TrainConfig cfg = small_config();
    const auto p1 = train_phase1_verifier(train, cfg);
    const Phase1Result before = p1;
    const auto retriever = train_phase2_retriever(train, &*p1.featurizer, p1.verifier, cfg);
    CHECK_FALSE(same_values(retriever, initial_retriever(cfg)));
    CHECK(same_values(p1.verifier, before.verifier));
    CHECK(same_values(*p1.featurizer, *before.featurizer));

    const auto revisited = train_phase3_revisit(train, &*p1.featurizer, retriever, p1.verifier, cfg);
    CHECK_FALSE(same_values(revisited, p1.verifier));
    CHECK(same_values(*p1.featurizer, *before.featurizer));
}

TEST_CASE("all loss weights zero leave the retriever unchanged") {
    const Dataset train = generate_synthetic(testing::tiny_synth(20));
    TrainConfig cfg = small_config();
    cfg.weights = {0, 0, 0};
    const auto p1 = train_phase1_verifier(train, cfg);
    const auto retriever = train_phase2_retriever(train, &*p1.featurizer, p1.verifier, cfg);
    CHECK(same_values(retriever, initial_retriever(cfg)));
}

TEST_CASE("plausibility alone lowers the dev plausibility loss") {
    const Dataset train = generate_synthetic(testing::tiny_synth(120, 21));
    Dataset dev = generate_synthetic(testing::tiny_synth(40, 22), Split::Dev);
    TrainConfig cfg = small_config();
    cfg.weights = {0, 0, 1};
    cfg.epochs = {3, 3, 0};
    cfg.warmup_fraction = 0.0;
    const auto p1 = train_phase1_verifier(train, cfg);
    TrainingLog log;
    train_phase2_retriever(train, &*p1.featurizer, p1.verifier, cfg, {&dev, nullptr, &log});
    const auto rows = log.phase(2);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].dev_plausibility < rows[0].dev_plausibility);
    CHECK(rows[2].dev_plausibility < rows[1].dev_plausibility);
    CHECK(log.retriever_steps.size() == 3 * 15);
}

TEST_CASE("pipeline is deterministic and logs once per epoch") {
    const Dataset train = generate_synthetic(testing::tiny_synth(40, 31));
    const Dataset dev = generate_synthetic(testing::tiny_synth(12, 32), Split::Dev);
    const TrainConfig cfg = small_config();
    TempDir a, b;
    TrainingLog log;
    run_full_pipeline(train, dev, cfg, {a.path(), false, nullptr, &log});
    run_full_pipeline(train, dev, cfg, {b.path()});

    for (const char* f : {"config.txt", "featurizer.rrck", "verifier_phase1.rrck", "retriever.rrck",
                          "verifier_revisited.rrck", "metrics_phase1.csv", "metrics_phase2.csv",
                          "metrics_phase3.csv", "losses_phase2.csv"}) {
        CAPTURE(f);
        REQUIRE(std::filesystem::exists(a / f));
        CHECK(testing::read_file(a / f) == testing::read_file(b / f));
    }
    for (std::size_t p = 1; p <= 3; ++p) {
        const auto rows = log.phase(p);
        REQUIRE(rows.size() == cfg.epochs[p - 1]);
        for (std::size_t e = 0; e < rows.size(); ++e) CHECK(rows[e].epoch == e + 1);
    }
    const std::string csv = testing::read_file(a / "metrics_phase1.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3);

    const TrainedSystem loaded = TrainedSystem::load(a.path());
    CHECK(loaded.config.hash() == cfg.hash());
    CHECK(loaded.featurizer.has_value());
}

TEST_CASE("resuming after phase 2 reproduces the uninterrupted run") {
    const Dataset train = generate_synthetic(testing::tiny_synth(40, 41));
    const Dataset dev = generate_synthetic(testing::tiny_synth(10, 42), Split::Dev);
    const TrainConfig cfg = small_config();
    TempDir full, partial;
    run_full_pipeline(train, dev, cfg, {full.path()});

    for (const char* f : {"featurizer.rrck", "verifier_phase1.rrck", "retriever.rrck"})
        std::filesystem::copy_file(full / f, partial / f);
    TrainingLog log;
    run_full_pipeline(train, dev, cfg, {partial.path(), true, nullptr, &log});
    CHECK(log.phase(1).empty());
    CHECK(log.phase(2).empty());
    CHECK(log.phase(3).size() == 2);
    CHECK(testing::read_file(partial / "verifier_revisited.rrck") ==
          testing::read_file(full / "verifier_revisited.rrck"));
}

TEST_CASE("checkpoints from another config are rejected") {
    const Dataset train = generate_synthetic(testing::tiny_synth(10));
    TrainConfig cfg = small_config();
    cfg.epochs = {1, 1, 1};
    TempDir dir;
    run_full_pipeline(train, train, cfg, {dir.path()});
    const Checkpoint ck = Checkpoint::load(dir / "retriever.rrck");
    CHECK_NOTHROW(check_config_hash(ck, cfg, dir / "retriever.rrck"));
    TrainConfig other = cfg;
    other.lr = 0.5;
    CHECK_THROWS_AS(check_config_hash(ck, other, dir / "retriever.rrck"), ConsistencyError);

    other.save(dir / "config.txt");
    CHECK_THROWS_AS(TrainedSystem::load(dir.path()), ConsistencyError);
}

TEST_CASE("training needs data") {
    CHECK_THROWS_AS(train_phase1_verifier(Dataset{}, small_config()), ConfigError);
}

}  // TEST_SUITE
