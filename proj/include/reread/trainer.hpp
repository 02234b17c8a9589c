#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "reread/checkpoint.hpp"
#include "reread/config.hpp"
#include "reread/corpus.hpp"
#include "reread/encoder.hpp"
#include "reread/losses.hpp"
#include "reread/retriever.hpp"
#include "reread/verifier.hpp"

namespace reread {

/// Dev-set snapshot taken at the end of every epoch.
struct EpochRecord {
    std::size_t phase = 0;
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double dev_micro_f1 = 0.0;
    double dev_macro_f1 = 0.0;
    double dev_plausibility = 0.0;
    double dev_evidence_recall = 0.0;
    double dev_evidence_f1 = 0.0;
};

struct StepRecord {
    std::size_t step = 0;
    LossBreakdown losses;
};

struct TrainingLog {
    std::vector<EpochRecord> epochs;
    std::vector<StepRecord> retriever_steps;

    std::vector<EpochRecord> phase(std::size_t p) const;

    /// metrics_phase{1,2,3}.csv and losses_phase2.csv. Phases without
    /// records are left untouched.
    void write_csv(const std::filesystem::path& dir) const;
};

/// Optional inputs shared by the training phases.
struct TrainingContext {
    const Dataset* dev = nullptr;
    /// When set, sentence embeddings come from this store and no featurizer
    /// is trained.
    const EmbeddingStore* precomputed = nullptr;
    TrainingLog* log = nullptr;
};

struct Phase1Result {
    std::optional<FeaturizerParams> featurizer;
    VerifierParams verifier;
};

/// Embeds every example with the featurizer, or looks it up in `store` when
/// it is given.
std::vector<EmbeddingMatrix> embed_dataset(const Dataset& ds, const FeaturizerParams* featurizer,
                                           const EmbeddingStore* store, std::size_t d);

/// Initial parameters for each phase, derived from the config seed.
std::optional<FeaturizerParams> initial_featurizer(const TrainConfig& cfg, const TrainingContext& ctx);
VerifierParams initial_verifier(const TrainConfig& cfg);
RetrieverParams initial_retriever(const TrainConfig& cfg);

/// Example order for one epoch of one phase; a pure function of
/// (seed, phase, epoch).
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t phase, std::size_t epoch, std::size_t n);

/// Phase 1: fine-tune featurizer and verifier on full documents with the
/// accuracy loss.
Phase1Result train_phase1_verifier(const Dataset& train, const TrainConfig& cfg, const TrainingContext& ctx = {});

/// Phase 2: train the retriever with the combined objective against the
/// frozen phase-1 verifier and featurizer.
RetrieverParams train_phase2_retriever(const Dataset& train, const FeaturizerParams* featurizer,
                                       const VerifierParams& verifier, const TrainConfig& cfg,
                                       const TrainingContext& ctx = {});

/// Phase 3: continue training the phase-1 verifier on claim + retrieved
/// evidence (hard top-k view). Retriever and featurizer stay frozen.
VerifierParams train_phase3_revisit(const Dataset& train, const FeaturizerParams* featurizer,
                                    const RetrieverParams& retriever, const VerifierParams& verifier_phase1,
                                    const TrainConfig& cfg, const TrainingContext& ctx = {});

/// The four trained parameter sets plus the config that produced them.
struct TrainedSystem {
    TrainConfig config;
    std::optional<FeaturizerParams> featurizer;
    VerifierParams verifier_phase1;
    RetrieverParams retriever;
    VerifierParams verifier_revisited;

    const FeaturizerParams* featurizer_ptr() const { return featurizer ? &*featurizer : nullptr; }

    /// config.txt plus featurizer.rrck (when trained), verifier_phase1.rrck,
    /// retriever.rrck and verifier_revisited.rrck.
    void save(const std::filesystem::path& dir) const;
    static TrainedSystem load(const std::filesystem::path& dir);
};

struct PipelineOptions {
    std::optional<std::filesystem::path> out_dir;
    /// Reuse phase-1 / phase-2 checkpoints in out_dir whose config hash
    /// matches instead of retraining those phases.
    bool resume = false;
    const EmbeddingStore* precomputed = nullptr;
    TrainingLog* log = nullptr;
};

/// Phases 1, 2 and 3 in order. With an out_dir, each phase's checkpoint is
/// written as soon as the phase finishes, and metrics CSVs at the end.
TrainedSystem run_full_pipeline(const Dataset& train, const Dataset& dev, const TrainConfig& cfg,
                                const PipelineOptions& options = {});

// Checkpoint helpers shared with the CLI.
Checkpoint featurizer_checkpoint(const FeaturizerParams& featurizer, const TrainConfig& cfg);
Checkpoint params_checkpoint(ParameterRefs params, const TrainConfig& cfg);
/// Throws ConsistencyError when the checkpoint was produced by another config.
void check_config_hash(const Checkpoint& ckpt, const TrainConfig& cfg, const std::filesystem::path& source);

}  // namespace reread
