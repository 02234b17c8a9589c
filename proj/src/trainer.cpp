#include "reread/trainer.hpp"

#include <cmath>
#include <fstream>

#include "random.hpp"
#include "reread/adam.hpp"
#include "reread/error.hpp"
#include "reread/evaluation.hpp"

namespace reread {

namespace {

constexpr std::uint64_t kFeaturizerStream = 11;
constexpr std::uint64_t kVerifierStream = 12;
constexpr std::uint64_t kRetrieverStream = 13;

std::int64_t total_steps(std::size_t n, const TrainConfig& cfg, std::size_t epochs) {
    const std::size_t per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    return static_cast<std::int64_t>(per_epoch * epochs);
}

void scale_grads(const ParameterRefs& params, double factor) {
    for (const auto& p : params)
        for (double& g : p.param->grad.data()) g *= factor;
}

template <typename Fn>
void for_each_batch(const std::vector<std::size_t>& order, std::size_t batch_size, Fn&& fn) {
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + batch_size);
        fn(std::span<const std::size_t>(order).subspan(start, end - start));
    }
}

F1Report score_views(std::span<const EmbeddingMatrix> views, const Dataset& ds, const VerifierParams& verifier) {
    const auto preds = classify_all(views, verifier);
    const auto golds = gold_labels(ds);
    return micro_macro_f1(preds, golds);
}

void write_epoch_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "epoch,train_loss,dev_micro_f1,dev_macro_f1,dev_plausibility,dev_evidence_recall,dev_evidence_f1\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.epoch << ',' << r.train_loss << ',' << r.dev_micro_f1 << ',' << r.dev_macro_f1 << ','
            << r.dev_plausibility << ',' << r.dev_evidence_recall << ',' << r.dev_evidence_f1 << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::vector<EpochRecord> TrainingLog::phase(std::size_t p) const {
    std::vector<EpochRecord> out;
    for (const auto& r : epochs)
        if (r.phase == p) out.push_back(r);
    return out;
}

void TrainingLog::write_csv(const std::filesystem::path& dir) const {
    for (std::size_t p = 1; p <= 3; ++p) {
        const auto rows = phase(p);
        if (!rows.empty()) write_epoch_csv(dir / ("metrics_phase" + std::to_string(p) + ".csv"), rows);
    }
    if (retriever_steps.empty()) return;
    const auto path = dir / "losses_phase2.csv";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "step,l_acc,l_plau,l_full_raw,l_full_hinged,l_suff_raw,l_suff_hinged,combined\n";
    out.precision(17);
    for (const auto& s : retriever_steps) {
        const auto& l = s.losses;
        out << s.step << ',' << l.l_acc << ',' << l.l_plau << ',' << l.l_full_raw << ',' << l.l_full_hinged << ','
            << l.l_suff_raw << ',' << l.l_suff_hinged << ',' << l.combined << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<EmbeddingMatrix> embed_dataset(const Dataset& ds, const FeaturizerParams* featurizer,
                                           const EmbeddingStore* store, std::size_t d) {
    std::vector<EmbeddingMatrix> out;
    out.reserve(ds.size());
    for (const auto& ex : ds.examples) {
        if (store) {
            out.push_back(store->lookup(ex, d));
        } else if (featurizer) {
            out.push_back(encode(ex, *featurizer));
        } else {
            throw ConfigError("no embedding source: need a featurizer or precomputed embeddings");
        }
    }
    return out;
}

std::optional<FeaturizerParams> initial_featurizer(const TrainConfig& cfg, const TrainingContext& ctx) {
    if (ctx.precomputed) return std::nullopt;
    return FeaturizerParams::init(cfg.n_buckets, cfg.d, detail::Rng::derive(cfg.seed, kFeaturizerStream));
}

VerifierParams initial_verifier(const TrainConfig& cfg) {
    return VerifierParams::init(cfg.d, cfg.h, detail::Rng::derive(cfg.seed, kVerifierStream));
}

RetrieverParams initial_retriever(const TrainConfig& cfg) {
    return RetrieverParams::init(cfg.d, cfg.r, detail::Rng::derive(cfg.seed, kRetrieverStream));
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t phase, std::size_t epoch, std::size_t n) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    detail::Rng rng(detail::Rng::derive(seed, phase, epoch));
    rng.shuffle(order);
    return order;
}

Phase1Result train_phase1_verifier(const Dataset& train, const TrainConfig& cfg, const TrainingContext& ctx) {
    cfg.validate();
    if (train.empty()) throw ConfigError("phase 1 needs a non-empty training split");

    Phase1Result result{initial_featurizer(cfg, ctx), initial_verifier(cfg)};
    const std::size_t epochs = cfg.epochs[0];
    if (epochs == 0) return result;

    FeaturizerParams* featurizer = result.featurizer ? &*result.featurizer : nullptr;
    VerifierParams& verifier = result.verifier;

    ParameterRefs params = verifier.refs();
    if (featurizer) {
        for (auto& p : featurizer->refs()) params.push_back(p);
    }

    // Bags are fixed; only the projection they feed changes.
    std::vector<BaggedExample> bags;
    std::vector<EmbeddingMatrix> fixed;
    if (featurizer) {
        bags.reserve(train.size());
        for (const auto& ex : train.examples) bags.push_back(bag_example(ex, cfg.n_buckets));
    } else {
        fixed = embed_dataset(train, nullptr, ctx.precomputed, cfg.d);
    }

    AdamState adam(cfg.lr, cfg.warmup_fraction, total_steps(train.size(), cfg, epochs));
    zero_grads(params);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        double loss_sum = 0.0;
        for_each_batch(epoch_order(cfg.seed, 1, epoch, train.size()), cfg.batch_size, [&](auto batch) {
            for (std::size_t idx : batch) {
                const VerificationLabel y = train.examples[idx].label;
                if (featurizer) {
                    const EmbeddingMatrix S = embed(bags[idx], *featurizer);
                    Tensor dS(S.shape(), 0.0);
                    loss_sum += accuracy_loss_backward(S, y, verifier, &verifier, &dS);
                    embed_backward(bags[idx], S, dS, *featurizer);
                } else {
                    loss_sum += accuracy_loss_backward(fixed[idx], y, verifier, &verifier, nullptr);
                }
            }
            scale_grads(params, 1.0 / static_cast<double>(batch.size()));
            adam_step(params, adam);
        });

        if (ctx.log) {
            EpochRecord rec;
            rec.phase = 1;
            rec.epoch = epoch + 1;
            rec.train_loss = loss_sum / static_cast<double>(train.size());
            if (ctx.dev && !ctx.dev->empty()) {
                const auto dev_S = embed_dataset(*ctx.dev, featurizer, ctx.precomputed, cfg.d);
                const auto f1 = score_views(dev_S, *ctx.dev, verifier);
                rec.dev_micro_f1 = f1.micro;
                rec.dev_macro_f1 = f1.macro;
            }
            ctx.log->epochs.push_back(rec);
        }
    }
    return result;
}

RetrieverParams train_phase2_retriever(const Dataset& train, const FeaturizerParams* featurizer,
                                       const VerifierParams& verifier, const TrainConfig& cfg,
                                       const TrainingContext& ctx) {
    cfg.validate();
    if (train.empty()) throw ConfigError("phase 2 needs a non-empty training split");
    for (const auto& ex : train.examples) {
        if (ex.gold_evidence.size() != ex.num_sentences()) {
            throw ValidationError("example '" + ex.id + "' lacks a gold evidence mask for every sentence");
        }
    }

    RetrieverParams retriever = initial_retriever(cfg);
    const std::size_t epochs = cfg.epochs[1];
    if (epochs == 0) return retriever;

    const auto train_S = embed_dataset(train, featurizer, ctx.precomputed, cfg.d);
    std::vector<EmbeddingMatrix> dev_S;
    if (ctx.log && ctx.dev && !ctx.dev->empty()) dev_S = embed_dataset(*ctx.dev, featurizer, ctx.precomputed, cfg.d);

    const ParameterRefs params = retriever.refs();
    AdamState adam(cfg.lr, cfg.warmup_fraction, total_steps(train.size(), cfg, epochs));
    zero_grads(params);
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        double loss_sum = 0.0;
        for_each_batch(epoch_order(cfg.seed, 2, epoch, train.size()), cfg.batch_size, [&](auto batch) {
            LossBreakdown batch_losses;
            for (std::size_t idx : batch) {
                const auto& ex = train.examples[idx];
                const RetrieverExample item{train_S[idx], ex.gold_evidence, ex.label};
                batch_losses += retriever_objective(item, verifier, retriever, cfg.weights, cfg.margins,
                                                    cfg.k_percent, &retriever);
            }
            loss_sum += batch_losses.combined;
            batch_losses /= static_cast<double>(batch.size());
            scale_grads(params, 1.0 / static_cast<double>(batch.size()));
            adam_step(params, adam);
            if (ctx.log) ctx.log->retriever_steps.push_back({++step, batch_losses});
        });

        if (ctx.log) {
            EpochRecord rec;
            rec.phase = 2;
            rec.epoch = epoch + 1;
            rec.train_loss = loss_sum / static_cast<double>(train.size());
            if (!dev_S.empty()) {
                const auto retrieved = retrieve(*ctx.dev, dev_S, retriever, cfg.k_percent);
                double plau = 0.0;
                std::vector<EvidenceMask> masks;
                for (std::size_t i = 0; i < retrieved.size(); ++i) {
                    plau += plausibility_loss(retrieved[i].scores, ctx.dev->examples[i].gold_evidence);
                    masks.push_back(retrieved[i].mask);
                }
                rec.dev_plausibility = plau / static_cast<double>(retrieved.size());
                const auto evidence = summarize_evidence(*ctx.dev, masks);
                rec.dev_evidence_recall = evidence.recall;
                rec.dev_evidence_f1 = evidence.f1;
                const auto f1 = score_views(hard_evidence_views(dev_S, retrieved), *ctx.dev, verifier);
                rec.dev_micro_f1 = f1.micro;
                rec.dev_macro_f1 = f1.macro;
            }
            ctx.log->epochs.push_back(rec);
        }
    }
    return retriever;
}

VerifierParams train_phase3_revisit(const Dataset& train, const FeaturizerParams* featurizer,
                                    const RetrieverParams& retriever, const VerifierParams& verifier_phase1,
                                    const TrainConfig& cfg, const TrainingContext& ctx) {
    cfg.validate();
    if (train.empty()) throw ConfigError("phase 3 needs a non-empty training split");

    VerifierParams verifier = verifier_phase1;
    const std::size_t epochs = cfg.epochs[2];
    if (epochs == 0) return verifier;

    const auto train_S = embed_dataset(train, featurizer, ctx.precomputed, cfg.d);
    const auto train_views = hard_evidence_views(train_S, retrieve(train, train_S, retriever, cfg.k_percent));
    std::vector<EmbeddingMatrix> dev_views;
    if (ctx.log && ctx.dev && !ctx.dev->empty()) {
        const auto dev_S = embed_dataset(*ctx.dev, featurizer, ctx.precomputed, cfg.d);
        dev_views = hard_evidence_views(dev_S, retrieve(*ctx.dev, dev_S, retriever, cfg.k_percent));
    }

    const ParameterRefs params = verifier.refs();
    AdamState adam(cfg.lr, cfg.warmup_fraction, total_steps(train.size(), cfg, epochs));
    zero_grads(params);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        double loss_sum = 0.0;
        for_each_batch(epoch_order(cfg.seed, 3, epoch, train.size()), cfg.batch_size, [&](auto batch) {
            for (std::size_t idx : batch) {
                loss_sum += accuracy_loss_backward(train_views[idx], train.examples[idx].label, verifier, &verifier,
                                                   nullptr);
            }
            scale_grads(params, 1.0 / static_cast<double>(batch.size()));
            adam_step(params, adam);
        });

        if (ctx.log) {
            EpochRecord rec;
            rec.phase = 3;
            rec.epoch = epoch + 1;
            rec.train_loss = loss_sum / static_cast<double>(train.size());
            if (!dev_views.empty()) {
                const auto f1 = score_views(dev_views, *ctx.dev, verifier);
                rec.dev_micro_f1 = f1.micro;
                rec.dev_macro_f1 = f1.macro;
            }
            ctx.log->epochs.push_back(rec);
        }
    }
    return verifier;
}

Checkpoint featurizer_checkpoint(const FeaturizerParams& featurizer, const TrainConfig& cfg) {
    FeaturizerParams copy = featurizer;
    Checkpoint ckpt = params_checkpoint(copy.refs(), cfg);
    ckpt.add("featurizer.hash_function", Tensor::vector(1, kHashFnv1a64));
    ckpt.add("featurizer.n_buckets", Tensor::vector(1, static_cast<double>(featurizer.n_buckets)));
    return ckpt;
}

Checkpoint params_checkpoint(ParameterRefs params, const TrainConfig& cfg) {
    Checkpoint ckpt;
    ckpt.add("meta.config_hash", encode_u64(cfg.hash()));
    ckpt.add(params);
    return ckpt;
}

void check_config_hash(const Checkpoint& ckpt, const TrainConfig& cfg, const std::filesystem::path& source) {
    if (!ckpt.contains("meta.config_hash") || decode_u64(ckpt.get("meta.config_hash")) != cfg.hash()) {
        throw ConsistencyError(source.string() + " was not produced by the current configuration");
    }
}

namespace {

const char* kConfigFile = "config.txt";
const char* kFeaturizerFile = "featurizer.rrck";
const char* kVerifierPhase1File = "verifier_phase1.rrck";
const char* kRetrieverFile = "retriever.rrck";
const char* kVerifierRevisitedFile = "verifier_revisited.rrck";

void save_params(const std::filesystem::path& path, ParameterRefs refs, const TrainConfig& cfg) {
    params_checkpoint(std::move(refs), cfg).save(path);
}

void restore_params(const std::filesystem::path& path, ParameterRefs refs, const TrainConfig& cfg) {
    const Checkpoint ckpt = Checkpoint::load(path);
    check_config_hash(ckpt, cfg, path);
    ckpt.restore(refs);
}

FeaturizerParams load_featurizer(const std::filesystem::path& path, const TrainConfig& cfg) {
    const Checkpoint ckpt = Checkpoint::load(path);
    check_config_hash(ckpt, cfg, path);
    if (ckpt.get("featurizer.hash_function")[0] != kHashFnv1a64) {
        throw ConsistencyError(path.string() + " was built with an unknown token hash");
    }
    FeaturizerParams f = FeaturizerParams::zeros(cfg.n_buckets, cfg.d);
    ckpt.restore(f.refs());
    return f;
}

}  // namespace

void TrainedSystem::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    config.save(dir / kConfigFile);
    if (featurizer) featurizer_checkpoint(*featurizer, config).save(dir / kFeaturizerFile);
    VerifierParams v1 = verifier_phase1;
    save_params(dir / kVerifierPhase1File, v1.refs(), config);
    RetrieverParams ret = retriever;
    save_params(dir / kRetrieverFile, ret.refs(), config);
    VerifierParams v3 = verifier_revisited;
    save_params(dir / kVerifierRevisitedFile, v3.refs(), config);
}

TrainedSystem TrainedSystem::load(const std::filesystem::path& dir) {
    TrainedSystem sys;
    sys.config = TrainConfig::load(dir / kConfigFile);
    sys.config.validate();
    const TrainConfig& cfg = sys.config;
    if (std::filesystem::exists(dir / kFeaturizerFile)) sys.featurizer = load_featurizer(dir / kFeaturizerFile, cfg);
    sys.verifier_phase1 = VerifierParams::zeros(cfg.d, cfg.h);
    restore_params(dir / kVerifierPhase1File, sys.verifier_phase1.refs(), cfg);
    sys.retriever = RetrieverParams::zeros(cfg.d, cfg.r);
    restore_params(dir / kRetrieverFile, sys.retriever.refs(), cfg);
    sys.verifier_revisited = VerifierParams::zeros(cfg.d, cfg.h);
    restore_params(dir / kVerifierRevisitedFile, sys.verifier_revisited.refs(), cfg);
    return sys;
}

TrainedSystem run_full_pipeline(const Dataset& train, const Dataset& dev, const TrainConfig& cfg,
                                const PipelineOptions& options) {
    cfg.validate();
    TrainingLog local_log;
    TrainingLog* log = options.log ? options.log : &local_log;
    const TrainingContext ctx{&dev, options.precomputed, log};

    TrainedSystem sys;
    sys.config = cfg;
    const auto dir = options.out_dir;
    if (dir) {
        std::filesystem::create_directories(*dir);
        cfg.save(*dir / kConfigFile);
    }
    auto resumable = [&](const char* file) {
        return options.resume && dir && std::filesystem::exists(*dir / file);
    };

    // Phase 1.
    if (resumable(kVerifierPhase1File) && (options.precomputed || std::filesystem::exists(*dir / kFeaturizerFile))) {
        if (!options.precomputed) sys.featurizer = load_featurizer(*dir / kFeaturizerFile, cfg);
        sys.verifier_phase1 = VerifierParams::zeros(cfg.d, cfg.h);
        restore_params(*dir / kVerifierPhase1File, sys.verifier_phase1.refs(), cfg);
    } else {
        Phase1Result p1 = train_phase1_verifier(train, cfg, ctx);
        sys.featurizer = std::move(p1.featurizer);
        sys.verifier_phase1 = std::move(p1.verifier);
        if (dir) {
            if (sys.featurizer) featurizer_checkpoint(*sys.featurizer, cfg).save(*dir / kFeaturizerFile);
            VerifierParams copy = sys.verifier_phase1;
            save_params(*dir / kVerifierPhase1File, copy.refs(), cfg);
        }
    }

    // Phase 2.
    if (resumable(kRetrieverFile)) {
        sys.retriever = RetrieverParams::zeros(cfg.d, cfg.r);
        restore_params(*dir / kRetrieverFile, sys.retriever.refs(), cfg);
    } else {
        sys.retriever = train_phase2_retriever(train, sys.featurizer_ptr(), sys.verifier_phase1, cfg, ctx);
        if (dir) {
            RetrieverParams copy = sys.retriever;
            save_params(*dir / kRetrieverFile, copy.refs(), cfg);
        }
    }

    // Phase 3.
    sys.verifier_revisited =
        train_phase3_revisit(train, sys.featurizer_ptr(), sys.retriever, sys.verifier_phase1, cfg, ctx);
    if (dir) {
        VerifierParams copy = sys.verifier_revisited;
        save_params(*dir / kVerifierRevisitedFile, copy.refs(), cfg);
        log->write_csv(*dir);
    }
    return sys;
}

}  // namespace reread
