#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reread/config.hpp"
#include "reread/corpus.hpp"
#include "reread/diagnostics.hpp"
#include "reread/error.hpp"
#include "reread/evaluation.hpp"
#include "reread/trainer.hpp"

namespace reread::cli {

namespace {

const std::vector<double> kDefaultSweep{1, 3, 5, 10, 15, 20, 25};

// "-" or an empty path means the output stream.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << text;
    if (!f) throw IoError("failed writing " + path);
}

Dataset read_dataset(const std::string& path, Split split, std::ostream& err) {
    std::vector<std::string> warnings;
    Dataset ds = load_dataset(path, split, &warnings);
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    return ds;
}

std::optional<EmbeddingStore> read_store(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return EmbeddingStore::load(path);
}

const EmbeddingStore* ptr(const std::optional<EmbeddingStore>& store) { return store ? &*store : nullptr; }

std::array<double, kNumLabels> parse_mix(const std::string& text) {
    std::array<double, kNumLabels> mix{};
    std::istringstream in(text);
    std::string part;
    std::size_t i = 0;
    while (std::getline(in, part, ',')) {
        if (i == kNumLabels) throw ConfigError("label mix needs exactly three weights: " + text);
        try {
            std::size_t used = 0;
            mix[i] = std::stod(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::logic_error&) {
            throw ConfigError("bad label mix weight '" + part + "'");
        }
        ++i;
    }
    if (i != kNumLabels) throw ConfigError("label mix needs exactly three weights: " + text);
    return mix;
}

struct GenOptions {
    SynthConfig synth;
    std::string out;
    std::string dev_out;
    std::size_t dev_n = 0;
    std::size_t sentences = 0;
    std::string label_mix;
};

int gen_synth(GenOptions opt, std::ostream& out) {
    if (opt.sentences) opt.synth.min_sentences = opt.synth.max_sentences = opt.sentences;
    if (!opt.label_mix.empty()) opt.synth.label_mix = parse_mix(opt.label_mix);
    if (opt.dev_n > 0 && opt.dev_out.empty()) throw ConfigError("--dev-n needs --dev-out");

    // One generator stream: the first n examples form the main split and the
    // next dev-n the dev split, so ids never collide.
    const std::size_t main_n = opt.synth.n_examples;
    opt.synth.n_examples = main_n + opt.dev_n;
    Dataset all = generate_synthetic(opt.synth);

    Dataset main_split;
    Dataset dev_split;
    dev_split.split = Split::Dev;
    for (std::size_t i = 0; i < all.size(); ++i)
        (i < main_n ? main_split : dev_split).examples.push_back(std::move(all.examples[i]));

    save_dataset(main_split, opt.out);
    out << "wrote " << main_split.size() << " examples to " << opt.out << '\n';
    if (opt.dev_n > 0) {
        save_dataset(dev_split, opt.dev_out);
        out << "wrote " << dev_split.size() << " examples to " << opt.dev_out << '\n';
    }
    return kOk;
}

struct TrainOptions {
    std::string config;
    std::string train;
    std::string dev;
    std::string out_dir;
    std::string ablate;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    bool resume = false;
    std::string embeddings;
};

TrainConfig build_config(const TrainOptions& opt) {
    TrainConfig cfg = opt.config.empty() ? TrainConfig{} : TrainConfig::load(opt.config);
    for (const auto& kv : opt.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.ablate == "no-plau") {
        cfg.weights.alpha_plau = 0.0;
    } else if (opt.ablate == "no-faith") {
        cfg.weights.alpha_full = 0.0;
        cfg.weights.alpha_suff = 0.0;
    }
    cfg.validate();
    return cfg;
}

void print_phase_summary(const TrainingLog& log, std::ostream& out) {
    for (std::size_t p = 1; p <= 3; ++p) {
        const auto records = log.phase(p);
        if (records.empty()) continue;
        const auto& last = records.back();
        out << "phase " << p << ": " << records.size() << " epochs, train loss " << last.train_loss
            << ", dev micro F1 " << last.dev_micro_f1;
        if (p == 2) out << ", dev evidence recall " << last.dev_evidence_recall;
        out << '\n';
    }
}

int train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
    const TrainConfig cfg = build_config(opt);
    const Dataset train_ds = read_dataset(opt.train, Split::Train, err);
    const Dataset dev_ds = opt.dev.empty() ? Dataset{Split::Dev, {}} : read_dataset(opt.dev, Split::Dev, err);
    const auto store = read_store(opt.embeddings);

    std::filesystem::create_directories(opt.out_dir);
    TrainingLog log;
    PipelineOptions popt;
    popt.out_dir = opt.out_dir;
    popt.resume = opt.resume;
    popt.precomputed = ptr(store);
    popt.log = &log;
    const TrainedSystem system = run_full_pipeline(train_ds, dev_ds, cfg, popt);
    system.save(opt.out_dir);

    out << "config hash " << cfg.hash() << '\n';
    print_phase_summary(log, out);
    if (!dev_ds.empty()) {
        const EvalReport rep = evaluate(system, dev_ds, cfg.k_percent, ptr(store));
        emit((std::filesystem::path(opt.out_dir) / "eval_dev.json").string(), rep.to_json() + "\n", out);
        out << "dev micro F1 " << rep.verification.micro << ", evidence F1 " << rep.evidence.f1 << '\n';
    }
    return kOk;
}

struct ModelOptions {
    std::string model;
    std::string data;
    std::string train;
    std::string out;
    std::optional<double> k;
    std::vector<double> ks;
    std::string embeddings;
};

int retrieve_cmd(const ModelOptions& opt, std::ostream& out, std::ostream& err) {
    const TrainedSystem system = TrainedSystem::load(opt.model);
    const double k = opt.k.value_or(system.config.k_percent);
    const Dataset ds = read_dataset(opt.data, Split::Test, err);
    const auto store = read_store(opt.embeddings);
    const auto S = embed_dataset(ds, system.featurizer_ptr(), ptr(store), system.config.d);

    std::ostringstream text;
    for (const auto& r : retrieve(ds, S, system.retriever, k)) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["scores"] = r.scores.s;
        j["selected"] = r.mask.selected();
        text << j.dump() << '\n';
    }
    emit(opt.out, text.str(), out);
    return kOk;
}

int eval_cmd(const ModelOptions& opt, std::ostream& out, std::ostream& err) {
    const TrainedSystem system = TrainedSystem::load(opt.model);
    const Dataset ds = read_dataset(opt.data, Split::Test, err);
    const auto store = read_store(opt.embeddings);
    const EvalReport rep = evaluate(system, ds, opt.k.value_or(system.config.k_percent), ptr(store));
    emit(opt.out, rep.to_json() + "\n", out);
    return kOk;
}

int sweep_cmd(const ModelOptions& opt, std::ostream& out, std::ostream& err) {
    const TrainedSystem system = TrainedSystem::load(opt.model);
    const Dataset train_ds = read_dataset(opt.train, Split::Train, err);
    const Dataset dev_ds = read_dataset(opt.data, Split::Dev, err);
    const auto store = read_store(opt.embeddings);
    const auto rows = k_sweep(system, train_ds, dev_ds, opt.ks.empty() ? kDefaultSweep : opt.ks, ptr(store));
    emit(opt.out, k_sweep_csv(rows), out);
    return kOk;
}

struct GradOptions {
    ToyGradientOptions toy;
    double tolerance = 1e-3;
};

void print_check(const char* name, const GradCheckResult& r, std::ostream& out) {
    out << name << ": max relative error " << r.max_relative_error << " over " << r.coordinates_checked
        << " coordinates";
    if (!r.worst_parameter.empty()) {
        out << " (worst " << r.worst_parameter << '[' << r.worst_index << "] analytic " << r.worst_analytic
            << " numeric " << r.worst_numeric << ')';
    }
    out << '\n';
}

int grad_check(const GradOptions& opt, std::ostream& out) {
    const ToyGradientReport rep = toy_gradient_check(opt.toy);
    print_check("accuracy loss", rep.accuracy, out);
    print_check("retriever loss", rep.retriever, out);
    const bool ok = rep.max_relative_error() < opt.tolerance;
    out << (ok ? "ok" : "FAILED") << ": tolerance " << opt.tolerance << '\n';
    return ok ? kOk : kUsage;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Evidence retrieval and claim verification with faithfulness-trained retrieval", "reread"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-synth", "Generate a synthetic planted-evidence corpus as JSONL");
    gen_cmd->add_option("--out", gen.out, "Output JSONL path")->required();
    gen_cmd->add_option("--n", gen.synth.n_examples, "Number of examples")->capture_default_str();
    gen_cmd->add_option("--seed", gen.synth.seed, "Generator seed")->capture_default_str();
    gen_cmd->add_option("--dev-out", gen.dev_out, "Optional second JSONL file for a dev split");
    gen_cmd->add_option("--dev-n", gen.dev_n, "Examples in the dev split")->capture_default_str();
    gen_cmd->add_option("--vocab", gen.synth.vocab_size, "Vocabulary size")->capture_default_str();
    gen_cmd->add_option("--subjects", gen.synth.n_subjects, "Subject tokens")->capture_default_str();
    gen_cmd->add_option("--attributes", gen.synth.n_attributes, "Attribute tokens")->capture_default_str();
    gen_cmd->add_option("--values", gen.synth.n_values, "Value tokens")->capture_default_str();
    gen_cmd->add_option("--sentences", gen.sentences, "Document length (sets min and max)");
    gen_cmd->add_option("--min-sentences", gen.synth.min_sentences, "Minimum document length")
        ->capture_default_str();
    gen_cmd->add_option("--max-sentences", gen.synth.max_sentences, "Maximum document length")
        ->capture_default_str();
    gen_cmd->add_option("--evidence", gen.synth.evidence_sentences_per_doc, "Evidence sentences per document")
        ->capture_default_str();
    gen_cmd->add_option("--min-tokens", gen.synth.min_tokens_per_sentence, "Minimum sentence length")
        ->capture_default_str();
    gen_cmd->add_option("--max-tokens", gen.synth.max_tokens_per_sentence, "Maximum sentence length")
        ->capture_default_str();
    gen_cmd->add_option("--label-mix", gen.label_mix, "Relative REF,SUP,NEI weights, e.g. 1,1,1");

    TrainOptions tr;
    auto* train_cmd = app.add_subcommand("train", "Run the three training phases and write checkpoints");
    train_cmd->add_option("--config", tr.config, "key=value config file");
    train_cmd->add_option("--train", tr.train, "Training JSONL")->required();
    train_cmd->add_option("--dev", tr.dev, "Dev JSONL for per-epoch metrics");
    train_cmd->add_option("--out-dir", tr.out_dir, "Directory for checkpoints and CSVs")->required();
    train_cmd->add_option("--ablate", tr.ablate, "Zero the plausibility or faithfulness weights")
        ->check(CLI::IsMember({"no-plau", "no-faith"}));
    train_cmd->add_option("--set", tr.overrides, "Override one config key, key=value (repeatable)");
    train_cmd->add_option("--seed", tr.seed, "Override the config seed");
    train_cmd->add_flag("--resume", tr.resume, "Reuse matching phase checkpoints in --out-dir");
    train_cmd->add_option("--embeddings", tr.embeddings, "Precomputed embedding file; disables the featurizer");

    ModelOptions ret;
    auto* retrieve_sub = app.add_subcommand("retrieve", "Score sentences and select evidence, one JSON line each");
    retrieve_sub->add_option("--model", ret.model, "Directory written by train")->required();
    retrieve_sub->add_option("--data", ret.data, "Input JSONL")->required();
    retrieve_sub->add_option("--out", ret.out, "Output JSONL (default stdout)");
    retrieve_sub->add_option("--k", ret.k, "Evidence percentage (default from the model config)");
    retrieve_sub->add_option("--embeddings", ret.embeddings, "Precomputed embedding file");

    ModelOptions ev;
    auto* eval_sub = app.add_subcommand("eval", "Evaluate a trained system and print a JSON report");
    eval_sub->add_option("--model", ev.model, "Directory written by train")->required();
    eval_sub->add_option("--data", ev.data, "Input JSONL")->required();
    eval_sub->add_option("--out", ev.out, "Output JSON (default stdout)");
    eval_sub->add_option("--k", ev.k, "Evidence percentage (default from the model config)");
    eval_sub->add_option("--embeddings", ev.embeddings, "Precomputed embedding file");

    ModelOptions sw;
    auto* sweep_sub = app.add_subcommand("sweep-k", "Retrain the revisit phase per k and report dev F1 as CSV");
    sweep_sub->add_option("--model", sw.model, "Directory written by train")->required();
    sweep_sub->add_option("--train", sw.train, "Training JSONL")->required();
    sweep_sub->add_option("--dev", sw.data, "Dev JSONL")->required();
    sweep_sub->add_option("--k", sw.ks, "Comma-separated evidence percentages (default 1,3,5,10,15,20,25)")
        ->delimiter(',');
    sweep_sub->add_option("--out", sw.out, "Output CSV (default stdout)");
    sweep_sub->add_option("--embeddings", sw.embeddings, "Precomputed embedding file");

    GradOptions gc;
    auto* grad_sub = app.add_subcommand("grad-check", "Finite-difference check of both objectives on a toy example");
    grad_sub->add_option("--seed", gc.toy.seed, "Seed for the toy example")->capture_default_str();
    grad_sub->add_option("--sentences", gc.toy.n_sentences, "Document sentences")->capture_default_str();
    grad_sub->add_option("--d", gc.toy.d, "Embedding width")->capture_default_str();
    grad_sub->add_option("--epsilon", gc.toy.epsilon, "Central-difference step")->capture_default_str();
    grad_sub->add_option("--tol", gc.tolerance, "Maximum accepted relative error")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return kUsage;
    }

    try {
        if (*gen_cmd) return gen_synth(gen, out);
        if (*train_cmd) return train(tr, out, err);
        if (*retrieve_sub) return retrieve_cmd(ret, out, err);
        if (*eval_sub) return eval_cmd(ev, out, err);
        if (*sweep_sub) return sweep_cmd(sw, out, err);
        if (*grad_sub) return grad_check(gc, out);
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace reread::cli
