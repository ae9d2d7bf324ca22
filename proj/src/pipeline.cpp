#include <cmath>
#include <fstream>

#include <json.hpp>

#include "protogate/io.hpp"
#include "protogate/rng.hpp"

namespace protogate {

SplitResult stratified_split(const LabeledEmbeddingSet& data, double val_fraction,
                             std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw Error(ErrorKind::ConfigError, "val_fraction must be in (0,1)");
    if (!data.has_labels)
        throw Error(ErrorKind::PreconditionNotMet, "stratified_split needs labels");

    std::vector<std::vector<std::size_t>> by_class(data.num_classes);
    for (std::size_t i = 0; i < data.records.size(); ++i)
        by_class[data.records[i].label].push_back(i);

    Rng rng(seed);
    std::vector<bool> to_val(data.records.size(), false);
    for (int c = 0; c < data.num_classes; ++c) {
        auto& idx = by_class[c];
        if (idx.empty()) continue;
        // ceil rule: every class routes at least one record to validation
        const std::size_t n_val = static_cast<std::size_t>(
            std::ceil(val_fraction * static_cast<double>(idx.size()) - 1e-9));
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
        for (std::size_t i = 0; i < std::max<std::size_t>(n_val, 1) && i < idx.size(); ++i)
            to_val[idx[i]] = true;
    }

    SplitResult out;
    out.train.num_classes = out.val.num_classes = data.num_classes;
    out.train.dim = out.val.dim = data.dim;
    out.train.has_labels = out.val.has_labels = true;
    for (std::size_t i = 0; i < data.records.size(); ++i)
        (to_val[i] ? out.val : out.train).records.push_back(data.records[i]);
    return out;
}

PipelineResult run_pipeline(const LabeledEmbeddingSet& train, const LabeledEmbeddingSet& test,
                            const PipelineConfig& config, const std::filesystem::path& out_dir) {
    if (train.num_classes != test.num_classes || train.dim != test.dim)
        throw Error(ErrorKind::SchemaError, "train and test sets disagree on C or D");
    if (!train.has_labels)
        throw Error(ErrorKind::PreconditionNotMet, "pipeline: training set needs labels");
    if (config.bins < 1) throw Error(ErrorKind::ConfigError, "bins must be >= 1");
    config.grid.validate();
    config.base_gate.validate();
    std::filesystem::create_directories(out_dir);

    const auto split = stratified_split(train, config.val_fraction, config.seed);

    PipelineResult result;
    result.bank = build_bank(split.train, config.k, config.kappa, config.tau_sim, config.seed,
                             config.restarts);
    result.tuning = tune(split.val, result.bank, config.grid, config.base_gate, config.threads);
    result.bank.tau_sim = result.tuning.best_tau_sim;

    write_bank(result.bank, out_dir / "bank.json");
    write_tune_table(result.tuning, out_dir / "tune_table.csv");
    write_gate_config(result.tuning.best, out_dir / "gate_config.json");

    result.predictions = predict_batch(test, result.bank, result.tuning.best, config.threads);
    write_predictions(result.predictions, out_dir / "predictions.csv");

    if (test.has_labels) {
        const auto report =
            evaluate(result.predictions, test.labels(), test.num_classes, config.bins);
        write_report(report, out_dir / "report.json");
        result.report_written = true;
    }

    nlohmann::ordered_json manifest;
    manifest["seed"] = config.seed;
    manifest["k"] = config.k;
    manifest["kappa"] = config.kappa;
    manifest["initial_tau_sim"] = config.tau_sim;
    manifest["restarts"] = config.restarts;
    manifest["val_fraction"] = config.val_fraction;
    manifest["bins"] = config.bins;
    manifest["train_size"] = train.records.size();
    manifest["bank_train_size"] = split.train.records.size();
    manifest["val_size"] = split.val.records.size();
    manifest["test_size"] = test.records.size();
    manifest["tuned_tau_sim"] = result.tuning.best_tau_sim;
    manifest["best_objective"] = result.tuning.best_objective;
    manifest["test_labels_present"] = test.has_labels;
    manifest["report_written"] = result.report_written;
    auto artifacts = nlohmann::ordered_json::array();
    artifacts.push_back("bank.json");
    artifacts.push_back("tune_table.csv");
    artifacts.push_back("gate_config.json");
    artifacts.push_back("predictions.csv");
    if (result.report_written) artifacts.push_back("report.json");
    manifest["artifacts"] = std::move(artifacts);
    std::ofstream mf(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    mf << manifest.dump(2) << "\n";

    return result;
}

} // namespace protogate
