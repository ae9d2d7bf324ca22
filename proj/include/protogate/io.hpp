#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "protogate/cluster.hpp"
#include "protogate/core.hpp"
#include "protogate/gate.hpp"
#include "protogate/metrics.hpp"

namespace protogate {

enum class EmbeddingFormat { csv, bin };
EmbeddingFormat format_from_string(const std::string& name);
EmbeddingFormat format_from_path(const std::filesystem::path& path);

// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);
double parse_double(const std::string& text);

// CSV header: id,label,logit_1..logit_C,z_1..z_D. Binary: "PGEB" magic,
// u16 version, u32 N/C/D, then per record a length-prefixed UTF-8 id and
// (1+C+D) little-endian f64 in header order. Label 0 marks withheld labels
// (all-or-nothing per file); labels are 1-based on disk, 0-based in memory.
LabeledEmbeddingSet read_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
void write_embeddings(const LabeledEmbeddingSet& data, const std::filesystem::path& path,
                      EmbeddingFormat format);

void write_bank(const PrototypeBank& bank, const std::filesystem::path& path);
PrototypeBank read_bank(const std::filesystem::path& path);

// CSV: id,y_cls,y_sim,y_hat,gate,gamma_cls,h_cls,gamma_sim,delta_sim,d_js,p_final_1..C
void write_predictions(const std::vector<PredictionRecord>& records,
                       const std::filesystem::path& path);
// Read-back carries p_final and the signals; p_cls/p_sim stay empty.
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

GateConfig read_gate_config(const std::filesystem::path& path);
void write_gate_config(const GateConfig& cfg, const std::filesystem::path& path);

void write_report(const EvalReport& report, const std::filesystem::path& path);

// id -> 0-based label from an embeddings file (csv or bin) or a 2-column
// id,label CSV.
std::unordered_map<std::string, int> read_labels(const std::filesystem::path& path);

enum class Objective { balacc, accuracy, macro_f1 };
Objective objective_from_string(const std::string& name);

struct TuneGrid {
    std::vector<double> theta_gate{0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> beta{0.6, 0.7, 0.8, 0.9};
    std::vector<double> m_sim{0.1, 0.2, 0.3, 0.5};
    std::vector<double> tau_sim{0.05, 0.1, 0.2, 0.5, 1.0};
    std::vector<double> delta{0.05, 0.1, 0.2};
    Objective objective = Objective::balacc;

    void validate() const;
};
TuneGrid read_tune_grid(const std::filesystem::path& path);

struct TuneRow {
    double theta_gate = 0.0;
    double beta = 0.0;
    double m_sim = 0.0;
    double delta = 0.0;
    double tau_sim = 0.0;
    double objective = 0.0;
    double gate_rate = 0.0;
    double acc = 0.0;
    double balacc = 0.0;
    double mf1 = 0.0;
};

struct TuneResult {
    GateConfig best;
    double best_tau_sim = 0.0;
    double best_objective = 0.0;
    double best_gate_rate = 0.0;
    std::vector<TuneRow> table;
};

// Exhaustive grid search; ties break to the lower gate rate, then to the
// lexicographically smaller (theta, beta, m_sim, delta, tau_sim) tuple.
// alpha_low and entropy_max come from `base` and are not swept.
TuneResult tune(const LabeledEmbeddingSet& val, const PrototypeBank& bank, const TuneGrid& grid,
                const GateConfig& base = GateConfig{}, int threads = 1);
void write_tune_table(const TuneResult& result, const std::filesystem::path& path);

struct SplitResult {
    LabeledEmbeddingSet train;
    LabeledEmbeddingSet val;
};
// Seeded per-class sampling; every class routes ceil(fraction * n_c) records
// to validation. Record order within each part follows the input order.
SplitResult stratified_split(const LabeledEmbeddingSet& data, double val_fraction,
                             std::uint64_t seed);

struct PipelineConfig {
    int k = 3;
    double kappa = 20.0;
    double tau_sim = 0.1;
    int restarts = 5;
    std::uint64_t seed = 0;
    double val_fraction = 0.1;
    TuneGrid grid;
    GateConfig base_gate;
    int bins = 15;
    int threads = 1;
};
PipelineConfig read_pipeline_config(const std::filesystem::path& path);

struct PipelineResult {
    PrototypeBank bank;
    TuneResult tuning;
    std::vector<PredictionRecord> predictions;
    bool report_written = false;
};
// Stratified 90/10 split of train, bank on the large part, thresholds tuned
// on the small part, predictions plus report (labels permitting) for test.
// Writes bank.json, tune_table.csv, gate_config.json, predictions.csv,
// report.json and manifest.json under out_dir.
PipelineResult run_pipeline(const LabeledEmbeddingSet& train, const LabeledEmbeddingSet& test,
                            const PipelineConfig& config, const std::filesystem::path& out_dir);

} // namespace protogate
