#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "protogate/cluster.hpp"
#include "protogate/core.hpp"
#include "protogate/gate.hpp"
#include "protogate/rng.hpp"

namespace protogate {

struct VmfParams {
    UnitEmbedding mean_dir;
    double kappa = 0.0;

    void validate() const;
};

// One draw from vMF(mean_dir, kappa) via Wood-style tangent-normal rejection.
UnitEmbedding sample_vmf_one(Rng& rng, const UnitEmbedding& mean_dir, double kappa);
std::vector<UnitEmbedding> sample_vmf(const VmfParams& params, std::size_t n, std::uint64_t seed);

// Synthetic two-expert world: class-conditional vMF mixtures with known
// posterior, a noisy parametric classifier, and a clean retrieval expert
// scoring against the true component directions.
struct ScenarioConfig {
    int num_classes = 3;
    int dim = 8;
    int k_true = 3;      // mixture components per class
    int n_per_class = 500;
    int n_total = 0;     // when > 0, overrides n_per_class (split as evenly as possible)
    double kappa_gen = 8.0;
    double noise_cls = 0.3;       // base logit noise scale
    double ambig_margin = 0.3;    // true-posterior margin below which extra noise applies
    double ambig_noise_mult = 5.0;
    int mc_label_draws = 1000;    // label redraws per sample for risk estimation
    std::uint64_t seed = 1;
    // optional fixed component directions [class][k]; random when empty
    std::vector<std::vector<UnitEmbedding>> components;

    void validate() const;
};

struct ScenarioTruth {
    LabeledEmbeddingSet data;
    PrototypeBank true_bank;           // generative components, kappa_gen, tau_sim = 1
    std::vector<double> r_cls;         // conditional risk of the classifier expert
    std::vector<double> r_sim;         // conditional risk of the retrieval expert
    std::vector<double> eps_cls;       // |a_cls - gamma_cls| per sample
    std::vector<double> eps_sim;       // |a_sim - gamma_sim| per sample
    std::vector<int> bayes_gate;       // 1 = retrieval expert has smaller risk
};

ScenarioTruth gen_two_expert_scenario(const ScenarioConfig& config);

// 1 iff r_sim < r_cls; ties keep the classifier.
std::vector<int> bayes_gate(const std::vector<double>& r_cls, const std::vector<double>& r_sim);
std::vector<int> bayes_gate(const ScenarioTruth& truth);

// Non-gated records must carry the classifier posterior bitwise.
struct InvarianceReport {
    std::size_t checked = 0;
    std::size_t non_gated = 0;
    std::size_t violations = 0;
};
InvarianceReport check_invariance(const std::vector<PredictionRecord>& records);

// lhs = R(final) - R(classifier); rhs = P(G) * E[err diff | G]. Throws
// InvariantViolation when the finite-sample identity breaks beyond 1e-12.
struct RiskDecomposition {
    double lhs = 0.0;
    double rhs = 0.0;
};
RiskDecomposition risk_decomposition(const std::vector<PredictionRecord>& records,
                                     const std::vector<int>& labels);

// Rejection-samples gate-passing posterior pairs and counts violations of
// "fusion prefers the similarity label". Requires the alpha bound
// alpha_low < m_sim / (m_sim + theta_gate).
struct AlphaBoundResult {
    std::size_t trials = 0;
    std::size_t counterexamples = 0;
};
AlphaBoundResult check_alpha_bound(const GateConfig& cfg, std::size_t trials, std::uint64_t seed);

// Samples whose confidence gap beats the summed calibration slack must rank
// the experts correctly; also reports practical-gate agreement with the
// Bayes gate on those samples.
struct GapConditionReport {
    std::size_t condition_count = 0;
    std::size_t violations = 0;
    std::size_t practical_agree = 0;
};
GapConditionReport check_gap_condition(const ScenarioTruth& truth,
                                       const std::vector<PredictionRecord>& records);

// Excess risk of a gate vs the Bayes gate, bounded by mis-ranking mass.
struct RegretResult {
    double excess_risk = 0.0;
    double misrank_prob = 0.0;
};
RegretResult regret_check(const ScenarioTruth& truth, const std::vector<int>& gate_decisions);

struct SweepRow {
    std::string field;
    double value = 0.0;
    double gate_rate = 0.0;
    double gated_accuracy = 0.0; // NaN when no sample is gated
    double overall_accuracy = 0.0;
    double balanced_accuracy = 0.0;
};
struct SweepResult {
    std::vector<SweepRow> rows;
};

// One row per grid value; supported fields are theta_gate and beta.
SweepResult threshold_sweep(const LabeledEmbeddingSet& data, const PrototypeBank& bank,
                            const GateConfig& base_cfg,
                            const std::vector<std::pair<std::string, std::vector<double>>>& grid,
                            const std::vector<int>& labels, int threads = 1);

} // namespace protogate
