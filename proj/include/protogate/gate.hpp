#pragma once

#include <optional>
#include <string>
#include <vector>

#include "protogate/cluster.hpp"
#include "protogate/core.hpp"

namespace protogate {

struct GateConfig {
    double theta_gate = 0.7; // classifier-confidence threshold; 0 disables the gate
    double beta = 0.8;       // similarity-confidence threshold
    double m_sim = 0.3;      // similarity-margin threshold
    double delta = 0.1;      // JS-divergence threshold, nats
    double alpha_low = 0.9;  // classifier weight in retrieval-favoring fusion
    std::optional<double> entropy_max; // optional sixth factor H_cls > entropy_max, off by default

    void validate() const;
};

struct GateSignals {
    double gamma_cls = 0.0; // top-1 classifier probability
    double h_cls = 0.0;     // classifier entropy, nats
    double gamma_sim = 0.0; // top-1 similarity probability
    double delta_sim = 0.0; // top1 - top2 similarity margin
    double d_js = 0.0;      // Jensen-Shannon divergence, nats
    int y_cls = 0;
    int y_sim = 0;
    bool gate = false;
};

enum class PredictionSource { classifier, fused };

struct PredictionRecord {
    std::string id;
    Posterior p_cls;
    Posterior p_sim;
    GateSignals signals;
    Posterior p_final;
    int y_hat = 0;
    PredictionSource source = PredictionSource::classifier;
};

double top1_confidence(const Posterior& p);

// -sum p log p, natural log, 0 log 0 := 0
double entropy(const Posterior& p);

// largest minus second-largest entry; TooFewClasses when C < 2
double sim_margin(const Posterior& p);

// JS(p||q) = KL(p||m)/2 + KL(q||m)/2 with m = (p+q)/2, natural log
double js_divergence(const Posterior& p, const Posterior& q);

// All five indicators must pass strictly, plus the optional entropy factor.
// Signals are populated no matter how the gate resolves.
GateSignals evaluate_gate(const Posterior& p_cls, const Posterior& p_sim, const GateConfig& cfg);

// alpha_low * p_cls + (1 - alpha_low) * p_sim
Posterior fuse(const Posterior& p_cls, const Posterior& p_sim, double alpha_low);

// Final posterior: untouched p_cls when the gate is off (bitwise, never
// re-derived through the convex formula), fused otherwise. The returned
// record has no id.
PredictionRecord final_posterior(const Posterior& p_cls, const Posterior& p_sim,
                                 const GateConfig& cfg);

// Classifier posterior from stored logits at T=1, similarity posterior from
// the bank, gate and fusion per sample; order-preserving.
std::vector<PredictionRecord> predict_batch(const LabeledEmbeddingSet& data,
                                            const PrototypeBank& bank, const GateConfig& cfg,
                                            int threads = 1);

// Split pipeline used by tune/sweep so posteriors can be computed once and
// reused across configs; composition is identical to predict_batch.
struct PosteriorPair {
    Posterior p_cls;
    Posterior p_sim;
};
std::vector<PosteriorPair> compute_posteriors(const LabeledEmbeddingSet& data,
                                              const PrototypeBank& bank, int threads = 1);
std::vector<PredictionRecord> predict_from_posteriors(const LabeledEmbeddingSet& data,
                                                      const std::vector<PosteriorPair>& posteriors,
                                                      const GateConfig& cfg, int threads = 1);

} // namespace protogate
