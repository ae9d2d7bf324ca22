#pragma once

#include <vector>

#include "protogate/cluster.hpp"
#include "protogate/core.hpp"

namespace protogate {

// Exponential-moving-average smoothing state over a flat parameter vector.
struct EmaState {
    std::vector<double> teacher;
    double momentum = 0.999;

    void validate() const;
};

// teacher' = momentum * teacher + (1 - momentum) * student
EmaState ema_update(const EmaState& state, const std::vector<double>& student);

struct SimilarityScores {
    std::vector<std::vector<double>> per_prototype; // s_{c,k} = z . p_{c,k}, clamped to [-1,1]
    std::vector<double> per_class;                  // q_c = log sum_k exp(kappa * s_{c,k})
};

// Per-class log-sum-exp mixture scores, max-shifted for stability.
SimilarityScores vmf_class_scores(const UnitEmbedding& z, const PrototypeBank& bank);

// Softmax of the class scores at temperature tau_sim.
Posterior similarity_posterior(const SimilarityScores& scores, double tau_sim);

// vmf_class_scores + similarity_posterior with the bank's kappa and tau_sim.
Posterior retrieve(const UnitEmbedding& z, const PrototypeBank& bank);

} // namespace protogate
