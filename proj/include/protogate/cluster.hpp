#pragma once

#include <cstdint>
#include <vector>

#include "protogate/core.hpp"

namespace protogate {

struct ClusterAssignment {
    std::vector<int> assignment;
    double objective = 0.0; // sum over points of (1 - cos) to the assigned prototype
};

// Per-class prototype memory plus the scoring hyperparameters, so a
// serialized bank fully determines the similarity posterior.
struct PrototypeBank {
    int num_classes = 0;
    int dim = 0;
    std::vector<std::vector<UnitEmbedding>> prototypes; // [class][k], ragged K_c >= 1
    double kappa = 20.0;
    double tau_sim = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

// Seeded k-means++ under cosine distance; returns min(k, |points|) centers.
std::vector<UnitEmbedding> init_prototypes(const std::vector<UnitEmbedding>& points, int k,
                                           std::uint64_t seed);

// Nearest prototype by cosine similarity, ties to the lowest index.
ClusterAssignment assign(const std::vector<UnitEmbedding>& points,
                         const std::vector<UnitEmbedding>& prototypes);

// Normalized-sum centroids. Empty clusters are re-seeded to the point
// farthest from its own prototype; a non-empty cluster whose sum cancels
// below 1e-12 raises ZeroNorm.
std::vector<UnitEmbedding> update_centroids(const std::vector<UnitEmbedding>& points,
                                            const ClusterAssignment& assignment, int k);

struct FitResult {
    std::vector<UnitEmbedding> prototypes;
    ClusterAssignment assignment;
    std::vector<double> objective_trace; // objective after each assign step
};

// Alternating assign/update from the k-means++ start until the objective
// improvement drops below tol or max_iters is hit. Degenerate clusters are
// re-seeded like empty ones instead of propagating ZeroNorm.
FitResult fit(const std::vector<UnitEmbedding>& points, int k, std::uint64_t seed,
              int max_iters = 100, double tol = 1e-8);

// Best of `restarts` runs with seeds seed..seed+restarts-1, lowest objective wins.
FitResult fit_best_of(const std::vector<UnitEmbedding>& points, int k, std::uint64_t seed,
                      int restarts = 5, int max_iters = 100, double tol = 1e-8);

// Per-class fit with K_c = min(k, class size) and per-class seed = seed + class.
PrototypeBank build_bank(const LabeledEmbeddingSet& data, int k, double kappa, double tau_sim,
                         std::uint64_t seed, int restarts = 5, int max_iters = 100,
                         double tol = 1e-8);

} // namespace protogate
