#pragma once

#include <vector>

#include "protogate/core.hpp"

namespace protogate {

// Two augmented views per sample: 2B unit embeddings with shared labels.
struct ContrastiveBatch {
    std::vector<UnitEmbedding> views;
    std::vector<int> labels;
    double tau = 0.07;
    double lambda = 0.03;

    void validate() const;
};

// -log p(y); +infinity sentinel when p(y) = 0
double cross_entropy(const Posterior& p, int y);

// Supervised contrastive loss over the batch. Anchors without positives
// contribute 0; denominators are max-shifted.
double supcon_loss(const ContrastiveBatch& batch);

// Exact gradient of supcon_loss with respect to each raw view vector
// (views treated as free vectors, no re-normalization through the gradient).
std::vector<std::vector<double>> supcon_grad(const ContrastiveBatch& batch);

// mean(ce_values) + lambda * scl_value
double total_loss(const std::vector<double>& ce_values, double scl_value, double lambda);

} // namespace protogate
