#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "protogate/error.hpp"

namespace protogate {

// Tolerances: stored/ingested data vs freshly computed values.
inline constexpr double kStoredTol = 1e-9;
inline constexpr double kFreshTol = 1e-12;

// Point on the unit hypersphere S^{D-1}.
struct UnitEmbedding {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    void validate() const;
};

// Probability vector over C classes.
struct Posterior {
    std::vector<double> probs;

    std::size_t num_classes() const { return probs.size(); }
    void validate() const;
};

struct EmbeddingRecord {
    std::string id;
    int label = -1; // 0-based internally; -1 when labels are withheld
    std::vector<double> logits;
    UnitEmbedding embedding;
};

struct LabeledEmbeddingSet {
    std::vector<EmbeddingRecord> records;
    int num_classes = 0;
    int dim = 0;
    bool has_labels = true;

    std::size_t size() const { return records.size(); }
    std::vector<int> labels() const;
    void validate() const;
};

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& v);

// v / ||v||2. Inputs already unit-norm within 1e-12 are returned unchanged
// so repeated application is a bitwise fixpoint.
UnitEmbedding normalize(const std::vector<double>& v);

// Max-shifted softmax of logits / temperature.
Posterior softmax(const std::vector<double>& logits, double temperature);

// Lowest index attaining the maximum (global tie rule).
int argmax_index(const std::vector<double>& v);
int argmax_class(const Posterior& p);

} // namespace protogate
