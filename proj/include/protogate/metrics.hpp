#pragma once

#include <vector>

#include "protogate/core.hpp"
#include "protogate/gate.hpp"

namespace protogate {

struct ClassStats {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int support = 0;
};

struct EvalReport {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double balanced_accuracy = 0.0;
    double ece = 0.0;
    double m_auc = 0.0;
    std::vector<ClassStats> per_class;
    int num_bins = 15;
    std::vector<int> auc_excluded; // classes without both positives and negatives
};

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

// Unweighted mean F1; precision/recall/F1 are 0 whenever their denominator is 0.
double macro_f1(const std::vector<int>& preds, const std::vector<int>& labels, int num_classes);

// Mean per-class recall; MissingClass when a class never appears in labels.
double balanced_accuracy(const std::vector<int>& preds, const std::vector<int>& labels,
                         int num_classes);

// Equal-width bins on [0,1]; bin 0 is [0, 1/M], bin b >= 1 is (b/M, (b+1)/M].
int ece_bin_of(double confidence, int bins);
double ece(const std::vector<double>& confidences, const std::vector<int>& correct, int bins);

// One-vs-rest AUROC via the midrank formula, averaged over classes with both
// positives and negatives; degenerate classes are excluded and reported.
struct AurocResult {
    double value = 0.0;
    std::vector<int> excluded;
};
AurocResult macro_auroc(const std::vector<Posterior>& scores, const std::vector<int>& labels,
                        int num_classes);

// Full report over prediction records. ECE uses top-1 confidence of p_final
// and correctness of y_hat; AUROC scores are p_final.
EvalReport evaluate(const std::vector<PredictionRecord>& records, const std::vector<int>& labels,
                    int num_classes, int bins = 15);

} // namespace protogate
