#include "protogate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace protogate {

namespace {

void check_pred_labels(const std::vector<int>& preds, const std::vector<int>& labels) {
    if (preds.empty()) throw Error(ErrorKind::EmptyInput, "no predictions");
    if (preds.size() != labels.size())
        throw Error(ErrorKind::LengthMismatch, std::to_string(preds.size()) + " predictions vs " +
                                                   std::to_string(labels.size()) + " labels");
}

} // namespace

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
    check_pred_labels(preds, labels);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == labels[i]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(preds.size());
}

double macro_f1(const std::vector<int>& preds, const std::vector<int>& labels, int num_classes) {
    check_pred_labels(preds, labels);
    double sum_f1 = 0.0;
    for (int c = 0; c < num_classes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (preds[i] == c && labels[i] == c) ++tp;
            else if (preds[i] == c) ++fp;
            else if (labels[i] == c) ++fn;
        }
        const double prec = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double rec = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        sum_f1 += prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    }
    return sum_f1 / static_cast<double>(num_classes);
}

double balanced_accuracy(const std::vector<int>& preds, const std::vector<int>& labels,
                         int num_classes) {
    check_pred_labels(preds, labels);
    double sum_recall = 0.0;
    for (int c = 0; c < num_classes; ++c) {
        std::size_t tp = 0, support = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (labels[i] == c) {
                ++support;
                if (preds[i] == c) ++tp;
            }
        }
        if (support == 0)
            throw Error(ErrorKind::MissingClass,
                        "class " + std::to_string(c + 1) + " never appears in labels");
        sum_recall += static_cast<double>(tp) / static_cast<double>(support);
    }
    return sum_recall / static_cast<double>(num_classes);
}

int ece_bin_of(double confidence, int bins) {
    for (int b = 0; b + 1 < bins; ++b)
        if (confidence <= static_cast<double>(b + 1) / static_cast<double>(bins)) return b;
    return bins - 1;
}

double ece(const std::vector<double>& confidences, const std::vector<int>& correct, int bins) {
    if (confidences.empty()) throw Error(ErrorKind::EmptyInput, "ece: no samples");
    if (confidences.size() != correct.size())
        throw Error(ErrorKind::LengthMismatch, "ece: confidence and correctness counts differ");
    if (bins < 1) throw Error(ErrorKind::PreconditionNotMet, "ece: bins must be >= 1");
    for (double c : confidences)
        if (!(c >= -kFreshTol && c <= 1.0 + kFreshTol))
            throw Error(ErrorKind::PreconditionNotMet, "ece: confidence outside [0,1]");

    std::vector<double> conf_sum(bins, 0.0);
    std::vector<std::size_t> hits(bins, 0), count(bins, 0);
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        const int b = ece_bin_of(std::clamp(confidences[i], 0.0, 1.0), bins);
        conf_sum[b] += confidences[i];
        hits[b] += correct[i] != 0 ? 1 : 0;
        ++count[b];
    }
    const double n = static_cast<double>(confidences.size());
    double out = 0.0;
    for (int b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const double acc = static_cast<double>(hits[b]) / static_cast<double>(count[b]);
        const double conf = conf_sum[b] / static_cast<double>(count[b]);
        out += (static_cast<double>(count[b]) / n) * std::abs(acc - conf);
    }
    return out;
}

AurocResult macro_auroc(const std::vector<Posterior>& scores, const std::vector<int>& labels,
                        int num_classes) {
    if (scores.empty()) throw Error(ErrorKind::EmptyInput, "macro_auroc: no samples");
    if (scores.size() != labels.size())
        throw Error(ErrorKind::LengthMismatch, "macro_auroc: score and label counts differ");
    const std::size_t n = scores.size();
    AurocResult res;
    double sum = 0.0;
    int used = 0;
    for (int c = 0; c < num_classes; ++c) {
        std::size_t pos = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (labels[i] == c) ++pos;
        const std::size_t neg = n - pos;
        if (pos == 0 || neg == 0) {
            res.excluded.push_back(c);
            continue;
        }
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return scores[a].probs[c] < scores[b].probs[c];
        });
        // midranks over tied score groups
        double pos_rank_sum = 0.0;
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && scores[order[j + 1]].probs[c] == scores[order[i]].probs[c]) ++j;
            const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
            for (std::size_t t = i; t <= j; ++t)
                if (labels[order[t]] == c) pos_rank_sum += midrank;
            i = j + 1;
        }
        const double p = static_cast<double>(pos);
        const double auc = (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
        sum += auc;
        ++used;
    }
    if (used == 0)
        throw Error(ErrorKind::DegenerateClass, "every class lacks positives or negatives");
    res.value = sum / static_cast<double>(used);
    return res;
}

EvalReport evaluate(const std::vector<PredictionRecord>& records, const std::vector<int>& labels,
                    int num_classes, int bins) {
    if (records.empty()) throw Error(ErrorKind::EmptyInput, "evaluate: no records");
    if (records.size() != labels.size())
        throw Error(ErrorKind::LengthMismatch, "evaluate: record and label counts differ");

    std::vector<int> preds;
    std::vector<double> confidences;
    std::vector<int> correct;
    std::vector<Posterior> finals;
    preds.reserve(records.size());
    confidences.reserve(records.size());
    correct.reserve(records.size());
    finals.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        preds.push_back(records[i].y_hat);
        confidences.push_back(top1_confidence(records[i].p_final));
        correct.push_back(records[i].y_hat == labels[i] ? 1 : 0);
        finals.push_back(records[i].p_final);
    }

    EvalReport report;
    report.num_bins = bins;
    report.accuracy = accuracy(preds, labels);
    report.macro_f1 = macro_f1(preds, labels, num_classes);
    report.balanced_accuracy = balanced_accuracy(preds, labels, num_classes);
    report.ece = ece(confidences, correct, bins);
    auto auc = macro_auroc(finals, labels, num_classes);
    report.m_auc = auc.value;
    report.auc_excluded = std::move(auc.excluded);

    report.per_class.resize(num_classes);
    for (int c = 0; c < num_classes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0, support = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (labels[i] == c) ++support;
            if (preds[i] == c && labels[i] == c) ++tp;
            else if (preds[i] == c) ++fp;
            else if (labels[i] == c) ++fn;
        }
        auto& cs = report.per_class[c];
        cs.support = static_cast<int>(support);
        cs.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        cs.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        cs.f1 = cs.precision + cs.recall > 0.0
                    ? 2.0 * cs.precision * cs.recall / (cs.precision + cs.recall)
                    : 0.0;
    }
    return report;
}

} // namespace protogate
