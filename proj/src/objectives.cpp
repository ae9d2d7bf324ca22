#include "protogate/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace protogate {

void ContrastiveBatch::validate() const {
    if (views.size() % 2 != 0)
        throw Error(ErrorKind::PreconditionNotMet, "contrastive batch must hold an even view count");
    if (views.size() != labels.size())
        throw Error(ErrorKind::LengthMismatch, "view and label counts differ");
    if (!(tau > 0.0)) throw Error(ErrorKind::PreconditionNotMet, "tau must be > 0");
    if (!(lambda >= 0.0)) throw Error(ErrorKind::PreconditionNotMet, "lambda must be >= 0");
    for (const auto& v : views) {
        v.validate();
        if (v.dim() != views.front().dim())
            throw Error(ErrorKind::DimMismatch, "views have inconsistent dims");
    }
}

double cross_entropy(const Posterior& p, int y) {
    if (y < 0 || static_cast<std::size_t>(y) >= p.probs.size())
        throw Error(ErrorKind::DimMismatch, "cross_entropy: class index out of range");
    const double py = p.probs[y];
    if (py <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(py);
}

namespace {

// s_ab = z_a . z_b for all view pairs
std::vector<std::vector<double>> dot_matrix(const ContrastiveBatch& batch) {
    const std::size_t n = batch.views.size();
    std::vector<std::vector<double>> s(n, std::vector<double>(n, 0.0));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            s[a][b] = s[b][a] = dot(batch.views[a].values, batch.views[b].values);
    return s;
}

std::vector<int> positive_counts(const ContrastiveBatch& batch) {
    const std::size_t n = batch.views.size();
    std::vector<int> counts(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < n; ++p)
            if (p != i && batch.labels[p] == batch.labels[i]) ++counts[i];
    return counts;
}

// log sum_{a != i} exp(s_ia / tau), max-shifted
double lse_row(const std::vector<double>& row, std::size_t i, double tau) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < row.size(); ++a)
        if (a != i) m = std::max(m, row[a] / tau);
    double sum = 0.0;
    for (std::size_t a = 0; a < row.size(); ++a)
        if (a != i) sum += std::exp(row[a] / tau - m);
    return m + std::log(sum);
}

} // namespace

double supcon_loss(const ContrastiveBatch& batch) {
    batch.validate();
    const std::size_t n = batch.views.size();
    if (n < 2) return 0.0;
    const auto s = dot_matrix(batch);
    const auto pos = positive_counts(batch);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (pos[i] == 0) continue; // undefined anchor, skipped
        const double lse = lse_row(s[i], i, batch.tau);
        double mean_pos = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            if (p != i && batch.labels[p] == batch.labels[i]) mean_pos += s[i][p] / batch.tau;
        mean_pos /= static_cast<double>(pos[i]);
        loss += lse - mean_pos;
    }
    return loss;
}

std::vector<std::vector<double>> supcon_grad(const ContrastiveBatch& batch) {
    batch.validate();
    const std::size_t n = batch.views.size();
    const std::size_t dim = n == 0 ? 0 : batch.views.front().dim();
    std::vector<std::vector<double>> grad(n, std::vector<double>(dim, 0.0));
    if (n < 2) return grad;
    const auto s = dot_matrix(batch);
    const auto pos = positive_counts(batch);

    // softmax weights w[i][a] = exp(s_ia/tau) / sum_{b != i} exp(s_ib/tau)
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n; ++a)
            if (a != i) m = std::max(m, s[i][a] / batch.tau);
        double sum = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            if (a != i) {
                w[i][a] = std::exp(s[i][a] / batch.tau - m);
                sum += w[i][a];
            }
        for (std::size_t a = 0; a < n; ++a)
            if (a != i) w[i][a] /= sum;
    }

    const double inv_tau = 1.0 / batch.tau;
    for (std::size_t m = 0; m < n; ++m) {
        // view m as anchor
        if (pos[m] > 0) {
            const double inv_pos = 1.0 / static_cast<double>(pos[m]);
            for (std::size_t a = 0; a < n; ++a) {
                if (a == m) continue;
                double coeff = inv_tau * w[m][a];
                if (batch.labels[a] == batch.labels[m]) coeff -= inv_tau * inv_pos;
                for (std::size_t d = 0; d < dim; ++d)
                    grad[m][d] += coeff * batch.views[a].values[d];
            }
        }
        // view m inside other anchors' terms
        for (std::size_t i = 0; i < n; ++i) {
            if (i == m || pos[i] == 0) continue;
            double coeff = inv_tau * w[i][m];
            if (batch.labels[i] == batch.labels[m])
                coeff -= inv_tau / static_cast<double>(pos[i]);
            for (std::size_t d = 0; d < dim; ++d)
                grad[m][d] += coeff * batch.views[i].values[d];
        }
    }
    return grad;
}

double total_loss(const std::vector<double>& ce_values, double scl_value, double lambda) {
    if (ce_values.empty()) throw Error(ErrorKind::EmptyBatch, "total_loss: no CE values");
    if (!(lambda >= 0.0)) throw Error(ErrorKind::PreconditionNotMet, "lambda must be >= 0");
    double mean = 0.0;
    for (double v : ce_values) {
        if (!std::isfinite(v))
            throw Error(ErrorKind::PreconditionNotMet, "total_loss: non-finite CE value");
        mean += v;
    }
    mean /= static_cast<double>(ce_values.size());
    if (!std::isfinite(scl_value))
        throw Error(ErrorKind::PreconditionNotMet, "total_loss: non-finite SCL value");
    return mean + lambda * scl_value;
}

} // namespace protogate
