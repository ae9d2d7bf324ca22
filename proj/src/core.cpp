#include "protogate/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace protogate {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw Error(ErrorKind::DimMismatch,
                    "dot: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void UnitEmbedding::validate() const {
    if (values.size() < 2)
        throw Error(ErrorKind::DimMismatch, "embedding dim must be >= 2, got " + std::to_string(values.size()));
    for (double x : values)
        if (!std::isfinite(x)) throw Error(ErrorKind::PreconditionNotMet, "embedding has non-finite entry");
    const double n = norm2(values);
    if (std::abs(n - 1.0) > kStoredTol)
        throw Error(ErrorKind::NormError, "embedding norm " + std::to_string(n) + " not unit within 1e-9");
}

void Posterior::validate() const {
    if (probs.empty()) throw Error(ErrorKind::EmptyInput, "posterior has no classes");
    double sum = 0.0;
    for (double p : probs) {
        if (!std::isfinite(p)) throw Error(ErrorKind::PreconditionNotMet, "posterior has non-finite entry");
        if (p < -kStoredTol || p > 1.0 + kStoredTol)
            throw Error(ErrorKind::PreconditionNotMet, "posterior entry outside [0,1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kStoredTol)
        throw Error(ErrorKind::PreconditionNotMet, "posterior sums to " + std::to_string(sum));
}

std::vector<int> LabeledEmbeddingSet::labels() const {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.label);
    return out;
}

void LabeledEmbeddingSet::validate() const {
    std::unordered_set<std::string> seen;
    seen.reserve(records.size());
    for (const auto& r : records) {
        if (!seen.insert(r.id).second)
            throw Error(ErrorKind::DuplicateId, "duplicate record id '" + r.id + "'");
        if (static_cast<int>(r.logits.size()) != num_classes)
            throw Error(ErrorKind::SchemaError, "record '" + r.id + "' has inconsistent logit count");
        if (static_cast<int>(r.embedding.dim()) != dim)
            throw Error(ErrorKind::SchemaError, "record '" + r.id + "' has inconsistent embedding dim");
        for (double l : r.logits)
            if (!std::isfinite(l))
                throw Error(ErrorKind::PreconditionNotMet, "record '" + r.id + "' has non-finite logit");
        r.embedding.validate();
        if (has_labels && (r.label < 0 || r.label >= num_classes))
            throw Error(ErrorKind::SchemaError, "record '" + r.id + "' has out-of-range label");
    }
}

UnitEmbedding normalize(const std::vector<double>& v) {
    if (v.size() < 2)
        throw Error(ErrorKind::DimMismatch, "normalize: dim must be >= 2, got " + std::to_string(v.size()));
    for (double x : v)
        if (!std::isfinite(x)) throw Error(ErrorKind::PreconditionNotMet, "normalize: non-finite input");
    const double n = norm2(v);
    if (n < 1e-12) throw Error(ErrorKind::ZeroNorm, "normalize: input norm below 1e-12");
    if (std::abs(n - 1.0) <= kFreshTol) return UnitEmbedding{v};
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
    return UnitEmbedding{std::move(out)};
}

Posterior softmax(const std::vector<double>& logits, double temperature) {
    if (logits.empty()) throw Error(ErrorKind::EmptyInput, "softmax: empty logits");
    if (!(temperature > 0.0))
        throw Error(ErrorKind::PreconditionNotMet, "softmax: temperature must be > 0");
    for (double l : logits)
        if (!std::isfinite(l)) throw Error(ErrorKind::PreconditionNotMet, "softmax: non-finite logit");
    std::vector<double> scaled(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) scaled[i] = logits[i] / temperature;
    const double m = *std::max_element(scaled.begin(), scaled.end());
    std::vector<double> probs(scaled.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scaled.size(); ++i) {
        probs[i] = std::exp(scaled[i] - m);
        sum += probs[i];
    }
    for (auto& p : probs) p /= sum;
    return Posterior{std::move(probs)};
}

int argmax_index(const std::vector<double>& v) {
    if (v.empty()) throw Error(ErrorKind::EmptyInput, "argmax of empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return static_cast<int>(best);
}

int argmax_class(const Posterior& p) {
    return argmax_index(p.probs);
}

} // namespace protogate
