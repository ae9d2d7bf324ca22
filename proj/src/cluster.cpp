#include "protogate/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "protogate/rng.hpp"

namespace protogate {

namespace {

double cosine(const UnitEmbedding& a, const UnitEmbedding& b) {
    return std::clamp(dot(a.values, b.values), -1.0, 1.0);
}

// Normalized-sum centroids with farthest-point re-seeding for empty
// clusters. With throw_on_degenerate, a non-empty cluster whose sum cancels
// raises ZeroNorm; otherwise it is re-seeded like an empty one (fit path).
std::vector<UnitEmbedding> centroids_impl(const std::vector<UnitEmbedding>& points,
                                          const ClusterAssignment& assignment, int k,
                                          bool throw_on_degenerate) {
    const std::size_t n = points.size();
    if (k < 1) throw Error(ErrorKind::PreconditionNotMet, "update_centroids: k must be >= 1");
    if (assignment.assignment.size() != n)
        throw Error(ErrorKind::LengthMismatch, "assignment size does not match point count");
    if (n == 0) throw Error(ErrorKind::EmptyInput, "update_centroids: no points");
    const std::size_t dim = points[0].dim();

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<int> counts(k, 0);
    std::vector<int> cluster_of(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int c = assignment.assignment[i];
        if (c < 0 || c >= k)
            throw Error(ErrorKind::PreconditionNotMet, "cluster index out of range");
        if (points[i].dim() != dim)
            throw Error(ErrorKind::DimMismatch, "points have inconsistent dims");
        for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i].values[d];
        ++counts[c];
        cluster_of[i] = c;
    }

    std::vector<UnitEmbedding> protos(k);
    std::vector<bool> ok(k, false);
    std::vector<bool> pending(k, false);
    std::deque<int> to_fix;
    auto enqueue = [&](int j) {
        if (!pending[j]) {
            pending[j] = true;
            ok[j] = false;
            to_fix.push_back(j);
        }
    };
    auto recompute = [&](int j) -> bool {
        const double nrm = norm2(sums[j]);
        if (counts[j] == 0 || nrm < 1e-12) return false;
        protos[j] = normalize(sums[j]);
        ok[j] = true;
        return true;
    };

    for (int j = 0; j < k; ++j) {
        if (counts[j] == 0) {
            enqueue(j);
            continue;
        }
        if (!recompute(j)) {
            if (throw_on_degenerate)
                throw Error(ErrorKind::ZeroNorm,
                            "cluster " + std::to_string(j) + " sum cancels below 1e-12");
            enqueue(j);
        }
    }

    std::vector<bool> locked(n, false);
    while (!to_fix.empty()) {
        const int j = to_fix.front();
        to_fix.pop_front();
        pending[j] = false;
        // farthest unlocked point from its own (valid) prototype; ties -> lowest index
        std::size_t best = n;
        double best_dist = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (locked[i] || !ok[cluster_of[i]]) continue;
            const double d = 1.0 - cosine(points[i], protos[cluster_of[i]]);
            if (d > best_dist) {
                best_dist = d;
                best = i;
            }
        }
        if (best == n)
            throw Error(ErrorKind::EmptyInput, "not enough points to populate all clusters");
        const int former = cluster_of[best];
        for (std::size_t d = 0; d < dim; ++d) {
            sums[former][d] -= points[best].values[d];
            sums[j][d] += points[best].values[d];
        }
        --counts[former];
        ++counts[j];
        cluster_of[best] = j;
        locked[best] = true;
        if (!recompute(former)) {
            if (throw_on_degenerate && counts[former] > 0)
                throw Error(ErrorKind::ZeroNorm,
                            "cluster " + std::to_string(former) + " sum cancels below 1e-12");
            enqueue(former);
        }
        // an empty cluster's sum is now exactly the moved point; a cancelled
        // sum plus a unit vector cannot be degenerate
        recompute(j);
    }
    return protos;
}

} // namespace

void PrototypeBank::validate() const {
    if (num_classes < 1 || static_cast<int>(prototypes.size()) != num_classes)
        throw Error(ErrorKind::InvariantViolation, "bank class count mismatch");
    if (!(kappa > 0.0)) throw Error(ErrorKind::InvariantViolation, "bank kappa must be > 0");
    if (!(tau_sim > 0.0)) throw Error(ErrorKind::InvariantViolation, "bank tau_sim must be > 0");
    for (int c = 0; c < num_classes; ++c) {
        if (prototypes[c].empty())
            throw Error(ErrorKind::InvariantViolation,
                        "class " + std::to_string(c + 1) + " has no prototypes");
        for (const auto& p : prototypes[c]) {
            if (static_cast<int>(p.dim()) != dim)
                throw Error(ErrorKind::InvariantViolation, "prototype dim mismatch");
            for (double x : p.values)
                if (!std::isfinite(x))
                    throw Error(ErrorKind::InvariantViolation, "prototype has non-finite entry");
            if (std::abs(norm2(p.values) - 1.0) > kStoredTol)
                throw Error(ErrorKind::InvariantViolation, "prototype not unit-norm within 1e-9");
        }
    }
}

std::vector<UnitEmbedding> init_prototypes(const std::vector<UnitEmbedding>& points, int k,
                                           std::uint64_t seed) {
    if (points.empty()) throw Error(ErrorKind::EmptyInput, "init_prototypes: no points");
    if (k < 1) throw Error(ErrorKind::PreconditionNotMet, "init_prototypes: k must be >= 1");
    const std::size_t n = points.size();
    const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(k), n);

    Rng rng(seed);
    std::vector<UnitEmbedding> centers;
    centers.reserve(count);
    std::vector<double> min_dist(n, 2.0);

    const std::size_t first = rng.uniform_index(n);
    centers.push_back(points[first]);
    while (centers.size() < count) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = 1.0 - cosine(points[i], centers.back());
            min_dist[i] = std::min(min_dist[i], d);
            total += min_dist[i];
        }
        std::size_t pick;
        if (total < 1e-12) {
            pick = rng.uniform_index(n); // all remaining mass is zero (duplicates)
        } else {
            const double r = rng.uniform() * total;
            double accum = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                accum += min_dist[i];
                if (accum > r) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(points[pick]);
    }
    return centers;
}

ClusterAssignment assign(const std::vector<UnitEmbedding>& points,
                         const std::vector<UnitEmbedding>& prototypes) {
    if (prototypes.empty()) throw Error(ErrorKind::EmptyInput, "assign: no prototypes");
    ClusterAssignment out;
    out.assignment.resize(points.size());
    out.objective = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        int best = 0;
        double best_sim = cosine(points[i], prototypes[0]);
        for (std::size_t j = 1; j < prototypes.size(); ++j) {
            const double s = cosine(points[i], prototypes[j]);
            if (s > best_sim) {
                best_sim = s;
                best = static_cast<int>(j);
            }
        }
        out.assignment[i] = best;
        out.objective += 1.0 - best_sim;
    }
    return out;
}

std::vector<UnitEmbedding> update_centroids(const std::vector<UnitEmbedding>& points,
                                            const ClusterAssignment& assignment, int k) {
    return centroids_impl(points, assignment, k, /*throw_on_degenerate=*/true);
}

FitResult fit(const std::vector<UnitEmbedding>& points, int k, std::uint64_t seed,
              int max_iters, double tol) {
    if (max_iters < 1) throw Error(ErrorKind::PreconditionNotMet, "fit: max_iters must be >= 1");
    if (tol < 0.0) throw Error(ErrorKind::PreconditionNotMet, "fit: tol must be >= 0");
    if (points.empty()) throw Error(ErrorKind::EmptyInput, "fit: no points");

    // run on a canonical (lexicographic) point order so the result does not
    // depend on how the caller arranged the inputs
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return points[a].values < points[b].values; });
    std::vector<UnitEmbedding> canon;
    canon.reserve(points.size());
    for (std::size_t i : order) canon.push_back(points[i]);

    FitResult res;
    res.prototypes = init_prototypes(canon, k, seed);
    const int k_eff = static_cast<int>(res.prototypes.size());
    res.assignment = assign(canon, res.prototypes);
    res.objective_trace.push_back(res.assignment.objective);

    double prev = res.assignment.objective;
    for (int iter = 0; iter < max_iters; ++iter) {
        auto protos = centroids_impl(canon, res.assignment, k_eff, /*throw_on_degenerate=*/false);
        auto next = assign(canon, protos);
        if (next.objective > prev + 1e-9)
            throw Error(ErrorKind::InvariantViolation,
                        "k-means objective increased: " + std::to_string(prev) + " -> " +
                            std::to_string(next.objective));
        res.prototypes = std::move(protos);
        res.assignment = std::move(next);
        res.objective_trace.push_back(res.assignment.objective);
        const double improvement = prev - res.assignment.objective;
        prev = res.assignment.objective;
        if (improvement < tol) break;
    }

    // map the assignment back to the caller's order
    std::vector<int> mapped(points.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        mapped[order[pos]] = res.assignment.assignment[pos];
    res.assignment.assignment = std::move(mapped);
    return res;
}

FitResult fit_best_of(const std::vector<UnitEmbedding>& points, int k, std::uint64_t seed,
                      int restarts, int max_iters, double tol) {
    if (restarts < 1) throw Error(ErrorKind::PreconditionNotMet, "fit_best_of: restarts must be >= 1");
    FitResult best;
    bool have = false;
    for (int r = 0; r < restarts; ++r) {
        FitResult run = fit(points, k, seed + static_cast<std::uint64_t>(r), max_iters, tol);
        if (!have || run.assignment.objective < best.assignment.objective) {
            best = std::move(run);
            have = true;
        }
    }
    return best;
}

PrototypeBank build_bank(const LabeledEmbeddingSet& data, int k, double kappa, double tau_sim,
                         std::uint64_t seed, int restarts, int max_iters, double tol) {
    if (!data.has_labels)
        throw Error(ErrorKind::PreconditionNotMet, "build_bank: dataset has no labels");
    if (k < 1) throw Error(ErrorKind::PreconditionNotMet, "build_bank: k must be >= 1");
    if (!(kappa > 0.0)) throw Error(ErrorKind::PreconditionNotMet, "build_bank: kappa must be > 0");
    if (!(tau_sim > 0.0))
        throw Error(ErrorKind::PreconditionNotMet, "build_bank: tau_sim must be > 0");

    std::vector<std::vector<UnitEmbedding>> by_class(data.num_classes);
    for (const auto& r : data.records) by_class[r.label].push_back(r.embedding);

    PrototypeBank bank;
    bank.num_classes = data.num_classes;
    bank.dim = data.dim;
    bank.kappa = kappa;
    bank.tau_sim = tau_sim;
    bank.seed = seed;
    bank.prototypes.resize(data.num_classes);
    for (int c = 0; c < data.num_classes; ++c) {
        if (by_class[c].empty())
            throw Error(ErrorKind::MissingClass,
                        "class " + std::to_string(c + 1) + " has no samples");
        auto res = fit_best_of(by_class[c], k, seed + static_cast<std::uint64_t>(c), restarts,
                               max_iters, tol);
        bank.prototypes[c] = std::move(res.prototypes);
    }
    return bank;
}

} // namespace protogate
