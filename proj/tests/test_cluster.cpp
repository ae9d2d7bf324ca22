#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "protogate/cluster.hpp"

using namespace protogate;

namespace {

std::vector<UnitEmbedding> units(const std::vector<std::vector<double>>& raw) {
    std::vector<UnitEmbedding> out;
    for (const auto& v : raw) out.push_back(normalize(v));
    return out;
}

} // namespace

TEST_CASE("init_prototypes caps at the point count and is deterministic") {
    const auto single = units({{1.0, 0.0}});
    const auto got = init_prototypes(single, 3, 42);
    REQUIRE(got.size() == 1);
    CHECK(got[0].values == single[0].values);

    const auto two = units({{1.0, 0.0}, {0.0, 1.0}});
    for (std::uint64_t seed : {0ull, 1ull, 7ull, 1234ull}) {
        const auto centers = init_prototypes(two, 2, seed);
        REQUIRE(centers.size() == 2);
        // orthogonal pair: whatever starts, the other must follow
        CHECK(centers[0].values != centers[1].values);
    }

    const auto a = init_prototypes(two, 2, 99);
    const auto b = init_prototypes(two, 2, 99);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].values == b[i].values);

    CHECK_THROWS_AS(init_prototypes({}, 2, 0), Error);
}

TEST_CASE("assign picks the closest prototype with lowest-index ties") {
    const auto protos = units({{1.0, 0.0}, {0.0, 1.0}});

    auto exact = assign(units({{1.0, 0.0}}), protos);
    CHECK(exact.assignment == std::vector<int>{0});
    CHECK(exact.objective == doctest::Approx(0.0));

    auto tie = assign(units({{1.0, 1.0}}), protos);
    CHECK(tie.assignment == std::vector<int>{0});
    CHECK(tie.objective == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)).epsilon(1e-12));

    auto anti = assign(units({{-1.0, 0.0}}), units({{1.0, 0.0}}));
    CHECK(anti.assignment == std::vector<int>{0});
    CHECK(anti.objective == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("update_centroids normalizes sums and flags antipodal cancellation") {
    const auto pair = units({{1.0, 0.0}, {0.0, 1.0}});
    auto protos = update_centroids(pair, ClusterAssignment{{0, 0}, 0.0}, 1);
    REQUIRE(protos.size() == 1);
    CHECK(protos[0].values[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(protos[0].values[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));

    const auto singleton = units({{1.0, 0.0}});
    auto one = update_centroids(singleton, ClusterAssignment{{0}, 0.0}, 1);
    CHECK(one[0].values == singleton[0].values);

    const auto antipodal = units({{1.0, 0.0}, {-1.0, 0.0}});
    try {
        update_centroids(antipodal, ClusterAssignment{{0, 0}, 0.0}, 1);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ZeroNorm);
    }
}

TEST_CASE("update_centroids re-seeds an empty cluster with the farthest point") {
    // everything sits in cluster 0; cluster 1 must grab the outlier
    const auto pts = units({{1.0, 0.0}, {0.995, 0.1}, {0.6, 0.8}});
    auto protos = update_centroids(pts, ClusterAssignment{{0, 0, 0}, 0.0}, 2);
    REQUIRE(protos.size() == 2);
    CHECK(protos[1].values == pts[2].values);
    const auto rest = update_centroids(units({{1.0, 0.0}, {0.995, 0.1}}),
                                       ClusterAssignment{{0, 0}, 0.0}, 1);
    for (int d = 0; d < 2; ++d)
        CHECK(protos[0].values[d] == doctest::Approx(rest[0].values[d]).epsilon(1e-12));
}

TEST_CASE("fit on two tight groups reaches the enumerated optimum") {
    Rng rng(5);
    std::vector<UnitEmbedding> points;
    for (int i = 0; i < 3; ++i) {
        points.push_back(normalize({1.0, 0.02 * rng.normal()}));
        points.push_back(normalize({0.02 * rng.normal(), 1.0}));
    }
    const auto res = fit_best_of(points, 2, 0);
    const double opt = oracles::brute_force_kmeans_objective(points, 2);
    CHECK(res.assignment.objective == doctest::Approx(opt).epsilon(1e-9));
}

TEST_CASE("fit degenerate cases") {
    const auto same = units({{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}});
    const auto res = fit(same, 2, 3);
    CHECK(res.assignment.objective == doctest::Approx(0.0));
    CHECK(res.objective_trace.size() <= 3);

    // k = 1 equals the normalized mean of everything
    const auto pts = units({{1.0, 0.1}, {0.9, 0.4}, {0.8, 0.6}});
    const auto one = fit(pts, 1, 0);
    const auto mean = update_centroids(pts, ClusterAssignment{{0, 0, 0}, 0.0}, 1);
    CHECK(one.prototypes[0].values == mean[0].values);
}

TEST_CASE("fit objective is monotone and matches the oracle on random instances") {
    Rng rng(17);
    int oracle_checked = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const int dim = 2 + static_cast<int>(rng.uniform_index(3));
        const int n = 2 + static_cast<int>(rng.uniform_index(7));
        const int k = 1 + static_cast<int>(rng.uniform_index(2));
        std::vector<UnitEmbedding> points;
        for (int i = 0; i < n; ++i) points.push_back(oracles::random_unit(rng, dim));

        const auto res = fit_best_of(points, k, 1000 + inst);
        for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
            CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-9);

        if (inst < 50) {
            const double opt = oracles::brute_force_kmeans_objective(points, std::min(k, n));
            CHECK(res.assignment.objective <= opt + 1e-9);
            CHECK(res.assignment.objective >= opt - 1e-9);
            ++oracle_checked;
        }

        for (const auto& p : res.prototypes)
            CHECK(std::abs(norm2(p.values) - 1.0) <= 1e-9);
    }
    CHECK(oracle_checked == 50);
}

TEST_CASE("fit objective is permutation invariant") {
    Rng rng(23);
    for (int inst = 0; inst < 20; ++inst) {
        std::vector<UnitEmbedding> points;
        const int n = 5 + static_cast<int>(rng.uniform_index(6));
        for (int i = 0; i < n; ++i) points.push_back(oracles::random_unit(rng, 3));
        auto shuffled = points;
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);
        const auto a = fit_best_of(points, 2, 7);
        const auto b = fit_best_of(shuffled, 2, 7);
        // canonical internal ordering makes this exact, not just approximate
        CHECK(a.assignment.objective == b.assignment.objective);
    }
}

TEST_CASE("build_bank respects class sizes and is deterministic") {
    LabeledEmbeddingSet data;
    data.num_classes = 2;
    data.dim = 2;
    data.records.push_back({"a", 0, {0.0, 0.0}, normalize({1.0, 0.05})});
    data.records.push_back({"b", 0, {0.0, 0.0}, normalize({1.0, -0.05})});
    data.records.push_back({"c", 0, {0.0, 0.0}, normalize({1.0, 0.0})});
    data.records.push_back({"d", 0, {0.0, 0.0}, normalize({1.0, 0.02})});
    data.records.push_back({"e", 1, {0.0, 0.0}, normalize({-1.0, 0.01})});

    // class 1 has a single sample: K_1 = 1 and the prototype is that sample
    auto bank = build_bank(data, 3, 20.0, 0.1, 9);
    CHECK(bank.prototypes[1].size() == 1);
    CHECK(bank.prototypes[1][0].values == data.records[4].embedding.values);
    CHECK(bank.prototypes[0].size() == 3);

    auto again = build_bank(data, 3, 20.0, 0.1, 9);
    for (int c = 0; c < 2; ++c) {
        REQUIRE(bank.prototypes[c].size() == again.prototypes[c].size());
        for (std::size_t k = 0; k < bank.prototypes[c].size(); ++k)
            CHECK(bank.prototypes[c][k].values == again.prototypes[c][k].values);
    }

    // two tight antipodal groups, k = 1: prototypes are the normalized means
    LabeledEmbeddingSet anti;
    anti.num_classes = 2;
    anti.dim = 2;
    int id = 0;
    for (double eps : {-0.03, -0.01, 0.01, 0.03}) {
        anti.records.push_back({"p" + std::to_string(id++), 0, {0.0, 0.0}, normalize({1.0, eps})});
        anti.records.push_back({"n" + std::to_string(id++), 1, {0.0, 0.0}, normalize({-1.0, eps})});
    }
    auto bank2 = build_bank(anti, 1, 20.0, 0.1, 0);
    std::vector<UnitEmbedding> g0, g1;
    for (const auto& r : anti.records) (r.label == 0 ? g0 : g1).push_back(r.embedding);
    const auto m0 = update_centroids(g0, ClusterAssignment{{0, 0, 0, 0}, 0.0}, 1);
    const auto m1 = update_centroids(g1, ClusterAssignment{{0, 0, 0, 0}, 0.0}, 1);
    for (int d = 0; d < 2; ++d) {
        CHECK(bank2.prototypes[0][0].values[d] == doctest::Approx(m0[0].values[d]).epsilon(1e-12));
        CHECK(bank2.prototypes[1][0].values[d] == doctest::Approx(m1[0].values[d]).epsilon(1e-12));
    }

    LabeledEmbeddingSet missing = data;
    missing.num_classes = 3;
    for (auto& r : missing.records) r.logits = {0.0, 0.0, 0.0};
    try {
        build_bank(missing, 2, 20.0, 0.1, 0);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingClass);
    }
}
