#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "protogate/objectives.hpp"

using namespace protogate;

namespace {

ContrastiveBatch batch_of(const std::vector<std::vector<double>>& raw, std::vector<int> labels,
                          double tau = 0.07) {
    ContrastiveBatch batch;
    for (const auto& v : raw) batch.views.push_back(normalize(v));
    batch.labels = std::move(labels);
    batch.tau = tau;
    return batch;
}

double rel_err(const std::vector<std::vector<double>>& a,
               const std::vector<std::vector<double>>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t d = 0; d < a[i].size(); ++d) {
            const double err = std::abs(a[i][d] - b[i][d]) / std::max(1.0, std::abs(b[i][d]));
            worst = std::max(worst, err);
        }
    return worst;
}

} // namespace

TEST_CASE("cross_entropy examples") {
    CHECK(cross_entropy(Posterior{{1.0, 0.0}}, 0) == 0.0);
    CHECK(cross_entropy(Posterior{{0.5, 0.5}}, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(cross_entropy(Posterior{std::vector<double>(7, 1.0 / 7)}, 3) ==
          doctest::Approx(std::log(7.0)).epsilon(1e-12));
    CHECK(std::isinf(cross_entropy(Posterior{{1.0, 0.0}}, 1)));
}

TEST_CASE("cross_entropy is strictly decreasing in p(y)") {
    double prev = cross_entropy(Posterior{{0.01, 0.99}}, 0);
    for (double p = 0.05; p < 1.0; p += 0.05) {
        const double cur = cross_entropy(Posterior{{p, 1.0 - p}}, 0);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("supcon_loss worked examples") {
    // four identical views of one class: every log-ratio is ln(1/3)
    auto same = batch_of({{1., 0.}, {1., 0.}, {1., 0.}, {1., 0.}}, {0, 0, 0, 0}, 0.5);
    CHECK(supcon_loss(same) == doctest::Approx(4.0 * std::log(3.0)).epsilon(1e-12));

    // all-singleton classes: every anchor skipped
    auto singletons = batch_of({{1., 0.}, {0., 1.}, {-1., 0.}, {0., -1.}}, {0, 1, 2, 3});
    CHECK(supcon_loss(singletons) == 0.0);

    // two classes on orthogonal axes at the paper temperature
    auto two = batch_of({{1., 0.}, {1., 0.}, {0., 1.}, {0., 1.}}, {0, 0, 1, 1}, 0.07);
    CHECK(supcon_loss(two) == doctest::Approx(oracles::supcon_loss_raw(two)).epsilon(1e-12));
    CHECK(supcon_loss(two) >= 0.0);
}

TEST_CASE("supcon_loss matches the scalar oracle on random batches") {
    Rng rng(19);
    for (int t = 0; t < 50; ++t) {
        const int b = 1 + static_cast<int>(rng.uniform_index(4));
        const int dim = 2 + static_cast<int>(rng.uniform_index(7));
        ContrastiveBatch batch;
        batch.tau = 0.07 + 0.5 * rng.uniform();
        for (int i = 0; i < b; ++i) {
            const int label = static_cast<int>(rng.uniform_index(3));
            batch.views.push_back(oracles::random_unit(rng, dim));
            batch.views.push_back(oracles::random_unit(rng, dim));
            batch.labels.push_back(label);
            batch.labels.push_back(label);
        }
        CHECK(supcon_loss(batch) ==
              doctest::Approx(oracles::supcon_loss_raw(batch)).epsilon(1e-10));
        CHECK(supcon_loss(batch) >= 0.0);
    }
}

TEST_CASE("supcon_loss is invariant under a global rotation") {
    Rng rng(29);
    const int dim = 4;
    ContrastiveBatch batch;
    batch.tau = 0.2;
    for (int i = 0; i < 3; ++i) {
        const int label = i % 2;
        batch.views.push_back(oracles::random_unit(rng, dim));
        batch.views.push_back(oracles::random_unit(rng, dim));
        batch.labels.push_back(label);
        batch.labels.push_back(label);
    }
    // random orthogonal matrix by Gram-Schmidt on gaussian columns
    std::vector<std::vector<double>> q(dim, std::vector<double>(dim));
    for (int col = 0; col < dim; ++col) {
        std::vector<double> v(dim);
        for (auto& x : v) x = rng.normal();
        for (int prev = 0; prev < col; ++prev) {
            double proj = 0.0;
            for (int r = 0; r < dim; ++r) proj += v[r] * q[r][prev];
            for (int r = 0; r < dim; ++r) v[r] -= proj * q[r][prev];
        }
        const double n = norm2(v);
        for (int r = 0; r < dim; ++r) q[r][col] = v[r] / n;
    }
    ContrastiveBatch rotated = batch;
    for (auto& view : rotated.views) {
        std::vector<double> out(dim, 0.0);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) out[r] += q[r][c] * view.values[c];
        view = normalize(out);
    }
    CHECK(supcon_loss(rotated) == doctest::Approx(supcon_loss(batch)).epsilon(1e-10));
}

TEST_CASE("supcon_grad vanishes on an all-identical batch") {
    auto same = batch_of({{1., 0.}, {1., 0.}, {1., 0.}, {1., 0.}}, {0, 0, 0, 0}, 0.5);
    const auto grad = supcon_grad(same);
    std::vector<double> total(2, 0.0);
    for (const auto& g : grad)
        for (int d = 0; d < 2; ++d) {
            CHECK(std::abs(g[d]) < 1e-12);
            total[d] += g[d];
        }
    CHECK(std::abs(total[0]) < 1e-12);
    CHECK(std::abs(total[1]) < 1e-12);

    const auto fd = oracles::supcon_fd_grad(same, 1e-5);
    CHECK(rel_err(grad, fd) < 1e-5);
}

TEST_CASE("supcon_grad matches central finite differences") {
    Rng rng(31);
    for (int t = 0; t < 20; ++t) {
        const int b = 1 + static_cast<int>(rng.uniform_index(4));
        const int dim = 2 + static_cast<int>(rng.uniform_index(7));
        ContrastiveBatch batch;
        batch.tau = 0.07;
        for (int i = 0; i < b; ++i) {
            const int label = static_cast<int>(rng.uniform_index(3));
            batch.views.push_back(oracles::random_unit(rng, dim));
            batch.views.push_back(oracles::random_unit(rng, dim));
            batch.labels.push_back(label);
            batch.labels.push_back(label);
        }
        const auto analytic = supcon_grad(batch);
        const auto fd = oracles::supcon_fd_grad(batch, 1e-5);
        CHECK(rel_err(analytic, fd) < 1e-5);
    }
}

TEST_CASE("rescaling tau against doubled dot products preserves the loss") {
    Rng rng(37);
    ContrastiveBatch batch;
    batch.tau = 0.3;
    for (int i = 0; i < 2; ++i) {
        batch.views.push_back(oracles::random_unit(rng, 3));
        batch.views.push_back(oracles::random_unit(rng, 3));
        batch.labels.push_back(i);
        batch.labels.push_back(i);
    }
    ContrastiveBatch scaled = batch;
    scaled.tau = 0.6;
    for (auto& v : scaled.views)
        for (auto& x : v.values) x *= std::sqrt(2.0);
    // loss only sees dot/tau, so the two parameterizations agree
    CHECK(oracles::supcon_loss_raw(scaled) ==
          doctest::Approx(oracles::supcon_loss_raw(batch)).epsilon(1e-12));
    // and gradients satisfy grad_scaled = grad / sqrt(2)
    const auto base_fd = oracles::supcon_fd_grad(batch, 1e-6);
    const auto scaled_fd = oracles::supcon_fd_grad(scaled, 1e-6);
    for (std::size_t i = 0; i < base_fd.size(); ++i)
        for (std::size_t d = 0; d < base_fd[i].size(); ++d) {
            const double expected = base_fd[i][d] / std::sqrt(2.0);
            CHECK(std::abs(scaled_fd[i][d] - expected) <
                  1e-4 * std::max(1.0, std::abs(expected)));
        }
}

TEST_CASE("loss decreases as same-class similarity tightens") {
    // pulling the two views of a class together lowers the loss
    auto loose = batch_of({{1., 0.}, {0.6, 0.8}, {-1., 0.1}, {-1., -0.1}}, {0, 0, 1, 1}, 0.3);
    auto tight = batch_of({{1., 0.}, {0.99, 0.14}, {-1., 0.1}, {-1., -0.1}}, {0, 0, 1, 1}, 0.3);
    CHECK(supcon_loss(tight) < supcon_loss(loose));
}

TEST_CASE("total_loss composition") {
    CHECK(total_loss({1.0, 3.0}, 100.0, 0.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(total_loss({1.0}, 4.0, 0.03) == doctest::Approx(1.12).epsilon(1e-12));
    CHECK(total_loss({0.0}, 0.0, 0.03) == 0.0);
    CHECK_THROWS_AS(total_loss({}, 1.0, 0.5), Error);
}
