#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "protogate/retrieval.hpp"

using namespace protogate;

namespace {

PrototypeBank make_bank(const std::vector<std::vector<std::vector<double>>>& raw, double kappa,
                        double tau) {
    PrototypeBank bank;
    bank.num_classes = static_cast<int>(raw.size());
    bank.dim = static_cast<int>(raw[0][0].size());
    bank.kappa = kappa;
    bank.tau_sim = tau;
    for (const auto& cls : raw) {
        std::vector<UnitEmbedding> protos;
        for (const auto& p : cls) protos.push_back(normalize(p));
        bank.prototypes.push_back(std::move(protos));
    }
    return bank;
}

} // namespace

TEST_CASE("ema_update endpoints and the paper momentum") {
    EmaState frozen{{1.0, -2.0}, 1.0};
    const auto same = ema_update(frozen, {5.0, 5.0});
    CHECK(same.teacher == frozen.teacher);

    EmaState copy{{1.0, -2.0}, 0.0};
    const auto student = ema_update(copy, {5.0, 5.0});
    CHECK(student.teacher == std::vector<double>{5.0, 5.0});

    EmaState slow{{0.0}, 0.999};
    const auto step = ema_update(slow, {1.0});
    CHECK(step.teacher[0] == doctest::Approx(0.001).epsilon(1e-12));

    CHECK_THROWS_AS(ema_update(slow, {1.0, 2.0}), Error);
}

TEST_CASE("ema_update converges geometrically to a fixed student") {
    EmaState state{{3.0, -1.0, 0.5}, 0.9};
    const std::vector<double> student{1.0, 1.0, 1.0};
    std::vector<double> initial_gap(3);
    for (int i = 0; i < 3; ++i) initial_gap[i] = state.teacher[i] - student[i];
    for (int n = 1; n <= 40; ++n) {
        state = ema_update(state, student);
        for (int i = 0; i < 3; ++i) {
            const double expected = std::pow(0.9, n) * initial_gap[i];
            CHECK(state.teacher[i] - student[i] == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("vmf_class_scores examples") {
    auto bank = make_bank({{{1.0, 0.0}}}, 10.0, 0.1);
    const auto single = vmf_class_scores(normalize({1.0, 0.0}), bank);
    CHECK(single.per_class[0] == doctest::Approx(10.0).epsilon(1e-12));

    // s = (0.8, 0.6), kappa = 10 -> q = 8 + ln(1 + e^-2)
    auto two = make_bank({{{0.8, 0.6}, {0.6, 0.8}}}, 10.0, 0.1);
    // pick z so the cosines are exactly 0.8 and 0.6: z = e1 against those protos
    const auto scores = vmf_class_scores(normalize({1.0, 0.0}), two);
    CHECK(scores.per_prototype[0][0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(scores.per_prototype[0][1] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(scores.per_class[0] ==
          doctest::Approx(8.0 + std::log(1.0 + std::exp(-2.0))).epsilon(1e-12));

    auto sharp = make_bank({{{0.9, std::sqrt(1.0 - 0.81)}, {0.1, std::sqrt(1.0 - 0.01)}}}, 1000.0,
                           0.1);
    const auto big = vmf_class_scores(normalize({1.0, 0.0}), sharp);
    CHECK(std::isfinite(big.per_class[0]));
    CHECK(big.per_class[0] == doctest::Approx(900.0).epsilon(1e-9));
}

TEST_CASE("similarity_posterior examples") {
    SimilarityScores sym{{}, {10.0, 10.0}};
    const auto p = similarity_posterior(sym, 0.37);
    CHECK(p.probs[0] == doctest::Approx(0.5).epsilon(1e-15));

    SimilarityScores two{{}, {2.0, 0.0}};
    const auto q = similarity_posterior(two, 1.0);
    CHECK(std::abs(q.probs[0] - 0.8808) < 5e-5);
    CHECK(std::abs(q.probs[1] - 0.1192) < 5e-5);

    const auto sharpened = similarity_posterior(two, 0.01);
    CHECK(sharpened.probs[0] > 1.0 - 1e-12);
}

TEST_CASE("retrieve on orthogonal one-prototype banks") {
    auto bank = make_bank({{{1.0, 0.0, 0.0}}, {{0.0, 1.0, 0.0}}, {{0.0, 0.0, 1.0}}}, 20.0, 0.1);
    const auto p = retrieve(normalize({1.0, 0.0, 0.0}), bank);
    CHECK(argmax_class(p) == 0);
    CHECK(p.probs[0] > p.probs[1]);
    CHECK(p.probs[0] > p.probs[2]);
    CHECK(p.probs[1] == doctest::Approx(p.probs[2]).epsilon(1e-12));

    // equidistant probe: uniform posterior
    const auto u = retrieve(normalize({1.0, 1.0, 1.0}), bank);
    for (double x : u.probs) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("retrieve matches the scalar oracle on random banks") {
    Rng rng(31);
    for (int t = 0; t < 200; ++t) {
        const int dim = 2 + static_cast<int>(rng.uniform_index(6));
        const int c = 2 + static_cast<int>(rng.uniform_index(4));
        PrototypeBank bank;
        bank.num_classes = c;
        bank.dim = dim;
        bank.kappa = 0.5 + 30.0 * rng.uniform();
        bank.tau_sim = 0.05 + rng.uniform();
        bank.prototypes.resize(c);
        for (int i = 0; i < c; ++i) {
            const int kc = 1 + static_cast<int>(rng.uniform_index(3));
            for (int k = 0; k < kc; ++k)
                bank.prototypes[i].push_back(oracles::random_unit(rng, dim));
        }
        const auto z = oracles::random_unit(rng, dim);
        const auto p = retrieve(z, bank);
        const auto q = oracles::scalar_vmf_scores(z, bank.prototypes, bank.kappa);
        const auto expected = oracles::scalar_softmax(q, bank.tau_sim);
        for (int i = 0; i < c; ++i)
            CHECK(p.probs[i] == doctest::Approx(expected[i]).epsilon(1e-10));
    }
}

TEST_CASE("score sandwich and invariances") {
    Rng rng(37);
    for (int t = 0; t < 500; ++t) {
        const int dim = 2 + static_cast<int>(rng.uniform_index(6));
        const int c = 2 + static_cast<int>(rng.uniform_index(4));
        PrototypeBank bank;
        bank.num_classes = c;
        bank.dim = dim;
        bank.kappa = 0.5 + 100.0 * rng.uniform();
        bank.tau_sim = 0.05 + rng.uniform();
        bank.prototypes.resize(c);
        for (int i = 0; i < c; ++i) {
            const int kc = 1 + static_cast<int>(rng.uniform_index(4));
            for (int k = 0; k < kc; ++k)
                bank.prototypes[i].push_back(oracles::random_unit(rng, dim));
        }
        const auto z = oracles::random_unit(rng, dim);
        const auto scores = vmf_class_scores(z, bank);
        for (int i = 0; i < c; ++i) {
            double smax = -2.0;
            for (double s : scores.per_prototype[i]) smax = std::max(smax, s);
            const double kc = static_cast<double>(bank.prototypes[i].size());
            CHECK(scores.per_class[i] >= bank.kappa * smax - 1e-9);
            CHECK(scores.per_class[i] <= bank.kappa * smax + std::log(kc) + 1e-9);
        }

        // shift invariance of the posterior
        const auto base = similarity_posterior(scores, bank.tau_sim);
        SimilarityScores shifted = scores;
        for (auto& qv : shifted.per_class) qv += 3.75;
        const auto moved = similarity_posterior(shifted, bank.tau_sim);
        for (int i = 0; i < c; ++i)
            CHECK(moved.probs[i] == doctest::Approx(base.probs[i]).epsilon(1e-12));

        // permuting prototypes within a class leaves the posterior alone
        PrototypeBank permuted = bank;
        for (auto& cls : permuted.prototypes) std::reverse(cls.begin(), cls.end());
        const auto swapped = retrieve(z, permuted);
        const auto original = retrieve(z, bank);
        for (int i = 0; i < c; ++i)
            CHECK(swapped.probs[i] == doctest::Approx(original.probs[i]).epsilon(1e-12));
    }
}

TEST_CASE("single-prototype banks reduce retrieve to a plain softmax exactly") {
    Rng rng(41);
    for (int t = 0; t < 100; ++t) {
        const int dim = 2 + static_cast<int>(rng.uniform_index(6));
        const int c = 2 + static_cast<int>(rng.uniform_index(5));
        PrototypeBank bank;
        bank.num_classes = c;
        bank.dim = dim;
        bank.kappa = 0.5 + 50.0 * rng.uniform();
        bank.tau_sim = 0.05 + rng.uniform();
        bank.prototypes.resize(c);
        for (int i = 0; i < c; ++i) bank.prototypes[i].push_back(oracles::random_unit(rng, dim));
        const auto z = oracles::random_unit(rng, dim);

        const auto p = retrieve(z, bank);
        std::vector<double> logits(c);
        for (int i = 0; i < c; ++i) {
            double s = dot(z.values, bank.prototypes[i][0].values);
            s = std::clamp(s, -1.0, 1.0);
            logits[i] = bank.kappa * s;
        }
        const auto direct = softmax(logits, bank.tau_sim);
        for (int i = 0; i < c; ++i) CHECK(p.probs[i] == direct.probs[i]); // exact
    }
}
