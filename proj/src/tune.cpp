#include <cmath>
#include <tuple>

#include "protogate/io.hpp"
#include "protogate/parallel.hpp"
#include "protogate/retrieval.hpp"

namespace protogate {

namespace {

double objective_value(Objective objective, double acc, double balacc, double mf1) {
    switch (objective) {
        case Objective::balacc: return balacc;
        case Objective::accuracy: return acc;
        case Objective::macro_f1: return mf1;
    }
    return balacc;
}

} // namespace

TuneResult tune(const LabeledEmbeddingSet& val, const PrototypeBank& bank, const TuneGrid& grid,
                const GateConfig& base, int threads) {
    grid.validate();
    base.validate();
    if (!val.has_labels) throw Error(ErrorKind::PreconditionNotMet, "tune: validation set has no labels");
    if (val.records.empty()) throw Error(ErrorKind::EmptyInput, "tune: validation set is empty");
    const auto labels = val.labels();

    // class scores depend only on the prototypes and kappa, so they are
    // computed once and re-softmaxed per tau_sim; this matches predict_batch
    // bit for bit because the same functions run underneath
    std::vector<SimilarityScores> scores(val.size());
    std::vector<Posterior> p_cls(val.size());
    parallel_for(val.size(), threads, [&](std::size_t i) {
        scores[i] = vmf_class_scores(val.records[i].embedding, bank);
        p_cls[i] = softmax(val.records[i].logits, 1.0);
    });

    TuneResult result;
    bool have_best = false;
    std::tuple<double, double, double, double, double> best_key;

    for (const double tau : grid.tau_sim) {
        std::vector<PosteriorPair> posteriors(val.size());
        parallel_for(val.size(), threads, [&](std::size_t i) {
            posteriors[i].p_cls = p_cls[i];
            posteriors[i].p_sim = similarity_posterior(scores[i], tau);
        });
        for (const double theta : grid.theta_gate)
            for (const double beta : grid.beta)
                for (const double m : grid.m_sim)
                    for (const double delta : grid.delta) {
                        GateConfig cfg = base;
                        cfg.theta_gate = theta;
                        cfg.beta = beta;
                        cfg.m_sim = m;
                        cfg.delta = delta;
                        TuneRow row;
                        row.theta_gate = theta;
                        row.beta = beta;
                        row.m_sim = m;
                        row.delta = delta;
                        row.tau_sim = tau;
                        try {
                            const auto records =
                                predict_from_posteriors(val, posteriors, cfg, threads);
                            std::vector<int> preds;
                            preds.reserve(records.size());
                            std::size_t gated = 0;
                            for (const auto& r : records) {
                                preds.push_back(r.y_hat);
                                if (r.signals.gate) ++gated;
                            }
                            row.gate_rate = static_cast<double>(gated) /
                                            static_cast<double>(records.size());
                            row.acc = accuracy(preds, labels);
                            row.balacc = balanced_accuracy(preds, labels, val.num_classes);
                            row.mf1 = macro_f1(preds, labels, val.num_classes);
                        } catch (const Error& e) {
                            throw Error(e.kind(),
                                        "grid point (theta_gate=" + format_double(theta) +
                                            ", beta=" + format_double(beta) +
                                            ", m_sim=" + format_double(m) +
                                            ", delta=" + format_double(delta) +
                                            ", tau_sim=" + format_double(tau) + "): " + e.what());
                        }
                        row.objective = objective_value(grid.objective, row.acc, row.balacc, row.mf1);

                        const auto key = std::make_tuple(theta, beta, m, delta, tau);
                        const bool better =
                            !have_best || row.objective > result.best_objective ||
                            (row.objective == result.best_objective &&
                             (row.gate_rate < result.best_gate_rate ||
                              (row.gate_rate == result.best_gate_rate && key < best_key)));
                        if (better) {
                            have_best = true;
                            result.best = cfg;
                            result.best_tau_sim = tau;
                            result.best_objective = row.objective;
                            result.best_gate_rate = row.gate_rate;
                            best_key = key;
                        }
                        result.table.push_back(row);
                    }
    }
    return result;
}

} // namespace protogate
