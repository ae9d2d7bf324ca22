#include "protogate/retrieval.hpp"

#include <algorithm>
#include <cmath>

namespace protogate {

void EmaState::validate() const {
    if (!(momentum >= 0.0 && momentum <= 1.0))
        throw Error(ErrorKind::PreconditionNotMet, "momentum must be in [0,1]");
    for (double x : teacher)
        if (!std::isfinite(x))
            throw Error(ErrorKind::PreconditionNotMet, "teacher parameters must be finite");
}

EmaState ema_update(const EmaState& state, const std::vector<double>& student) {
    state.validate();
    if (student.size() != state.teacher.size())
        throw Error(ErrorKind::DimMismatch,
                    "ema_update: teacher size " + std::to_string(state.teacher.size()) +
                        " vs student size " + std::to_string(student.size()));
    EmaState next;
    next.momentum = state.momentum;
    next.teacher.resize(state.teacher.size());
    for (std::size_t i = 0; i < student.size(); ++i)
        next.teacher[i] = state.momentum * state.teacher[i] + (1.0 - state.momentum) * student[i];
    return next;
}

SimilarityScores vmf_class_scores(const UnitEmbedding& z, const PrototypeBank& bank) {
    if (static_cast<int>(z.dim()) != bank.dim)
        throw Error(ErrorKind::DimMismatch, "embedding dim " + std::to_string(z.dim()) +
                                                " vs bank dim " + std::to_string(bank.dim));
    SimilarityScores out;
    out.per_prototype.resize(bank.num_classes);
    out.per_class.resize(bank.num_classes);
    for (int c = 0; c < bank.num_classes; ++c) {
        const auto& protos = bank.prototypes[c];
        auto& sims = out.per_prototype[c];
        sims.resize(protos.size());
        for (std::size_t k = 0; k < protos.size(); ++k)
            sims[k] = std::clamp(dot(z.values, protos[k].values), -1.0, 1.0);
        const double s_max = *std::max_element(sims.begin(), sims.end());
        double sum = 0.0;
        for (double s : sims) sum += std::exp(bank.kappa * (s - s_max));
        out.per_class[c] = bank.kappa * s_max + std::log(sum);
    }
    return out;
}

Posterior similarity_posterior(const SimilarityScores& scores, double tau_sim) {
    if (!(tau_sim > 0.0))
        throw Error(ErrorKind::PreconditionNotMet, "similarity_posterior: tau_sim must be > 0");
    return softmax(scores.per_class, tau_sim);
}

Posterior retrieve(const UnitEmbedding& z, const PrototypeBank& bank) {
    return similarity_posterior(vmf_class_scores(z, bank), bank.tau_sim);
}

} // namespace protogate
