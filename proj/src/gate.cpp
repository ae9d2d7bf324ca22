#include "protogate/gate.hpp"

#include <algorithm>
#include <cmath>

#include "protogate/parallel.hpp"
#include "protogate/retrieval.hpp"

namespace protogate {

void GateConfig::validate() const {
    // theta_gate = 0 is legal and turns the gate off entirely
    if (!(theta_gate >= 0.0 && theta_gate <= 1.0))
        throw Error(ErrorKind::ConfigError, "theta_gate must be in [0,1]");
    if (!(beta >= 0.0 && beta < 1.0))
        throw Error(ErrorKind::ConfigError, "beta must be in [0,1)");
    if (!(m_sim >= 0.0 && m_sim < 1.0))
        throw Error(ErrorKind::ConfigError, "m_sim must be in [0,1)");
    if (!(delta >= 0.0)) throw Error(ErrorKind::ConfigError, "delta must be >= 0");
    if (!(alpha_low >= 0.0 && alpha_low <= 1.0))
        throw Error(ErrorKind::ConfigError, "alpha_low must be in [0,1]");
    if (entropy_max && !(*entropy_max >= 0.0))
        throw Error(ErrorKind::ConfigError, "entropy_max must be >= 0");
}

double top1_confidence(const Posterior& p) {
    if (p.probs.empty()) throw Error(ErrorKind::EmptyInput, "top1_confidence: empty posterior");
    return *std::max_element(p.probs.begin(), p.probs.end());
}

double entropy(const Posterior& p) {
    if (p.probs.empty()) throw Error(ErrorKind::EmptyInput, "entropy: empty posterior");
    double h = 0.0;
    for (double q : p.probs)
        if (q > 0.0) h -= q * std::log(q);
    return h;
}

double sim_margin(const Posterior& p) {
    if (p.probs.size() < 2)
        throw Error(ErrorKind::TooFewClasses, "sim_margin needs at least 2 classes");
    double top1 = -1.0;
    double top2 = -1.0;
    for (double q : p.probs) {
        if (q > top1) {
            top2 = top1;
            top1 = q;
        } else if (q > top2) {
            top2 = q;
        }
    }
    return top1 - top2;
}

double js_divergence(const Posterior& p, const Posterior& q) {
    if (p.probs.size() != q.probs.size())
        throw Error(ErrorKind::DimMismatch, "js_divergence: class counts differ");
    // the two KL halves are accumulated separately and combined once, so
    // swapping the arguments yields the bitwise-identical value
    double kl_p = 0.0;
    double kl_q = 0.0;
    for (std::size_t c = 0; c < p.probs.size(); ++c) {
        const double m = 0.5 * (p.probs[c] + q.probs[c]);
        if (p.probs[c] > 0.0) kl_p += p.probs[c] * std::log(p.probs[c] / m);
        if (q.probs[c] > 0.0) kl_q += q.probs[c] * std::log(q.probs[c] / m);
    }
    return std::max(0.0, 0.5 * kl_p + 0.5 * kl_q);
}

GateSignals evaluate_gate(const Posterior& p_cls, const Posterior& p_sim, const GateConfig& cfg) {
    if (p_cls.probs.size() != p_sim.probs.size())
        throw Error(ErrorKind::DimMismatch, "evaluate_gate: class counts differ");
    cfg.validate();
    GateSignals s;
    s.gamma_cls = top1_confidence(p_cls);
    s.h_cls = entropy(p_cls);
    s.gamma_sim = top1_confidence(p_sim);
    s.delta_sim = sim_margin(p_sim);
    s.d_js = js_divergence(p_cls, p_sim);
    s.y_cls = argmax_class(p_cls);
    s.y_sim = argmax_class(p_sim);
    s.gate = s.gamma_cls < cfg.theta_gate && s.gamma_sim > cfg.beta && s.delta_sim > cfg.m_sim &&
             s.d_js > cfg.delta && s.y_cls != s.y_sim;
    if (cfg.entropy_max) s.gate = s.gate && s.h_cls > *cfg.entropy_max;
    return s;
}

Posterior fuse(const Posterior& p_cls, const Posterior& p_sim, double alpha_low) {
    if (p_cls.probs.size() != p_sim.probs.size())
        throw Error(ErrorKind::DimMismatch, "fuse: class counts differ");
    if (!(alpha_low >= 0.0 && alpha_low <= 1.0))
        throw Error(ErrorKind::PreconditionNotMet, "fuse: alpha_low must be in [0,1]");
    Posterior out;
    out.probs.resize(p_cls.probs.size());
    for (std::size_t c = 0; c < p_cls.probs.size(); ++c)
        out.probs[c] = alpha_low * p_cls.probs[c] + (1.0 - alpha_low) * p_sim.probs[c];
    return out;
}

PredictionRecord final_posterior(const Posterior& p_cls, const Posterior& p_sim,
                                 const GateConfig& cfg) {
    PredictionRecord rec;
    rec.p_cls = p_cls;
    rec.p_sim = p_sim;
    rec.signals = evaluate_gate(p_cls, p_sim, cfg);
    if (rec.signals.gate) {
        rec.p_final = fuse(p_cls, p_sim, cfg.alpha_low);
        rec.source = PredictionSource::fused;
    } else {
        rec.p_final = p_cls; // bitwise copy, never recomputed through the convex formula
        rec.source = PredictionSource::classifier;
    }
    rec.y_hat = argmax_class(rec.p_final);
    return rec;
}

std::vector<PosteriorPair> compute_posteriors(const LabeledEmbeddingSet& data,
                                              const PrototypeBank& bank, int threads) {
    if (data.num_classes != bank.num_classes)
        throw Error(ErrorKind::DimMismatch, "dataset and bank class counts differ");
    if (data.dim != bank.dim)
        throw Error(ErrorKind::DimMismatch, "dataset and bank dims differ");
    std::vector<PosteriorPair> out(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
        const auto& rec = data.records[i];
        try {
            out[i].p_cls = softmax(rec.logits, 1.0);
            out[i].p_sim = retrieve(rec.embedding, bank);
        } catch (const Error& e) {
            throw Error(e.kind(), "record '" + rec.id + "': " + e.what());
        }
    });
    return out;
}

std::vector<PredictionRecord> predict_from_posteriors(const LabeledEmbeddingSet& data,
                                                      const std::vector<PosteriorPair>& posteriors,
                                                      const GateConfig& cfg, int threads) {
    if (posteriors.size() != data.size())
        throw Error(ErrorKind::LengthMismatch, "posterior count does not match dataset");
    cfg.validate();
    std::vector<PredictionRecord> out(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
        try {
            out[i] = final_posterior(posteriors[i].p_cls, posteriors[i].p_sim, cfg);
            out[i].id = data.records[i].id;
        } catch (const Error& e) {
            throw Error(e.kind(), "record '" + data.records[i].id + "': " + e.what());
        }
    });
    return out;
}

std::vector<PredictionRecord> predict_batch(const LabeledEmbeddingSet& data,
                                            const PrototypeBank& bank, const GateConfig& cfg,
                                            int threads) {
    return predict_from_posteriors(data, compute_posteriors(data, bank, threads), cfg, threads);
}

} // namespace protogate
