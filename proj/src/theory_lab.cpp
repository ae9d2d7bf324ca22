#include "protogate/theory_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include "protogate/metrics.hpp"
#include "protogate/retrieval.hpp"

namespace protogate {

namespace {

std::vector<double> random_unit(Rng& rng, int dim) {
    std::vector<double> v(dim);
    for (;;) {
        for (auto& x : v) x = rng.normal();
        const double n = norm2(v);
        if (n >= 1e-12) {
            for (auto& x : v) x /= n;
            return v;
        }
    }
}

} // namespace

void VmfParams::validate() const {
    mean_dir.validate();
    if (!(kappa >= 0.0)) throw Error(ErrorKind::PreconditionNotMet, "vMF kappa must be >= 0");
}

UnitEmbedding sample_vmf_one(Rng& rng, const UnitEmbedding& mean_dir, double kappa) {
    const int dim = static_cast<int>(mean_dir.dim());
    if (kappa == 0.0) return UnitEmbedding{random_unit(rng, dim)};

    // component along the mean direction (Wood's rejection scheme)
    const double dm1 = static_cast<double>(dim - 1);
    const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
    const double x0 = (1.0 - b) / (1.0 + b);
    const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);
    double w = 0.0;
    for (;;) {
        const double z = rng.beta(dm1 / 2.0, dm1 / 2.0);
        const double u = rng.uniform_pos();
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
    }

    // tangent direction, then rotate e1 -> mean_dir by Householder reflection
    std::vector<double> sample(dim, 0.0);
    sample[0] = w;
    const double scale = std::sqrt(std::max(0.0, 1.0 - w * w));
    if (dim >= 2) {
        std::vector<double> tangent(dim - 1);
        for (;;) {
            for (auto& x : tangent) x = rng.normal();
            const double n = norm2(tangent);
            if (n >= 1e-12) {
                for (std::size_t i = 0; i < tangent.size(); ++i)
                    sample[i + 1] = scale * tangent[i] / n;
                break;
            }
        }
    }
    std::vector<double> h(dim);
    h[0] = 1.0 - mean_dir.values[0];
    for (int i = 1; i < dim; ++i) h[i] = -mean_dir.values[i];
    const double hn2 = dot(h, h);
    if (hn2 > 1e-24) {
        const double proj = 2.0 * dot(h, sample) / hn2;
        for (int i = 0; i < dim; ++i) sample[i] -= proj * h[i];
    }
    return normalize(sample);
}

std::vector<UnitEmbedding> sample_vmf(const VmfParams& params, std::size_t n, std::uint64_t seed) {
    params.validate();
    Rng rng(seed);
    std::vector<UnitEmbedding> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(sample_vmf_one(rng, params.mean_dir, params.kappa));
    return out;
}

void ScenarioConfig::validate() const {
    if (num_classes < 2) throw Error(ErrorKind::ConfigError, "scenario needs >= 2 classes");
    if (dim < 2) throw Error(ErrorKind::ConfigError, "scenario dim must be >= 2");
    if (k_true < 1) throw Error(ErrorKind::ConfigError, "k_true must be >= 1");
    if (n_total <= 0 && n_per_class < 1)
        throw Error(ErrorKind::ConfigError, "n_per_class must be >= 1");
    if (n_total > 0 && n_total < num_classes)
        throw Error(ErrorKind::ConfigError, "n_total must cover every class");
    if (!(kappa_gen > 0.0)) throw Error(ErrorKind::ConfigError, "kappa_gen must be > 0");
    if (!(noise_cls >= 0.0)) throw Error(ErrorKind::ConfigError, "noise_cls must be >= 0");
    if (!(ambig_margin >= 0.0 && ambig_margin <= 1.0))
        throw Error(ErrorKind::ConfigError, "ambig_margin must be in [0,1]");
    if (!(ambig_noise_mult >= 0.0))
        throw Error(ErrorKind::ConfigError, "ambig_noise_mult must be >= 0");
    if (mc_label_draws < 1) throw Error(ErrorKind::ConfigError, "mc_label_draws must be >= 1");
    if (!components.empty()) {
        if (static_cast<int>(components.size()) != num_classes)
            throw Error(ErrorKind::ConfigError, "component override must cover every class");
        for (const auto& cls : components) {
            if (static_cast<int>(cls.size()) != k_true)
                throw Error(ErrorKind::ConfigError, "component override must have k_true entries");
            for (const auto& p : cls) {
                if (static_cast<int>(p.dim()) != dim)
                    throw Error(ErrorKind::ConfigError, "component override dim mismatch");
                p.validate();
            }
        }
    }
}

ScenarioTruth gen_two_expert_scenario(const ScenarioConfig& config) {
    config.validate();
    Rng rng(config.seed);

    ScenarioTruth truth;
    truth.true_bank.num_classes = config.num_classes;
    truth.true_bank.dim = config.dim;
    truth.true_bank.kappa = config.kappa_gen;
    truth.true_bank.tau_sim = 1.0;
    truth.true_bank.seed = config.seed;
    if (config.components.empty()) {
        truth.true_bank.prototypes.resize(config.num_classes);
        for (int c = 0; c < config.num_classes; ++c)
            for (int k = 0; k < config.k_true; ++k)
                truth.true_bank.prototypes[c].push_back(UnitEmbedding{random_unit(rng, config.dim)});
    } else {
        truth.true_bank.prototypes = config.components;
    }

    std::vector<int> counts(config.num_classes, config.n_per_class);
    if (config.n_total > 0) {
        const int base = config.n_total / config.num_classes;
        const int rem = config.n_total % config.num_classes;
        for (int c = 0; c < config.num_classes; ++c) counts[c] = base + (c < rem ? 1 : 0);
    }
    std::size_t total = 0;
    for (int c : counts) total += static_cast<std::size_t>(c);

    truth.data.num_classes = config.num_classes;
    truth.data.dim = config.dim;
    truth.data.has_labels = true;
    truth.data.records.reserve(total);
    truth.r_cls.reserve(total);
    truth.r_sim.reserve(total);
    truth.eps_cls.reserve(total);
    truth.eps_sim.reserve(total);
    truth.bayes_gate.reserve(total);

    std::size_t index = 0;
    for (int c = 0; c < config.num_classes; ++c) {
        for (int j = 0; j < counts[c]; ++j, ++index) {
            const int comp = static_cast<int>(rng.uniform_index(truth.true_bank.prototypes[c].size()));
            UnitEmbedding z = sample_vmf_one(rng, truth.true_bank.prototypes[c][comp], config.kappa_gen);

            // shared-kappa equal-weight mixture: true posterior is the softmax
            // of the per-class log-sum-exp scores
            const auto scores = vmf_class_scores(z, truth.true_bank);
            const Posterior true_post = softmax(scores.per_class, 1.0);
            const double margin = sim_margin(true_post);

            // true log-posterior plus seeded noise, boosted in the ambiguous region
            const double sigma =
                config.noise_cls * (margin < config.ambig_margin ? config.ambig_noise_mult : 1.0);
            const double q_max = *std::max_element(scores.per_class.begin(), scores.per_class.end());
            double lse = 0.0;
            for (double q : scores.per_class) lse += std::exp(q - q_max);
            lse = q_max + std::log(lse);
            std::vector<double> logits(config.num_classes);
            for (int a = 0; a < config.num_classes; ++a)
                logits[a] = scores.per_class[a] - lse + sigma * rng.normal();

            EmbeddingRecord rec;
            char idbuf[16];
            std::snprintf(idbuf, sizeof(idbuf), "s%06zu", index);
            rec.id = idbuf;
            rec.label = c;
            rec.logits = logits;
            rec.embedding = std::move(z);
            truth.data.records.push_back(std::move(rec));

            const int y_cls = argmax_index(logits);
            const int y_sim = argmax_class(true_post);
            const double gamma_cls = top1_confidence(softmax(logits, 1.0));
            const double gamma_sim = true_post.probs[y_sim];

            // Monte-Carlo label redraws against the known posterior
            std::size_t hit_cls = 0, hit_sim = 0;
            for (int m = 0; m < config.mc_label_draws; ++m) {
                const double u = rng.uniform();
                double acc = 0.0;
                int y_draw = config.num_classes - 1;
                for (int a = 0; a < config.num_classes; ++a) {
                    acc += true_post.probs[a];
                    if (u < acc) {
                        y_draw = a;
                        break;
                    }
                }
                if (y_draw == y_cls) ++hit_cls;
                if (y_draw == y_sim) ++hit_sim;
            }
            const double a_cls = static_cast<double>(hit_cls) / config.mc_label_draws;
            const double a_sim = static_cast<double>(hit_sim) / config.mc_label_draws;
            truth.r_cls.push_back(1.0 - a_cls);
            truth.r_sim.push_back(1.0 - a_sim);
            truth.eps_cls.push_back(std::abs(a_cls - gamma_cls));
            truth.eps_sim.push_back(std::abs(a_sim - gamma_sim));
            truth.bayes_gate.push_back(truth.r_sim.back() < truth.r_cls.back() ? 1 : 0);
        }
    }
    return truth;
}

std::vector<int> bayes_gate(const std::vector<double>& r_cls, const std::vector<double>& r_sim) {
    if (r_cls.size() != r_sim.size())
        throw Error(ErrorKind::LengthMismatch, "bayes_gate: risk vectors differ in length");
    std::vector<int> out(r_cls.size());
    for (std::size_t i = 0; i < r_cls.size(); ++i) out[i] = r_sim[i] < r_cls[i] ? 1 : 0;
    return out;
}

std::vector<int> bayes_gate(const ScenarioTruth& truth) {
    return bayes_gate(truth.r_cls, truth.r_sim);
}

InvarianceReport check_invariance(const std::vector<PredictionRecord>& records) {
    InvarianceReport report;
    report.checked = records.size();
    for (const auto& rec : records) {
        if (rec.signals.gate) continue;
        ++report.non_gated;
        bool ok = rec.source == PredictionSource::classifier &&
                  rec.p_final.probs.size() == rec.p_cls.probs.size() &&
                  rec.y_hat == rec.signals.y_cls;
        if (ok && !rec.p_final.probs.empty())
            ok = std::memcmp(rec.p_final.probs.data(), rec.p_cls.probs.data(),
                             rec.p_final.probs.size() * sizeof(double)) == 0;
        if (!ok) ++report.violations;
    }
    return report;
}

RiskDecomposition risk_decomposition(const std::vector<PredictionRecord>& records,
                                     const std::vector<int>& labels) {
    if (records.empty()) throw Error(ErrorKind::EmptyInput, "risk_decomposition: no records");
    if (records.size() != labels.size())
        throw Error(ErrorKind::LengthMismatch, "risk_decomposition: record and label counts differ");
    long long wrong_final = 0, wrong_cls = 0, gated = 0, gated_diff = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const int err_final = records[i].y_hat != labels[i] ? 1 : 0;
        const int err_cls = records[i].signals.y_cls != labels[i] ? 1 : 0;
        wrong_final += err_final;
        wrong_cls += err_cls;
        if (records[i].signals.gate) {
            ++gated;
            gated_diff += err_final - err_cls;
        }
    }
    const double n = static_cast<double>(records.size());
    RiskDecomposition out;
    out.lhs = static_cast<double>(wrong_final - wrong_cls) / n;
    out.rhs = gated == 0 ? 0.0
                         : (static_cast<double>(gated) / n) *
                               (static_cast<double>(gated_diff) / static_cast<double>(gated));
    if (std::abs(out.lhs - out.rhs) > 1e-12)
        throw Error(ErrorKind::InvariantViolation, "risk decomposition identity broke");
    return out;
}

AlphaBoundResult check_alpha_bound(const GateConfig& cfg, std::size_t trials, std::uint64_t seed) {
    cfg.validate();
    if (!(cfg.m_sim > 0.0) || !(cfg.alpha_low < cfg.m_sim / (cfg.m_sim + cfg.theta_gate)))
        throw Error(ErrorKind::PreconditionNotMet,
                    "alpha_low must be below m_sim / (m_sim + theta_gate)");
    Rng rng(seed);
    AlphaBoundResult res;
    const std::size_t max_attempts = trials == 0 ? 0 : trials * 10000;
    std::size_t attempts = 0;
    while (res.trials < trials) {
        if (++attempts > max_attempts)
            throw Error(ErrorKind::ConfigError,
                        "gate acceptance rate too low for requested trial count");
        const std::size_t c = 3 + rng.uniform_index(3);
        Posterior p_cls{rng.dirichlet(2.0, c)};
        Posterior p_sim{rng.dirichlet(0.25, c)};
        const GateSignals s = evaluate_gate(p_cls, p_sim, cfg);
        if (!s.gate) continue;
        ++res.trials;
        const Posterior fused = fuse(p_cls, p_sim, cfg.alpha_low);
        if (!(fused.probs[s.y_sim] > fused.probs[s.y_cls])) ++res.counterexamples;
    }
    return res;
}

GapConditionReport check_gap_condition(const ScenarioTruth& truth,
                                       const std::vector<PredictionRecord>& records) {
    if (records.size() != truth.data.size())
        throw Error(ErrorKind::LengthMismatch, "gap condition: record count does not match truth");
    GapConditionReport report;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = truth.data.records[i];
        const double gamma_cls = top1_confidence(softmax(rec.logits, 1.0));
        const double gamma_sim = top1_confidence(retrieve(rec.embedding, truth.true_bank));
        if (!(gamma_sim - gamma_cls > truth.eps_cls[i] + truth.eps_sim[i])) continue;
        ++report.condition_count;
        const double a_cls = 1.0 - truth.r_cls[i];
        const double a_sim = 1.0 - truth.r_sim[i];
        if (!(a_sim > a_cls)) ++report.violations;
        if ((records[i].signals.gate ? 1 : 0) == truth.bayes_gate[i]) ++report.practical_agree;
    }
    return report;
}

RegretResult regret_check(const ScenarioTruth& truth, const std::vector<int>& gate_decisions) {
    if (gate_decisions.size() != truth.r_cls.size())
        throw Error(ErrorKind::LengthMismatch, "regret_check: gate decisions do not match truth");
    if (gate_decisions.empty()) throw Error(ErrorKind::EmptyInput, "regret_check: no samples");
    double risk_sum = 0.0, star_sum = 0.0;
    std::size_t misrank = 0;
    for (std::size_t i = 0; i < gate_decisions.size(); ++i) {
        const double r = gate_decisions[i] != 0 ? truth.r_sim[i] : truth.r_cls[i];
        const double r_star = std::min(truth.r_cls[i], truth.r_sim[i]);
        risk_sum += r;
        star_sum += r_star;
        if (r > r_star) ++misrank;
    }
    const double n = static_cast<double>(gate_decisions.size());
    RegretResult out;
    out.excess_risk = risk_sum / n - star_sum / n;
    out.misrank_prob = static_cast<double>(misrank) / n;
    if (out.excess_risk > out.misrank_prob + 1e-12)
        throw Error(ErrorKind::InvariantViolation, "regret bound violated");
    return out;
}

SweepResult threshold_sweep(const LabeledEmbeddingSet& data, const PrototypeBank& bank,
                            const GateConfig& base_cfg,
                            const std::vector<std::pair<std::string, std::vector<double>>>& grid,
                            const std::vector<int>& labels, int threads) {
    if (grid.empty()) throw Error(ErrorKind::ConfigError, "sweep grid is empty");
    for (const auto& [field, values] : grid) {
        if (field != "theta_gate" && field != "beta")
            throw Error(ErrorKind::ConfigError, "sweep supports theta_gate and beta, got '" + field + "'");
        if (values.empty()) throw Error(ErrorKind::ConfigError, "sweep values for '" + field + "' are empty");
    }
    const auto posteriors = compute_posteriors(data, bank, threads);

    SweepResult result;
    for (const auto& [field, values] : grid) {
        for (const double v : values) {
            GateConfig cfg = base_cfg;
            if (field == "theta_gate") cfg.theta_gate = v;
            else cfg.beta = v;
            const auto records = predict_from_posteriors(data, posteriors, cfg, threads);

            SweepRow row;
            row.field = field;
            row.value = v;
            std::size_t gated = 0, gated_hit = 0, hit = 0;
            for (std::size_t i = 0; i < records.size(); ++i) {
                if (records[i].y_hat == labels[i]) ++hit;
                if (records[i].signals.gate) {
                    ++gated;
                    if (records[i].y_hat == labels[i]) ++gated_hit;
                }
            }
            const double n = static_cast<double>(records.size());
            row.gate_rate = gated / n;
            row.gated_accuracy = gated == 0 ? std::numeric_limits<double>::quiet_NaN()
                                            : static_cast<double>(gated_hit) / gated;
            row.overall_accuracy = hit / n;
            std::vector<int> preds;
            preds.reserve(records.size());
            for (const auto& r : records) preds.push_back(r.y_hat);
            row.balanced_accuracy = balanced_accuracy(preds, labels, data.num_classes);
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

} // namespace protogate
