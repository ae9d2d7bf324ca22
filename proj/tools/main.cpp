#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "protogate/io.hpp"
#include "protogate/metrics.hpp"
#include "protogate/theory_lab.hpp"

namespace fs = std::filesystem;
using namespace protogate;

namespace {

EmbeddingFormat resolve_format(const std::string& flag, const fs::path& path) {
    return flag.empty() ? format_from_path(path) : format_from_string(flag);
}

std::vector<double> parse_value_list(const std::string& csv) {
    std::vector<double> out;
    std::string cur;
    for (char ch : csv + ",") {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(parse_double(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (out.empty()) throw Error(ErrorKind::ConfigError, "empty value list");
    return out;
}

void write_sweep_csv(const SweepResult& sweep, const fs::path& path) {
    std::string out = "field,value,gate_rate,gated_accuracy,overall_accuracy,balanced_accuracy\n";
    for (const auto& row : sweep.rows) {
        out += row.field;
        out += ',' + format_double(row.value);
        out += ',' + format_double(row.gate_rate);
        out += ',' + format_double(row.gated_accuracy);
        out += ',' + format_double(row.overall_accuracy);
        out += ',' + format_double(row.balanced_accuracy);
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::ParseError, "cannot write '" + path.string() + "'");
    f << out;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    ScenarioConfig cfg;
    if (j.contains("num_classes")) cfg.num_classes = j.at("num_classes").get<int>();
    if (j.contains("dim")) cfg.dim = j.at("dim").get<int>();
    if (j.contains("k_true")) cfg.k_true = j.at("k_true").get<int>();
    if (j.contains("n_per_class")) cfg.n_per_class = j.at("n_per_class").get<int>();
    if (j.contains("n_total")) cfg.n_total = j.at("n_total").get<int>();
    if (j.contains("kappa_gen")) cfg.kappa_gen = j.at("kappa_gen").get<double>();
    if (j.contains("noise_cls")) cfg.noise_cls = j.at("noise_cls").get<double>();
    if (j.contains("ambig_margin")) cfg.ambig_margin = j.at("ambig_margin").get<double>();
    if (j.contains("ambig_noise_mult")) cfg.ambig_noise_mult = j.at("ambig_noise_mult").get<double>();
    if (j.contains("mc_label_draws")) cfg.mc_label_draws = j.at("mc_label_draws").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

int run_simulate(const fs::path& config_path, const std::string& checks, const fs::path& out_dir,
                 int threads) {
    nlohmann::json j;
    try {
        std::ifstream in(config_path);
        if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + config_path.string() + "'");
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, "'" + config_path.string() + "': " + e.what());
    }

    const ScenarioConfig scenario_cfg =
        j.contains("scenario") ? scenario_from_json(j.at("scenario")) : ScenarioConfig{};
    const auto truth = gen_two_expert_scenario(scenario_cfg);

    int bank_k = scenario_cfg.k_true;
    double bank_kappa = scenario_cfg.kappa_gen;
    double bank_tau = 0.1;
    int bank_restarts = 5;
    if (j.contains("bank")) {
        const auto& b = j.at("bank");
        if (b.contains("k")) bank_k = b.at("k").get<int>();
        if (b.contains("kappa")) bank_kappa = b.at("kappa").get<double>();
        if (b.contains("tau_sim")) bank_tau = b.at("tau_sim").get<double>();
        if (b.contains("restarts")) bank_restarts = b.at("restarts").get<int>();
    }
    GateConfig gate;
    if (j.contains("gate")) {
        const auto& g = j.at("gate");
        if (g.contains("theta_gate")) gate.theta_gate = g.at("theta_gate").get<double>();
        if (g.contains("beta")) gate.beta = g.at("beta").get<double>();
        if (g.contains("m_sim")) gate.m_sim = g.at("m_sim").get<double>();
        if (g.contains("delta")) gate.delta = g.at("delta").get<double>();
        if (g.contains("alpha_low")) gate.alpha_low = g.at("alpha_low").get<double>();
        if (g.contains("entropy_max") && !g.at("entropy_max").is_null())
            gate.entropy_max = g.at("entropy_max").get<double>();
    }
    gate.validate();

    fs::create_directories(out_dir);
    write_embeddings(truth.data, out_dir / "scenario.csv", EmbeddingFormat::csv);
    {
        std::string out = "id,label,r_cls,r_sim,eps_cls,eps_sim,bayes_gate\n";
        for (std::size_t i = 0; i < truth.data.size(); ++i) {
            out += truth.data.records[i].id;
            out += ',' + std::to_string(truth.data.records[i].label + 1);
            out += ',' + format_double(truth.r_cls[i]);
            out += ',' + format_double(truth.r_sim[i]);
            out += ',' + format_double(truth.eps_cls[i]);
            out += ',' + format_double(truth.eps_sim[i]);
            out += ',' + std::to_string(truth.bayes_gate[i]);
            out += '\n';
        }
        std::ofstream f(out_dir / "risks.csv", std::ios::binary | std::ios::trunc);
        f << out;
    }

    const auto bank = build_bank(truth.data, bank_k, bank_kappa, bank_tau, scenario_cfg.seed,
                                 bank_restarts);
    const auto records = predict_batch(truth.data, bank, gate, threads);
    write_predictions(records, out_dir / "predictions.csv");

    const bool all = checks == "all";
    auto wants = [&](const std::string& name) {
        return all || checks.find(name) != std::string::npos;
    };

    nlohmann::ordered_json summary;
    bool failed = false;
    const auto labels = truth.data.labels();

    if (wants("invariance")) {
        const auto rep = check_invariance(records);
        summary["invariance"] = {{"checked", rep.checked},
                                 {"non_gated", rep.non_gated},
                                 {"violations", rep.violations},
                                 {"pass", rep.violations == 0}};
        failed = failed || rep.violations != 0;
    }
    if (wants("risk-decomp")) {
        const auto rd = risk_decomposition(records, labels);
        summary["risk_decomposition"] = {{"lhs", rd.lhs},
                                         {"rhs", rd.rhs},
                                         {"pass", std::abs(rd.lhs - rd.rhs) <= 1e-12}};
        failed = failed || std::abs(rd.lhs - rd.rhs) > 1e-12;
    }
    if (wants("alpha-bound")) {
        GateConfig bound_cfg = gate;
        bound_cfg.theta_gate = 0.5;
        bound_cfg.m_sim = 0.6;
        bound_cfg.alpha_low = 0.4;
        std::size_t trials = 10000;
        if (j.contains("alpha_bound_trials")) trials = j.at("alpha_bound_trials").get<std::size_t>();
        const auto ab = check_alpha_bound(bound_cfg, trials, scenario_cfg.seed + 17);
        summary["alpha_bound"] = {{"trials", ab.trials},
                                  {"counterexamples", ab.counterexamples},
                                  {"pass", ab.counterexamples == 0}};
        failed = failed || ab.counterexamples != 0;
    }
    if (wants("gap")) {
        const auto gap = check_gap_condition(truth, records);
        summary["gap_condition"] = {{"condition_count", gap.condition_count},
                                    {"violations", gap.violations},
                                    {"practical_agree", gap.practical_agree},
                                    {"pass", gap.violations == 0}};
        failed = failed || gap.violations != 0;
    }
    if (wants("regret")) {
        std::vector<int> practical(records.size());
        for (std::size_t i = 0; i < records.size(); ++i)
            practical[i] = records[i].signals.gate ? 1 : 0;
        const auto reg = regret_check(truth, practical);
        const auto reg_cls = regret_check(truth, std::vector<int>(records.size(), 0));
        const auto reg_sim = regret_check(truth, std::vector<int>(records.size(), 1));
        summary["regret"] = {
            {"practical", {{"excess_risk", reg.excess_risk}, {"misrank_prob", reg.misrank_prob}}},
            {"classifier_only",
             {{"excess_risk", reg_cls.excess_risk}, {"misrank_prob", reg_cls.misrank_prob}}},
            {"similarity_only",
             {{"excess_risk", reg_sim.excess_risk}, {"misrank_prob", reg_sim.misrank_prob}}},
            {"pass", true}}; // regret_check throws on violation
    }
    if (wants("sweep")) {
        std::string param = "theta_gate";
        std::vector<double> values{0.5, 0.6, 0.7, 0.8, 0.9};
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            if (s.contains("param")) param = s.at("param").get<std::string>();
            if (s.contains("values")) values = s.at("values").get<std::vector<double>>();
        }
        const auto sweep = threshold_sweep(truth.data, bank, gate, {{param, values}}, labels, threads);
        write_sweep_csv(sweep, out_dir / "sweep.csv");
        summary["sweep"] = {{"rows", sweep.rows.size()}, {"file", "sweep.csv"}};
    }

    std::ofstream sf(out_dir / "checks.json", std::ios::binary | std::ios::trunc);
    sf << summary.dump(2) << "\n";
    std::cout << summary.dump(2) << "\n";
    if (failed) throw Error(ErrorKind::InvariantViolation, "one or more simulate checks failed");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Teacher-guided multi-prototype retrieval with confidence-gated fusion"};
    app.require_subcommand(1);

    std::string embeddings_path, format_flag, bank_path, gate_path, out_path, grid_path;
    std::string objective = "balacc", param = "theta_gate", values_csv = "0.5,0.6,0.7,0.8,0.9";
    std::string val_path, pred_path, labels_path, config_path, checks = "all";
    std::string train_path, test_path;
    int k = 3, restarts = 5, bins = 15, threads = 1;
    double kappa = 20.0, tau_sim = 0.1;
    std::uint64_t seed = 0;

    auto* build = app.add_subcommand("build-bank", "Cluster embeddings into a prototype bank");
    build->add_option("--embeddings", embeddings_path)->required();
    build->add_option("--format", format_flag, "csv or bin (default: by extension)");
    build->add_option("--k", k, "max prototypes per class");
    build->add_option("--kappa", kappa);
    build->add_option("--tau-sim", tau_sim);
    build->add_option("--seed", seed);
    build->add_option("--restarts", restarts);
    build->add_option("--out", out_path)->required();

    auto* infer = app.add_subcommand("infer", "Gated dual-path predictions for an embedding set");
    infer->add_option("--embeddings", embeddings_path)->required();
    infer->add_option("--format", format_flag);
    infer->add_option("--bank", bank_path)->required();
    infer->add_option("--gate", gate_path, "gate config JSON (defaults when omitted)");
    infer->add_option("--threads", threads);
    infer->add_option("--out", out_path)->required();

    auto* tune_cmd = app.add_subcommand("tune", "Grid-search gate thresholds on a validation set");
    tune_cmd->add_option("--val", val_path)->required();
    tune_cmd->add_option("--format", format_flag);
    tune_cmd->add_option("--bank", bank_path)->required();
    tune_cmd->add_option("--grid", grid_path, "grid JSON (defaults when omitted)");
    tune_cmd->add_option("--objective", objective, "balacc, accuracy or macro_f1");
    tune_cmd->add_option("--gate", gate_path, "base gate config for alpha_low/entropy_max");
    tune_cmd->add_option("--threads", threads);
    tune_cmd->add_option("--out", out_path)->required();
    tune_cmd->add_option("--best-out", pred_path, "write the winning gate config JSON here");

    auto* eval_cmd = app.add_subcommand("evaluate", "Metrics report for a prediction file");
    eval_cmd->add_option("--pred", pred_path)->required();
    eval_cmd->add_option("--labels", labels_path)->required();
    eval_cmd->add_option("--bins", bins);
    eval_cmd->add_option("--out", out_path)->required();

    auto* sim_cmd = app.add_subcommand("simulate", "Synthetic scenario plus appendix checks");
    std::string scenario_name = "two-expert";
    sim_cmd->add_option("--scenario", scenario_name, "only 'two-expert' is available");
    sim_cmd->add_option("--config", config_path)->required();
    sim_cmd->add_option("--checks", checks,
                        "all or a comma list of invariance,risk-decomp,alpha-bound,gap,regret,sweep");
    sim_cmd->add_option("--threads", threads);
    sim_cmd->add_option("--out", out_path)->required();

    auto* sweep_cmd = app.add_subcommand("sweep", "Threshold sweep over theta_gate or beta");
    sweep_cmd->add_option("--embeddings", embeddings_path)->required();
    sweep_cmd->add_option("--format", format_flag);
    sweep_cmd->add_option("--bank", bank_path)->required();
    sweep_cmd->add_option("--gate", gate_path);
    sweep_cmd->add_option("--param", param, "theta_gate or beta");
    sweep_cmd->add_option("--values", values_csv);
    sweep_cmd->add_option("--threads", threads);
    sweep_cmd->add_option("--out", out_path)->required();

    auto* pipe_cmd = app.add_subcommand("pipeline", "Split, build, tune, predict, report");
    pipe_cmd->add_option("--train", train_path)->required();
    pipe_cmd->add_option("--test", test_path)->required();
    pipe_cmd->add_option("--config", config_path, "pipeline config JSON (defaults when omitted)");
    pipe_cmd->add_option("--threads", threads);
    pipe_cmd->add_option("--out", out_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed()) {
            const auto data =
                read_embeddings(embeddings_path, resolve_format(format_flag, embeddings_path));
            const auto bank = build_bank(data, k, kappa, tau_sim, seed, restarts);
            write_bank(bank, out_path);
            std::cout << "bank written to " << out_path << " (" << bank.num_classes
                      << " classes, dim " << bank.dim << ")\n";
        } else if (infer->parsed()) {
            const auto data =
                read_embeddings(embeddings_path, resolve_format(format_flag, embeddings_path));
            const auto bank = read_bank(bank_path);
            const GateConfig cfg = gate_path.empty() ? GateConfig{} : read_gate_config(gate_path);
            const auto records = predict_batch(data, bank, cfg, threads);
            write_predictions(records, out_path);
            std::size_t gated = 0;
            for (const auto& r : records)
                if (r.signals.gate) ++gated;
            std::cout << records.size() << " predictions written to " << out_path << " ("
                      << gated << " gated)\n";
        } else if (tune_cmd->parsed()) {
            const auto val = read_embeddings(val_path, resolve_format(format_flag, val_path));
            const auto bank = read_bank(bank_path);
            TuneGrid grid = grid_path.empty() ? TuneGrid{} : read_tune_grid(grid_path);
            grid.objective = objective_from_string(objective);
            const GateConfig base = gate_path.empty() ? GateConfig{} : read_gate_config(gate_path);
            const auto result = tune(val, bank, grid, base, threads);
            write_tune_table(result, out_path);
            if (!pred_path.empty()) write_gate_config(result.best, pred_path);
            std::cout << "best objective " << format_double(result.best_objective)
                      << " at theta_gate=" << format_double(result.best.theta_gate)
                      << " beta=" << format_double(result.best.beta)
                      << " m_sim=" << format_double(result.best.m_sim)
                      << " delta=" << format_double(result.best.delta)
                      << " tau_sim=" << format_double(result.best_tau_sim) << "\n";
        } else if (eval_cmd->parsed()) {
            const auto records = read_predictions(pred_path);
            const auto label_map = read_labels(labels_path);
            const int num_classes = static_cast<int>(records.front().p_final.probs.size());
            std::vector<int> labels;
            labels.reserve(records.size());
            for (const auto& r : records) {
                const auto it = label_map.find(r.id);
                if (it == label_map.end())
                    throw Error(ErrorKind::SchemaError, "no label for prediction id '" + r.id + "'");
                if (it->second >= num_classes)
                    throw Error(ErrorKind::SchemaError, "label out of range for id '" + r.id + "'");
                labels.push_back(it->second);
            }
            const auto report = evaluate(records, labels, num_classes, bins);
            write_report(report, out_path);
            std::cout << "accuracy " << format_double(report.accuracy) << ", balanced accuracy "
                      << format_double(report.balanced_accuracy) << ", ece "
                      << format_double(report.ece) << "\n";
        } else if (sim_cmd->parsed()) {
            if (scenario_name != "two-expert")
                throw Error(ErrorKind::ConfigError, "unknown scenario '" + scenario_name + "'");
            run_simulate(config_path, checks, out_path, threads);
        } else if (sweep_cmd->parsed()) {
            const auto data =
                read_embeddings(embeddings_path, resolve_format(format_flag, embeddings_path));
            if (!data.has_labels)
                throw Error(ErrorKind::SchemaError, "sweep needs labeled embeddings");
            const auto bank = read_bank(bank_path);
            const GateConfig cfg = gate_path.empty() ? GateConfig{} : read_gate_config(gate_path);
            const auto sweep = threshold_sweep(data, bank, cfg, {{param, parse_value_list(values_csv)}},
                                               data.labels(), threads);
            write_sweep_csv(sweep, out_path);
            std::cout << sweep.rows.size() << " sweep rows written to " << out_path << "\n";
        } else if (pipe_cmd->parsed()) {
            const auto train = read_embeddings(train_path, format_from_path(train_path));
            const auto test = read_embeddings(test_path, format_from_path(test_path));
            PipelineConfig cfg =
                config_path.empty() ? PipelineConfig{} : read_pipeline_config(config_path);
            cfg.threads = threads;
            const auto result = run_pipeline(train, test, cfg, out_path);
            std::cout << "pipeline artifacts written to " << out_path;
            if (!result.report_written) std::cout << " (test labels withheld, report skipped)";
            std::cout << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::InvariantViolation ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
