// Command-line surface over the library: compute optimal rules, compare
// designs, solve the manipulation game, simulate researcher populations,
// emit table and figure data, and calibrate parameters from a p-value
// corpus. All outputs embed the full parameter set (and seed) needed to
// re-run the command and are byte-identical across reruns.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pubopt/calibration.hpp"
#include "pubopt/design_rules.hpp"
#include "pubopt/gaussian.hpp"
#include "pubopt/manipulation.hpp"
#include "pubopt/report.hpp"
#include "pubopt/simulation.hpp"

using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

// Numbers are rounded to 12 significant digits before emission so that
// JSON and CSV output is stable for golden-file comparison.
std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double sig12(double v) { return std::strtod(fmt12(v).c_str(), nullptr); }

json num(double v) { return json(sig12(v)); }

json opt_num(const std::optional<double>& v) {
    return v ? num(*v) : json(nullptr);
}

struct OutputOptions {
    std::string path;   // empty: stdout
    std::string format = "json";
};

void add_output_flags(CLI::App* cmd, OutputOptions& out) {
    cmd->add_option("--out", out.path, "write output to this path instead of stdout");
    cmd->add_option("--format", out.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));
}

void write_output(const OutputOptions& out, const std::string& text) {
    if (out.path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out.path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output path: " + out.path);
    f << text;
}

std::string csv_join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    line += '\n';
    return line;
}

// --- shared flag groups ----------------------------------------------------

struct ManipEnvFlags {
    double eta2 = 1.94;
    double s2 = 1.0;
    double cm = 0.98;
    double c0 = 0.0;
    std::optional<double> ca;
    std::optional<double> cutoff_target;
    std::optional<std::string> calibration;

    pubopt::ManipulationEnv resolve() const {
        if (calibration) {
            return pubopt::calibration_preset(*calibration).env;
        }
        double attention = 0.0;
        if (ca && cutoff_target)
            throw std::domain_error("give either --ca or --cutoff-target, not both");
        if (ca) {
            attention = *ca;
        } else if (cutoff_target) {
            const double om = eta2 / (s2 + eta2);
            attention = (*cutoff_target * om) * (*cutoff_target * om);
        } else {
            throw std::domain_error("one of --ca or --cutoff-target is required");
        }
        pubopt::ManipulationEnv env{eta2, s2, attention, cm, c0};
        pubopt::validate(env);
        return env;
    }

    double ttest_cutoff() const {
        if (calibration) return pubopt::calibration_preset(*calibration).ttest_cutoff;
        if (cutoff_target) return *cutoff_target;
        const pubopt::ManipulationEnv env = resolve();
        return env.gamma_star();
    }
};

void add_manip_env_flags(CLI::App* cmd, ManipEnvFlags& flags, bool with_preset) {
    cmd->add_option("--eta2", flags.eta2, "prior variance");
    cmd->add_option("--s2", flags.s2, "signal variance");
    cmd->add_option("--cm", flags.cm, "marginal manipulation cost");
    cmd->add_option("--c0", flags.c0, "fixed research cost");
    cmd->add_option("--ca", flags.ca, "attention cost");
    cmd->add_option("--cutoff-target", flags.cutoff_target,
                    "derive the attention cost so the no-cost cutoff equals this");
    if (with_preset) {
        cmd->add_option("--calibration", flags.calibration,
                        "use a named calibration preset instead of explicit parameters")
            ->check(CLI::IsMember({"five_pct", "one_pct"}));
    }
}

json manip_env_json(const pubopt::ManipulationEnv& env) {
    return json{{"eta2", num(env.eta2)},
                {"s2", num(env.s2)},
                {"ca", num(env.ca)},
                {"cm", num(env.cm)},
                {"c0", num(env.c0)},
                {"omega", num(env.omega())},
                {"gamma_star", num(env.gamma_star())}};
}

json summary_row_json(const pubopt::SummaryRow& row) {
    const pubopt::SummaryStats& s = row.simulated;
    json sim{{"pct_published", num(s.pct_published)},
             {"se_published", num(s.se_published)},
             {"mean_pub_prob", num(s.mean_pub_prob)},
             {"pct_manipulated_within_published",
              opt_num(s.pct_manipulated_within_published)},
             {"avg_abs_bias_within_published",
              opt_num(s.avg_abs_bias_within_published)},
             {"n", s.n},
             {"n_published", s.n_published}};
    const pubopt::RuleOutcome& e = row.expected;
    json exp{{"pub_mass", num(e.pub_mass)},
             {"manipulated_share", num(e.manipulated_share)},
             {"avg_bias", num(e.avg_bias)},
             {"expected_loss", num(e.expected_loss)}};
    json j{{"rule", row.rule_label},
           {"policy", row.policy_label},
           {"simulated", sim},
           {"expected", exp}};
    if (row.x_star) j["x_star"] = num(*row.x_star);
    return j;
}

json histogram_json(const pubopt::Histogram& hist) {
    json bins = json::array();
    for (const auto& b : hist.bins) {
        bins.push_back(json{{"lo", num(b.lo)},
                            {"hi", num(b.hi)},
                            {"count", b.count},
                            {"density", num(b.density)}});
    }
    json atoms = json::array();
    for (const auto& a : hist.atoms) {
        atoms.push_back(
            json{{"location", num(a.location)}, {"count", a.count}, {"mass", num(a.mass)}});
    }
    return json{{"bins", bins},
                {"atoms", atoms},
                {"n_total", hist.n_total},
                {"n_in_range", hist.n_in_range}};
}

std::string table_csv(const std::vector<std::pair<std::string, pubopt::CalibrationTable>>&
                          tables) {
    std::string text = csv_join(
        {"calibration", "rule", "policy", "pct_published", "se_published",
         "pct_manipulated", "avg_bias", "expected_pub_mass", "expected_manipulated",
         "expected_avg_bias", "expected_loss", "x_star"});
    for (const auto& [name, table] : tables) {
        for (const auto& row : table.rows) {
            const auto& s = row.simulated;
            text += csv_join(
                {name, row.rule_label, row.policy_label, fmt12(s.pct_published),
                 fmt12(s.se_published),
                 s.pct_manipulated_within_published
                     ? fmt12(*s.pct_manipulated_within_published)
                     : "",
                 s.avg_abs_bias_within_published
                     ? fmt12(*s.avg_abs_bias_within_published)
                     : "",
                 fmt12(row.expected.pub_mass), fmt12(row.expected.manipulated_share),
                 fmt12(row.expected.avg_bias), fmt12(row.expected.expected_loss),
                 row.x_star ? fmt12(*row.x_star) : ""});
        }
    }
    return text;
}

// --- subcommand implementations ---------------------------------------------

int run_rule(const pubopt::Environment& env, const pubopt::Design& design,
             const OutputOptions& out) {
    const pubopt::ThresholdRule rule = pubopt::optimal_cutoff(env, design);
    const pubopt::WorthwhileCertificate cert = pubopt::is_worthwhile(env, design);
    json j{{"command", "rule"},
           {"params",
            {{"eta2", num(env.eta2)},
             {"ca", num(env.ca)},
             {"s2", num(design.s2)},
             {"cost", num(design.cost)}}},
           {"result",
            {{"cutoff", num(rule.cutoff)},
             {"gamma_star", num(pubopt::gamma_star(env, design))},
             {"classification",
              cert.klass == pubopt::DesignClass::Cheap ? "cheap" : "expensive"},
             {"publication_mass", num(pubopt::publication_mass(env, design, rule.cutoff))},
             {"post_var_red", num(pubopt::post_var_red(env, design))},
             {"optimal_loss", num(pubopt::optimal_loss(env, design))},
             {"incentive_cost", num(pubopt::incentive_cost(env, design))},
             {"worthwhile", cert.worthwhile},
             {"worthwhile_certificate",
              {{"exact_lhs", num(cert.exact_lhs)},
               {"exact_rhs", num(cert.exact_rhs)},
               {"sufficient_bound_fired", cert.sufficient_bound_fired},
               {"necessary_bound_violated", cert.necessary_bound_violated}}}}}};
    if (out.format == "csv") {
        std::string text = csv_join({"cutoff", "classification", "optimal_loss",
                                     "publication_mass", "worthwhile"});
        text += csv_join({fmt12(rule.cutoff),
                          cert.klass == pubopt::DesignClass::Cheap ? "cheap" : "expensive",
                          fmt12(pubopt::optimal_loss(env, design)),
                          fmt12(pubopt::publication_mass(env, design, rule.cutoff)),
                          cert.worthwhile ? "true" : "false"});
        write_output(out, text);
    } else {
        write_output(out, j.dump(2) + "\n");
    }
    return kExitOk;
}

int run_compare(const pubopt::Environment& env, const pubopt::Design& e,
                const pubopt::Design& o, const OutputOptions& out) {
    const pubopt::DesignComparison cmp = pubopt::compare_designs(env, e, o);
    const char* decision = cmp.decision == pubopt::Preference::PlannerPrefersE
                               ? "planner_prefers_e"
                           : cmp.decision == pubopt::Preference::PlannerPrefersO
                               ? "planner_prefers_o"
                               : "indifferent";
    json j{{"command", "compare"},
           {"params",
            {{"eta2", num(env.eta2)},
             {"ca", num(env.ca)},
             {"s2_e", num(e.s2)},
             {"cost_e", num(e.cost)},
             {"s2_o", num(o.s2)},
             {"cost_o", num(o.cost)}}},
           {"result",
            {{"decision", decision}, {"loss_e", num(cmp.loss_e)}, {"loss_o", num(cmp.loss_o)}}}};
    if (cmp.diagnostics) {
        const auto& d = *cmp.diagnostics;
        j["result"]["diagnostics"] = json{
            {"critical_ca", opt_num(d.critical_ca)},
            {"e_expensive", d.e_expensive},
            {"o_expensive", d.o_expensive},
            {"effective_cost_o", num(d.effective_cost_o)},
            {"prefer_e_bound_fired", d.prefer_e_bound_fired},
            {"prefer_o_bound_fired", d.prefer_o_bound_fired}};
    }
    if (out.format == "csv") {
        std::string text = csv_join({"decision", "loss_e", "loss_o"});
        text += csv_join({decision, fmt12(cmp.loss_e), fmt12(cmp.loss_o)});
        write_output(out, text);
    } else {
        write_output(out, j.dump(2) + "\n");
    }
    return kExitOk;
}

int run_fig2_sweep(double eta2, const std::vector<double>& ca_values, double s2_lo,
                   double s2_hi, int points, const OutputOptions& out) {
    json curves = json::array();
    std::string csv = csv_join({"ca", "s2_o", "cost_e"});
    for (double ca : ca_values) {
        const pubopt::Environment env{eta2, ca};
        const auto curve = pubopt::indifference_curve(env, s2_lo, s2_hi, points);
        json pts = json::array();
        for (const auto& pt : curve) {
            pts.push_back(json{{"s2_o", num(pt.s2_o)}, {"cost_e", opt_num(pt.cost_e)}});
            csv += csv_join({fmt12(ca), fmt12(pt.s2_o),
                             pt.cost_e ? fmt12(*pt.cost_e) : ""});
        }
        curves.push_back(json{{"ca", num(ca)}, {"points", pts}});
    }
    json j{{"command", "compare"},
           {"params",
            {{"fig2_sweep", true},
             {"eta2", num(eta2)},
             {"ca_values", ca_values},
             {"s2_lo", num(s2_lo)},
             {"s2_hi", num(s2_hi)},
             {"points", points}}},
           {"result", {{"indifference_curves", curves}}}};
    write_output(out, out.format == "csv" ? csv : j.dump(2) + "\n");
    return kExitOk;
}

int run_optimize(const pubopt::ManipulationEnv& env, const OutputOptions& out) {
    const pubopt::ManipulationSolution sol = pubopt::optimize_rule(env);
    json j{{"command", "optimize"},
           {"params", manip_env_json(env)},
           {"result",
            {{"u_star", num(sol.u_star)},
             {"x_star", num(sol.x_star)},
             {"expected_loss", num(sol.expected_loss)},
             {"ramp_lo", num(sol.x_star - 1.0 / env.cm)},
             {"interval",
              {{"lo", num(env.gamma_star())},
               {"hi", num(env.gamma_star() + (1.0 - env.c0) / env.cm)}}}}}};
    if (out.format == "csv") {
        std::string text = csv_join({"u_star", "x_star", "expected_loss"});
        text += csv_join({fmt12(sol.u_star), fmt12(sol.x_star), fmt12(sol.expected_loss)});
        write_output(out, text);
    } else {
        write_output(out, j.dump(2) + "\n");
    }
    return kExitOk;
}

int run_simulate(const pubopt::ManipulationEnv& env, double ttest_cutoff,
                 const std::string& rule_name, std::optional<double> threshold,
                 const std::string& policy_name, std::size_t n, std::uint64_t seed,
                 const OutputOptions& out) {
    const pubopt::ResearcherPolicy policy = policy_name == "truthful"
                                                ? pubopt::ResearcherPolicy::Truthful
                                                : pubopt::ResearcherPolicy::BestRespond;
    pubopt::RuleSpec rule = pubopt::ThresholdRule{ttest_cutoff};
    std::optional<double> x_star;
    if (threshold) {
        rule = pubopt::ThresholdRule{*threshold};
    } else if (rule_name == "optimal") {
        const pubopt::ManipulationSolution sol = pubopt::optimize_rule(env);
        rule = sol.rule(env);
        x_star = sol.x_star;
    }
    const auto population = pubopt::sample_population(env, n, seed);
    pubopt::SummaryRow row{};
    row.rule_label = threshold ? "threshold" : rule_name;
    row.policy_label = policy_name;
    row.rule = rule;
    row.policy = policy;
    row.x_star = x_star;
    const auto records = pubopt::simulate_equilibrium(env, rule, policy, population, seed + 1);
    row.simulated = pubopt::summarize(records);
    row.expected = std::visit(
        [&](const auto& r) { return pubopt::expected_outcome(env, r, policy); }, rule);
    if (out.format == "csv") {
        const auto& s = row.simulated;
        std::string text = csv_join({"rule", "policy", "pct_published", "se_published",
                                     "pct_manipulated", "avg_bias", "expected_pub_mass",
                                     "expected_manipulated", "expected_avg_bias",
                                     "expected_loss", "x_star"});
        text += csv_join({row.rule_label, row.policy_label, fmt12(s.pct_published),
                          fmt12(s.se_published),
                          s.pct_manipulated_within_published
                              ? fmt12(*s.pct_manipulated_within_published)
                              : "",
                          s.avg_abs_bias_within_published
                              ? fmt12(*s.avg_abs_bias_within_published)
                              : "",
                          fmt12(row.expected.pub_mass),
                          fmt12(row.expected.manipulated_share),
                          fmt12(row.expected.avg_bias),
                          fmt12(row.expected.expected_loss),
                          row.x_star ? fmt12(*row.x_star) : ""});
        write_output(out, text);
        return kExitOk;
    }
    json j{{"command", "simulate"},
           {"params",
            {{"env", manip_env_json(env)},
             {"rule", row.rule_label},
             {"threshold", opt_num(threshold)},
             {"policy", policy_name},
             {"n", n},
             {"seed", seed}}},
           {"result", summary_row_json(row)}};
    write_output(out, j.dump(2) + "\n");
    return kExitOk;
}

int run_table2(const std::string& which, std::size_t n, std::uint64_t seed,
               const OutputOptions& out) {
    std::vector<std::pair<std::string, pubopt::CalibrationTable>> tables;
    if (which == "five_pct" || which == "both") {
        tables.emplace_back("five_pct",
                            pubopt::summary_table(pubopt::five_pct_calibration(), n, seed));
    }
    if (which == "one_pct" || which == "both") {
        tables.emplace_back("one_pct",
                            pubopt::summary_table(pubopt::one_pct_calibration(), n, seed));
    }
    if (out.format == "csv") {
        write_output(out, table_csv(tables));
        return kExitOk;
    }
    json jtables = json::array();
    for (const auto& [name, table] : tables) {
        json rows = json::array();
        for (const auto& row : table.rows) rows.push_back(summary_row_json(row));
        jtables.push_back(json{{"calibration", name},
                               {"env", manip_env_json(table.preset.env)},
                               {"ttest_cutoff", num(table.preset.ttest_cutoff)},
                               {"u_star", num(table.solution.u_star)},
                               {"x_star", num(table.solution.x_star)},
                               {"optimal_expected_loss", num(table.solution.expected_loss)},
                               {"rows", rows}});
    }
    json j{{"command", "table2"},
           {"params", {{"calibration", which}, {"n", n}, {"seed", seed}}},
           {"tables", jtables}};
    write_output(out, j.dump(2) + "\n");
    return kExitOk;
}

int run_figure(const std::string& fig, ManipEnvFlags& flags, std::size_t n,
               std::uint64_t seed, double bin_width, double ce_max, double step,
               const OutputOptions& out) {
    if (fig == "fig4") {
        const pubopt::CalibrationPreset preset =
            pubopt::calibration_preset(flags.calibration.value_or("five_pct"));
        const auto sweep = pubopt::loss_ratio_sweep(preset, ce_max, step);
        if (out.format == "csv") {
            std::string csv =
                csv_join({"cost_e", "loss_experiment", "ratio_vs_naive", "ratio_vs_optimal"});
            for (const auto& pt : sweep) {
                csv += csv_join({fmt12(pt.cost_e), fmt12(pt.loss_experiment),
                                 fmt12(pt.ratio_vs_naive), fmt12(pt.ratio_vs_optimal)});
            }
            write_output(out, csv);
            return kExitOk;
        }
        json pts = json::array();
        for (const auto& pt : sweep) {
            pts.push_back(json{{"cost_e", num(pt.cost_e)},
                               {"loss_experiment", num(pt.loss_experiment)},
                               {"ratio_vs_naive", num(pt.ratio_vs_naive)},
                               {"ratio_vs_optimal", num(pt.ratio_vs_optimal)}});
        }
        json j{{"command", "figure-data"},
               {"params",
                {{"figure", fig},
                 {"calibration", preset.name},
                 {"env", manip_env_json(preset.env)},
                 {"ce_max", num(ce_max)},
                 {"step", num(step)}}},
               {"result", {{"points", pts}}}};
        write_output(out, j.dump(2) + "\n");
        return kExitOk;
    }

    // fig3: histograms of published |X| under the three regimes at explicit
    // parameters. fig5: same, under a named calibration preset.
    pubopt::ManipulationEnv env{};
    double ttest_cutoff = 0.0;
    if (fig == "fig5" || flags.calibration) {
        const pubopt::CalibrationPreset preset =
            pubopt::calibration_preset(flags.calibration.value_or("five_pct"));
        env = preset.env;
        ttest_cutoff = preset.ttest_cutoff;
    } else {
        env = flags.resolve();
        ttest_cutoff = env.gamma_star();
    }
    const pubopt::ManipulationSolution sol = pubopt::optimize_rule(env);
    const auto population = pubopt::sample_population(env, n, seed);
    const pubopt::HistogramSpec spec{0.0, std::max(6.0, sol.x_star + 3.0), bin_width};

    const auto make_hist = [&](const pubopt::RuleSpec& rule,
                               pubopt::ResearcherPolicy policy,
                               std::vector<double> cutoffs) {
        const auto records =
            pubopt::simulate_equilibrium(env, rule, policy, population, seed + 1);
        const auto published = pubopt::published_records(records);
        return pubopt::histogram_export(published, spec,
                                        pubopt::HistogramField::ReportedXAbs, cutoffs);
    };
    const std::vector<std::pair<std::string, pubopt::Histogram>> regimes{
        {"truthful", make_hist(pubopt::ThresholdRule{ttest_cutoff},
                               pubopt::ResearcherPolicy::Truthful, {})},
        {"naive", make_hist(pubopt::ThresholdRule{ttest_cutoff},
                            pubopt::ResearcherPolicy::BestRespond, {ttest_cutoff})},
        {"optimal", make_hist(pubopt::RuleSpec{sol.rule(env)},
                              pubopt::ResearcherPolicy::BestRespond, {sol.x_star})}};

    if (out.format == "csv") {
        std::string csv =
            csv_join({"regime", "kind", "lo", "hi", "count", "density_or_mass"});
        for (const auto& [label, hist] : regimes) {
            for (const auto& bin : hist.bins) {
                csv += csv_join({label, "bin", fmt12(bin.lo), fmt12(bin.hi),
                                 std::to_string(bin.count), fmt12(bin.density)});
            }
            for (const auto& atom : hist.atoms) {
                csv += csv_join({label, "atom", fmt12(atom.location),
                                 fmt12(atom.location), std::to_string(atom.count),
                                 fmt12(atom.mass)});
            }
        }
        write_output(out, csv);
        return kExitOk;
    }

    json all = json::array();
    for (const auto& [label, hist] : regimes) {
        all.push_back(json{{"regime", label}, {"histogram", histogram_json(hist)}});
    }
    json j{{"command", "figure-data"},
           {"params",
            {{"figure", fig},
             {"env", manip_env_json(env)},
             {"ttest_cutoff", num(ttest_cutoff)},
             {"n", n},
             {"seed", seed},
             {"bin_width", num(bin_width)}}},
           {"result",
            {{"x_star", num(sol.x_star)},
             {"gamma_star", num(env.gamma_star())},
             {"series", all}}}};
    write_output(out, j.dump(2) + "\n");
    return kExitOk;
}

int run_calibrate(const std::string& input, const pubopt::CalibrationConfig& cfg,
                  const OutputOptions& out) {
    const pubopt::PValueDataset data = pubopt::load_pvalue_file(input);
    const pubopt::CalibrationReport report = pubopt::calibrate_pipeline(data, cfg);
    if (!report.manipulation_robust) {
        std::cerr << "warning: adjusted 95th-percentile |t| = " << fmt12(report.qbar)
                  << " does not clear 2.56; the prior-variance estimate may be "
                     "contaminated by manipulation\n";
    }
    if (out.format == "csv") {
        std::string text =
            csv_join({"eta2", "cm", "ca", "level", "raw_share", "adjusted_b",
                      "percentile_used", "n_used", "n_rejected"});
        text += csv_join({fmt12(report.params.eta2), fmt12(report.params.cm),
                          fmt12(report.params.ca), report.params.level,
                          fmt12(report.raw_share), fmt12(report.adjusted_b),
                          fmt12(report.percentile_used), std::to_string(report.n_used),
                          std::to_string(report.n_rejected)});
        write_output(out, text);
        return kExitOk;
    }
    json j{{"command", "calibrate"},
           {"params",
            {{"input", input},
             {"level_cutoff", num(cfg.level_cutoff)},
             {"bunch_lo", num(cfg.bunch_lo)},
             {"bunch_hi", num(cfg.bunch_hi)},
             {"unpublished_share", num(cfg.unpublished_share)},
             {"prereg_share", num(cfg.prereg_share)},
             {"raw_bunch_share_override", opt_num(cfg.raw_bunch_share_override)},
             {"model_scale_cm", cfg.model_scale_cm}}},
           {"result",
            {{"eta2", num(report.params.eta2)},
             {"cm", num(report.params.cm)},
             {"ca", num(report.params.ca)},
             {"level", report.params.level},
             {"raw_share", num(report.raw_share)},
             {"adjusted_b", num(report.adjusted_b)},
             {"percentile_used", num(report.percentile_used)},
             {"qbar", num(report.qbar)},
             {"manipulation_robust", report.manipulation_robust},
             {"n_used", report.n_used},
             {"n_rejected", report.n_rejected}}}};
    write_output(out, j.dump(2) + "\n");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"optimal publication rules: verifiable designs, manipulation, "
                 "equilibrium simulation, and calibration"};
    app.require_subcommand(1);

    // rule
    auto* rule_cmd = app.add_subcommand("rule", "constrained-optimal threshold rule");
    double r_eta2 = 1.0, r_ca = 1.0, r_s2 = 0.0, r_cost = 0.0;
    OutputOptions rule_out;
    rule_cmd->add_option("--eta2", r_eta2, "prior variance")->required();
    rule_cmd->add_option("--ca", r_ca, "attention cost")->required();
    rule_cmd->add_option("--s2", r_s2, "design variance")->required();
    rule_cmd->add_option("--cost", r_cost, "research cost")->required();
    add_output_flags(rule_cmd, rule_out);

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "compare two verifiable designs");
    double c_eta2 = 1.0, c_ca = 1.0;
    double c_s2e = 0.0, c_coste = 0.0, c_s2o = 0.0, c_costo = 0.0;
    bool c_fig2 = false;
    std::vector<double> c_ca_values{0.5, 1.0};
    double c_s2lo = 0.05, c_s2hi = 4.0;
    int c_points = 80;
    OutputOptions cmp_out;
    cmp_cmd->add_option("--eta2", c_eta2, "prior variance");
    cmp_cmd->add_option("--ca", c_ca, "attention cost");
    cmp_cmd->add_option("--s2-e", c_s2e, "variance of design E");
    cmp_cmd->add_option("--cost-e", c_coste, "cost of design E");
    cmp_cmd->add_option("--s2-o", c_s2o, "variance of design O");
    cmp_cmd->add_option("--cost-o", c_costo, "cost of design O");
    cmp_cmd->add_flag("--fig2-sweep", c_fig2,
                      "emit the indifference-curve sweep instead of a single comparison");
    cmp_cmd->add_option("--ca-list", c_ca_values, "attention costs for the sweep");
    cmp_cmd->add_option("--s2-lo", c_s2lo, "sweep lower bound on the O variance");
    cmp_cmd->add_option("--s2-hi", c_s2hi, "sweep upper bound on the O variance");
    cmp_cmd->add_option("--points", c_points, "sweep grid size");
    add_output_flags(cmp_cmd, cmp_out);

    // optimize
    auto* opt_cmd = app.add_subcommand("optimize", "optimal smoothed rule under manipulation");
    ManipEnvFlags opt_flags;
    OutputOptions opt_out;
    add_manip_env_flags(opt_cmd, opt_flags, true);
    add_output_flags(opt_cmd, opt_out);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "simulate one rule/policy row");
    ManipEnvFlags sim_flags;
    std::string sim_rule = "ttest";
    std::optional<double> sim_threshold;
    std::string sim_policy = "best-respond";
    std::size_t sim_n = 1000000;
    std::uint64_t sim_seed = 1;
    OutputOptions sim_out;
    add_manip_env_flags(sim_cmd, sim_flags, true);
    sim_cmd->add_option("--rule", sim_rule, "publication rule")
        ->check(CLI::IsMember({"ttest", "optimal"}));
    sim_cmd->add_option("--threshold", sim_threshold, "custom threshold cutoff");
    sim_cmd->add_option("--policy", sim_policy, "researcher policy")
        ->check(CLI::IsMember({"truthful", "best-respond"}));
    sim_cmd->add_option("--n", sim_n, "population size");
    sim_cmd->add_option("--seed", sim_seed, "random seed");
    add_output_flags(sim_cmd, sim_out);

    // table2
    auto* tab_cmd = app.add_subcommand("table2", "summary rows for the calibrations");
    std::string tab_which = "both";
    std::size_t tab_n = 1000000;
    std::uint64_t tab_seed = 1;
    OutputOptions tab_out;
    tab_cmd->add_option("--calibration", tab_which, "which calibration(s)")
        ->check(CLI::IsMember({"five_pct", "one_pct", "both"}));
    tab_cmd->add_option("--n", tab_n, "population size");
    tab_cmd->add_option("--seed", tab_seed, "random seed");
    add_output_flags(tab_cmd, tab_out);

    // figure-data
    auto* fig_cmd = app.add_subcommand("figure-data", "data series behind the figures");
    std::string fig_name;
    ManipEnvFlags fig_flags;
    fig_flags.eta2 = 2.0;
    fig_flags.s2 = 0.0;
    fig_flags.cm = 2.0;
    fig_flags.ca = 0.5;
    std::size_t fig_n = 1000000;
    std::uint64_t fig_seed = 1;
    double fig_bin_width = 0.05, fig_ce_max = 0.6, fig_step = 0.01;
    OutputOptions fig_out;
    fig_cmd->add_option("figure", fig_name, "one of fig3, fig4, fig5")
        ->required()
        ->check(CLI::IsMember({"fig3", "fig4", "fig5"}));
    add_manip_env_flags(fig_cmd, fig_flags, true);
    fig_cmd->add_option("--n", fig_n, "population size");
    fig_cmd->add_option("--seed", fig_seed, "random seed");
    fig_cmd->add_option("--bin-width", fig_bin_width, "histogram bin width");
    fig_cmd->add_option("--ce-max", fig_ce_max, "fig4: sweep upper bound");
    fig_cmd->add_option("--step", fig_step, "fig4: sweep step");
    add_output_flags(fig_cmd, fig_out);

    // calibrate
    auto* cal_cmd = app.add_subcommand("calibrate", "calibrate parameters from p-values");
    std::string cal_input;
    std::string cal_level = "five_pct";
    pubopt::CalibrationConfig cal_cfg;
    bool cal_have_lo = false, cal_have_hi = false;
    double cal_lo = 0.0, cal_hi = 0.0;
    std::optional<double> cal_raw;
    OutputOptions cal_out;
    cal_cmd->add_option("--input", cal_input, "p-value file (header `p_value`)")
        ->required();
    cal_cmd->add_option("--level", cal_level, "significance level preset")
        ->check(CLI::IsMember({"five_pct", "one_pct"}));
    cal_cmd->add_option("--unpublished-share", cal_cfg.unpublished_share,
                        "share of studies never published");
    cal_cmd->add_option("--prereg-share", cal_cfg.prereg_share,
                        "share of published studies that are pre-registered");
    cal_cmd->add_option("--bunch-lo", cal_lo, "bunching window lower edge")
        ->each([&](const std::string&) { cal_have_lo = true; });
    cal_cmd->add_option("--bunch-hi", cal_hi, "bunching window upper edge")
        ->each([&](const std::string&) { cal_have_hi = true; });
    cal_cmd->add_option("--raw-share", cal_raw,
                        "override the empirical raw bunching share");
    cal_cmd->add_flag("--model-scale", cal_cfg.model_scale_cm,
                      "solve the bunching equation on the model scale");
    add_output_flags(cal_cmd, cal_out);

    try {
        app.parse(argc, argv);

        if (rule_cmd->parsed()) {
            const pubopt::Environment env{r_eta2, r_ca};
            const pubopt::Design design{r_s2, r_cost};
            pubopt::validate(env);
            pubopt::validate(design);
            return run_rule(env, design, rule_out);
        }
        if (cmp_cmd->parsed()) {
            if (c_fig2) {
                return run_fig2_sweep(c_eta2, c_ca_values, c_s2lo, c_s2hi, c_points,
                                      cmp_out);
            }
            const pubopt::Environment env{c_eta2, c_ca};
            pubopt::validate(env);
            return run_compare(env, pubopt::Design{c_s2e, c_coste},
                               pubopt::Design{c_s2o, c_costo}, cmp_out);
        }
        if (opt_cmd->parsed()) {
            return run_optimize(opt_flags.resolve(), opt_out);
        }
        if (sim_cmd->parsed()) {
            return run_simulate(sim_flags.resolve(), sim_flags.ttest_cutoff(), sim_rule,
                                sim_threshold, sim_policy, sim_n, sim_seed, sim_out);
        }
        if (tab_cmd->parsed()) {
            return run_table2(tab_which, tab_n, tab_seed, tab_out);
        }
        if (fig_cmd->parsed()) {
            // --ca carries a preset default here; an explicit --cutoff-target
            // takes precedence over that default
            if (fig_cmd->count("--cutoff-target") > 0 && fig_cmd->count("--ca") == 0) {
                fig_flags.ca.reset();
            }
            return run_figure(fig_name, fig_flags, fig_n, fig_seed, fig_bin_width,
                              fig_ce_max, fig_step, fig_out);
        }
        if (cal_cmd->parsed()) {
            if (cal_level == "one_pct") {
                cal_cfg.level_cutoff = 2.56;
                cal_cfg.bunch_lo = 2.55;
                cal_cfg.bunch_hi = 2.60;
            }
            if (cal_have_lo) cal_cfg.bunch_lo = cal_lo;
            if (cal_have_hi) cal_cfg.bunch_hi = cal_hi;
            cal_cfg.raw_bunch_share_override = cal_raw;
            return run_calibrate(cal_input, cal_cfg, cal_out);
        }
        std::cerr << "error: validation: no subcommand given\n";
        return kExitValidation;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
        std::cerr << "error: validation: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::cerr << "error: validation: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: validation: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: numerical: " << e.what() << "\n";
        return kExitNumerical;
    }
}
