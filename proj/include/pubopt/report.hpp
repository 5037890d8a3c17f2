// Assembled outputs: the two calibration presets, summary-table rows for a
// rule/policy pair (simulated and in expectation), the design-comparison
// indifference curve, and the experiment-vs-observational loss-ratio sweep.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pubopt/calibration.hpp"
#include "pubopt/design_rules.hpp"
#include "pubopt/manipulation.hpp"
#include "pubopt/simulation.hpp"

namespace pubopt {

/// A named parameterization of the manipulation game plus the conventional
/// test cutoff it was matched to.
struct CalibrationPreset {
    std::string name;
    ManipulationEnv env;
    double ttest_cutoff;
};

inline CalibrationPreset five_pct_calibration() {
    const double eta2 = 1.94;
    return CalibrationPreset{"five_pct",
                             ManipulationEnv{eta2, 1.0, derive_ca(eta2, 1.96), 0.98, 0.0},
                             1.96};
}

inline CalibrationPreset one_pct_calibration() {
    const double eta2 = 1.94;
    return CalibrationPreset{"one_pct",
                             ManipulationEnv{eta2, 1.0, derive_ca(eta2, 2.56), 0.83, 0.0},
                             2.56};
}

inline CalibrationPreset calibration_preset(const std::string& name) {
    if (name == "five_pct") return five_pct_calibration();
    if (name == "one_pct") return one_pct_calibration();
    throw std::domain_error("unknown calibration preset: " + name);
}

/// One summary row: a rule/policy pair evaluated both by simulation and by
/// quadrature.
struct SummaryRow {
    std::string rule_label;
    std::string policy_label;
    RuleSpec rule;
    ResearcherPolicy policy;
    std::optional<double> x_star; // set for the optimal smoothed rule
    SummaryStats simulated;
    RuleOutcome expected;
};

namespace detail {

inline SummaryRow make_row(const ManipulationEnv& env, std::string rule_label,
                           std::string policy_label, const RuleSpec& rule,
                           ResearcherPolicy policy,
                           std::span<const PopulationDraw> population,
                           std::uint64_t seed) {
    SummaryRow row{};
    row.rule_label = std::move(rule_label);
    row.policy_label = std::move(policy_label);
    row.rule = rule;
    row.policy = policy;
    const auto records = simulate_equilibrium(env, rule, policy, population, seed);
    row.simulated = summarize(records);
    row.expected = std::visit(
        [&](const auto& r) { return expected_outcome(env, r, policy); }, rule);
    return row;
}

} // namespace detail

/// The three standard rows for one calibration: the conventional cutoff
/// without and with manipulation, and the optimal smoothed rule.
struct CalibrationTable {
    CalibrationPreset preset;
    ManipulationSolution solution;
    std::vector<SummaryRow> rows;
};

inline CalibrationTable summary_table(const CalibrationPreset& preset, std::size_t n,
                                      std::uint64_t seed) {
    CalibrationTable table{preset, optimize_rule(preset.env), {}};
    const auto population = sample_population(preset.env, n, seed);
    const ThresholdRule ttest{preset.ttest_cutoff};
    table.rows.push_back(detail::make_row(preset.env, "ttest", "truthful",
                                          RuleSpec{ttest}, ResearcherPolicy::Truthful,
                                          population, seed + 1));
    table.rows.push_back(detail::make_row(preset.env, "ttest", "best_respond",
                                          RuleSpec{ttest}, ResearcherPolicy::BestRespond,
                                          population, seed + 2));
    SummaryRow optimal = detail::make_row(
        preset.env, "optimal", "best_respond",
        RuleSpec{table.solution.rule(preset.env)}, ResearcherPolicy::BestRespond,
        population, seed + 3);
    optimal.x_star = table.solution.x_star;
    table.rows.push_back(std::move(optimal));
    return table;
}

/// Indifference-curve point: the cost of the precise design at which the
/// planner is exactly indifferent against a cheap imprecise design of
/// variance s2_o (precise design has zero variance).
struct IndifferencePoint {
    double s2_o;
    std::optional<double> cost_e; // empty when no interior indifference cost
};

/// Sweeps the imprecise design's variance and solves for the indifference
/// cost of the zero-variance design. The imprecise design must be cheap so
/// its loss does not depend on its cost.
inline std::vector<IndifferencePoint> indifference_curve(const Environment& env,
                                                         double s2_lo, double s2_hi,
                                                         int points) {
    validate(env);
    if (points < 2) throw std::domain_error("indifference_curve: need >= 2 points");
    std::vector<IndifferencePoint> curve;
    curve.reserve(points);
    for (int i = 0; i < points; ++i) {
        const double s2 = s2_lo + (s2_hi - s2_lo) * i / (points - 1);
        const Design imprecise{s2, 0.0};
        const double loss_o = optimal_loss(env, imprecise);
        const auto gap = [&](double cost) {
            return optimal_loss(env, Design{0.0, cost}) - loss_o;
        };
        IndifferencePoint pt{s2, std::nullopt};
        if (gap(0.0) < 0.0 && gap(1.0) > 0.0) {
            pt.cost_e = bisect_root(gap, 0.0, 1.0, 1e-12);
        }
        curve.push_back(pt);
    }
    return curve;
}

/// Loss ratios of a pre-registered experiment against the manipulable
/// design, under the conventional cutoff and under the optimal rule.
struct LossRatioPoint {
    double cost_e;
    double loss_experiment;
    double ratio_vs_naive;   // experiment loss / cutoff-rule loss
    double ratio_vs_optimal; // experiment loss / optimal-rule loss
};

inline std::vector<LossRatioPoint> loss_ratio_sweep(const CalibrationPreset& preset,
                                                    double ce_max = 0.6,
                                                    double step = 0.01) {
    const double loss_naive =
        expected_loss_under_rule(preset.env, ThresholdRule{preset.ttest_cutoff});
    const double loss_optimal = optimize_rule(preset.env).expected_loss;
    const Environment plain{preset.env.eta2, preset.env.ca};
    std::vector<LossRatioPoint> sweep;
    const int n = static_cast<int>(std::round(ce_max / step));
    for (int i = 0; i <= n; ++i) {
        const double ce = i * step;
        const double loss_e = optimal_loss(plain, Design{preset.env.s2, ce});
        sweep.push_back(LossRatioPoint{ce, loss_e, loss_e / loss_naive,
                                       loss_e / loss_optimal});
    }
    return sweep;
}

} // namespace pubopt
