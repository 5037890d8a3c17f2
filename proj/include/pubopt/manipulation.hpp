// The manipulation game: researchers privately observe their unmanipulated
// result and may report it with a bias at linear cost. This module computes
// the researcher's best response, the planner's expected loss under any
// cutoff or linearly smoothed rule, the optimal smoothed rule, the induced
// equilibrium reporting map, and the comparison against a pre-registered
// (non-manipulable) experiment.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "pubopt/design_rules.hpp"
#include "pubopt/gaussian.hpp"
#include "pubopt/numeric.hpp"

namespace pubopt {

/// Environment of the manipulation game. The signal variance s2 is common
/// knowledge; manipulation costs cm per unit of reported bias on top of a
/// fixed research cost c0 < 1.
struct ManipulationEnv {
    double eta2; // prior variance
    double s2;   // common-knowledge signal variance
    double ca;   // attention cost
    double cm;   // marginal manipulation cost
    double c0;   // fixed research cost

    double omega() const { return eta2 / (s2 + eta2); }
    double gamma_star() const { return std::sqrt(ca) / omega(); }
    double sigma() const { return std::sqrt(s2 + eta2); } // sd of theta + eps
};

inline void validate(const ManipulationEnv& env) {
    if (!(env.eta2 > 0.0)) throw std::domain_error("ManipulationEnv: eta2 must be > 0");
    if (!(env.s2 >= 0.0)) throw std::domain_error("ManipulationEnv: s2 must be >= 0");
    if (!(env.ca > 0.0)) throw std::domain_error("ManipulationEnv: ca must be > 0");
    if (!(env.cm > 0.0)) throw std::domain_error("ManipulationEnv: cm must be > 0");
    if (!(env.c0 >= 0.0 && env.c0 < 1.0))
        throw std::domain_error("ManipulationEnv: c0 must lie in [0,1)");
}

/// Publication probability 0 below cutoff - 1/slope, 1 above the cutoff,
/// linear in |x| on the ramp between.
struct SmoothedRule {
    double cutoff; // guaranteed-publication point
    double slope;  // ramp slope
};

inline void validate(const SmoothedRule& rule) {
    if (!(rule.cutoff > 0.0)) throw std::domain_error("SmoothedRule: cutoff must be > 0");
    if (!(rule.slope > 0.0)) throw std::domain_error("SmoothedRule: slope must be > 0");
}

inline double smoothed_rule_eval(const SmoothedRule& rule, double x) {
    validate(rule);
    const double ax = std::abs(x);
    if (ax >= rule.cutoff) return 1.0;
    if (ax <= rule.cutoff - 1.0 / rule.slope) return 0.0;
    return 1.0 - rule.slope * (rule.cutoff - ax);
}

/// A researcher's optimal (publication probability, bias) pair subject to a
/// promised utility level v = pub_prob - cm * bias.
struct BestResponse {
    double pub_prob; // optimal publication probability
    double bias;     // optimal reported bias, >= 0
    double utility;  // v - c0, relative to not participating
};

/// Loss-minimizing response delivering promised level v in [0,1] to a
/// researcher whose unmanipulated result is y. Below the attention cutoff
/// the researcher does not manipulate; above it, a strictly positive bias
/// lowers the planner's conditional loss.
inline BestResponse best_response(const ManipulationEnv& env, double y, double v) {
    validate(env);
    if (!(v >= 0.0 && v <= 1.0))
        throw std::domain_error("best_response: v must lie in [0,1], got " +
                                std::to_string(v));
    const double g = env.gamma_star();
    const double ay = std::abs(y);
    double p = v;
    if (ay > g) {
        const double disc = v * v + 3.0 * env.cm * env.cm * (y * y - g * g);
        p = std::min(1.0, (2.0 * v + std::sqrt(disc)) / 3.0);
    }
    return BestResponse{p, (p - v) / env.cm, v - env.c0};
}

/// Planner's conditional loss excess at the best response, relative to not
/// publishing: (omega^2 (bias^2 - y^2) + ca) * pub_prob. Negative above the
/// attention cutoff, zero at it, positive below (for v > 0).
inline double type_loss(const ManipulationEnv& env, double y, double v) {
    const BestResponse br = best_response(env, y, v);
    const double om = env.omega();
    return (om * om * (br.bias * br.bias - y * y) + env.ca) * br.pub_prob;
}

/// Equilibrium behavior of one researcher type under a publication rule,
/// in the planner-preferred equilibrium.
struct EquilibriumResponse {
    bool participates;
    double pub_prob;   // probability the report is published
    double bias;       // reported bias, >= 0
    double reported_x; // sign(y) * (|y| + bias); y itself when not participating
    double promised_v; // pub_prob - cm * bias
};

namespace detail {

// Promised level delivered by the slope-cm smoothed rule with cutoff xstar
// to a type with |y| = ay, before the participation decision.
inline double ramp_level(const ManipulationEnv& env, double xstar, double ay) {
    return std::min(1.0, 1.0 - env.cm * (xstar - ay));
}

// Onset of pub_prob == 1 along the ramp of a slope-cm rule: smallest
// |y| > lo at which the best response hits probability one.
inline double bunching_onset(const ManipulationEnv& env, double xstar, double lo) {
    const auto gap = [&](double y) {
        const double v = std::clamp(ramp_level(env, xstar, y), 0.0, 1.0);
        return best_response(env, y, v).pub_prob - 1.0;
    };
    if (lo >= xstar) return xstar;
    if (gap(lo) >= 0.0) return lo;
    if (gap(xstar) <= 0.0) return xstar;
    return bisect_root(gap, lo, xstar, 1e-13);
}

inline EquilibriumResponse no_participation(double y) {
    return EquilibriumResponse{false, 0.0, 0.0, y, 0.0};
}

inline double signed_report(double y, double magnitude) {
    return y < 0.0 ? -magnitude : magnitude;
}

// Response to a slope-cm smoothed rule with cutoff xstar. On the ramp every
// bias in reach yields the same utility, so the planner-preferred
// equilibrium selects the loss-minimizing response at the promised level.
inline EquilibriumResponse respond_slope_cm(const ManipulationEnv& env, double xstar,
                                            double y) {
    const double ay = std::abs(y);
    const double v = ramp_level(env, xstar, ay);
    const double util = v - env.c0;
    if (util < 0.0) return no_participation(y);
    if (util == 0.0 && type_loss(env, y, v) > 0.0) return no_participation(y);
    const BestResponse br = best_response(env, y, v);
    if (br.pub_prob >= 1.0 && ay < xstar) {
        // guaranteed publication is first reached exactly at the cutoff
        return EquilibriumResponse{true, 1.0, xstar - ay, signed_report(y, xstar), v};
    }
    return EquilibriumResponse{true, br.pub_prob, br.bias,
                               signed_report(y, ay + br.bias), v};
}

// Response to a hard cutoff at q (also the slope > cm case with q the
// guaranteed-publication point): climbing the ramp gains more than it
// costs, so types within reach jump exactly to q.
inline EquilibriumResponse respond_jump(const ManipulationEnv& env, double q,
                                        double y) {
    const double ay = std::abs(y);
    if (ay >= q) return EquilibriumResponse{true, 1.0, 0.0, y, 1.0};
    const double util = 1.0 - env.cm * (q - ay) - env.c0;
    if (util <= 0.0) return no_participation(y);
    const double bias = q - ay;
    return EquilibriumResponse{true, 1.0, bias, signed_report(y, q),
                               1.0 - env.cm * bias};
}

// Response when the ramp is flatter than the manipulation cost: no bias is
// ever worthwhile, so the report is truthful and participation only
// requires the publication probability to cover the fixed cost.
inline EquilibriumResponse respond_truthful_ramp(const ManipulationEnv& env,
                                                 const SmoothedRule& rule, double y) {
    const double p = smoothed_rule_eval(rule, y);
    const double util = p - env.c0;
    const bool tie_publish = util == 0.0 && p > 0.0 && std::abs(y) >= env.gamma_star();
    if (util > 0.0 || tie_publish)
        return EquilibriumResponse{true, p, 0.0, y, p};
    return no_participation(y);
}

inline bool slope_is_cm(const ManipulationEnv& env, const SmoothedRule& rule) {
    return std::abs(rule.slope - env.cm) <= 1e-9 * env.cm;
}

} // namespace detail

/// Planner-preferred equilibrium response to a smoothed rule.
inline EquilibriumResponse rule_response(const ManipulationEnv& env,
                                         const SmoothedRule& rule, double y) {
    validate(env);
    validate(rule);
    if (detail::slope_is_cm(env, rule)) return detail::respond_slope_cm(env, rule.cutoff, y);
    if (rule.slope > env.cm) return detail::respond_jump(env, rule.cutoff, y);
    return detail::respond_truthful_ramp(env, rule, y);
}

/// Planner-preferred equilibrium response to a hard threshold rule
/// (slope -> infinity limit of a smoothed rule).
inline EquilibriumResponse rule_response(const ManipulationEnv& env,
                                         const ThresholdRule& rule, double y) {
    validate(env);
    if (!(rule.cutoff >= 0.0))
        throw std::domain_error("ThresholdRule: cutoff must be >= 0");
    return detail::respond_jump(env, rule.cutoff, y);
}

// ---------------------------------------------------------------------------
// Expected outcomes under a rule: publication mass, manipulation intensity,
// and planner loss, by adaptive quadrature over the type distribution with
// segment splits at every kink of the equilibrium response.
// ---------------------------------------------------------------------------

/// Population-level expectations under a rule and researcher policy.
struct RuleOutcome {
    double pub_mass;          // expected publication probability
    double manipulated_share; // share of published findings with positive bias
    double avg_bias;          // mean |bias| within published findings
    double expected_loss;     // planner's expected loss
};

enum class ResearcherPolicy { BestRespond, Truthful };

namespace detail {

constexpr double kBiasTol = 1e-12; // biases below this count as unmanipulated

// Kinks of the equilibrium response in |y| for each rule regime, used as
// quadrature segment boundaries. The last entry is the integration bound.
template <typename Rule>
std::vector<double> response_kinks(const ManipulationEnv& env, const Rule& rule,
                                   ResearcherPolicy policy) {
    std::vector<double> kinks{0.0, env.gamma_star()};
    double top = std::max(env.gamma_star(), rule.cutoff);
    if constexpr (std::is_same_v<Rule, ThresholdRule>) {
        kinks.push_back(rule.cutoff - (1.0 - env.c0) / env.cm);
        kinks.push_back(rule.cutoff);
    } else {
        kinks.push_back(rule.cutoff);
        kinks.push_back(rule.cutoff - 1.0 / rule.slope);
        if (policy == ResearcherPolicy::Truthful || rule.slope < env.cm) {
            kinks.push_back(rule.cutoff - (1.0 - env.c0) / rule.slope);
        } else if (slope_is_cm(env, rule)) {
            const double part = rule.cutoff - (1.0 - env.c0) / env.cm;
            kinks.push_back(part);
            kinks.push_back(
                bunching_onset(env, rule.cutoff, std::max(part, env.gamma_star())));
        } else {
            kinks.push_back(rule.cutoff - (1.0 - env.c0) / env.cm);
        }
    }
    kinks.push_back(top + (1.0 - env.c0) / env.cm + 10.0 * env.sigma());
    return kinks;
}

template <typename Rule>
EquilibriumResponse policy_response(const ManipulationEnv& env, const Rule& rule,
                                    ResearcherPolicy policy, double y) {
    if (policy == ResearcherPolicy::BestRespond) return rule_response(env, rule, y);
    double p = 0.0;
    if constexpr (std::is_same_v<Rule, ThresholdRule>) {
        p = std::abs(y) >= rule.cutoff ? 1.0 : 0.0;
    } else {
        p = smoothed_rule_eval(rule, y);
    }
    return EquilibriumResponse{p > 0.0, p, 0.0, y, p};
}

// Expectation of weight(response, y) over the folded type distribution.
template <typename Rule, typename Weight>
double response_moment(const ManipulationEnv& env, const Rule& rule,
                       ResearcherPolicy policy, const std::vector<double>& kinks,
                       const Weight& weight, double abs_tol = 1e-10) {
    const double sig = env.sigma();
    const double top = *std::max_element(kinks.begin(), kinks.end());
    const std::vector<double> segs = clip_breakpoints(kinks, 0.0, top);
    return integrate_segments(
        [&](double y) {
            const EquilibriumResponse r = policy_response(env, rule, policy, y);
            if (!r.participates) return 0.0;
            return weight(r, y) * 2.0 / sig * norm_pdf(y / sig);
        },
        segs, abs_tol);
}

template <typename Rule>
double expected_loss_impl(const ManipulationEnv& env, const Rule& rule,
                          ResearcherPolicy policy) {
    const double om = env.omega();
    const auto kinks = response_kinks(env, rule, policy);
    return env.eta2 +
           response_moment(env, rule, policy, kinks,
                           [&](const EquilibriumResponse& r, double y) {
                               return (om * om * (r.bias * r.bias - y * y) + env.ca) *
                                      r.pub_prob;
                           });
}

template <typename Rule>
RuleOutcome outcome_impl(const ManipulationEnv& env, const Rule& rule,
                         ResearcherPolicy policy) {
    const auto kinks = response_kinks(env, rule, policy);
    RuleOutcome out{};
    out.pub_mass = response_moment(
        env, rule, policy, kinks,
        [](const EquilibriumResponse& r, double) { return r.pub_prob; });
    const double manip_mass = response_moment(
        env, rule, policy, kinks, [](const EquilibriumResponse& r, double) {
            return r.bias > kBiasTol ? r.pub_prob : 0.0;
        });
    const double bias_mass = response_moment(
        env, rule, policy, kinks,
        [](const EquilibriumResponse& r, double) { return r.bias * r.pub_prob; });
    out.expected_loss = expected_loss_impl(env, rule, policy);
    if (out.pub_mass > 0.0) {
        out.manipulated_share = manip_mass / out.pub_mass;
        out.avg_bias = bias_mass / out.pub_mass;
    } else {
        out.manipulated_share = std::numeric_limits<double>::quiet_NaN();
        out.avg_bias = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

} // namespace detail

/// Expected publication mass, manipulation intensity and planner loss under
/// a rule, by quadrature over the type distribution.
inline RuleOutcome expected_outcome(const ManipulationEnv& env, const SmoothedRule& rule,
                                    ResearcherPolicy policy = ResearcherPolicy::BestRespond) {
    validate(env);
    validate(rule);
    return detail::outcome_impl(env, rule, policy);
}

inline RuleOutcome expected_outcome(const ManipulationEnv& env, const ThresholdRule& rule,
                                    ResearcherPolicy policy = ResearcherPolicy::BestRespond) {
    validate(env);
    if (!(rule.cutoff >= 0.0))
        throw std::domain_error("ThresholdRule: cutoff must be >= 0");
    return detail::outcome_impl(env, rule, policy);
}

/// Planner's expected loss under a rule with researchers best-responding.
inline double expected_loss_under_rule(const ManipulationEnv& env,
                                       const SmoothedRule& rule) {
    validate(env);
    validate(rule);
    return detail::expected_loss_impl(env, rule, ResearcherPolicy::BestRespond);
}

inline double expected_loss_under_rule(const ManipulationEnv& env,
                                       const ThresholdRule& rule) {
    validate(env);
    if (!(rule.cutoff >= 0.0))
        throw std::domain_error("ThresholdRule: cutoff must be >= 0");
    return detail::expected_loss_impl(env, rule, ResearcherPolicy::BestRespond);
}

/// Planner's expected loss when the slope-cm smoothed rule delivers utility
/// u to the type at the attention cutoff. Defined for u in [0, 1-c0]; the
/// rule's guaranteed-publication point is gamma_star + (1-c0-u)/cm.
inline double planner_objective(const ManipulationEnv& env, double u) {
    validate(env);
    if (!(u >= 0.0 && u <= 1.0 - env.c0)) {
        throw std::domain_error("planner_objective: u must lie in [0, 1-c0], got " +
                                std::to_string(u));
    }
    const double xstar = env.gamma_star() + (1.0 - env.c0 - u) / env.cm;
    return detail::expected_loss_impl(env, SmoothedRule{xstar, env.cm},
                                      ResearcherPolicy::BestRespond);
}

/// The optimal smoothed rule and its value.
struct ManipulationSolution {
    double u_star;        // equilibrium utility of the cutoff type
    double x_star;        // guaranteed-publication point of the optimal rule
    double expected_loss; // planner's loss at the optimum

    SmoothedRule rule(const ManipulationEnv& env) const {
        return SmoothedRule{x_star, env.cm};
    }
};

/// Minimizes the planner objective over the cutoff type's utility level.
/// A global grid scan brackets the minimum before golden-section refinement
/// (unimodality of the objective is not established, so the scan guards
/// against secondary local minima).
inline ManipulationSolution optimize_rule(const ManipulationEnv& env,
                                          int scan_points = 1000) {
    validate(env);
    const double span = 1.0 - env.c0;
    const auto grid_u = [&](int i) { return std::min(span, span * i / scan_points); };
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= scan_points; ++i) {
        const double val = planner_objective(env, grid_u(i));
        if (val < best_val) {
            best_val = val;
            best = i;
        }
    }
    const double lo = grid_u(std::max(0, best - 1));
    const double hi = grid_u(std::min(scan_points, best + 1));
    const double u_star = golden_section_min(
        [&](double u) { return planner_objective(env, u); }, lo, hi, 1e-9);
    ManipulationSolution sol{};
    sol.u_star = u_star;
    sol.x_star = env.gamma_star() + (1.0 - env.c0 - u_star) / env.cm;
    sol.expected_loss = planner_objective(env, u_star);
    return sol;
}

/// Equilibrium reporting behavior under the optimal rule: below the
/// participation point no study is run; up to the attention cutoff results
/// are reported truthfully and published with interior probability; between
/// the attention cutoff and x_star reports carry positive bias, bunching
/// exactly at x_star near the top; above x_star reports are truthful and
/// always published.
inline EquilibriumResponse equilibrium_map(const ManipulationEnv& env,
                                           const ManipulationSolution& sol, double y) {
    validate(env);
    return detail::respond_slope_cm(env, sol.x_star, y);
}

/// Comparison of a pre-registered experiment with cost c_e against the
/// manipulable design under its optimal rule.
struct PreregComparison {
    bool prefers_experiment;
    double incentive_cost;   // incentive cost of the experiment
    double bound;            // (1 + 2*S*cm)/cm^2; incentive costs above it
                             // guarantee the manipulable design wins
    double loss_experiment;
    double loss_manipulable;
};

inline PreregComparison compare_prereg_vs_manipulable(const ManipulationEnv& env,
                                                      double c_e) {
    validate(env);
    if (!(c_e >= 0.0 && c_e <= 1.0))
        throw std::domain_error("compare_prereg_vs_manipulable: c_e must lie in [0,1]");
    const Environment plain{env.eta2, env.ca};
    const Design experiment{env.s2, c_e};
    PreregComparison cmp{};
    cmp.loss_experiment = optimal_loss(plain, experiment);
    cmp.loss_manipulable = optimize_rule(env).expected_loss;
    cmp.incentive_cost = incentive_cost(plain, experiment);
    cmp.bound = (1.0 + 2.0 * std::sqrt(env.s2) * env.cm) / (env.cm * env.cm);
    cmp.prefers_experiment = cmp.loss_experiment < cmp.loss_manipulable;
    return cmp;
}

} // namespace pubopt
