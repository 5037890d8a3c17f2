// Optimal publication rules for verifiable (non-manipulable) study designs:
// threshold cutoffs under a participation constraint, expected planner
// losses, worthwhileness tests, pairwise design comparisons, and the
// incentive cost of expensive designs.
#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "pubopt/gaussian.hpp"
#include "pubopt/numeric.hpp"

namespace pubopt {

/// Shared environment: prior variance of the parameter of interest and the
/// planner's per-publication attention cost.
struct Environment {
    double eta2; // prior variance
    double ca;   // attention cost
};

/// An unbiased study design: sampling variance and the researcher's private
/// cost of running it (normalized by the value of one publication).
struct Design {
    double s2;   // variance of the reported statistic around the parameter
    double cost; // research cost, in [0,1]
};

/// Deterministic publication rule: publish iff |X| >= cutoff.
struct ThresholdRule {
    double cutoff;
};

enum class DesignClass { Cheap, Expensive };
enum class Preference { PlannerPrefersE, PlannerPrefersO, Indifferent };

inline void validate(const Environment& env) {
    if (!(env.eta2 > 0.0)) throw std::domain_error("Environment: eta2 must be > 0");
    if (!(env.ca >= 0.0)) throw std::domain_error("Environment: ca must be >= 0");
}

inline void validate(const Design& d) {
    if (!(d.s2 >= 0.0)) throw std::domain_error("Design: s2 must be >= 0");
    if (!(d.cost >= 0.0 && d.cost <= 1.0))
        throw std::domain_error("Design: cost must lie in [0,1]");
}

/// Reduction of the audience's posterior variance when a result of design d
/// is published: eta^4 / (s2 + eta^2). Lies in (0, eta2].
inline double post_var_red(const Environment& env, const Design& d) {
    return env.eta2 * env.eta2 / (d.s2 + env.eta2);
}

/// Marginal standard deviation of the reported statistic, sqrt(s2 + eta2).
inline double marginal_sd(const Environment& env, const Design& d) {
    return std::sqrt(d.s2 + env.eta2);
}

/// Cutoff at which a published result moves the audience's action enough to
/// cover the attention cost: (s2 + eta2)/eta2 * sqrt(ca).
inline double gamma_star(const Environment& env, const Design& d) {
    return (d.s2 + env.eta2) / env.eta2 * std::sqrt(env.ca);
}

/// Ex-ante publication mass of the rule 1{|X| >= cutoff}, with X drawn from
/// its marginal N(0, s2 + eta2).
inline double publication_mass(const Environment& env, const Design& d,
                               double cutoff) {
    if (cutoff <= 0.0) return 1.0;
    if (!std::isfinite(cutoff)) return 0.0;
    return 2.0 * norm_cdf(-cutoff / marginal_sd(env, d));
}

/// A design is cheap when the unconstrained cutoff already delivers enough
/// ex-ante publication probability to cover the research cost.
inline DesignClass classify_design(const Environment& env, const Design& d) {
    validate(env);
    validate(d);
    const double mass = publication_mass(env, d, gamma_star(env, d));
    return d.cost < mass ? DesignClass::Cheap : DesignClass::Expensive;
}

/// Cutoff guaranteeing ex-ante publication probability `cost`:
/// |Phi^{-1}(cost/2)| * sqrt(s2 + eta2). Infinite for cost == 0.
inline double participation_cutoff(const Environment& env, const Design& d) {
    if (d.cost <= 0.0) return std::numeric_limits<double>::infinity();
    if (d.cost >= 1.0) return 0.0;
    return std::abs(norm_quantile(0.5 * d.cost)) * marginal_sd(env, d);
}

/// Loss-minimizing cutoff subject to the researcher's participation
/// constraint: the smaller of the attention cutoff and the participation
/// cutoff.
inline ThresholdRule optimal_cutoff(const Environment& env, const Design& d) {
    validate(env);
    validate(d);
    return ThresholdRule{std::min(gamma_star(env, d), participation_cutoff(env, d))};
}

/// Expected planner loss of the rule 1{|X| >= t}:
///   eta2 + mass * ca - PostVarRed * upsilon(mass), mass = P(|X| >= t).
inline double threshold_rule_loss(const Environment& env, const Design& d,
                                  const ThresholdRule& rule) {
    validate(env);
    validate(d);
    if (!(rule.cutoff >= 0.0))
        throw std::domain_error("ThresholdRule: cutoff must be >= 0");
    const double mass = publication_mass(env, d, rule.cutoff);
    return env.eta2 + mass * env.ca - post_var_red(env, d) * upsilon(mass);
}

/// Expected loss at the constrained-optimal cutoff. Closed form: the
/// publication mass equals the cost for expensive designs and the
/// unconstrained-cutoff mass for cheap ones.
inline double optimal_loss(const Environment& env, const Design& d) {
    validate(env);
    validate(d);
    const double mass = classify_design(env, d) == DesignClass::Cheap
                            ? publication_mass(env, d, gamma_star(env, d))
                            : d.cost;
    return env.eta2 + mass * env.ca - post_var_red(env, d) * upsilon(mass);
}

/// Outcome of the worthwhileness test, with the exact criterion and the two
/// one-sided sufficient bounds reported for cross-checking.
struct WorthwhileCertificate {
    bool worthwhile;
    DesignClass klass;
    double exact_lhs; // upsilon(cost) * PostVarRed
    double exact_rhs; // cost * ca
    bool sufficient_bound_fired; // PostVarRed >= cost*ca + eta2*(1-cost)^3
    bool necessary_bound_violated; // PostVarRed < cost*ca
};

/// Is incentivizing the design at all better than publishing nothing?
/// Cheap designs always are; expensive ones exactly when
/// upsilon(cost) * PostVarRed >= cost * ca.
inline WorthwhileCertificate is_worthwhile(const Environment& env, const Design& d) {
    const DesignClass klass = classify_design(env, d);
    const double pvr = post_var_red(env, d);
    const double one_minus_c = 1.0 - d.cost;
    WorthwhileCertificate cert{};
    cert.klass = klass;
    cert.exact_lhs = upsilon(d.cost) * pvr;
    cert.exact_rhs = d.cost * env.ca;
    cert.sufficient_bound_fired =
        pvr >= d.cost * env.ca + env.eta2 * one_minus_c * one_minus_c * one_minus_c;
    cert.necessary_bound_violated = pvr < d.cost * env.ca;
    cert.worthwhile =
        klass == DesignClass::Cheap || cert.exact_lhs >= cert.exact_rhs;
    return cert;
}

/// Side information for a pairwise design comparison: the attention-cost
/// level at which the planner would switch designs, and whether the two
/// interpretable sufficient bounds fire. Requires the canonical ordering
/// s2_e < s2_o, cost_e > cost_o.
struct ComparisonDiagnostics {
    std::optional<double> critical_ca; // loss-equality root in ca, if bracketed
    bool e_expensive = false;
    bool o_expensive = false;
    double effective_cost_o = 0.0; // cost_o, or the cheap-design substitution
    bool prefer_e_bound_fired = false;
    bool prefer_o_bound_fired = false;
};

struct DesignComparison {
    Preference decision;
    double loss_e;
    double loss_o;
    std::optional<ComparisonDiagnostics> diagnostics;
};

/// Exact comparison of the constrained-optimal losses of two designs.
/// Indifference is declared at relative tolerance 1e-9 (ties in the model
/// are measure-zero; a fixed tolerance keeps results deterministic).
inline DesignComparison compare_designs(const Environment& env, const Design& e,
                                        const Design& o) {
    validate(env);
    validate(e);
    validate(o);
    DesignComparison cmp{};
    cmp.loss_e = optimal_loss(env, e);
    cmp.loss_o = optimal_loss(env, o);
    const double tol = 1e-9 * std::max(1.0, env.eta2);
    if (std::abs(cmp.loss_e - cmp.loss_o) <= tol) {
        cmp.decision = Preference::Indifferent;
    } else {
        cmp.decision = cmp.loss_e < cmp.loss_o ? Preference::PlannerPrefersE
                                               : Preference::PlannerPrefersO;
    }

    if (!(e.s2 < o.s2 && e.cost > o.cost)) return cmp; // diagnostics unavailable

    ComparisonDiagnostics diag{};
    diag.e_expensive = classify_design(env, e) == DesignClass::Expensive;
    diag.o_expensive = classify_design(env, o) == DesignClass::Expensive;
    diag.effective_cost_o =
        diag.o_expensive ? o.cost : publication_mass(env, o, gamma_star(env, o));

    if (diag.e_expensive) {
        const double gap = post_var_red(env, e) - post_var_red(env, o);
        const double co = diag.effective_cost_o;
        diag.prefer_e_bound_fired = gap >= (1.0 - co / e.cost) * env.ca;
        diag.prefer_o_bound_fired = gap <= (e.cost - (1.0 + 2.0 * co) / 3.0) * env.ca;
    }

    // Critical attention cost: root of L*_e(ca) - L*_o(ca) on (1e-8, 10*eta2).
    const auto loss_gap = [&](double ca) {
        const Environment scan{env.eta2, ca};
        return optimal_loss(scan, e) - optimal_loss(scan, o);
    };
    const double lo = 1e-8;
    const double hi = 10.0 * env.eta2;
    if (loss_gap(lo) * loss_gap(hi) < 0.0) {
        diag.critical_ca = bisect_root(loss_gap, lo, hi, 1e-12);
    }
    cmp.diagnostics = diag;
    return cmp;
}

/// Planner loss attributable to the participation constraint alone: the loss
/// of the design minus the loss of a free design with the same variance.
/// Zero exactly for cheap designs.
inline double incentive_cost(const Environment& env, const Design& e) {
    const Design free_design{e.s2, 0.0};
    return optimal_loss(env, e) - optimal_loss(env, free_design);
}

} // namespace pubopt
