#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "oracle_helpers.hpp"
#include "pubopt/report.hpp"
#include "pubopt/simulation.hpp"

using namespace pubopt;

namespace {

const ManipulationEnv& cal_env() {
    static const ManipulationEnv env = five_pct_calibration().env;
    return env;
}

double sample_variance(const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / (v.size() - 1);
}

} // namespace

TEST_CASE("population sampling is deterministic and matches its moments") {
    const auto pop1 = sample_population(cal_env(), 100000, 42);
    const auto pop2 = sample_population(cal_env(), 100000, 42);
    REQUIRE(pop1.size() == pop2.size());
    for (std::size_t i = 0; i < pop1.size(); i += 997) {
        REQUIRE(pop1[i].theta == pop2[i].theta);
        REQUIRE(pop1[i].eps == pop2[i].eps);
    }
    const auto other = sample_population(cal_env(), 100000, 43);
    CHECK(other[0].theta != pop1[0].theta);

    const auto pop = sample_population(cal_env(), 1000000, 7);
    std::vector<double> theta(pop.size()), y(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
        theta[i] = pop[i].theta;
        y[i] = pop[i].theta + pop[i].eps;
    }
    CHECK(sample_variance(theta) == Catch::Approx(1.94).margin(0.01));
    CHECK(sample_variance(y) == Catch::Approx(2.94).margin(0.01));

    CHECK_THROWS_AS(sample_population(cal_env(), 0, 1), std::domain_error);
}

TEST_CASE("results do not depend on the worker thread count") {
    const ManipulationEnv& env = cal_env();
    setenv("PUBOPT_THREADS", "1", 1);
    const auto serial_pop = sample_population(env, 50000, 13);
    const auto serial = simulate_equilibrium(env, ThresholdRule{1.96},
                                             ResearcherPolicy::BestRespond,
                                             serial_pop, 14);
    setenv("PUBOPT_THREADS", "7", 1);
    const auto parallel_pop = sample_population(env, 50000, 13);
    const auto parallel = simulate_equilibrium(env, ThresholdRule{1.96},
                                               ResearcherPolicy::BestRespond,
                                               parallel_pop, 14);
    unsetenv("PUBOPT_THREADS");
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        REQUIRE(serial[i].theta == parallel[i].theta);
        REQUIRE(serial[i].reported_x == parallel[i].reported_x);
        REQUIRE(serial[i].published == parallel[i].published);
    }
}

TEST_CASE("summary statistics from a hand-built fixture") {
    std::vector<EquilibriumRecord> records(4);
    records[0] = {0.0, 0.0, 0.1, 0.0, 0.1, 0.0, false};
    records[1] = {0.0, 0.0, 2.0, 0.0, 2.0, 1.0, true};
    records[2] = {0.0, 0.0, 1.5, 0.5, 2.0, 1.0, true};
    records[3] = {0.0, 0.0, -0.4, 0.0, -0.4, 0.0, false};
    const SummaryStats stats = summarize(records);
    CHECK(stats.pct_published == Catch::Approx(0.5));
    REQUIRE(stats.pct_manipulated_within_published.has_value());
    CHECK(*stats.pct_manipulated_within_published == Catch::Approx(0.5));
    REQUIRE(stats.avg_abs_bias_within_published.has_value());
    CHECK(*stats.avg_abs_bias_within_published == Catch::Approx(0.25));
    CHECK(stats.se_published == Catch::Approx(std::sqrt(0.25 / 4.0)));

    // all biases zero: nothing counts as manipulated
    std::vector<EquilibriumRecord> clean(records);
    clean[2].bias = 0.0;
    CHECK(*summarize(clean).pct_manipulated_within_published == 0.0);

    // nothing published: shares are absent markers, not zeros
    std::vector<EquilibriumRecord> unpublished(records);
    for (auto& rec : unpublished) rec.published = false;
    const SummaryStats degenerate = summarize(unpublished);
    CHECK(degenerate.pct_published == 0.0);
    CHECK_FALSE(degenerate.pct_manipulated_within_published.has_value());
    CHECK_FALSE(degenerate.avg_abs_bias_within_published.has_value());
}

TEST_CASE("simulated summary rows match the reference values") {
    const std::size_t n = 1000000;
    const auto pop = sample_population(cal_env(), n, 11);

    const auto truthful = simulate_equilibrium(cal_env(), ThresholdRule{1.96},
                                               ResearcherPolicy::Truthful, pop, 12);
    const SummaryStats s1 = summarize(truthful);
    CHECK(std::abs(s1.pct_published - 0.25) <= 0.01);

    const auto naive = simulate_equilibrium(cal_env(), ThresholdRule{1.96},
                                            ResearcherPolicy::BestRespond, pop, 13);
    const SummaryStats s2 = summarize(naive);
    CHECK(std::abs(s2.pct_published - 0.58) <= 0.01);
    CHECK(std::abs(*s2.pct_manipulated_within_published - 0.56) <= 0.02);
    CHECK(std::abs(*s2.avg_abs_bias_within_published - 0.31) <= 0.02);

    const ManipulationSolution sol = optimize_rule(cal_env());
    const auto optimal = simulate_equilibrium(cal_env(), sol.rule(cal_env()),
                                              ResearcherPolicy::BestRespond, pop, 14);
    const SummaryStats s3 = summarize(optimal);
    CHECK(std::abs(s3.pct_published - 0.25) <= 0.01);
    CHECK(std::abs(*s3.pct_manipulated_within_published - 0.45) <= 0.02);
    CHECK(std::abs(*s3.avg_abs_bias_within_published - 0.11) <= 0.02);

    // realized publication frequency concentrates on the mean probability
    for (const SummaryStats& s : {s1, s2, s3}) {
        const double se = std::max(s.se_published, 1e-9);
        CHECK(std::abs(s.pct_published - s.mean_pub_prob) <= 3.0 * se);
    }

    // quadrature cross-check of the published share
    const RuleOutcome naive_expected = expected_outcome(cal_env(), ThresholdRule{1.96});
    CHECK(std::abs(s2.pct_published - naive_expected.pub_mass) <= 3.0 * s2.se_published);

    // no record pays more than publication can ever be worth
    const double cap = (1.0 - cal_env().c0) / cal_env().cm + 1e-12;
    for (const auto& rec : naive) REQUIRE(rec.bias <= cap);
    for (const auto& rec : optimal) REQUIRE(rec.bias <= cap);

    // published reports under the optimal rule sit on or above the ramp
    const double ramp_lo = sol.x_star - 1.0 / cal_env().cm;
    for (const auto& rec : optimal) {
        if (rec.published) REQUIRE(std::abs(rec.reported_x) >= ramp_lo - 1e-12);
    }
}

TEST_CASE("record geometry: reported magnitude and sign") {
    const auto pop = sample_population(cal_env(), 20000, 3);
    const ManipulationSolution sol = optimize_rule(cal_env());
    const auto records = simulate_equilibrium(cal_env(), sol.rule(cal_env()),
                                              ResearcherPolicy::BestRespond, pop, 4);
    for (const auto& rec : records) {
        REQUIRE(rec.y == rec.theta + rec.eps);
        REQUIRE(std::abs(rec.reported_x) ==
                Catch::Approx(std::abs(rec.y) + rec.bias).margin(1e-9));
        if (rec.y != 0.0) {
            REQUIRE(std::signbit(rec.reported_x) == std::signbit(rec.y));
        }
    }
}

TEST_CASE("histograms separate bunching atoms from densities") {
    const std::size_t n = 1000000;
    const auto pop = sample_population(cal_env(), n, 21);
    const ManipulationSolution sol = optimize_rule(cal_env());
    const HistogramSpec spec{0.0, 6.0, 0.05};

    // truthful regime: no atoms anywhere
    const auto truthful = published_records(simulate_equilibrium(
        cal_env(), ThresholdRule{1.96}, ResearcherPolicy::Truthful, pop, 22));
    const Histogram h1 = histogram_export(truthful, spec, HistogramField::ReportedXAbs,
                                          std::vector<double>{1.96, sol.x_star});
    CHECK(h1.atoms.empty());

    // naive cutoff: an atom at the cutoff matching the jump band mass
    const auto naive = published_records(simulate_equilibrium(
        cal_env(), ThresholdRule{1.96}, ResearcherPolicy::BestRespond, pop, 22));
    const Histogram h2 = histogram_export(naive, spec, HistogramField::ReportedXAbs,
                                          std::vector<double>{1.96});
    REQUIRE(h2.atoms.size() == 1);
    CHECK(h2.atoms[0].location == Catch::Approx(1.96));
    const double sig = cal_env().sigma();
    const double band = 2.0 * (norm_cdf(-(1.96 - 1.0 / cal_env().cm) / sig) -
                               norm_cdf(-1.96 / sig));
    const double atom_share_of_population =
        static_cast<double>(h2.atoms[0].count) / static_cast<double>(n);
    CHECK(atom_share_of_population == Catch::Approx(band).margin(0.005));

    // optimal rule: smaller atom, exactly at the guaranteed-publication point
    const auto optimal = published_records(simulate_equilibrium(
        cal_env(), sol.rule(cal_env()), ResearcherPolicy::BestRespond, pop, 22));
    const Histogram h3 = histogram_export(optimal, spec, HistogramField::ReportedXAbs,
                                          std::vector<double>{sol.x_star});
    REQUIRE(h3.atoms.size() == 1);
    CHECK(h3.atoms[0].location == Catch::Approx(sol.x_star));
    CHECK(h3.atoms[0].count < h2.atoms[0].count);
    CHECK(h3.atoms[0].count > 0);

    // density normalization: bins plus atoms account for every in-range record
    double total = 0.0;
    for (const auto& b : h3.bins) total += b.density * (b.hi - b.lo);
    for (const auto& a : h3.atoms) total += a.mass;
    CHECK(total == Catch::Approx(static_cast<double>(h3.n_in_range) / h3.n_total)
                       .margin(1e-9));

    CHECK_THROWS_AS(histogram_export(naive, HistogramSpec{0.0, 6.0, 0.0},
                                     HistogramField::ReportedXAbs),
                    std::domain_error);
}

TEST_CASE("summary table assembles the three standard rows") {
    const CalibrationTable table = summary_table(five_pct_calibration(), 200000, 5);
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0].rule_label == "ttest");
    CHECK(table.rows[0].policy_label == "truthful");
    if (table.rows[0].simulated.pct_manipulated_within_published.has_value()) {
        CHECK(*table.rows[0].simulated.pct_manipulated_within_published == 0.0);
    }
    CHECK(table.rows[1].policy_label == "best_respond");
    REQUIRE(table.rows[2].x_star.has_value());
    CHECK(std::abs(*table.rows[2].x_star - 2.64) <= 0.03);
    // expected columns stay close to the simulated ones
    CHECK(std::abs(table.rows[1].expected.pub_mass - table.rows[1].simulated.pct_published) <=
          4.0 * table.rows[1].simulated.se_published);
}

TEST_CASE("loss-ratio sweep brackets the crossover cost") {
    const auto sweep = loss_ratio_sweep(five_pct_calibration(), 0.6, 0.01);
    REQUIRE(sweep.size() == 61);
    CHECK(sweep.front().cost_e == 0.0);
    CHECK(sweep.back().cost_e == Catch::Approx(0.6));
    // under the naive benchmark the experiment always wins
    for (const auto& pt : sweep) CHECK(pt.ratio_vs_naive < 1.0);
    // under the optimal benchmark the experiment loses above ~0.3
    CHECK(sweep[10].ratio_vs_optimal < 1.0);
    CHECK(sweep[60].ratio_vs_optimal > 1.0);
}

TEST_CASE("indifference curve is feasible and monotone where defined") {
    const Environment env{1.0, 0.5};
    const auto curve = indifference_curve(env, 0.1, 3.0, 25);
    REQUIRE(curve.size() == 25);
    double prev = -1.0;
    for (const auto& pt : curve) {
        if (!pt.cost_e) continue;
        // indifference: equal losses at the solved cost
        const double le = optimal_loss(env, Design{0.0, *pt.cost_e});
        const double lo = optimal_loss(env, Design{pt.s2_o, 0.0});
        REQUIRE(le == Catch::Approx(lo).margin(1e-9));
        // a noisier alternative tolerates a costlier experiment
        REQUIRE(*pt.cost_e >= prev - 1e-9);
        prev = *pt.cost_e;
    }
}
