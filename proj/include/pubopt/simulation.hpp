// Monte Carlo engine: simulate populations of researchers under a
// publication rule, realize publication draws, and reduce the records to
// summary statistics and histogram data (with bunching atoms kept as
// point masses).
//
// Randomness is counter-based: draw k of record i is the SplitMix64
// finalizer applied to seed + (i * 2^17 + k) * GOLDEN, so results are
// bit-identical for a given seed regardless of thread count or sharding.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "pubopt/gaussian.hpp"
#include "pubopt/manipulation.hpp"

namespace pubopt {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 output finalizer (Steele, Lea & Flood; java.util.SplittableRandom).
inline std::uint64_t splitmix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

/// Per-record random stream: a strided counter through the SplitMix64
/// bijection. Streams for distinct record indices never overlap (up to
/// 2^17 draws per record).
class RecordStream {
public:
    RecordStream(std::uint64_t seed, std::uint64_t record_index)
        : counter_(seed + record_index * (detail::kGolden << 17)) {}

    std::uint64_t next_u64() {
        counter_ += detail::kGolden;
        return detail::splitmix64(counter_);
    }

    /// Uniform draw in the open interval (0,1).
    double next_u01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Mean-zero normal draw with standard deviation sd, via inverse CDF.
    double next_normal(double sd) { return sd * norm_quantile(next_u01()); }

private:
    std::uint64_t counter_;
};

namespace detail {

// Index-parallel loop with deterministic output (each index writes its own
// slot). Thread count from PUBOPT_THREADS when set, else the hardware.
template <typename Body>
void parallel_for(std::size_t n, const Body& body) {
    unsigned threads = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("PUBOPT_THREADS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed >= 1) threads = static_cast<unsigned>(parsed);
    }
    threads = std::max(1u, std::min<unsigned>(threads, 64));
    if (threads == 1 || n < 4096) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace detail

/// One researcher's latent state: parameter draw and sampling noise.
struct PopulationDraw {
    double theta;
    double eps;
};

/// i.i.d. population of researcher types: theta ~ N(0, eta2),
/// eps ~ N(0, s2), independent. Deterministic given the seed.
inline std::vector<PopulationDraw> sample_population(const ManipulationEnv& env,
                                                     std::size_t n,
                                                     std::uint64_t seed) {
    validate(env);
    if (n == 0) throw std::domain_error("sample_population: n must be >= 1");
    const double eta = std::sqrt(env.eta2);
    const double s = std::sqrt(env.s2);
    std::vector<PopulationDraw> pop(n);
    detail::parallel_for(n, [&](std::size_t i) {
        RecordStream stream(seed, i);
        pop[i].theta = stream.next_normal(eta);
        pop[i].eps = stream.next_normal(s);
    });
    return pop;
}

/// One simulated researcher outcome.
struct EquilibriumRecord {
    double theta;
    double eps;
    double y;          // theta + eps
    double bias;       // equilibrium reported bias, >= 0
    double reported_x; // sign(y) * (|y| + bias)
    double pub_prob;   // publication probability of the report
    bool published;    // realized publication draw
};

using RuleSpec = std::variant<ThresholdRule, SmoothedRule>;

/// Simulates the population's equilibrium reports under a rule and policy
/// and realizes the publication lotteries. Deterministic given the seed.
inline std::vector<EquilibriumRecord> simulate_equilibrium(
    const ManipulationEnv& env, const RuleSpec& rule, ResearcherPolicy policy,
    std::span<const PopulationDraw> population, std::uint64_t seed) {
    validate(env);
    std::vector<EquilibriumRecord> records(population.size());
    detail::parallel_for(population.size(), [&](std::size_t i) {
        const PopulationDraw& draw = population[i];
        const double y = draw.theta + draw.eps;
        const EquilibriumResponse resp = std::visit(
            [&](const auto& r) { return detail::policy_response(env, r, policy, y); },
            rule);
        EquilibriumRecord rec{};
        rec.theta = draw.theta;
        rec.eps = draw.eps;
        rec.y = y;
        rec.bias = resp.participates ? resp.bias : 0.0;
        rec.reported_x = resp.reported_x;
        rec.pub_prob = resp.participates ? resp.pub_prob : 0.0;
        RecordStream stream(seed, i);
        rec.published = stream.next_u01() < rec.pub_prob;
        records[i] = rec;
    });
    return records;
}

/// Aggregates over one simulated run. Shares within published findings are
/// empty when nothing was published (a degenerate run, not a zero).
struct SummaryStats {
    double pct_published = 0.0;
    double se_published = 0.0;  // sqrt(p(1-p)/n)
    double mean_pub_prob = 0.0; // expected publication share
    std::optional<double> pct_manipulated_within_published;
    std::optional<double> avg_abs_bias_within_published;
    std::size_t n = 0;
    std::size_t n_published = 0;
};

inline SummaryStats summarize(std::span<const EquilibriumRecord> records) {
    if (records.empty()) throw std::domain_error("summarize: no records");
    SummaryStats stats{};
    stats.n = records.size();
    std::size_t manipulated = 0;
    double bias_sum = 0.0;
    double prob_sum = 0.0;
    for (const EquilibriumRecord& rec : records) {
        prob_sum += rec.pub_prob;
        if (!rec.published) continue;
        ++stats.n_published;
        if (rec.bias > detail::kBiasTol) {
            ++manipulated;
            bias_sum += rec.bias;
        }
    }
    const double n = static_cast<double>(stats.n);
    stats.pct_published = static_cast<double>(stats.n_published) / n;
    stats.se_published =
        std::sqrt(stats.pct_published * (1.0 - stats.pct_published) / n);
    stats.mean_pub_prob = prob_sum / n;
    if (stats.n_published > 0) {
        const double pub = static_cast<double>(stats.n_published);
        stats.pct_manipulated_within_published = static_cast<double>(manipulated) / pub;
        stats.avg_abs_bias_within_published = bias_sum / pub;
    }
    return stats;
}

inline std::vector<EquilibriumRecord> published_records(
    std::span<const EquilibriumRecord> records) {
    std::vector<EquilibriumRecord> out;
    for (const EquilibriumRecord& rec : records)
        if (rec.published) out.push_back(rec);
    return out;
}

/// Histogram request: equal-width bins over [lo, hi).
struct HistogramSpec {
    double lo = 0.0;
    double hi = 6.0;
    double width = 0.05;
};

enum class HistogramField { ReportedXAbs, YAbs };

struct HistogramBin {
    double lo;
    double hi;
    std::size_t count;
    double density; // count / (n_total * width)
};

struct HistogramAtom {
    double location;
    std::size_t count;
    double mass; // count / n_total
};

struct Histogram {
    std::vector<HistogramBin> bins;
    std::vector<HistogramAtom> atoms;
    std::size_t n_total = 0;    // records received
    std::size_t n_in_range = 0; // records inside [lo, hi)
};

/// Density-normalized histogram of |reported_x| or |y|. Mass points created
/// by bunching are pulled out as atoms instead of being smeared into their
/// bin. Only records sitting exactly at a known candidate cutoff (within
/// 1e-9) count toward an atom, and the atom qualifies when that count
/// exceeds 20x the continuous mass expected inside the matching window
/// (estimated from the neighboring bins), so continuous data never
/// produces spurious atoms.
inline Histogram histogram_export(std::span<const EquilibriumRecord> records,
                                  const HistogramSpec& spec, HistogramField field,
                                  std::span<const double> candidate_atoms = {}) {
    if (!(spec.width > 0.0))
        throw std::domain_error("histogram_export: bin width must be > 0");
    if (!(spec.hi > spec.lo))
        throw std::domain_error("histogram_export: empty bin range");
    const auto value = [field](const EquilibriumRecord& rec) {
        return field == HistogramField::ReportedXAbs ? std::abs(rec.reported_x)
                                                     : std::abs(rec.y);
    };
    const std::size_t n_bins =
        static_cast<std::size_t>(std::ceil((spec.hi - spec.lo) / spec.width));
    std::vector<std::size_t> counts(n_bins, 0);

    Histogram hist{};
    hist.n_total = records.size();
    const auto bin_of = [&](double v) -> std::ptrdiff_t {
        if (v < spec.lo || v >= spec.lo + n_bins * spec.width) return -1;
        return static_cast<std::ptrdiff_t>((v - spec.lo) / spec.width);
    };
    for (const EquilibriumRecord& rec : records) {
        const std::ptrdiff_t b = bin_of(value(rec));
        if (b < 0) continue;
        ++hist.n_in_range;
        ++counts[static_cast<std::size_t>(b)];
    }

    constexpr double kAtomTol = 1e-9;
    for (double cutoff : candidate_atoms) {
        const std::ptrdiff_t b = bin_of(cutoff);
        if (b < 0) continue;
        double neighbor_avg = 0.0;
        int neighbors = 0;
        if (b > 0) {
            neighbor_avg += static_cast<double>(counts[b - 1]);
            ++neighbors;
        }
        if (static_cast<std::size_t>(b) + 1 < n_bins) {
            neighbor_avg += static_cast<double>(counts[b + 1]);
            ++neighbors;
        }
        neighbor_avg = neighbors > 0 ? neighbor_avg / neighbors : 0.0;
        std::size_t atom_count = 0;
        for (const EquilibriumRecord& rec : records)
            if (std::abs(value(rec) - cutoff) <= kAtomTol) ++atom_count;
        const double window_expectation =
            neighbor_avg * (2.0 * kAtomTol / spec.width);
        if (static_cast<double>(atom_count) <=
            20.0 * std::max(window_expectation, 1.0))
            continue;
        counts[b] -= std::min(counts[b], atom_count);
        hist.atoms.push_back(HistogramAtom{
            cutoff, atom_count,
            static_cast<double>(atom_count) / static_cast<double>(hist.n_total)});
    }

    const double denom = static_cast<double>(hist.n_total) * spec.width;
    hist.bins.reserve(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        hist.bins.push_back(HistogramBin{spec.lo + b * spec.width,
                                         spec.lo + (b + 1) * spec.width, counts[b],
                                         static_cast<double>(counts[b]) / denom});
    }
    return hist;
}

} // namespace pubopt
