// Calibration of the model's three parameters from a p-value corpus:
// p -> t inversion, publication-bias adjustment of bunching shares, a
// bunching estimator for the manipulation cost, a manipulation-robust
// quantile estimator for the prior variance, and threshold matching for
// the attention cost.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pubopt/gaussian.hpp"
#include "pubopt/numeric.hpp"

namespace pubopt {

/// A corpus of two-sided p-values in (0,1]. Rows rejected during ingestion
/// are counted, never silently dropped.
struct PValueDataset {
    std::vector<double> p_values;
    std::string source;
    std::size_t n_rejected = 0;
};

/// Knobs of the calibration pipeline. The defaults follow the medical
/// p-value application: a 5%-level cutoff with bunching measured on
/// |t| in [1.95, 2.00], 36% of studies never published, and 27% of
/// published trials pre-registered.
struct CalibrationConfig {
    double level_cutoff = 1.96;
    double bunch_lo = 1.95;
    double bunch_hi = 2.00;
    double unpublished_share = 0.36;
    double prereg_share = 0.27;
    std::optional<double> raw_bunch_share_override;
    bool model_scale_cm = false; // solve the bunching equation on the
                                 // N(0, 1 + eta2) scale instead of N(0,1)
};

inline void validate(const CalibrationConfig& cfg) {
    if (!(cfg.bunch_lo < cfg.level_cutoff && cfg.level_cutoff <= cfg.bunch_hi))
        throw std::domain_error("CalibrationConfig: need bunch_lo < cutoff <= bunch_hi");
    if (!(cfg.unpublished_share >= 0.0 && cfg.unpublished_share < 1.0))
        throw std::domain_error("CalibrationConfig: unpublished_share must be in [0,1)");
    if (!(cfg.prereg_share >= 0.0 && cfg.prereg_share < 1.0))
        throw std::domain_error("CalibrationConfig: prereg_share must be in [0,1)");
}

/// Calibrated model parameters. By construction the implied attention
/// cutoff at s2 = 1 reproduces the level's critical value.
struct CalibratedParams {
    double eta2;
    double cm;
    double ca;
    std::string level; // "five_pct", "one_pct", or "custom"
};

/// Two-sided p -> |t| inversion: t = Phi^{-1}(1 - p/2). p = 1 maps to 0.
inline std::vector<double> pvalues_to_tstats(const PValueDataset& data) {
    std::vector<double> t;
    t.reserve(data.p_values.size());
    for (double p : data.p_values) {
        if (!(p > 0.0 && p <= 1.0))
            throw std::domain_error("pvalues_to_tstats: p-value outside (0,1]");
        t.push_back(p == 1.0 ? 0.0 : norm_quantile(1.0 - 0.5 * p));
    }
    return t;
}

/// Corrects a raw bunching share for unpublished studies and for the
/// pre-registered (non-manipulable) share of the corpus:
/// b = raw * (1 - unpublished) / (1 - prereg).
inline double adjusted_bunch_share(const CalibrationConfig& cfg, double raw_share) {
    validate(cfg);
    if (!(raw_share >= 0.0 && raw_share <= 1.0))
        throw std::domain_error("adjusted_bunch_share: raw share must be in [0,1]");
    return raw_share * (1.0 - cfg.unpublished_share) / (1.0 - cfg.prereg_share);
}

/// Bunching estimator of the manipulation cost: the unique root of
/// Phi(q) - Phi(q - 1/cm) = b in 1/cm, found by bisection on (0, q + 10)
/// to 1e-10. With cfg.model_scale_cm the equation is solved on the
/// N(0, 1 + eta2) scale (sensitivity variant); eta2 is only used then.
inline double estimate_cm(const CalibrationConfig& cfg, double b, double eta2 = 0.0) {
    validate(cfg);
    const double scale = cfg.model_scale_cm ? std::sqrt(1.0 + eta2) : 1.0;
    const double q = cfg.level_cutoff;
    const auto gap = [&](double w) {
        return norm_cdf(q / scale) - norm_cdf((q - w) / scale) - b;
    };
    const double hi = q + 10.0;
    if (!(b > 0.0) || gap(hi) <= 0.0)
        throw std::domain_error("estimate_cm: bunching share " + std::to_string(b) +
                                " is infeasible for cutoff " + std::to_string(q));
    const double w = bisect_root(gap, 0.0, hi, 1e-10);
    return 1.0 / w;
}

/// Nearest-rank percentile of the values (pct in (0, 100]).
inline double nearest_rank_percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw std::domain_error("percentile of empty sample");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    std::size_t rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

struct Eta2Estimate {
    double eta2;
    double qbar;            // adjusted 95th-percentile |t|
    double percentile_used; // the empirical percentile actually taken
    bool manipulation_robust; // qbar clears the 1%-level critical value
};

/// Prior-variance estimator from the upper tail of |t|, robust to bunching
/// below the significance cutoffs. The 95th percentile of the full study
/// population maps to the (95 - g)-th percentile of observed studies,
/// g = 5 * unpublished/(1 - unpublished) percentage points, because the
/// unpublished studies are assumed non-significant. Then
/// eta2 = (qbar/2)^2 - 1.
inline Eta2Estimate estimate_eta2(std::span<const double> tstats,
                                  const CalibrationConfig& cfg) {
    validate(cfg);
    if (tstats.size() < 1000)
        throw std::domain_error("estimate_eta2: need at least 1000 observations, got " +
                                std::to_string(tstats.size()));
    const double u = cfg.unpublished_share;
    const double pct = 95.0 - 100.0 * 0.05 * u / (1.0 - u);
    std::vector<double> abs_t(tstats.begin(), tstats.end());
    for (double& v : abs_t) v = std::abs(v);
    const double qbar = nearest_rank_percentile(std::move(abs_t), pct);
    Eta2Estimate est{};
    est.qbar = qbar;
    est.percentile_used = pct;
    est.manipulation_robust = qbar > 2.56;
    est.eta2 = 0.25 * qbar * qbar - 1.0;
    return est;
}

/// Attention cost that makes the no-cost publication cutoff at s2 = 1 equal
/// to the target critical value: ca = (target * eta2 / (1 + eta2))^2.
inline double derive_ca(double eta2, double target_cutoff) {
    if (!(eta2 > 0.0)) throw std::domain_error("derive_ca: eta2 must be > 0");
    if (!(target_cutoff > 0.0)) throw std::domain_error("derive_ca: cutoff must be > 0");
    const double root = target_cutoff * eta2 / (1.0 + eta2);
    return root * root;
}

/// Full calibration output with the provenance needed to reproduce it.
struct CalibrationReport {
    CalibratedParams params;
    double raw_share = 0.0;
    double adjusted_b = 0.0;
    double percentile_used = 0.0;
    double qbar = 0.0;
    bool manipulation_robust = true;
    std::size_t n_used = 0;
    std::size_t n_rejected = 0;
};

inline std::string level_label(double cutoff) {
    if (std::abs(cutoff - 1.96) < 1e-9) return "five_pct";
    if (std::abs(cutoff - 2.56) < 1e-9) return "one_pct";
    return "custom";
}

/// Composes the pipeline: p -> t inversion, bunching share in the window
/// (unless overridden), publication-bias adjustment, cm by bunching
/// inversion, eta2 by robust percentile, ca by threshold matching.
inline CalibrationReport calibrate_pipeline(const PValueDataset& data,
                                            const CalibrationConfig& cfg) {
    validate(cfg);
    const std::vector<double> tstats = pvalues_to_tstats(data);
    CalibrationReport report{};
    report.n_used = tstats.size();
    report.n_rejected = data.n_rejected;

    if (cfg.raw_bunch_share_override) {
        report.raw_share = *cfg.raw_bunch_share_override;
    } else {
        if (tstats.empty()) throw std::domain_error("calibrate_pipeline: empty corpus");
        std::size_t in_window = 0;
        for (double t : tstats)
            if (t >= cfg.bunch_lo && t <= cfg.bunch_hi) ++in_window;
        report.raw_share =
            static_cast<double>(in_window) / static_cast<double>(tstats.size());
    }
    report.adjusted_b = adjusted_bunch_share(cfg, report.raw_share);

    const Eta2Estimate eta = estimate_eta2(tstats, cfg);
    report.percentile_used = eta.percentile_used;
    report.qbar = eta.qbar;
    report.manipulation_robust = eta.manipulation_robust;

    report.params.eta2 = eta.eta2;
    report.params.cm = estimate_cm(cfg, report.adjusted_b, eta.eta2);
    report.params.ca = derive_ca(eta.eta2, cfg.level_cutoff);
    report.params.level = level_label(cfg.level_cutoff);
    return report;
}

/// Reads a delimited text file with header `p_value`, one value per row.
/// Rows that fail to parse or fall outside (0,1] are counted as rejected.
inline PValueDataset load_pvalue_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open p-value file: " + path);
    PValueDataset data;
    data.source = path;
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty p-value file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find("p_value") == std::string::npos)
        throw std::runtime_error("p-value file missing `p_value` header: " + path);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        char* end = nullptr;
        const double p = std::strtod(line.c_str(), &end);
        const bool parsed = end != nullptr && end != line.c_str() &&
                            std::string_view(end).find_first_not_of(" \t") ==
                                std::string_view::npos;
        if (!parsed || !(p > 0.0 && p <= 1.0)) {
            ++data.n_rejected;
            continue;
        }
        data.p_values.push_back(p);
    }
    return data;
}

} // namespace pubopt
