#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spottune/model.hpp"

namespace spottune {

// One logged row per epoch and split; the eval rows also carry the per-block
// hard usage fractions (exported separately, not part of the CSV row).
struct MetricsRow {
    std::size_t epoch = 0;
    std::string split;  // "train" or "eval"
    double accuracy = 0.0;
    double lc = 0.0;
    double lk = 0.0;
    double le = 0.0;
    double sum_v = 0.0;
    double lr_main = 0.0;
    double lr_policy = 0.0;
    std::vector<double> v_hard;
};

using MetricsLog = std::vector<MetricsRow>;

// 17 significant digits, '.' decimal separator.
std::string format_full(double v);

std::string metrics_csv(const MetricsLog& log);

// One row per routable block: absolute block index and the hard fine-tune
// fraction over the recorded decisions.
std::string policy_heatmap_csv(const RouteDecisions& decisions, std::size_t frozen_prefix);

// Histogram of examples by how many blocks they routed through the fine-tuned
// copy; every bin from 0 to the routable count is emitted.
std::string usage_histogram_csv(const RouteDecisions& decisions);

struct DomainError {
    double error = 0.0;     // test error in [0, 1]
    double baseline = 1.0;  // reference error in (0, 1]
};

// Per-domain score 1000 * baseline^-2 * max(0, baseline - error)^2.
double domain_score(const DomainError& d);
double decathlon_score(std::span<const DomainError> domains,
                       std::vector<double>* per_domain = nullptr);

// Two-column CSV (error, baseline); a non-numeric first line is treated as a
// header and skipped.
std::vector<DomainError> parse_domain_errors_csv(const std::string& text);

}  // namespace spottune
