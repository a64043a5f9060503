#include "spottune/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "spottune/losses.hpp"

namespace spottune {

std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string metrics_csv(const MetricsLog& log) {
    std::string out = "epoch,split,accuracy,l_c,l_k,l_e,sum_v,lr_main,lr_policy\n";
    for (const MetricsRow& r : log) {
        out += std::to_string(r.epoch) + ',' + r.split + ',' + format_full(r.accuracy) + ',' +
               format_full(r.lc) + ',' + format_full(r.lk) + ',' + format_full(r.le) + ',' +
               format_full(r.sum_v) + ',' + format_full(r.lr_main) + ',' +
               format_full(r.lr_policy) + '\n';
    }
    return out;
}

std::string policy_heatmap_csv(const RouteDecisions& decisions, std::size_t frozen_prefix) {
    const UsageFractions f = usage_fractions(decisions, /*relaxed=*/false);
    std::string out = "block_index,v_l\n";
    for (std::size_t l = 0; l < f.v.size(); ++l) {
        out += std::to_string(frozen_prefix + l) + ',' + format_full(f.v[l]) + '\n';
    }
    return out;
}

std::string usage_histogram_csv(const RouteDecisions& decisions) {
    if (decisions.hard.empty()) throw Error("usage_histogram: no decisions recorded");
    const std::size_t routable = decisions.hard[0].size();
    std::vector<std::size_t> counts(routable + 1, 0);
    for (const auto& bits : decisions.hard) {
        std::size_t used = 0;
        for (std::uint8_t b : bits) used += b;
        ++counts[used];
    }
    std::string out = "num_finetuned_blocks,image_count\n";
    for (std::size_t n = 0; n <= routable; ++n) {
        out += std::to_string(n) + ',' + std::to_string(counts[n]) + '\n';
    }
    return out;
}

double domain_score(const DomainError& d) {
    if (!(d.baseline > 0.0)) {
        throw Error("decathlon: baseline error must be positive, got " +
                    format_full(d.baseline));
    }
    if (!(d.error >= 0.0 && d.error <= 1.0)) {
        throw Error("decathlon: test error must lie in [0, 1], got " + format_full(d.error));
    }
    const double gain = std::max(0.0, d.baseline - d.error);
    return 1000.0 / (d.baseline * d.baseline) * gain * gain;
}

double decathlon_score(std::span<const DomainError> domains, std::vector<double>* per_domain) {
    if (per_domain) per_domain->clear();
    double total = 0.0;
    for (const DomainError& d : domains) {
        const double s = domain_score(d);
        if (per_domain) per_domain->push_back(s);
        total += s;
    }
    return total;
}

std::vector<DomainError> parse_domain_errors_csv(const std::string& text) {
    std::vector<DomainError> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        DomainError d;
        char extra;
        const int got = std::sscanf(line.c_str(), " %lf , %lf %c", &d.error, &d.baseline, &extra);
        if (got != 2) {
            if (line_no == 1) continue;  // header row
            throw Error("decathlon: line " + std::to_string(line_no) +
                        " is not 'error,baseline': " + line);
        }
        out.push_back(d);
    }
    if (out.empty()) throw Error("decathlon: no domain rows found");
    return out;
}

}  // namespace spottune
