#include "dgcn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dgcn/baselines.hpp"
#include "dgcn/error.hpp"
#include "dgcn/io.hpp"

namespace dgcn {

namespace {

std::int64_t tied_pairs(std::int64_t run) { return run * (run - 1) / 2; }

// Sorts v in place (stable) and returns the number of pairs i < j with v[i] > v[j].
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch) {
    const std::size_t n = v.size();
    std::int64_t swaps = 0;
    scratch.resize(n);
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo < n; lo += 2 * width) {
            const std::size_t mid = std::min(lo + width, n), hi = std::min(lo + 2 * width, n);
            std::size_t i = lo, j = mid, out = lo;
            while (i < mid && j < hi) {
                if (v[i] <= v[j]) {
                    scratch[out++] = v[i++];
                } else {
                    swaps += static_cast<std::int64_t>(mid - i);
                    scratch[out++] = v[j++];
                }
            }
            while (i < mid) scratch[out++] = v[i++];
            while (j < hi) scratch[out++] = v[j++];
        }
        std::swap(v, scratch);
    }
    return swaps;
}

}  // namespace

double kendall_tau(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw contract_error("kendall_tau needs vectors of equal length");
    const std::size_t n = a.size();
    if (n < 2) throw contract_error("kendall_tau needs at least two entries");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return a[i] != a[j] ? a[i] < a[j] : b[i] < b[j];
    });

    std::int64_t ties_a = 0, ties_joint = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && a[order[j]] == a[order[i]]) ++j;
        ties_a += tied_pairs(static_cast<std::int64_t>(j - i));
        for (std::size_t p = i; p < j;) {
            std::size_t q = p;
            while (q < j && b[order[q]] == b[order[p]]) ++q;
            ties_joint += tied_pairs(static_cast<std::int64_t>(q - p));
            p = q;
        }
        i = j;
    }

    std::vector<double> seq(n), scratch;
    for (std::size_t i = 0; i < n; ++i) seq[i] = b[order[i]];
    const std::int64_t swaps = count_inversions(seq, scratch);

    std::int64_t ties_b = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && seq[j] == seq[i]) ++j;
        ties_b += tied_pairs(static_cast<std::int64_t>(j - i));
        i = j;
    }

    const std::int64_t pairs = tied_pairs(static_cast<std::int64_t>(n));
    if (pairs == ties_a || pairs == ties_b) {
        throw undefined_correlation("Kendall tau is undefined: one ranking is entirely tied");
    }
    const std::int64_t numerator = pairs - ties_a - ties_b + ties_joint - 2 * swaps;
    return static_cast<double>(numerator) /
           std::sqrt(static_cast<double>(pairs - ties_a) * static_cast<double>(pairs - ties_b));
}

std::vector<std::size_t> top_k(std::span<const double> scores, double fraction) {
    if (scores.empty()) throw contract_error("cannot rank an empty node set");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw contract_error("top-k fraction must lie in (0, 1]");
    const double raw = fraction * static_cast<double>(scores.size());
    // Guard against products like 0.07 * 100 = 7.000000000000001.
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(raw - 1e-9)));
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t i, std::size_t j) { return scores[i] != scores[j] ? scores[i] > scores[j] : i < j; });
    order.resize(k);
    return order;
}

double hit_rate(std::span<const double> predicted, std::span<const double> truth, double fraction) {
    if (predicted.size() != truth.size()) throw contract_error("hit_rate needs vectors over the same nodes");
    auto p = top_k(predicted, fraction);
    auto r = top_k(truth, fraction);
    std::sort(p.begin(), p.end());
    std::sort(r.begin(), r.end());
    std::vector<std::size_t> both;
    std::set_intersection(p.begin(), p.end(), r.begin(), r.end(), std::back_inserter(both));
    return static_cast<double>(both.size()) / static_cast<double>(r.size());
}

RankingReport evaluate_method(const ScoreVector& predicted, std::span<const InfluenceLabel> labels, double beta,
                              std::span<const double> fractions) {
    const std::size_t n = predicted.scores.size();
    std::vector<double> truth(n, 0.0);
    std::vector<bool> covered(n, false);
    for (const auto& l : labels) {
        if (l.node < n) {
            truth[l.node] = l.value;
            covered[l.node] = true;
        }
    }
    std::vector<std::size_t> missing;
    for (std::size_t u = 0; u < n; ++u) {
        if (!covered[u]) missing.push_back(u);
    }
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "labels missing for " << missing.size() << " node(s):";
        for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 20); ++i) msg << ' ' << missing[i];
        if (missing.size() > 20) msg << " ...";
        throw contract_error(msg.str());
    }

    RankingReport report;
    report.method = predicted.method;
    report.beta = beta;
    report.n = n;
    try {
        report.tau = kendall_tau(predicted.scores, truth);
    } catch (const undefined_correlation& e) {
        report.tau_error = e.what();
    }
    for (double f : fractions) report.hit_rates.emplace_back(f, hit_rate(predicted.scores, truth, f));
    return report;
}

std::string reports_to_csv(std::span<const RankingReport> reports) {
    std::ostringstream out;
    out << "method,beta,tau,hr_fraction,hr_value\n";
    for (const auto& r : reports) {
        const std::string tau = r.tau ? format_double(*r.tau) : "undefined";
        const std::string head = r.method + "," + format_double(r.beta) + "," + tau + ",";
        if (r.hit_rates.empty()) out << head << ",\n";
        for (const auto& [f, hr] : r.hit_rates) out << head << format_double(f) << "," << format_double(hr) << "\n";
    }
    return out.str();
}

std::string reports_to_json(std::span<const RankingReport> reports, const std::string& node_scope) {
    nlohmann::ordered_json doc;
    doc["node_scope"] = node_scope;
    doc["tau_variant"] = "tau-b";
    doc["reports"] = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["method"] = r.method;
        j["beta"] = r.beta;
        j["tau"] = r.tau ? nlohmann::ordered_json(*r.tau) : nlohmann::ordered_json(nullptr);
        if (!r.tau_error.empty()) j["tau_error"] = r.tau_error;
        j["n"] = r.n;
        j["hit_rates"] = nlohmann::ordered_json::array();
        for (const auto& [f, hr] : r.hit_rates) j["hit_rates"].push_back({{"fraction", f}, {"value", hr}});
        doc["reports"].push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

}  // namespace dgcn
