#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgcn/sir.hpp"

namespace dgcn {

struct ScoreVector;

/// Tie-corrected Kendall tau-b in O(n log n). Throws undefined_correlation
/// when either vector is constant, contract_error on length mismatch or n < 2.
double kendall_tau(std::span<const double> a, std::span<const double> b);

/// Indices of the top ceil(fraction * n) entries by descending score, ties
/// broken by ascending index.
std::vector<std::size_t> top_k(std::span<const double> scores, double fraction);

/// |P ∩ R| / |R| for the predicted and true top sets.
double hit_rate(std::span<const double> predicted, std::span<const double> truth, double fraction);

struct RankingReport {
    std::string method;
    double beta = 0.0;
    std::optional<double> tau;  // empty when the correlation is undefined
    std::string tau_error;
    std::vector<std::pair<double, double>> hit_rates;  // (fraction, HR)
    std::size_t n = 0;
};

/// labels must hold one entry per scored node (matched by InfluenceLabel::node).
RankingReport evaluate_method(const ScoreVector& predicted, std::span<const InfluenceLabel> labels, double beta,
                              std::span<const double> fractions);

/// One row per (method, beta, fraction): method,beta,tau,hr_fraction,hr_value.
std::string reports_to_csv(std::span<const RankingReport> reports);
std::string reports_to_json(std::span<const RankingReport> reports, const std::string& node_scope);

}  // namespace dgcn
