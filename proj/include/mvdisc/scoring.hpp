#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvdisc/dataset.hpp"
#include "mvdisc/error.hpp"
#include "mvdisc/graph.hpp"

namespace mvdisc {

enum class DirichletMode { K2, BDeu };
enum class PolicyPriorMode { Uniform, PoissonOverR };
enum class DensityModel { UniformWithinInterval, MultinomialAbstraction };

// Score hyperparameters.
//
// K2 puts the same pseudo-count `alpha` on every cell of every family. BDeu
// spreads an equivalent sample size `ess` evenly over the r*q cells. The
// policy prior is either flat (MAP = maximum likelihood) or a Poisson over the
// interval count truncated to 2 <= r <= N-1, times a uniform distribution over
// which r-1 of the M candidate thresholds are used.
struct PriorSpec {
    DirichletMode dirichlet = DirichletMode::K2;
    double alpha = 1.0;
    double ess = 1.0;
    PolicyPriorMode policy_prior = PolicyPriorMode::Uniform;
    double lambda = 2.0;
    DensityModel density = DensityModel::UniformWithinInterval;

    // Pseudo-count of one cell in a family with child arity r and q parent configurations.
    double cell_alpha(int r, std::size_t q) const {
        return dirichlet == DirichletMode::K2 ? alpha : ess / (static_cast<double>(r) * static_cast<double>(q));
    }

    void validate() const {
        if (dirichlet == DirichletMode::K2 && !(alpha > 0)) throw ValidationError("K2 alpha must be > 0");
        if (dirichlet == DirichletMode::BDeu && !(ess > 0)) throw ValidationError("BDeu ess must be > 0");
    }

    void validate(std::size_t n_cases) const {
        validate();
        if (policy_prior == PolicyPriorMode::PoissonOverR &&
            !(lambda >= 2.0 && lambda <= static_cast<double>(n_cases) - 1.0))
            throw ValidationError("Poisson rate must satisfy 2 <= lambda <= N-1 (N = " + std::to_string(n_cases) + ")");
    }
};

inline double log_gamma(double x) {
    if (!(x > 0)) throw std::domain_error("log_gamma requires x > 0, got " + std::to_string(x));
    return std::lgamma(x);
}

// N_ijk table of one family. Parent configurations are numbered in mixed
// radix over the parent list, first parent most significant.
struct FamilyCounts {
    int r = 1;
    std::size_t q = 1;
    std::vector<long> counts;   // q * r, row-major by configuration
    std::vector<long> margins;  // q

    long at(std::size_t j, int k) const { return counts[j * static_cast<std::size_t>(r) + static_cast<std::size_t>(k)]; }
};

inline FamilyCounts family_counts(const DiscretizedData& data, std::size_t child, std::span<const std::size_t> parents) {
    FamilyCounts fc;
    fc.r = data.arity.at(child);
    for (auto p : parents) fc.q *= static_cast<std::size_t>(data.arity.at(p));
    fc.counts.assign(fc.q * static_cast<std::size_t>(fc.r), 0);
    fc.margins.assign(fc.q, 0);
    const auto& y = data.codes[child];
    for (std::size_t row = 0; row < y.size(); ++row) {
        std::size_t j = 0;
        for (auto p : parents) j = j * static_cast<std::size_t>(data.arity[p]) + static_cast<std::size_t>(data.codes[p][row]);
        ++fc.counts[j * static_cast<std::size_t>(fc.r) + static_cast<std::size_t>(y[row])];
        ++fc.margins[j];
    }
    return fc;
}

// Dirichlet-multinomial log marginal likelihood of one family.
inline double discrete_family_score(const FamilyCounts& fc, const PriorSpec& prior) {
    const double a_cell = prior.cell_alpha(fc.r, fc.q);
    const double a_row = fc.r * a_cell;
    const double lg_cell = log_gamma(a_cell);
    const double lg_row = log_gamma(a_row);
    double score = 0.0;
    for (std::size_t j = 0; j < fc.q; ++j) {
        double row = lg_row - log_gamma(a_row + static_cast<double>(fc.margins[j]));
        double cells = 0.0;
        for (int k = 0; k < fc.r; ++k) cells += log_gamma(a_cell + static_cast<double>(fc.at(j, k))) - lg_cell;
        score += row + cells;
    }
    return score;
}

// Sum over cases of log(1 / width of the case's interval). The dx of the
// density is dropped, so values are log-densities; the offset is the same
// for every policy on a given column. A constant column with degenerate
// bounds has a single admissible policy and contributes 0.
inline double continuous_component(std::span<const double> column, const DiscretizationPolicy& policy) {
    if (policy.is_trivial()) return 0.0;
    if (policy.lower() == policy.upper()) return 0.0;
    std::vector<long> n(static_cast<std::size_t>(policy.arity()), 0);
    for (double x : column) ++n[static_cast<std::size_t>(policy.code(x))];
    double s = 0.0;
    for (int k = 0; k < policy.arity(); ++k) {
        if (n[static_cast<std::size_t>(k)] == 0) continue;
        auto [left, right] = policy.interval(k);
        if (!(right > left)) throw ValidationError("zero-width interval in policy");
        s += static_cast<double>(n[static_cast<std::size_t>(k)]) * -std::log(right - left);
    }
    return s;
}

// Within-group Dirichlet-multinomial likelihood of the original values, one
// term per group. `grouping[v]` is the group of original value v.
inline double abstraction_component(std::span<const int> values, std::span<const int> grouping, const PriorSpec& prior) {
    if (grouping.empty()) throw ValidationError("empty grouping");
    const int groups = *std::max_element(grouping.begin(), grouping.end()) + 1;
    std::vector<int> group_size(static_cast<std::size_t>(groups), 0);
    for (int g : grouping) {
        if (g < 0) throw ValidationError("negative group index");
        ++group_size[static_cast<std::size_t>(g)];
    }
    for (int g = 0; g < groups; ++g)
        if (group_size[static_cast<std::size_t>(g)] == 0)
            throw ValidationError("grouping is not surjective: group " + std::to_string(g) + " is empty");

    std::vector<long> value_count(grouping.size(), 0);
    for (int v : values) {
        if (v < 0 || static_cast<std::size_t>(v) >= grouping.size())
            throw ValidationError("value " + std::to_string(v) + " has no group");
        ++value_count[static_cast<std::size_t>(v)];
    }
    std::vector<long> group_count(static_cast<std::size_t>(groups), 0);
    for (std::size_t v = 0; v < grouping.size(); ++v) group_count[static_cast<std::size_t>(grouping[v])] += value_count[v];

    double s = 0.0;
    std::vector<double> group_cells(static_cast<std::size_t>(groups), 0.0);
    for (std::size_t v = 0; v < grouping.size(); ++v) {
        const auto g = static_cast<std::size_t>(grouping[v]);
        const double a = prior.cell_alpha(group_size[g], 1);
        group_cells[g] += log_gamma(a + static_cast<double>(value_count[v])) - log_gamma(a);
    }
    for (std::size_t g = 0; g < group_cells.size(); ++g) {
        const double a_row = group_size[g] * prior.cell_alpha(group_size[g], 1);
        s += (log_gamma(a_row) - log_gamma(a_row + static_cast<double>(group_count[g]))) + group_cells[g];
    }
    return s;
}

// The multinomial stand-in for a continuous column: original values are the
// distinct observed values, grouped by the interval they fall in.
inline double multinomial_component(std::span<const double> column, const DiscretizationPolicy& policy,
                                    const PriorSpec& prior) {
    std::vector<double> distinct(column.begin(), column.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<int> values(column.size());
    for (std::size_t row = 0; row < column.size(); ++row)
        values[row] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), column[row]) - distinct.begin());
    std::vector<int> grouping(distinct.size());
    for (std::size_t v = 0; v < distinct.size(); ++v) grouping[v] = policy.code(distinct[v]);
    // intervals holding no data are not groups of observed values
    std::vector<int> remap(static_cast<std::size_t>(policy.arity()), -1);
    int used = 0;
    for (auto& g : grouping) {
        if (remap[static_cast<std::size_t>(g)] < 0) remap[static_cast<std::size_t>(g)] = used++;
        g = remap[static_cast<std::size_t>(g)];
    }
    return abstraction_component(values, grouping, prior);
}

inline double density_component(std::span<const double> column, const DiscretizationPolicy& policy,
                                 const PriorSpec& prior) {
    if (policy.is_trivial()) return 0.0;
    return prior.density == DensityModel::UniformWithinInterval ? continuous_component(column, policy)
                                                                : multinomial_component(column, policy, prior);
}

namespace detail {

// log of sum_{r=2}^{R} lambda^r / r! * e^-lambda
inline double log_truncated_poisson_mass(double lambda, int upper) {
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    for (int r = 2; r <= upper; ++r) {
        terms.push_back(-lambda + r * std::log(lambda) - log_gamma(r + 1.0));
        m = std::max(m, terms.back());
    }
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    return m + std::log(s);
}

}  // namespace detail

// Log prior of a policy with r intervals chosen from M candidate thresholds on
// a column of N cases. Under PoissonOverR the support of r is 2..min(N-1, M+1);
// when that range is empty the single-interval policy is the only one and has
// probability one.
inline double policy_log_prior(int r, std::size_t M, std::size_t N, const PriorSpec& prior) {
    if (r < 1 || static_cast<std::size_t>(r - 1) > M)
        throw InfeasiblePolicyError("policy with " + std::to_string(r) + " intervals needs more than the " +
                                    std::to_string(M) + " candidate thresholds available");
    if (prior.policy_prior == PolicyPriorMode::Uniform) return 0.0;
    const int upper = static_cast<int>(std::min<std::size_t>(N == 0 ? 0 : N - 1, M + 1));
    if (upper < 2) return r == 1 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (r < 2 || r > upper) return -std::numeric_limits<double>::infinity();
    const double log_mass = -prior.lambda + r * std::log(prior.lambda) - log_gamma(r + 1.0);
    const double log_choose = log_gamma(static_cast<double>(M) + 1.0) - log_gamma(static_cast<double>(r)) -
                              log_gamma(static_cast<double>(M) - r + 2.0);
    return log_mass - detail::log_truncated_poisson_mass(prior.lambda, upper) - log_choose;
}

// Score of a single continuous column: empty-parent discrete part plus the
// density part plus the policy prior.
inline double univariate_score(std::span<const double> column, const DiscretizationPolicy& policy,
                               const PriorSpec& prior) {
    DiscretizedData dd;
    dd.codes.push_back(apply_policy(column, policy));
    dd.arity.push_back(policy.arity());
    const double discrete = discrete_family_score(family_counts(dd, 0, {}), prior);
    const double cont = density_component(column, policy, prior);
    return discrete + cont + policy_log_prior(policy.arity(), candidate_thresholds(column).size(), column.size(), prior);
}

struct ScoreBreakdown {
    std::vector<double> continuous;  // S_c per variable
    std::vector<double> discrete;    // S_d of the variable's family
    std::vector<double> log_prior;   // policy log prior

    double node_total(std::size_t i) const { return continuous[i] + discrete[i] + log_prior[i]; }

    double total() const {
        double t = 0.0;
        for (std::size_t i = 0; i < continuous.size(); ++i) t += continuous[i] + discrete[i] + log_prior[i];
        return t;
    }
};

inline double variable_density_term(const Dataset& data, std::size_t i, const DiscretizationPolicy& policy,
                                    const PriorSpec& prior) {
    return data.is_continuous(i) ? density_component(data.values(i), policy, prior) : 0.0;
}

inline double variable_log_prior(const Dataset& data, std::size_t i, const DiscretizationPolicy& policy,
                                 const PriorSpec& prior) {
    if (!data.is_continuous(i)) return 0.0;
    return policy_log_prior(policy.arity(), data.candidates(i).size(), data.rows(), prior);
}

inline double family_term(const DiscretizedData& dd, const Dag& g, std::size_t i, const PriorSpec& prior) {
    return discrete_family_score(family_counts(dd, i, g.parents(i)), prior);
}

inline void check_structure(const Dataset& data, const Dag& g) {
    if (g.size() != data.size())
        throw ValidationError("structure has " + std::to_string(g.size()) + " nodes, data has " +
                              std::to_string(data.size()) + " variables");
}

// Every family counted once, in its child's slot.
inline ScoreBreakdown network_score(const NetworkPolicy& policy, const Dag& g, const Dataset& data,
                                    const PriorSpec& prior) {
    check_structure(data, g);
    const auto dd = discretize(data, policy);
    ScoreBreakdown b;
    b.continuous.resize(data.size());
    b.discrete.resize(data.size());
    b.log_prior.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        b.continuous[i] = variable_density_term(data, i, policy[i], prior);
        b.discrete[i] = family_term(dd, g, i, prior);
        b.log_prior[i] = variable_log_prior(data, i, policy[i], prior);
    }
    return b;
}

// The terms of the network score that depend on variable i's policy: its
// density part, its own family, its children's families, and its prior.
inline double local_score(std::size_t i, const NetworkPolicy& policy, const Dag& g, const Dataset& data,
                          const PriorSpec& prior) {
    check_structure(data, g);
    const auto dd = discretize(data, policy);
    double s = variable_density_term(data, i, policy[i], prior) + family_term(dd, g, i, prior);
    for (auto c : g.children(i)) s += family_term(dd, g, c, prior);
    return s + variable_log_prior(data, i, policy[i], prior);
}

}  // namespace mvdisc
