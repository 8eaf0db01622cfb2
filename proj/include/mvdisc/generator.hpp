#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mvdisc/dataset.hpp"
#include "mvdisc/error.hpp"
#include "mvdisc/graph.hpp"
#include "mvdisc/random.hpp"

namespace mvdisc {

// Latent discrete network over Y plus, for every Y_i, the policy whose
// intervals the observed X_i is drawn from (uniformly).
struct Mechanism {
    std::vector<std::string> names;
    Dag structure;
    // cpts[i][j][k] = P(Y_i = k | parent configuration j), configurations in
    // mixed radix over the sorted parent list, first parent most significant.
    std::vector<std::vector<std::vector<double>>> cpts;
    std::vector<DiscretizationPolicy> policies;
    std::uint64_t seed = 0;

    std::size_t size() const { return names.size(); }

    void validate() const {
        const std::size_t n = names.size();
        if (n == 0) throw ValidationError("mechanism has no variables");
        if (structure.size() != n || cpts.size() != n || policies.size() != n)
            throw ValidationError("mechanism parts disagree on the number of variables");
        for (std::size_t i = 0; i < n; ++i) {
            const int r = policies[i].arity();
            if (policies[i].is_trivial()) throw ValidationError("mechanism policy of '" + names[i] + "' is trivial");
            if (!(policies[i].lower() < policies[i].upper()))
                throw ValidationError("mechanism policy of '" + names[i] + "' has degenerate bounds");
            std::size_t q = 1;
            for (auto p : structure.parents(i)) q *= static_cast<std::size_t>(policies[p].arity());
            if (cpts[i].size() != q)
                throw ValidationError("CPT of '" + names[i] + "' has " + std::to_string(cpts[i].size()) +
                                      " rows, expected " + std::to_string(q));
            for (const auto& row : cpts[i]) {
                if (row.size() != static_cast<std::size_t>(r))
                    throw ValidationError("CPT row of '" + names[i] + "' does not match policy arity " +
                                          std::to_string(r));
                double sum = 0.0;
                for (double p : row) {
                    if (!(p >= 0.0)) throw ValidationError("negative CPT entry for '" + names[i] + "'");
                    sum += p;
                }
                if (std::abs(sum - 1.0) > 1e-12) throw ValidationError("CPT row of '" + names[i] + "' does not sum to 1");
            }
        }
    }
};

struct Sample {
    Dataset data;
    std::vector<std::vector<int>> latent;  // latent[i][row]
};

namespace detail {

inline int draw_categorical(const std::vector<double>& probs, double u) {
    double cum = 0.0;
    int last = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] <= 0.0) continue;
        cum += probs[k];
        last = static_cast<int>(k);
        if (u < cum) return last;
    }
    return last;
}

// Uniform on interval k of the policy: (left, right], or [left, right] for the first one.
inline double draw_in_interval(const DiscretizationPolicy& policy, int k, double u) {
    auto [left, right] = policy.interval(k);
    double x = right - u * (right - left);
    if (x > right) x = right;
    if (k == 0 ? x < left : x <= left) x = std::nextafter(left, right);
    return x;
}

}  // namespace detail

// Draws N cases. Variable i uses its own random stream (seed, i), so the
// output does not depend on the order in which variables are processed.
inline Sample sample_dataset(const Mechanism& m, std::size_t n_cases) {
    m.validate();
    if (n_cases < 1) throw ValidationError("case count must be >= 1");
    const std::size_t n = m.size();
    std::vector<std::vector<int>> latent(n, std::vector<int>(n_cases));
    std::vector<std::vector<double>> columns(n, std::vector<double>(n_cases));
    for (auto v : m.structure.order()) {
        auto rng = make_stream(m.seed, v);
        const auto& pa = m.structure.parents(v);
        for (std::size_t row = 0; row < n_cases; ++row) {
            std::size_t j = 0;
            for (auto p : pa) j = j * static_cast<std::size_t>(m.policies[p].arity()) + static_cast<std::size_t>(latent[p][row]);
            const int y = detail::draw_categorical(m.cpts[v][j], uniform01(rng));
            latent[v][row] = y;
            columns[v][row] = detail::draw_in_interval(m.policies[v], y, uniform01(rng));
        }
    }
    std::vector<VariableMeta> vars;
    for (std::size_t i = 0; i < n; ++i)
        vars.push_back(VariableMeta::continuous(m.names[i], Bounds{m.policies[i].lower(), m.policies[i].upper()}));
    return {Dataset(std::move(vars), std::move(columns)), std::move(latent)};
}

// Random DAG where node v takes a uniformly sized, uniformly chosen set of at
// most max_parents earlier nodes; CPT rows from a symmetric Dirichlet(1);
// thresholds evenly spaced on [0, 1].
inline Mechanism random_mechanism(std::size_t n, int max_parents, int r, std::uint64_t seed) {
    if (n < 1) throw ValidationError("mechanism needs at least one variable");
    if (r < 2) throw ValidationError("mechanism arity must be >= 2");
    if (max_parents < 0) throw ValidationError("max_parents must be >= 0");
    auto rng = make_stream(seed, n + 0x6d656368ULL);
    Mechanism m;
    m.seed = seed;
    std::vector<std::vector<std::size_t>> parents(n);
    for (std::size_t v = 0; v < n; ++v) {
        m.names.push_back("X" + std::to_string(v + 1));
        const std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(max_parents), v);
        const std::size_t k = uniform_index(rng, limit + 1);
        std::vector<std::size_t> pool(v);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        shuffle(pool, rng);
        parents[v].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    }
    m.structure = Dag::from_parents(parents);

    std::vector<double> thresholds;
    for (int k = 1; k < r; ++k) thresholds.push_back(static_cast<double>(k) / r);
    m.policies.assign(n, DiscretizationPolicy::from_thresholds(thresholds, 0.0, 1.0));

    for (std::size_t v = 0; v < n; ++v) {
        std::size_t q = 1;
        for (std::size_t p = 0; p < m.structure.parents(v).size(); ++p) q *= static_cast<std::size_t>(r);
        std::vector<std::vector<double>> cpt(q, std::vector<double>(static_cast<std::size_t>(r)));
        for (auto& row : cpt) {
            double sum = 0.0;
            for (auto& p : row) {
                p = -std::log1p(-uniform01(rng));
                sum += p;
            }
            for (auto& p : row) p /= sum;
        }
        m.cpts.push_back(std::move(cpt));
    }
    return m;
}

}  // namespace mvdisc
