#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvdisc/dataset.hpp"
#include "mvdisc/error.hpp"
#include "mvdisc/graph.hpp"
#include "mvdisc/random.hpp"
#include "mvdisc/scoring.hpp"

namespace mvdisc {

// Scores closer than this are treated as equal when breaking ties.
inline constexpr double kTieTolerance = 1e-9;

enum class InitKind { EqualFrequency, EqualWidth, Given };

struct InitSpec {
    InitKind kind = InitKind::EqualFrequency;
    int bins = 3;
    std::optional<NetworkPolicy> given;
};

struct SearchConfig {
    std::optional<int> r_max;  // default min(12, N-1)
    double epsilon = 1e-6;
    int max_sweeps = 50;
    InitSpec init;
    bool structure_search = true;
    int max_parents = 3;
    int interleave_period = 1;
    std::uint64_t seed = 0;

    int resolved_r_max(std::size_t n_cases) const {
        if (r_max) return *r_max;
        return std::max(1, std::min(12, static_cast<int>(n_cases) - 1));
    }

    void validate() const {
        if (r_max && *r_max < 1) throw ValidationError("r_max must be >= 1");
        if (!(epsilon > 0)) throw ValidationError("epsilon must be > 0");
        if (max_sweeps < 1) throw ValidationError("max_sweeps must be >= 1");
        if (init.kind != InitKind::Given && init.bins < 1) throw ValidationError("initial bin count must be >= 1");
        if (r_max && init.kind != InitKind::Given && init.bins > *r_max)
            throw ValidationError("initial bin count exceeds r_max");
        if (max_parents < 0) throw ValidationError("max_parents must be >= 0");
        if (interleave_period < 1) throw ValidationError("interleave period must be >= 1");
    }
};

enum class UpdateKind { Policy, AddEdge, RemoveEdge, ReverseEdge };
enum class Termination { Converged, MaxSweeps, NothingToOptimize, NoImprovingEdit };

inline const char* to_string(UpdateKind k) {
    switch (k) {
        case UpdateKind::Policy: return "policy";
        case UpdateKind::AddEdge: return "add_edge";
        case UpdateKind::RemoveEdge: return "remove_edge";
        case UpdateKind::ReverseEdge: return "reverse_edge";
    }
    return "?";
}

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::Converged: return "converged";
        case Termination::MaxSweeps: return "max_sweeps";
        case Termination::NothingToOptimize: return "nothing_to_optimize";
        case Termination::NoImprovingEdit: return "no_improving_edit";
    }
    return "?";
}

// One accepted change. For policy updates `variable` is the node and
// `old_r`/`new_r` its interval counts; for edge edits the edge is
// from -> variable (before the edit) and the r fields are unused.
struct TraceRecord {
    UpdateKind kind = UpdateKind::Policy;
    std::size_t variable = 0;
    std::size_t from = 0;
    int old_r = 0;
    int new_r = 0;
    double delta = 0.0;
    double total = 0.0;  // network score after the change
};

struct SearchTrace {
    double initial_score = 0.0;
    std::vector<double> sweep_scores;
    std::vector<TraceRecord> updates;
    Termination termination = Termination::Converged;

    // Initial score followed by the total after every accepted update.
    std::vector<double> score_sequence() const {
        std::vector<double> s{initial_score};
        for (const auto& u : updates) s.push_back(u.total);
        return s;
    }
};

struct PolicyChoice {
    DiscretizationPolicy policy;
    double score = 0.0;  // local score of `policy`
    std::size_t evaluations = 0;
};

namespace detail {

// lgamma(alpha + n) for n = 0..max_n.
class ShiftedLogGamma {
public:
    ShiftedLogGamma() = default;
    ShiftedLogGamma(double alpha, std::size_t max_n) : alpha_(alpha), table_(max_n + 1) {
        for (std::size_t n = 0; n <= max_n; ++n) table_[n] = log_gamma(alpha + static_cast<double>(n));
    }
    double operator()(long n) const { return table_[static_cast<std::size_t>(n)]; }
    double alpha() const { return alpha_; }

private:
    double alpha_ = 0.0;
    std::vector<double> table_;
};

// Cumulative counts of a family state over the distinct values of the target
// variable: at(t, s) = rows with rank < t in state s.
struct PrefixCounts {
    std::size_t states = 0;
    std::vector<long> cum;  // (D + 1) * states

    PrefixCounts(std::size_t distinct, std::size_t n_states, std::span<const int> rank, const std::vector<std::size_t>& state)
        : states(n_states), cum((distinct + 1) * n_states, 0) {
        for (std::size_t row = 0; row < rank.size(); ++row)
            ++cum[(static_cast<std::size_t>(rank[row]) + 1) * states + state[row]];
        for (std::size_t t = 1; t <= distinct; ++t)
            for (std::size_t s = 0; s < states; ++s) cum[t * states + s] += cum[(t - 1) * states + s];
    }

    long between(std::size_t a, std::size_t b, std::size_t s) const {
        return cum[(b + 1) * states + s] - cum[a * states + s];
    }
};

// Splits the local score of one continuous variable, with every other policy
// held fixed, into A(r) + sum over intervals g(interval, r). Intervals are
// runs [a, b] of the variable's sorted distinct values. Counts add over
// disjoint intervals, which is what makes the split exact.
class IntervalScorer {
public:
    IntervalScorer(const Dataset& data, const DiscretizedData& dd, const Dag& g, std::size_t var, const PriorSpec& prior)
        : data_(data), prior_(prior), index_(data.index(var)) {
        const std::size_t D = index_.distinct.size();
        const std::size_t N = data.rows();
        std::span<const int> rank(index_.rank);

        std::vector<std::size_t> zero(N, 0);
        rows_ = std::make_unique<PrefixCounts>(D, 1, rank, zero);

        const auto& pa = g.parents(var);
        own_q_ = 1;
        for (auto p : pa) own_q_ *= static_cast<std::size_t>(dd.arity[p]);
        std::vector<std::size_t> cfg(N, 0);
        for (std::size_t row = 0; row < N; ++row)
            for (auto p : pa) cfg[row] = cfg[row] * static_cast<std::size_t>(dd.arity[p]) + static_cast<std::size_t>(dd.codes[p][row]);
        own_ = std::make_unique<PrefixCounts>(D, own_q_, rank, cfg);
        own_margins_.assign(own_q_, 0);
        for (auto c : cfg) ++own_margins_[c];

        for (auto c : g.children(var)) {
            Child ch;
            ch.r = dd.arity[c];
            ch.q_other = 1;
            std::vector<std::size_t> state(N, 0);
            for (auto p : g.parents(c)) {
                if (p == var) continue;
                ch.q_other *= static_cast<std::size_t>(dd.arity[p]);
            }
            for (std::size_t row = 0; row < N; ++row) {
                std::size_t o = 0;
                for (auto p : g.parents(c)) {
                    if (p == var) continue;
                    o = o * static_cast<std::size_t>(dd.arity[p]) + static_cast<std::size_t>(dd.codes[p][row]);
                }
                state[row] = o * static_cast<std::size_t>(ch.r) + static_cast<std::size_t>(dd.codes[c][row]);
            }
            ch.counts = std::make_unique<PrefixCounts>(D, ch.q_other * static_cast<std::size_t>(ch.r), rank, state);
            children_.push_back(std::move(ch));
        }

        if (prior_.density == DensityModel::MultinomialAbstraction && prior_.dirichlet == DirichletMode::K2) {
            // per-value cell terms do not depend on the group size under K2
            value_cells_.assign(D + 1, 0.0);
            const double a = prior_.alpha;
            for (std::size_t t = 0; t < D; ++t)
                value_cells_[t + 1] = value_cells_[t] + (log_gamma(a + index_.multiplicity[t]) - log_gamma(a));
        }
    }

    std::size_t distinct() const { return index_.distinct.size(); }

    // True when g does not depend on the total interval count r.
    bool layer_independent() const {
        return prior_.dirichlet == DirichletMode::K2;
    }

    // Prepares lgamma tables for total interval count r.
    void set_layer(int r) {
        const std::size_t N = data_.rows();
        const double own_cell = prior_.cell_alpha(r, own_q_);
        own_cell_ = ShiftedLogGamma(own_cell, N);
        for (auto& ch : children_) {
            const double cell = prior_.cell_alpha(ch.r, static_cast<std::size_t>(r) * ch.q_other);
            ch.cell = ShiftedLogGamma(cell, N);
            ch.row = ShiftedLogGamma(ch.r * cell, N);
        }
    }

    double gain(std::size_t a, std::size_t b) const {
        const long n_interval = rows_->between(a, b, 0);
        double s = density(a, b, n_interval);

        double own = 0.0;
        const double lg_own = own_cell_(0);
        for (std::size_t p = 0; p < own_q_; ++p) {
            const long n = own_->between(a, b, p);
            if (n != 0) own += own_cell_(n) - lg_own;
        }
        s += own;

        for (const auto& ch : children_) {
            const double lg_cell = ch.cell(0);
            const double lg_row = ch.row(0);
            double fam = 0.0;
            for (std::size_t o = 0; o < ch.q_other; ++o) {
                long margin = 0;
                double cells = 0.0;
                for (int k = 0; k < ch.r; ++k) {
                    const long n = ch.counts->between(a, b, o * static_cast<std::size_t>(ch.r) + static_cast<std::size_t>(k));
                    if (n == 0) continue;
                    margin += n;
                    cells += ch.cell(n) - lg_cell;
                }
                if (margin != 0) fam += (lg_row - ch.row(margin)) + cells;
            }
            s += fam;
        }
        return s;
    }

    // Terms that depend only on r: the row normalizers of the variable's own
    // family and the policy prior.
    double base(int r) const {
        const double row = r * prior_.cell_alpha(r, own_q_);
        double s = 0.0;
        for (auto m : own_margins_) s += log_gamma(row) - log_gamma(row + static_cast<double>(m));
        return s + policy_log_prior(r, index_.candidates.size(), data_.rows(), prior_);
    }

    double threshold(std::size_t b) const { return index_.candidates[b]; }
    Bounds bounds() const { return index_.bounds; }

private:
    struct Child {
        int r = 1;
        std::size_t q_other = 1;
        std::unique_ptr<PrefixCounts> counts;
        ShiftedLogGamma cell;
        ShiftedLogGamma row;
    };

    double density(std::size_t a, std::size_t b, long n_interval) const {
        const std::size_t D = distinct();
        if (prior_.density == DensityModel::UniformWithinInterval) {
            const auto bounds = index_.bounds;
            if (bounds.lower == bounds.upper) return 0.0;
            const double left = a == 0 ? bounds.lower : index_.candidates[a - 1];
            const double right = b + 1 == D ? bounds.upper : index_.candidates[b];
            return static_cast<double>(n_interval) * -std::log(right - left);
        }
        const int size = static_cast<int>(b - a + 1);
        const double cell = prior_.cell_alpha(size, 1);
        const double row = size * cell;
        double cells = 0.0;
        if (!value_cells_.empty()) {
            cells = value_cells_[b + 1] - value_cells_[a];
        } else {
            for (std::size_t t = a; t <= b; ++t) cells += log_gamma(cell + index_.multiplicity[t]) - log_gamma(cell);
        }
        return (log_gamma(row) - log_gamma(row + static_cast<double>(n_interval))) + cells;
    }

    const Dataset& data_;
    PriorSpec prior_;
    const ContinuousIndex& index_;
    std::unique_ptr<PrefixCounts> rows_;
    std::size_t own_q_ = 1;
    std::unique_ptr<PrefixCounts> own_;
    std::vector<long> own_margins_;
    std::vector<Child> children_;
    std::vector<double> value_cells_;
    ShiftedLogGamma own_cell_;
};

// best[k][a]: best sum of g over k intervals covering distinct values a..D-1.
using SuffixTable = std::vector<std::vector<double>>;

inline SuffixTable fill_suffix_table(const IntervalScorer& scorer, int max_k) {
    const std::size_t D = scorer.distinct();
    const double ninf = -std::numeric_limits<double>::infinity();
    SuffixTable best(static_cast<std::size_t>(max_k) + 1, std::vector<double>(D + 1, ninf));
    for (std::size_t a = D; a-- > 0;) {
        for (std::size_t b = a; b < D; ++b) {
            const double g = scorer.gain(a, b);
            if (b + 1 == D) {
                best[1][a] = g;
                continue;
            }
            for (int k = 2; k <= max_k; ++k) {
                const double rest = best[static_cast<std::size_t>(k - 1)][b + 1];
                if (rest == ninf) break;
                best[static_cast<std::size_t>(k)][a] = std::max(best[static_cast<std::size_t>(k)][a], g + rest);
            }
        }
    }
    return best;
}

// Walks the table left to right taking the smallest admissible cut each time,
// which yields the lexicographically smallest optimal threshold set.
inline std::vector<double> trace_thresholds(const IntervalScorer& scorer, const SuffixTable& best, int r) {
    const std::size_t D = scorer.distinct();
    std::vector<double> thresholds;
    std::size_t a = 0;
    for (int k = r; k > 1; --k) {
        const double target = best[static_cast<std::size_t>(k)][a];
        std::size_t chosen = D;
        for (std::size_t b = a; b + static_cast<std::size_t>(k) <= D; ++b) {
            const double rest = best[static_cast<std::size_t>(k - 1)][b + 1];
            if (scorer.gain(a, b) + rest >= target - kTieTolerance) {
                chosen = b;
                break;
            }
        }
        if (chosen == D) throw InvariantError("threshold reconstruction found no admissible cut");
        thresholds.push_back(scorer.threshold(chosen));
        a = chosen + 1;
    }
    return thresholds;
}

// Local score with variable i's codes swapped in, all other columns fixed.
inline double local_score_with(const Dataset& data, DiscretizedData& dd, const Dag& g, std::size_t i,
                               const DiscretizationPolicy& policy, const PriorSpec& prior) {
    dd.codes[i] = apply_policy(data.values(i), policy);
    dd.arity[i] = policy.arity();
    double s = variable_density_term(data, i, policy, prior) + family_term(dd, g, i, prior);
    for (auto c : g.children(i)) s += family_term(dd, g, c, prior);
    return s + variable_log_prior(data, i, policy, prior);
}

}  // namespace detail

// Exact maximizer of variable i's local score over policies built from its
// candidate thresholds with at most r_max intervals, all other policies fixed.
// Runs a dynamic program over (intervals used, start of the remaining suffix).
inline PolicyChoice optimize_variable(std::size_t i, const NetworkPolicy& policy, const Dag& g, const Dataset& data,
                                      const PriorSpec& prior, int r_max) {
    check_structure(data, g);
    if (!data.is_continuous(i)) return {policy.at(i), local_score(i, policy, g, data, prior), 0};
    auto dd = discretize(data, policy);
    detail::IntervalScorer scorer(data, dd, g, i, prior);
    const int top = std::min<int>(std::max(1, r_max), static_cast<int>(scorer.distinct()));

    std::vector<double> value(static_cast<std::size_t>(top) + 1, -std::numeric_limits<double>::infinity());
    std::optional<detail::SuffixTable> shared;
    if (scorer.layer_independent()) {
        scorer.set_layer(1);
        shared = detail::fill_suffix_table(scorer, top);
        for (int r = 1; r <= top; ++r) value[static_cast<std::size_t>(r)] = scorer.base(r) + (*shared)[static_cast<std::size_t>(r)][0];
    } else {
        for (int r = 1; r <= top; ++r) {
            scorer.set_layer(r);
            auto table = detail::fill_suffix_table(scorer, r);
            value[static_cast<std::size_t>(r)] = scorer.base(r) + table[static_cast<std::size_t>(r)][0];
        }
    }

    double best = -std::numeric_limits<double>::infinity();
    for (int r = 1; r <= top; ++r) best = std::max(best, value[static_cast<std::size_t>(r)]);
    int chosen_r = 1;
    if (std::isfinite(best))
        for (int r = 1; r <= top; ++r)
            if (value[static_cast<std::size_t>(r)] >= best - kTieTolerance) {
                chosen_r = r;
                break;
            }

    scorer.set_layer(chosen_r);
    const auto table = shared ? *shared : detail::fill_suffix_table(scorer, chosen_r);
    auto thresholds = detail::trace_thresholds(scorer, table, chosen_r);
    const auto bounds = scorer.bounds();
    auto out = DiscretizationPolicy::from_thresholds(std::move(thresholds), bounds.lower, bounds.upper);
    const double score = detail::local_score_with(data, dd, g, i, out, prior);
    return {std::move(out), score, 0};
}

inline constexpr std::size_t kMaxExhaustiveCandidates = 20;

// Scores every subset of the candidate thresholds with at most r_max
// intervals. Ties (within kTieTolerance) go to fewer intervals, then to the
// lexicographically smaller threshold list.
inline PolicyChoice exhaustive_policy_search(std::size_t i, const NetworkPolicy& policy, const Dag& g,
                                             const Dataset& data, const PriorSpec& prior, int r_max) {
    check_structure(data, g);
    if (!data.is_continuous(i)) return {policy.at(i), local_score(i, policy, g, data, prior), 0};
    const auto cand = data.candidates(i);
    const std::size_t M = cand.size();
    if (M > kMaxExhaustiveCandidates)
        throw ValidationError("exhaustive search refused: " + std::to_string(M) + " candidate thresholds (limit " +
                              std::to_string(kMaxExhaustiveCandidates) + ")");
    const auto bounds = data.bounds(i);
    auto dd = discretize(data, policy);

    struct Entry {
        double score;
        int r;
        std::vector<double> thresholds;
    };
    std::vector<Entry> entries;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << M); ++mask) {
        const int r = std::popcount(mask) + 1;
        if (r > r_max) continue;
        std::vector<double> t;
        for (std::size_t b = 0; b < M; ++b)
            if (mask & (std::uint64_t{1} << b)) t.push_back(cand[b]);
        auto p = DiscretizationPolicy::from_thresholds(t, bounds.lower, bounds.upper);
        entries.push_back({detail::local_score_with(data, dd, g, i, p, prior), r, std::move(t)});
    }

    double best = -std::numeric_limits<double>::infinity();
    for (const auto& e : entries) best = std::max(best, e.score);
    const Entry* pick = nullptr;
    for (const auto& e : entries) {
        if (std::isfinite(best) && e.score < best - kTieTolerance) continue;
        if (!pick || e.r < pick->r || (e.r == pick->r && e.thresholds < pick->thresholds)) pick = &e;
    }
    return {DiscretizationPolicy::from_thresholds(pick->thresholds, bounds.lower, bounds.upper), pick->score,
            entries.size()};
}

// Continuous variables that are not d-separated from i by the empty set nor by
// any set of discrete variables. Such a set exists exactly when the discrete
// ancestors of {i, j} separate them, so one query per candidate suffices.
inline NodeSet affected_set(const Dag& g, std::size_t i, const NodeSet& discrete_vars) {
    NodeSet out;
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (j == i || discrete_vars.count(j)) continue;
        NodeSet z;
        for (auto v : g.ancestors({i, j}))
            if (v != i && v != j && discrete_vars.count(v)) z.insert(v);
        if (!d_separated(g, i, j, z)) out.insert(j);
    }
    return out;
}

inline NodeSet discrete_variables(const Dataset& data) {
    NodeSet out;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (!data.is_continuous(i)) out.insert(i);
    return out;
}

// Starting policy for every continuous variable; discrete ones are trivial.
inline NetworkPolicy initial_policy(const Dataset& data, const SearchConfig& config) {
    if (config.init.kind == InitKind::Given) {
        if (!config.init.given) throw ValidationError("initial policy requested but none given");
        validate_network_policy(data, *config.init.given);
        return *config.init.given;
    }
    NetworkPolicy out = trivial_network_policy(data);
    const int bins = std::min(config.init.bins, config.resolved_r_max(data.rows()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.is_continuous(i)) continue;
        const auto& ix = data.index(i);
        const std::size_t N = data.rows();
        std::vector<std::size_t> picks;
        for (int k = 1; k < bins; ++k) {
            if (config.init.kind == InitKind::EqualFrequency) {
                const std::size_t pos = static_cast<std::size_t>(k) * N / static_cast<std::size_t>(bins);
                if (pos == 0) continue;
                const auto t = static_cast<std::size_t>(ix.rank[ix.order[pos - 1]]);
                if (t < ix.candidates.size()) picks.push_back(t);
            } else {
                if (ix.candidates.empty()) break;
                const double target = ix.bounds.lower + k * (ix.bounds.upper - ix.bounds.lower) / bins;
                auto it = std::lower_bound(ix.candidates.begin(), ix.candidates.end(), target);
                std::size_t t = static_cast<std::size_t>(it - ix.candidates.begin());
                if (t == ix.candidates.size() || (t > 0 && target - ix.candidates[t - 1] <= *it - target)) --t;
                picks.push_back(t);
            }
        }
        std::sort(picks.begin(), picks.end());
        picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
        std::vector<double> t;
        for (auto p : picks) t.push_back(ix.candidates[p]);
        out[i] = DiscretizationPolicy::from_thresholds(std::move(t), ix.bounds.lower, ix.bounds.upper);
    }
    return out;
}

struct CoordinateAscentResult {
    NetworkPolicy policy;
    SearchTrace trace;
};

// Sweeps the continuous variables in topological order (index tie-break),
// replacing a policy with its exact single-variable optimum whenever that
// strictly raises the network score. After an accepted change the variable's
// affected set is queued again within the same sweep. Stops when a sweep
// gains less than epsilon or after max_sweeps sweeps. With `only` set, just
// those variables are revisited.
inline CoordinateAscentResult coordinate_ascent(NetworkPolicy policy, const Dag& g, const Dataset& data,
                                                const PriorSpec& prior, const SearchConfig& config,
                                                const std::optional<NodeSet>& only = std::nullopt) {
    check_structure(data, g);
    validate_network_policy(data, policy);
    const int r_max = config.resolved_r_max(data.rows());
    CoordinateAscentResult out;
    double total = network_score(policy, g, data, prior).total();
    out.trace.initial_score = total;

    std::vector<std::size_t> order;
    for (auto v : g.order())
        if (data.is_continuous(v) && (!only || only->count(v))) order.push_back(v);
    if (order.empty()) {
        out.policy = std::move(policy);
        out.trace.termination = Termination::NothingToOptimize;
        return out;
    }
    const NodeSet discrete = discrete_variables(data);

    out.trace.termination = Termination::MaxSweeps;
    for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
        const double start = total;
        std::deque<std::size_t> queue(order.begin(), order.end());
        std::vector<char> queued(data.size(), 0);
        for (auto v : order) queued[v] = 1;
        while (!queue.empty()) {
            const auto v = queue.front();
            queue.pop_front();
            queued[v] = 0;
            auto choice = optimize_variable(v, policy, g, data, prior, r_max);
            if (choice.policy == policy[v]) continue;
            auto candidate = policy;
            candidate[v] = choice.policy;
            const double new_total = network_score(candidate, g, data, prior).total();
            if (!(new_total > total + kTieTolerance)) continue;
            out.trace.updates.push_back(
                {UpdateKind::Policy, v, v, policy[v].arity(), candidate[v].arity(), new_total - total, new_total});
            policy = std::move(candidate);
            total = new_total;
            for (auto w : affected_set(g, v, discrete)) {
                if (queued[w] || (only && !only->count(w))) continue;
                queued[w] = 1;
                queue.push_back(w);
            }
        }
        out.trace.sweep_scores.push_back(total);
        if (total - start < config.epsilon) {
            out.trace.termination = Termination::Converged;
            break;
        }
    }
    out.policy = std::move(policy);
    return out;
}

struct LearnResult {
    Dag structure;
    NetworkPolicy policy;
    SearchTrace trace;
};

namespace detail {

class FamilyCache {
public:
    FamilyCache(const Dataset& data, const PriorSpec& prior) : data_(data), prior_(prior) {}

    void reset(const NetworkPolicy& policy) {
        dd_ = discretize(data_, policy);
        cache_.clear();
    }

    double operator()(std::size_t child, std::vector<std::size_t> parents) {
        std::sort(parents.begin(), parents.end());
        auto key = std::make_pair(child, parents);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const double s = discrete_family_score(family_counts(dd_, child, parents), prior_);
        cache_.emplace(std::move(key), s);
        return s;
    }

private:
    const Dataset& data_;
    PriorSpec prior_;
    DiscretizedData dd_;
    std::map<std::pair<std::size_t, std::vector<std::size_t>>, double> cache_;
};

inline std::vector<std::size_t> plus(std::vector<std::size_t> v, std::size_t x) {
    v.push_back(x);
    return v;
}

inline std::vector<std::size_t> minus(std::vector<std::size_t> v, std::size_t x) {
    v.erase(std::remove(v.begin(), v.end(), x), v.end());
    return v;
}

inline void append_updates(SearchTrace& into, const SearchTrace& from) {
    into.updates.insert(into.updates.end(), from.updates.begin(), from.updates.end());
}

}  // namespace detail

// Greedy hill climbing over single-edge additions, deletions and reversals
// from the empty graph. Edits are scored under the current policies, starting
// from the initial discretization; the neighborhood of each accepted edit is
// re-discretized (every interleave_period edits). When no edit improves, all
// policies are re-optimized and the edit search resumes if anything changed.
// Candidate edits are visited in a seed-shuffled order; the first best one wins.
inline LearnResult hill_climb_structure(const Dataset& data, const PriorSpec& prior, const SearchConfig& config) {
    config.validate();
    prior.validate(data.rows());
    const std::size_t n = data.size();
    LearnResult out;
    out.structure = Dag(n);
    out.policy = initial_policy(data, config);
    double total = network_score(out.policy, out.structure, data, prior).total();
    out.trace.initial_score = total;
    out.trace.termination = Termination::NoImprovingEdit;
    if (!config.structure_search) {
        auto ca = coordinate_ascent(out.policy, out.structure, data, prior, config);
        out.policy = std::move(ca.policy);
        detail::append_updates(out.trace, ca.trace);
        out.trace.sweep_scores = ca.trace.sweep_scores;
        out.trace.termination = ca.trace.termination;
        return out;
    }

    const NodeSet discrete = discrete_variables(data);
    detail::FamilyCache family(data, prior);
    family.reset(out.policy);
    auto rng = make_stream(config.seed, 0x5ea4c4);
    const auto max_parents = static_cast<std::size_t>(config.max_parents);
    int edits = 0;

    for (;;) {
        const Dag& g = out.structure;
        struct Edit {
            UpdateKind kind;
            std::size_t from, to;
        };
        std::vector<Edit> edits_list;
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = 0; v < n; ++v) {
                if (u == v) continue;
                if (g.has_edge(u, v)) {
                    edits_list.push_back({UpdateKind::RemoveEdge, u, v});
                    if (g.parents(u).size() < max_parents && !g.without_edge(u, v).reaches(u, v))
                        edits_list.push_back({UpdateKind::ReverseEdge, u, v});
                } else if (!g.has_edge(v, u) && g.parents(v).size() < max_parents && !g.reaches(v, u)) {
                    edits_list.push_back({UpdateKind::AddEdge, u, v});
                }
            }
        shuffle(edits_list, rng);

        std::optional<Edit> best;
        double best_delta = 0.0;
        for (const auto& e : edits_list) {
            const auto& pv = g.parents(e.to);
            double delta = 0.0;
            switch (e.kind) {
                case UpdateKind::AddEdge: delta = family(e.to, detail::plus(pv, e.from)) - family(e.to, pv); break;
                case UpdateKind::RemoveEdge: delta = family(e.to, detail::minus(pv, e.from)) - family(e.to, pv); break;
                case UpdateKind::ReverseEdge: {
                    const auto& pu = g.parents(e.from);
                    delta = family(e.to, detail::minus(pv, e.from)) - family(e.to, pv) +
                            family(e.from, detail::plus(pu, e.to)) - family(e.from, pu);
                    break;
                }
                case UpdateKind::Policy: break;
            }
            if (!best || delta > best_delta) {
                best = e;
                best_delta = delta;
            }
        }
        if (!best || best_delta <= config.epsilon) {
            auto ca = coordinate_ascent(out.policy, out.structure, data, prior, config);
            if (ca.trace.updates.empty()) break;
            out.policy = std::move(ca.policy);
            detail::append_updates(out.trace, ca.trace);
            total = ca.trace.updates.back().total;
            family.reset(out.policy);
            out.trace.sweep_scores.push_back(total);
            continue;
        }

        Dag next = best->kind == UpdateKind::AddEdge      ? g.with_edge(best->from, best->to)
                   : best->kind == UpdateKind::RemoveEdge ? g.without_edge(best->from, best->to)
                                                          : g.with_edge_reversed(best->from, best->to);
        const double new_total = network_score(out.policy, next, data, prior).total();
        if (!(new_total > total)) throw InvariantError("accepted structure edit did not raise the score");
        out.trace.updates.push_back({best->kind, best->to, best->from, 0, 0, new_total - total, new_total});
        out.structure = std::move(next);
        total = new_total;

        if (++edits % config.interleave_period == 0) {
            NodeSet touched{best->from, best->to};
            for (auto e : {best->from, best->to})
                for (auto w : affected_set(out.structure, e, discrete)) touched.insert(w);
            for (auto d : discrete) touched.erase(d);
            if (!touched.empty()) {
                auto re = coordinate_ascent(out.policy, out.structure, data, prior, config, touched);
                if (!re.trace.updates.empty()) {
                    out.policy = std::move(re.policy);
                    detail::append_updates(out.trace, re.trace);
                    total = re.trace.updates.back().total;
                    family.reset(out.policy);
                }
            }
        }
        out.trace.sweep_scores.push_back(total);
    }
    return out;
}

}  // namespace mvdisc
