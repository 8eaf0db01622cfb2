#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvdisc/error.hpp"

namespace mvdisc {

enum class VariableKind { Continuous, Discrete };

struct Bounds {
    double lower = 0.0;
    double upper = 0.0;

    bool contains(double x) const { return x >= lower && x <= upper; }
    bool operator==(const Bounds&) const = default;
};

struct VariableMeta {
    std::string name;
    VariableKind kind = VariableKind::Continuous;
    int arity = 0;                 // discrete only
    std::optional<Bounds> bounds;  // continuous only; declared domain bounds
    std::size_t column_index = 0;

    static VariableMeta continuous(std::string name, std::optional<Bounds> bounds = std::nullopt) {
        VariableMeta m;
        m.name = std::move(name);
        m.kind = VariableKind::Continuous;
        m.bounds = bounds;
        return m;
    }

    static VariableMeta discrete(std::string name, int arity) {
        VariableMeta m;
        m.name = std::move(name);
        m.kind = VariableKind::Discrete;
        m.arity = arity;
        return m;
    }

    bool is_continuous() const { return kind == VariableKind::Continuous; }

    void validate() const {
        if (name.empty()) throw ValidationError("variable with empty name");
        if (kind == VariableKind::Discrete && arity < 2)
            throw ValidationError("discrete variable '" + name + "' needs arity >= 2, got " + std::to_string(arity));
        if (bounds && !(bounds->lower < bounds->upper))
            throw ValidationError("variable '" + name + "' declares bounds with lower >= upper");
    }
};

// Midpoints between contiguous distinct values of a column. Arithmetic means.
inline std::vector<double> candidate_thresholds(std::span<const double> column) {
    std::vector<double> sorted(column.begin(), column.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<double> out;
    if (sorted.size() < 2) return out;
    out.reserve(sorted.size() - 1);
    for (std::size_t t = 0; t + 1 < sorted.size(); ++t) out.push_back(sorted[t] + (sorted[t + 1] - sorted[t]) / 2.0);
    return out;
}

// Threshold set plus the bounds of the outermost intervals. Intervals are
// left-open and right-closed, the first one closed at the lower bound:
// [lower, d1], (d1, d2], ..., (d_{r-1}, upper].
// Discrete variables carry a trivial policy that is the identity on codes.
class DiscretizationPolicy {
public:
    DiscretizationPolicy() = default;

    static DiscretizationPolicy trivial(int arity) {
        if (arity < 1) throw ValidationError("trivial policy needs arity >= 1");
        DiscretizationPolicy p;
        p.trivial_ = true;
        p.trivial_arity_ = arity;
        p.lower_ = 0.0;
        p.upper_ = static_cast<double>(arity - 1);
        return p;
    }

    static DiscretizationPolicy from_thresholds(std::vector<double> thresholds, double lower, double upper) {
        if (!(lower <= upper)) throw ValidationError("policy bounds must satisfy lower <= upper");
        if (lower == upper && !thresholds.empty())
            throw ValidationError("degenerate bounds admit no thresholds");
        for (std::size_t k = 0; k < thresholds.size(); ++k) {
            if (!std::isfinite(thresholds[k])) throw ValidationError("non-finite threshold");
            if (!(thresholds[k] > lower && thresholds[k] < upper))
                throw ValidationError("threshold " + std::to_string(thresholds[k]) + " outside bounds (" +
                                      std::to_string(lower) + ", " + std::to_string(upper) + ")");
            if (k > 0 && !(thresholds[k - 1] < thresholds[k]))
                throw ValidationError("thresholds must be strictly increasing");
        }
        DiscretizationPolicy p;
        p.thresholds_ = std::move(thresholds);
        p.lower_ = lower;
        p.upper_ = upper;
        return p;
    }

    bool is_trivial() const { return trivial_; }
    int arity() const { return trivial_ ? trivial_arity_ : static_cast<int>(thresholds_.size()) + 1; }
    const std::vector<double>& thresholds() const { return thresholds_; }
    double lower() const { return lower_; }
    double upper() const { return upper_; }

    // Interval code of a value (0-based).
    int code(double x) const {
        if (trivial_) {
            if (x < 0 || x > upper_ || x != std::floor(x))
                throw RangeError("value " + std::to_string(x) + " is not a valid code for a trivial policy");
            return static_cast<int>(x);
        }
        if (!(x >= lower_ && x <= upper_))
            throw RangeError("value " + std::to_string(x) + " outside policy bounds [" + std::to_string(lower_) + ", " +
                             std::to_string(upper_) + "]");
        // first threshold with x <= threshold
        return static_cast<int>(std::lower_bound(thresholds_.begin(), thresholds_.end(), x) - thresholds_.begin());
    }

    // Edges (left, right) of interval k.
    std::pair<double, double> interval(int k) const {
        const double left = k == 0 ? lower_ : thresholds_[static_cast<std::size_t>(k - 1)];
        const double right = k + 1 == arity() ? upper_ : thresholds_[static_cast<std::size_t>(k)];
        return {left, right};
    }

    bool contains(int k, double x) const {
        auto [left, right] = interval(k);
        return (k == 0 ? x >= left : x > left) && x <= right;
    }

    bool operator==(const DiscretizationPolicy&) const = default;

private:
    std::vector<double> thresholds_;
    double lower_ = 0.0;
    double upper_ = 0.0;
    bool trivial_ = false;
    int trivial_arity_ = 0;
};

// One policy per variable, indexed by variable position.
using NetworkPolicy = std::vector<DiscretizationPolicy>;

inline std::vector<int> apply_policy(std::span<const double> column, const DiscretizationPolicy& policy) {
    std::vector<int> codes(column.size());
    std::transform(column.begin(), column.end(), codes.begin(), [&](double x) { return policy.code(x); });
    return codes;
}

// Sort index and candidate-threshold cache of a continuous column.
struct ContinuousIndex {
    std::vector<std::size_t> order;  // rows by ascending value, stable
    std::vector<double> distinct;    // sorted distinct values
    std::vector<int> rank;           // row -> position in `distinct`
    std::vector<int> multiplicity;   // rows per distinct value
    std::vector<double> candidates;  // midpoints, size distinct.size() - 1
    Bounds bounds;                   // declared bounds, else column min/max
};

class Dataset {
public:
    Dataset() = default;

    // `columns[i]` holds the values of `variables[i]`; discrete codes are stored as reals.
    Dataset(std::vector<VariableMeta> variables, std::vector<std::vector<double>> columns)
        : variables_(std::move(variables)) {
        if (variables_.empty()) throw ValidationError("dataset has no variables");
        if (columns.size() != variables_.size()) throw ValidationError("column count does not match variable count");
        rows_ = columns.front().size();
        if (rows_ == 0) throw ValidationError("dataset has no rows");
        std::set<std::string> names;
        values_.resize(variables_.size());
        codes_.resize(variables_.size());
        index_.resize(variables_.size());
        for (std::size_t i = 0; i < variables_.size(); ++i) {
            auto& meta = variables_[i];
            meta.column_index = i;
            meta.validate();
            if (!names.insert(meta.name).second) throw ValidationError("duplicate variable name '" + meta.name + "'");
            if (columns[i].size() != rows_) throw ValidationError("column '" + meta.name + "' has a different length");
            for (std::size_t row = 0; row < rows_; ++row) {
                const double x = columns[i][row];
                if (std::isnan(x))
                    throw ValidationError("missing value at row " + std::to_string(row + 1) + ", column '" +
                                          meta.name + "'");
                if (!std::isfinite(x))
                    throw ValidationError("non-finite value at row " + std::to_string(row + 1) + ", column '" +
                                          meta.name + "'");
            }
            if (meta.is_continuous()) {
                build_index(i, columns[i]);
                values_[i] = std::move(columns[i]);
            } else {
                auto& codes = codes_[i];
                codes.reserve(rows_);
                for (std::size_t row = 0; row < rows_; ++row) {
                    const double x = columns[i][row];
                    if (x != std::floor(x) || x < 0 || x >= meta.arity)
                        throw ValidationError("discrete code " + std::to_string(x) + " out of range [0, " +
                                              std::to_string(meta.arity) + ") at row " + std::to_string(row + 1) +
                                              ", column '" + meta.name + "'");
                    codes.push_back(static_cast<int>(x));
                }
                values_[i] = std::move(columns[i]);
            }
        }
    }

    std::size_t rows() const { return rows_; }
    std::size_t size() const { return variables_.size(); }
    const std::vector<VariableMeta>& variables() const { return variables_; }
    const VariableMeta& variable(std::size_t i) const { return variables_.at(i); }
    bool is_continuous(std::size_t i) const { return variables_.at(i).is_continuous(); }

    std::span<const double> values(std::size_t i) const { return values_.at(i); }

    std::span<const int> codes(std::size_t i) const {
        if (is_continuous(i)) throw InvariantError("codes() on continuous column '" + variables_[i].name + "'");
        return codes_[i];
    }

    const ContinuousIndex& index(std::size_t i) const {
        if (!is_continuous(i)) throw InvariantError("index() on discrete column '" + variables_[i].name + "'");
        return index_[i];
    }

    std::span<const double> candidates(std::size_t i) const { return index(i).candidates; }
    Bounds bounds(std::size_t i) const { return index(i).bounds; }

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < variables_.size(); ++i)
            if (variables_[i].name == name) return i;
        return std::nullopt;
    }

    std::size_t require(std::string_view name) const {
        if (auto i = find(name)) return *i;
        throw ValidationError("unknown variable '" + std::string(name) + "'");
    }

private:
    void build_index(std::size_t i, const std::vector<double>& column) {
        auto& ix = index_[i];
        ix.order.resize(rows_);
        std::iota(ix.order.begin(), ix.order.end(), std::size_t{0});
        std::stable_sort(ix.order.begin(), ix.order.end(),
                         [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });
        ix.rank.assign(rows_, 0);
        for (std::size_t pos = 0; pos < rows_; ++pos) {
            const double x = column[ix.order[pos]];
            if (ix.distinct.empty() || ix.distinct.back() != x) {
                ix.distinct.push_back(x);
                ix.multiplicity.push_back(0);
            }
            ix.rank[ix.order[pos]] = static_cast<int>(ix.distinct.size() - 1);
            ++ix.multiplicity.back();
        }
        ix.candidates = candidate_thresholds(column);
        const auto& meta = variables_[i];
        if (meta.bounds) {
            if (ix.distinct.front() < meta.bounds->lower || ix.distinct.back() > meta.bounds->upper)
                throw ValidationError("column '" + meta.name + "' has values outside its declared bounds");
            ix.bounds = *meta.bounds;
        } else {
            ix.bounds = {ix.distinct.front(), ix.distinct.back()};
        }
    }

    std::vector<VariableMeta> variables_;
    std::size_t rows_ = 0;
    std::vector<std::vector<double>> values_;
    std::vector<std::vector<int>> codes_;
    std::vector<ContinuousIndex> index_;
};

// The dataset under a network policy: every column as codes.
struct DiscretizedData {
    std::vector<std::vector<int>> codes;
    std::vector<int> arity;
};

inline DiscretizedData discretize(const Dataset& data, const NetworkPolicy& policy) {
    if (policy.size() != data.size()) throw ValidationError("network policy does not cover every variable");
    DiscretizedData out;
    out.codes.resize(data.size());
    out.arity.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.arity[i] = policy[i].arity();
        if (data.is_continuous(i)) {
            out.codes[i] = apply_policy(data.values(i), policy[i]);
        } else {
            auto codes = data.codes(i);
            out.codes[i].assign(codes.begin(), codes.end());
        }
    }
    return out;
}

// Discrete variables get the trivial policy; continuous ones a single interval.
inline NetworkPolicy trivial_network_policy(const Dataset& data) {
    NetworkPolicy out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.is_continuous(i)) {
            auto b = data.bounds(i);
            out.push_back(DiscretizationPolicy::from_thresholds({}, b.lower, b.upper));
        } else {
            out.push_back(DiscretizationPolicy::trivial(data.variable(i).arity));
        }
    }
    return out;
}

inline void validate_network_policy(const Dataset& data, const NetworkPolicy& policy) {
    if (policy.size() != data.size()) throw ValidationError("network policy does not cover every variable");
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& meta = data.variable(i);
        const auto& p = policy[i];
        if (meta.is_continuous()) {
            if (p.is_trivial()) throw ValidationError("continuous variable '" + meta.name + "' has a trivial policy");
            auto vals = data.values(i);
            auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
            if (*lo < p.lower() || *hi > p.upper())
                throw ValidationError("policy bounds of '" + meta.name + "' do not cover the data");
        } else if (!p.is_trivial() || p.arity() != meta.arity) {
            throw ValidationError("discrete variable '" + meta.name + "' needs the trivial policy of arity " +
                                  std::to_string(meta.arity));
        }
    }
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            return cells;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

inline std::optional<double> parse_double(std::string_view token) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), x);
    if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
    return x;
}

}  // namespace detail

constexpr int kMaxInferredDiscreteValues = 15;

// Reads CSV text with a header row. With a schema, every header column must
// appear in it (order taken from the header). Without one, a column is
// discrete when all entries are non-negative integers with at most 15
// distinct values, continuous otherwise.
inline Dataset load_dataset(std::istream& in, const std::optional<std::vector<VariableMeta>>& schema = std::nullopt) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("CSV input is empty (a header row is required)");
    std::vector<std::string> header;
    for (auto cell : detail::split_csv_line(line)) header.emplace_back(cell);

    std::vector<std::vector<double>> columns(header.size());
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        auto cells = detail::split_csv_line(line);
        if (cells.size() > header.size())
            throw ParseError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                             " cells, header has " + std::to_string(header.size()));
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c >= cells.size() || cells[c].empty())
                throw ValidationError("missing value at row " + std::to_string(row) + ", column '" + header[c] + "'");
            auto x = detail::parse_double(cells[c]);
            if (!x)
                throw ParseError("non-numeric token '" + std::string(cells[c]) + "' at row " + std::to_string(row) +
                                 ", column '" + header[c] + "'");
            columns[c].push_back(*x);
        }
    }
    if (row == 0) throw ValidationError("CSV has no data rows");

    std::vector<VariableMeta> variables;
    if (schema) {
        if (schema->size() != header.size())
            throw ValidationError("schema lists " + std::to_string(schema->size()) + " variables, CSV has " +
                                  std::to_string(header.size()) + " columns");
        for (const auto& name : header) {
            auto it = std::find_if(schema->begin(), schema->end(), [&](const VariableMeta& m) { return m.name == name; });
            if (it == schema->end()) throw ValidationError("CSV column '" + name + "' is not in the schema");
            variables.push_back(*it);
        }
    } else {
        for (std::size_t c = 0; c < header.size(); ++c) {
            const auto& col = columns[c];
            bool integral = std::all_of(col.begin(), col.end(), [](double x) { return x >= 0 && x == std::floor(x); });
            std::set<double> distinct;
            for (double x : col) {
                if (!integral || distinct.size() > static_cast<std::size_t>(kMaxInferredDiscreteValues)) break;
                distinct.insert(x);
            }
            if (integral && distinct.size() <= static_cast<std::size_t>(kMaxInferredDiscreteValues)) {
                int arity = std::max(2, static_cast<int>(*distinct.rbegin()) + 1);
                variables.push_back(VariableMeta::discrete(header[c], arity));
            } else {
                variables.push_back(VariableMeta::continuous(header[c]));
            }
        }
    }
    return Dataset(std::move(variables), std::move(columns));
}

}  // namespace mvdisc
