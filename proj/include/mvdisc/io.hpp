#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvdisc/dataset.hpp"
#include "mvdisc/error.hpp"
#include "mvdisc/generator.hpp"
#include "mvdisc/graph.hpp"
#include "mvdisc/scoring.hpp"
#include "mvdisc/search.hpp"

namespace mvdisc::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline json parse_json(std::istream& in, const std::string& what) {
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed " + what + " JSON: " + e.what());
    }
}

// Shortest representation that reads back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw InvariantError("cannot format number");
    return std::string(buf, ptr);
}

inline std::vector<std::string> names_of(const Dataset& data) {
    std::vector<std::string> out;
    for (const auto& v : data.variables()) out.push_back(v.name);
    return out;
}

// ---- schema: [{name, kind, arity?, bounds?}] ----

inline std::vector<VariableMeta> schema_from_json(const json& j) {
    try {
        const json& list = j.is_object() && j.contains("variables") ? j.at("variables") : j;
        if (!list.is_array()) throw ValidationError("schema must be a JSON list of variables");
        std::vector<VariableMeta> out;
        for (const auto& e : list) {
            const auto name = e.at("name").get<std::string>();
            const auto kind = e.at("kind").get<std::string>();
            VariableMeta m;
            if (kind == "continuous") {
                std::optional<Bounds> b;
                if (e.contains("bounds") && !e.at("bounds").is_null()) {
                    const auto& bj = e.at("bounds");
                    if (!bj.is_array() || bj.size() != 2) throw ValidationError("bounds of '" + name + "' must be [lo, hi]");
                    b = Bounds{bj[0].get<double>(), bj[1].get<double>()};
                }
                m = VariableMeta::continuous(name, b);
            } else if (kind == "discrete") {
                if (!e.contains("arity")) throw ValidationError("discrete variable '" + name + "' needs an arity");
                m = VariableMeta::discrete(name, e.at("arity").get<int>());
            } else {
                throw ValidationError("unknown kind '" + kind + "' for variable '" + name + "'");
            }
            m.validate();
            out.push_back(std::move(m));
        }
        return out;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid schema: ") + e.what());
    }
}

inline json schema_to_json(const std::vector<VariableMeta>& vars) {
    json list = json::array();
    for (const auto& v : vars) {
        json e{{"name", v.name}, {"kind", v.is_continuous() ? "continuous" : "discrete"}};
        if (v.is_continuous()) {
            if (v.bounds) e["bounds"] = {v.bounds->lower, v.bounds->upper};
        } else {
            e["arity"] = v.arity;
        }
        list.push_back(std::move(e));
    }
    return list;
}

// ---- policy: {schema_version, variables: {name: {thresholds, bounds, trivial}}} ----

inline json policy_to_json(const std::vector<std::string>& names, const NetworkPolicy& policy) {
    json vars = json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& p = policy.at(i);
        vars[names[i]] = {{"thresholds", p.thresholds()},
                          {"bounds", {p.lower(), p.upper()}},
                          {"trivial", p.is_trivial()},
                          {"arity", p.arity()}};
    }
    return {{"schema_version", kSchemaVersion}, {"variables", std::move(vars)}};
}

inline NetworkPolicy policy_from_json(const json& j, const Dataset& data) {
    try {
        const auto& vars = j.at("variables");
        NetworkPolicy out;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto& meta = data.variable(i);
            if (!vars.contains(meta.name)) throw ValidationError("policy has no entry for variable '" + meta.name + "'");
            const auto& e = vars.at(meta.name);
            const bool trivial = e.value("trivial", false);
            if (!meta.is_continuous()) {
                const int arity = e.value("arity", meta.arity);
                if (!trivial || arity != meta.arity)
                    throw ValidationError("policy arity mismatch for variable '" + meta.name + "': expected trivial arity " +
                                          std::to_string(meta.arity));
                out.push_back(DiscretizationPolicy::trivial(meta.arity));
                continue;
            }
            if (trivial) throw ValidationError("policy arity mismatch for variable '" + meta.name + "': continuous variable marked trivial");
            auto thresholds = e.at("thresholds").get<std::vector<double>>();
            Bounds b = data.bounds(i);
            if (e.contains("bounds") && !e.at("bounds").is_null()) b = {e.at("bounds")[0].get<double>(), e.at("bounds")[1].get<double>()};
            if (e.contains("arity") && e.at("arity").get<int>() != static_cast<int>(thresholds.size()) + 1)
                throw ValidationError("policy arity mismatch for variable '" + meta.name + "'");
            out.push_back(DiscretizationPolicy::from_thresholds(std::move(thresholds), b.lower, b.upper));
        }
        validate_network_policy(data, out);
        return out;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid policy: ") + e.what());
    }
}

// ---- structure: {schema_version, nodes: [names], edges: [[from, to], ...]} ----

inline json structure_to_json(const std::vector<std::string>& names, const Dag& g) {
    json edges = json::array();
    for (std::size_t v = 0; v < g.size(); ++v)
        for (auto p : g.parents(v)) edges.push_back({names.at(p), names.at(v)});
    return {{"schema_version", kSchemaVersion}, {"nodes", names}, {"edges", std::move(edges)}};
}

inline Dag structure_from_json(const json& j, const std::vector<std::string>& names) {
    try {
        auto index_of = [&](const std::string& name) {
            for (std::size_t i = 0; i < names.size(); ++i)
                if (names[i] == name) return i;
            throw ValidationError("structure refers to unknown variable '" + name + "'");
        };
        std::vector<std::vector<std::size_t>> parents(names.size());
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 2) throw ValidationError("edges must be [from, to] pairs");
            parents[index_of(e[1].get<std::string>())].push_back(index_of(e[0].get<std::string>()));
        }
        return Dag::from_parents(std::move(parents));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid structure: ") + e.what());
    }
}

// ---- mechanism ----

inline json mechanism_to_json(const Mechanism& m) {
    json vars = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        json parents = json::array();
        for (auto p : m.structure.parents(i)) parents.push_back(m.names[p]);
        vars.push_back({{"name", m.names[i]},
                        {"parents", std::move(parents)},
                        {"cpt", m.cpts[i]},
                        {"thresholds", m.policies[i].thresholds()},
                        {"bounds", {m.policies[i].lower(), m.policies[i].upper()}}});
    }
    return {{"schema_version", kSchemaVersion}, {"seed", m.seed}, {"variables", std::move(vars)}};
}

inline Mechanism mechanism_from_json(const json& j) {
    try {
        Mechanism m;
        m.seed = j.value("seed", std::uint64_t{0});
        const auto& vars = j.at("variables");
        for (const auto& v : vars) m.names.push_back(v.at("name").get<std::string>());
        std::vector<std::vector<std::size_t>> parents(m.names.size());
        for (std::size_t i = 0; i < m.names.size(); ++i) {
            const auto& v = vars[i];
            for (const auto& p : v.value("parents", json::array())) {
                auto name = p.get<std::string>();
                auto it = std::find(m.names.begin(), m.names.end(), name);
                if (it == m.names.end()) throw ValidationError("mechanism parent '" + name + "' is not a variable");
                parents[i].push_back(static_cast<std::size_t>(it - m.names.begin()));
            }
            const auto& b = v.at("bounds");
            m.policies.push_back(DiscretizationPolicy::from_thresholds(v.at("thresholds").get<std::vector<double>>(),
                                                                       b.at(0).get<double>(), b.at(1).get<double>()));
            m.cpts.push_back(v.at("cpt").get<std::vector<std::vector<double>>>());
        }
        for (auto& ps : parents) {
            auto sorted = ps;
            std::sort(sorted.begin(), sorted.end());
            if (sorted != ps) throw ValidationError("mechanism parents must be listed in variable order");
        }
        m.structure = Dag::from_parents(std::move(parents));
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid mechanism: ") + e.what());
    }
}

// ---- score breakdown and trace ----

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json breakdown_to_json(const std::vector<std::string>& names, const ScoreBreakdown& b) {
    json nodes = json::array();
    for (std::size_t i = 0; i < names.size(); ++i)
        nodes.push_back({{"name", names[i]},
                         {"continuous", finite_or_null(b.continuous[i])},
                         {"discrete", finite_or_null(b.discrete[i])},
                         {"log_prior", finite_or_null(b.log_prior[i])}});
    return {{"schema_version", kSchemaVersion}, {"nodes", std::move(nodes)}, {"total", finite_or_null(b.total())}};
}

inline json trace_record_to_json(const std::vector<std::string>& names, const TraceRecord& r) {
    json j{{"schema_version", kSchemaVersion}, {"kind", to_string(r.kind)}, {"delta", r.delta}, {"total", r.total}};
    if (r.kind == UpdateKind::Policy) {
        j["variable"] = names.at(r.variable);
        j["old_r"] = r.old_r;
        j["new_r"] = r.new_r;
    } else {
        j["from"] = names.at(r.from);
        j["to"] = names.at(r.variable);
    }
    return j;
}

inline void write_trace_jsonl(std::ostream& os, const std::vector<std::string>& names, const SearchTrace& trace) {
    for (const auto& r : trace.updates) os << trace_record_to_json(names, r).dump() << '\n';
}

// ---- CSV ----

inline void write_csv(std::ostream& os, const Dataset& data) {
    for (std::size_t i = 0; i < data.size(); ++i) os << (i ? "," : "") << data.variable(i).name;
    os << '\n';
    for (std::size_t row = 0; row < data.rows(); ++row) {
        for (std::size_t i = 0; i < data.size(); ++i) os << (i ? "," : "") << format_double(data.values(i)[row]);
        os << '\n';
    }
}

inline void write_codes_csv(std::ostream& os, const std::vector<std::string>& names,
                            const std::vector<std::vector<int>>& codes) {
    for (std::size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
    os << '\n';
    const std::size_t rows = codes.empty() ? 0 : codes.front().size();
    for (std::size_t row = 0; row < rows; ++row) {
        for (std::size_t i = 0; i < codes.size(); ++i) os << (i ? "," : "") << codes[i][row];
        os << '\n';
    }
}

}  // namespace mvdisc::io
