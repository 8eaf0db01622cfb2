// mvdisc: discretize, learn, score and simulate from the command line.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mvdisc/mvdisc.hpp"

using namespace mvdisc;
using io::json;

namespace {

struct Options {
    std::string data, schema, structure, policy, mechanism;
    std::string out, out_data, out_structure, out_mechanism, out_schema, latent, manifest, trace, dot;
    std::optional<double> alpha, ess;
    std::string policy_prior = "uniform";
    std::string density = "uniform";
    std::optional<int> r_max;
    double epsilon = 1e-6;
    int max_sweeps = 50;
    std::string init = "eqfreq:3";
    std::uint64_t seed = 0;
    int max_parents = 3;
    int interleave = 1;
    int threads = 1;
    std::string random;
    long n_cases = -1;
};

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read '" + path + "'");
    return in;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << text;
    if (!out) throw InputError("failed writing '" + path + "'");
}

json read_json(const std::string& path, const std::string& what) {
    auto in = open_in(path);
    return io::parse_json(in, what);
}

Dataset read_dataset(const Options& o) {
    std::optional<std::vector<VariableMeta>> schema;
    if (!o.schema.empty()) schema = io::schema_from_json(read_json(o.schema, "schema"));
    auto in = open_in(o.data);
    return load_dataset(in, schema);
}

double parse_number(const std::string& s, const std::string& flag) {
    auto v = detail::parse_double(s);
    if (!v) throw InputError("invalid number '" + s + "' for " + flag);
    return *v;
}

PriorSpec resolve_prior(const Options& o) {
    PriorSpec p;
    if (o.alpha && o.ess) throw InputError("--alpha and --ess are mutually exclusive");
    if (o.alpha) p.alpha = *o.alpha;
    if (o.ess) {
        p.dirichlet = DirichletMode::BDeu;
        p.ess = *o.ess;
    }
    if (o.policy_prior == "uniform") {
        p.policy_prior = PolicyPriorMode::Uniform;
    } else if (o.policy_prior.rfind("poisson:", 0) == 0) {
        p.policy_prior = PolicyPriorMode::PoissonOverR;
        p.lambda = parse_number(o.policy_prior.substr(8), "--policy-prior");
    } else {
        throw InputError("--policy-prior must be 'uniform' or 'poisson:<lambda>'");
    }
    if (o.density == "uniform") p.density = DensityModel::UniformWithinInterval;
    else if (o.density == "multinomial") p.density = DensityModel::MultinomialAbstraction;
    else throw InputError("--density must be 'uniform' or 'multinomial'");
    return p;
}

SearchConfig resolve_config(const Options& o, std::size_t n_cases) {
    SearchConfig c;
    c.r_max = o.r_max ? *o.r_max : c.resolved_r_max(n_cases);
    c.epsilon = o.epsilon;
    c.max_sweeps = o.max_sweeps;
    c.max_parents = o.max_parents;
    c.interleave_period = o.interleave;
    c.seed = o.seed;
    const auto colon = o.init.find(':');
    const auto kind = o.init.substr(0, colon);
    if (kind == "eqfreq") c.init.kind = InitKind::EqualFrequency;
    else if (kind == "eqwidth") c.init.kind = InitKind::EqualWidth;
    else throw InputError("--init must be 'eqfreq:<r0>' or 'eqwidth:<r0>'");
    if (colon != std::string::npos) {
        const double b = parse_number(o.init.substr(colon + 1), "--init");
        if (b != std::floor(b)) throw InputError("--init bin count must be an integer");
        c.init.bins = static_cast<int>(b);
    }
    // the initial bin count may exceed a small r_max; it is capped when used
    if (c.init.bins > *c.r_max) c.init.bins = *c.r_max;
    c.validate();
    return c;
}

const char* name_of(DirichletMode m) { return m == DirichletMode::K2 ? "k2" : "bdeu"; }
const char* name_of(PolicyPriorMode m) { return m == PolicyPriorMode::Uniform ? "uniform" : "poisson"; }
const char* name_of(DensityModel m) { return m == DensityModel::UniformWithinInterval ? "uniform" : "multinomial"; }
const char* name_of(InitKind k) {
    return k == InitKind::EqualFrequency ? "eqfreq" : k == InitKind::EqualWidth ? "eqwidth" : "given";
}

json prior_json(const PriorSpec& p) {
    return {{"dirichlet", name_of(p.dirichlet)}, {"alpha", p.alpha},      {"ess", p.ess},
            {"policy_prior", name_of(p.policy_prior)}, {"lambda", p.lambda}, {"density", name_of(p.density)}};
}

json config_json(const SearchConfig& c) {
    return {{"r_max", *c.r_max},
            {"epsilon", c.epsilon},
            {"max_sweeps", c.max_sweeps},
            {"init", name_of(c.init.kind)},
            {"init_bins", c.init.bins},
            {"structure_search", c.structure_search},
            {"max_parents", c.max_parents},
            {"interleave_period", c.interleave_period},
            {"seed", c.seed}};
}

class Manifest {
public:
    explicit Manifest(std::string command) : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

    json& body() { return body_; }

    void write(const std::string& path, std::optional<double> total) {
        if (path.empty()) return;
        json j{{"schema_version", io::kSchemaVersion}, {"command", command_}};
        j.update(body_);
        j["final_total_score"] = total ? io::finite_or_null(*total) : json(nullptr);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
        j["duration_seconds"] = elapsed.count();
        write_file(path, j.dump(2) + "\n");
    }

private:
    std::string command_;
    std::chrono::steady_clock::time_point start_;
    json body_ = json::object();
};

json paths_json(const std::vector<std::pair<const char*, const std::string*>>& entries) {
    json j = json::object();
    for (const auto& [k, v] : entries) j[k] = v->empty() ? json(nullptr) : json(*v);
    return j;
}

void write_trace(const std::string& path, const std::vector<std::string>& names, const SearchTrace& trace) {
    if (path.empty()) return;
    std::ostringstream os;
    io::write_trace_jsonl(os, names, trace);
    json summary{{"schema_version", io::kSchemaVersion},
                 {"kind", "summary"},
                 {"initial_score", trace.initial_score},
                 {"sweep_scores", trace.sweep_scores},
                 {"termination", to_string(trace.termination)}};
    os << summary.dump() << '\n';
    write_file(path, os.str());
}

int cmd_discretize(const Options& o) {
    Manifest manifest("discretize");
    auto data = read_dataset(o);
    const auto names = io::names_of(data);
    const auto prior = resolve_prior(o);
    prior.validate(data.rows());
    auto config = resolve_config(o, data.rows());
    Dag g(data.size());
    if (!o.structure.empty()) g = io::structure_from_json(read_json(o.structure, "structure"), names);

    auto result = coordinate_ascent(initial_policy(data, config), g, data, prior, config);
    const auto breakdown = network_score(result.policy, g, data, prior);

    const auto policy_text = io::policy_to_json(names, result.policy).dump(2) + "\n";
    if (!o.out.empty()) write_file(o.out, policy_text);
    else std::cout << policy_text;
    if (!o.out_data.empty()) {
        std::ostringstream os;
        io::write_codes_csv(os, names, discretize(data, result.policy).codes);
        write_file(o.out_data, os.str());
    }
    write_trace(o.trace, names, result.trace);

    manifest.body()["prior"] = prior_json(prior);
    manifest.body()["search"] = config_json(config);
    manifest.body()["termination"] = to_string(result.trace.termination);
    manifest.body()["paths"] = paths_json({{"data", &o.data}, {"schema", &o.schema}, {"structure", &o.structure},
                                           {"out", &o.out}, {"out_data", &o.out_data}, {"trace", &o.trace}});
    manifest.write(o.manifest, breakdown.total());
    std::cerr << "total score " << io::format_double(breakdown.total()) << "\n";
    return 0;
}

int cmd_learn(const Options& o) {
    Manifest manifest("learn");
    auto data = read_dataset(o);
    const auto names = io::names_of(data);
    const auto prior = resolve_prior(o);
    auto config = resolve_config(o, data.rows());
    auto result = hill_climb_structure(data, prior, config);
    const double total = network_score(result.policy, result.structure, data, prior).total();

    const auto structure_text = io::structure_to_json(names, result.structure).dump(2) + "\n";
    if (!o.out_structure.empty()) write_file(o.out_structure, structure_text);
    else std::cout << structure_text;
    if (!o.out.empty()) write_file(o.out, io::policy_to_json(names, result.policy).dump(2) + "\n");
    if (!o.dot.empty()) {
        std::ostringstream os;
        write_dot(os, result.structure, names);
        write_file(o.dot, os.str());
    }
    write_trace(o.trace, names, result.trace);

    manifest.body()["prior"] = prior_json(prior);
    manifest.body()["search"] = config_json(config);
    manifest.body()["threads"] = o.threads;
    manifest.body()["paths"] = paths_json({{"data", &o.data}, {"schema", &o.schema}, {"out", &o.out},
                                           {"out_structure", &o.out_structure}, {"dot", &o.dot}, {"trace", &o.trace}});
    manifest.write(o.manifest, total);
    std::cerr << "total score " << io::format_double(total) << "\n";
    return 0;
}

int cmd_score(const Options& o) {
    Manifest manifest("score");
    auto data = read_dataset(o);
    const auto names = io::names_of(data);
    const auto prior = resolve_prior(o);
    prior.validate();
    Dag g(data.size());
    if (!o.structure.empty()) g = io::structure_from_json(read_json(o.structure, "structure"), names);
    NetworkPolicy policy = trivial_network_policy(data);
    if (!o.policy.empty()) policy = io::policy_from_json(read_json(o.policy, "policy"), data);
    else
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data.is_continuous(i))
                throw InputError("--policy is required when the data has continuous variable '" + names[i] + "'");

    const auto b = network_score(policy, g, data, prior);
    const auto text = io::breakdown_to_json(names, b).dump(2) + "\n";
    if (!o.out.empty()) write_file(o.out, text);
    std::cout << text;

    manifest.body()["prior"] = prior_json(prior);
    manifest.body()["paths"] = paths_json({{"data", &o.data}, {"schema", &o.schema}, {"structure", &o.structure},
                                           {"policy", &o.policy}, {"out", &o.out}});
    manifest.write(o.manifest, b.total());
    return 0;
}

Mechanism random_from_flag(const std::string& spec) {
    std::vector<long> v;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const double x = parse_number(item, "--random");
        if (x != std::floor(x) || x < 0) throw InputError("--random expects non-negative integers n,r,max-parents,seed");
        v.push_back(static_cast<long>(x));
    }
    if (v.size() != 4) throw InputError("--random expects n,r,max-parents,seed");
    return random_mechanism(static_cast<std::size_t>(v[0]), static_cast<int>(v[2]), static_cast<int>(v[1]),
                            static_cast<std::uint64_t>(v[3]));
}

int cmd_simulate(const Options& o) {
    Manifest manifest("simulate");
    if (o.mechanism.empty() == o.random.empty()) throw InputError("give exactly one of --mechanism or --random");
    if (o.n_cases < 1) throw InputError("--n must be >= 1");
    Mechanism m = o.mechanism.empty() ? random_from_flag(o.random) : io::mechanism_from_json(read_json(o.mechanism, "mechanism"));
    auto s = sample_dataset(m, static_cast<std::size_t>(o.n_cases));

    std::ostringstream data_csv;
    io::write_csv(data_csv, s.data);
    if (!o.out.empty()) write_file(o.out, data_csv.str());
    else std::cout << data_csv.str();
    if (!o.latent.empty()) {
        std::ostringstream os;
        io::write_codes_csv(os, m.names, s.latent);
        write_file(o.latent, os.str());
    }
    if (!o.out_mechanism.empty()) write_file(o.out_mechanism, io::mechanism_to_json(m).dump(2) + "\n");
    if (!o.out_schema.empty()) {
        json j{{"schema_version", io::kSchemaVersion}, {"variables", io::schema_to_json(s.data.variables())}};
        write_file(o.out_schema, j.dump(2) + "\n");
    }
    manifest.body()["n"] = o.n_cases;
    manifest.body()["seed"] = m.seed;
    manifest.body()["paths"] = paths_json({{"mechanism", &o.mechanism}, {"out", &o.out}, {"latent", &o.latent},
                                           {"out_mechanism", &o.out_mechanism}, {"out_schema", &o.out_schema}});
    if (!o.random.empty()) manifest.body()["random"] = o.random;
    manifest.write(o.manifest, std::nullopt);
    return 0;
}

void add_search_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--alpha", o.alpha, "K2 pseudo-count per cell (default 1)");
    cmd->add_option("--ess", o.ess, "equivalent sample size; switches to BDeu");
    cmd->add_option("--policy-prior", o.policy_prior, "uniform | poisson:<lambda>");
    cmd->add_option("--density", o.density, "uniform | multinomial");
    cmd->add_option("--r-max", o.r_max, "maximum intervals per variable (default min(12, N-1))");
    cmd->add_option("--epsilon", o.epsilon, "minimum per-sweep gain");
    cmd->add_option("--max-sweeps", o.max_sweeps, "sweep limit");
    cmd->add_option("--init", o.init, "eqfreq:<r0> | eqwidth:<r0>");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--trace", o.trace, "trace JSON-lines output");
    cmd->add_option("--manifest", o.manifest, "run manifest output");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multivariate discretization for Bayesian network learning"};
    app.require_subcommand(1);
    Options o;

    auto* disc = app.add_subcommand("discretize", "find a discretization policy for a dataset");
    disc->add_option("--data", o.data, "input CSV")->required();
    disc->add_option("--schema", o.schema, "variable schema JSON");
    disc->add_option("--structure", o.structure, "fixed structure JSON (default: no edges)");
    disc->add_option("--out", o.out, "policy JSON output (default stdout)");
    disc->add_option("--out-data", o.out_data, "discretized CSV output");
    add_search_flags(disc, o);

    auto* learn = app.add_subcommand("learn", "learn a structure and discretization together");
    learn->add_option("--data", o.data, "input CSV")->required();
    learn->add_option("--schema", o.schema, "variable schema JSON");
    learn->add_option("--out", o.out, "policy JSON output");
    learn->add_option("--out-structure", o.out_structure, "structure JSON output (default stdout)");
    learn->add_option("--dot", o.dot, "structure DOT output");
    learn->add_option("--max-parents", o.max_parents, "parent limit per node");
    learn->add_option("--interleave", o.interleave, "re-discretize every k structure edits");
    learn->add_option("--threads", o.threads, "worker cap (the search is single-threaded)");
    add_search_flags(learn, o);

    auto* score = app.add_subcommand("score", "score a structure and policy");
    score->add_option("--data", o.data, "input CSV")->required();
    score->add_option("--schema", o.schema, "variable schema JSON");
    score->add_option("--structure", o.structure, "structure JSON (default: no edges)");
    score->add_option("--policy", o.policy, "policy JSON");
    score->add_option("--out", o.out, "breakdown JSON output");
    score->add_option("--manifest", o.manifest, "run manifest output");
    score->add_option("--alpha", o.alpha, "K2 pseudo-count per cell (default 1)");
    score->add_option("--ess", o.ess, "equivalent sample size; switches to BDeu");
    score->add_option("--policy-prior", o.policy_prior, "uniform | poisson:<lambda>");
    score->add_option("--density", o.density, "uniform | multinomial");

    auto* sim = app.add_subcommand("simulate", "sample a synthetic dataset");
    sim->add_option("--mechanism", o.mechanism, "mechanism JSON");
    sim->add_option("--random", o.random, "random mechanism n,r,max-parents,seed");
    sim->add_option("--n", o.n_cases, "number of cases")->required();
    sim->add_option("--out", o.out, "data CSV output (default stdout)");
    sim->add_option("--latent", o.latent, "latent codes CSV output");
    sim->add_option("--out-mechanism", o.out_mechanism, "mechanism JSON output");
    sim->add_option("--out-schema", o.out_schema, "schema JSON output");
    sim->add_option("--manifest", o.manifest, "run manifest output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*disc) return cmd_discretize(o);
        if (*learn) return cmd_learn(o);
        if (*score) return cmd_score(o);
        if (*sim) return cmd_simulate(o);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 3;
}
