#include "structem/benchmark.hpp"
#include "structem/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace structem {

using nlohmann::json;

LearnMethod parse_learn_method(const std::string& name) {
    LearnMethod m;
    if (name == "bic") {
        m.objective = SearchObjective::bic;
        return m;
    }
    m.objective = SearchObjective::bde;
    if (name == "bde-linear")
        m.approx.kind = ScoreApprox::linear;
    else if (name == "bde-summation")
        m.approx.kind = ScoreApprox::summation;
    else if (name == "bde-integration")
        m.approx.kind = ScoreApprox::integration;
    else if (name == "bde-laplace")
        m.approx.kind = ScoreApprox::laplace;
    else
        throw std::invalid_argument(
            "unknown method '" + name +
            "' (expected bde-linear|bde-summation|bde-integration|bde-laplace|bic)");
    return m;
}

std::string learn_method_name(const LearnMethod& method) {
    if (method.objective == SearchObjective::bic) return "bic";
    return std::string("bde-") + score_approx_name(method.approx.kind);
}

Network learn_network(const Dataset& data, const LearnOptions& options,
                      SemDiagnostics* diagnostics) {
    std::vector<Variable> variables;
    for (const DatasetVariable& dv : data.variables) {
        if (dv.arity() < 2)
            throw std::invalid_argument("variable '" + dv.name +
                                        "' has fewer than 2 observed states; cannot learn over it");
        variables.push_back(Variable{dv.name, dv.states, false});
    }
    for (int h = 0; h < options.n_hidden; ++h) {
        std::string name = "H" + std::to_string(h + 1);
        while (std::any_of(variables.begin(), variables.end(),
                           [&](const Variable& v) { return v.name == name; }))
            name = "_" + name;
        Variable hv;
        hv.name = name;
        for (int x = 0; x < options.hidden_arity; ++x) hv.states.push_back("s" + std::to_string(x));
        hv.hidden = true;
        variables.push_back(std::move(hv));
    }

    SemConfig config;
    config.max_sem_iters = options.max_sem_iters;
    config.score_method = options.method.approx;
    config.objective = options.method.objective;
    config.em.max_iters = options.em_max_iters;
    config.em.tol = options.em_tol;
    config.max_parents = options.max_parents;
    config.n_edge_perturbations = options.n_edge_perturbations;
    config.random_walk_length = options.random_walk_length;
    config.n_random_walks = options.n_random_walks;
    config.time_limit_seconds = options.time_limit_seconds;
    config.seed = options.seed;
    config.n_threads = options.n_threads;

    DirichletPrior prior{options.ess};
    SemResult result = sem_with_restarts(data, variables, prior, config);
    if (diagnostics) *diagnostics = result.diagnostics;
    return Network{result.structure, result.parameters};
}

BenchmarkSpec parse_benchmark_spec(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("benchmark spec parse error: ") + e.what());
    }
    BenchmarkSpec spec;
    if (!doc.contains("generator")) throw std::runtime_error("benchmark spec: missing 'generator'");
    spec.generator_path = doc["generator"].get<std::string>();
    spec.sizes = doc.value("sizes", std::vector<int>{1000});
    spec.missing_fractions = doc.value("missing_fractions", std::vector<double>{});
    spec.hidden_counts = doc.value("hidden_counts", std::vector<int>{});
    spec.methods = doc.value("methods", std::vector<std::string>{"bde-summation"});
    spec.replicates = doc.value("replicates", 5);
    spec.seed = doc.value("seed", std::uint64_t{0});
    spec.test_size = doc.value("test_size", 2000);
    spec.ess = doc.value("ess", 1.0);
    spec.max_parents = doc.value("max_parents", 5);
    spec.max_sem_iters = doc.value("max_sem_iters", 30);
    spec.em_max_iters = doc.value("em_max_iters", 100);
    spec.em_tol = doc.value("em_tol", 1e-6);
    spec.n_edge_perturbations = doc.value("n_edge_perturbations", 5);
    spec.random_walk_length = doc.value("random_walk_length", 20);
    spec.n_random_walks = doc.value("n_random_walks", 10);
    spec.hidden_arity = doc.value("hidden_arity", 2);
    if (doc.contains("time_limit")) spec.time_limit_seconds = doc["time_limit"].get<double>();
    spec.kl_exact_max_states = doc.value("kl_exact_max_states", std::size_t{1} << 20);
    spec.kl_mc_samples = doc.value("kl_mc_samples", 100000);

    if (spec.replicates < 1) throw std::runtime_error("benchmark spec: replicates must be >= 1");
    for (int s : spec.sizes)
        if (s < 1) throw std::runtime_error("benchmark spec: sizes must be >= 1");
    for (double f : spec.missing_fractions)
        if (!(f >= 0.0 && f < 1.0))
            throw std::runtime_error("benchmark spec: fractions must be in [0,1)");
    for (int h : spec.hidden_counts)
        if (h < 0) throw std::runtime_error("benchmark spec: hidden counts must be >= 0");
    if (spec.hidden_arity < 2) throw std::runtime_error("benchmark spec: hidden_arity must be >= 2");
    if (spec.max_parents < 1) throw std::runtime_error("benchmark spec: max_parents must be >= 1");
    for (const std::string& m : spec.methods) parse_learn_method(m);  // validate early
    if (spec.missing_fractions.empty() && spec.hidden_counts.empty())
        spec.missing_fractions.push_back(0.0);
    std::sort(spec.sizes.begin(), spec.sizes.end());
    std::sort(spec.missing_fractions.begin(), spec.missing_fractions.end());
    std::sort(spec.hidden_counts.begin(), spec.hidden_counts.end());
    return spec;
}

namespace {

struct CellResult {
    double kl = 0.0;
    double log_loss_learned = 0.0;
    double gap = 0.0;
};

std::size_t observed_state_count(const Structure& s) {
    std::size_t states = 1;
    for (const Variable& v : s.variables) {
        if (v.hidden) continue;
        states *= static_cast<std::size_t>(v.arity());
        if (states > (std::size_t{1} << 40)) return states;  // big enough, stop counting
    }
    return states;
}

void append_row(std::ostringstream& out, int size, double fraction, int hidden,
                const std::string& method, const std::string& replicate, const CellResult& r) {
    out << size << ',' << format_double(fraction) << ',' << hidden << ',' << method << ','
        << replicate << ',' << format_double(r.kl) << ',' << format_double(r.log_loss_learned)
        << ',' << format_double(r.gap) << '\n';
}

// Table-style "mean±sd" cell; sd uses the n-1 denominator.
std::string mean_sd(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double sd = 0.0;
    if (xs.size() >= 2) {
        double acc = 0.0;
        for (double x : xs) acc += (x - mean) * (x - mean);
        sd = std::sqrt(acc / static_cast<double>(xs.size() - 1));
    }
    return format_double(mean) + "±" + format_double(sd);
}

}  // namespace

std::string run_benchmark(const BenchmarkSpec& spec, const Network& generator) {
    std::ostringstream out;
    out << "size,missing_fraction,hidden,method,replicate,kl,log_loss,log_loss_gap\n";

    const bool exact_kl = observed_state_count(generator.structure) <= spec.kl_exact_max_states;

    struct Cell {
        int size;
        std::uint64_t size_index;
        double fraction;
        std::uint64_t fraction_index;  // 0 for hidden-count cells
        int hidden;
    };
    std::vector<Cell> cells;
    for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
        for (std::size_t fi = 0; fi < spec.missing_fractions.size(); ++fi)
            cells.push_back({spec.sizes[si], si, spec.missing_fractions[fi], fi, 0});
        for (int hidden : spec.hidden_counts) cells.push_back({spec.sizes[si], si, 0.0, 0, hidden});
    }

    for (const Cell& cell : cells) {
        for (const std::string& method_name : spec.methods) {
            LearnMethod method = parse_learn_method(method_name);
            std::vector<double> kls, lls, gaps;
            for (int rep = 0; rep < spec.replicates; ++rep) {
                // one base training set per (size, replicate): fractions are
                // corruptions of the same set, hidden counts reuse it as is,
                // and every method sees identical data, so replicates pair
                // across fractions, hidden counts, and methods
                std::uint64_t data_seed = mix_seed(
                    spec.seed, hash_combine(cell.size_index, static_cast<std::uint64_t>(rep)));
                Dataset train =
                    ancestral_sample(generator.structure, generator.parameters, cell.size, data_seed);
                if (cell.fraction > 0.0)
                    train = inject_missing_mcar(train, cell.fraction,
                                                mix_seed(data_seed, 101 + cell.fraction_index));
                Dataset test = ancestral_sample(generator.structure, generator.parameters,
                                                spec.test_size, mix_seed(data_seed, 2));

                LearnOptions options;
                options.n_hidden = cell.hidden;
                options.hidden_arity = spec.hidden_arity;
                options.method = method;
                options.ess = spec.ess;
                options.seed = mix_seed(data_seed, 3);
                options.max_parents = spec.max_parents;
                options.max_sem_iters = spec.max_sem_iters;
                options.em_max_iters = spec.em_max_iters;
                options.em_tol = spec.em_tol;
                options.n_edge_perturbations = spec.n_edge_perturbations;
                options.random_walk_length = spec.random_walk_length;
                options.n_random_walks = spec.n_random_walks;
                options.time_limit_seconds = spec.time_limit_seconds;
                options.n_threads = spec.n_threads;
                Network learned = learn_network(train, options);

                CellResult r;
                r.kl = exact_kl ? kl_divergence_exact(generator, learned, spec.kl_exact_max_states)
                                : kl_divergence_mc(generator, learned, spec.kl_mc_samples,
                                                   mix_seed(data_seed, 4));
                r.log_loss_learned = log_loss(learned, test);
                double ll_gen = log_loss(generator, test);
                r.gap = r.log_loss_learned - ll_gen;
                kls.push_back(r.kl);
                lls.push_back(r.log_loss_learned);
                gaps.push_back(r.gap);
                append_row(out, cell.size, cell.fraction, cell.hidden, method_name,
                           std::to_string(rep), r);
            }
            out << cell.size << ',' << format_double(cell.fraction) << ',' << cell.hidden << ','
                << method_name << ",summary," << mean_sd(kls) << ',' << mean_sd(lls) << ','
                << mean_sd(gaps) << '\n';
        }
    }
    return out.str();
}

}  // namespace structem
