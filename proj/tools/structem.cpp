#include "structem/benchmark.hpp"
#include "structem/common.hpp"
#include "structem/eval.hpp"
#include "structem/io.hpp"
#include "structem/scoring.hpp"
#include "structem/search.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

int threads_from_env() {
    const char* raw = std::getenv("STRUCTEM_THREADS");
    if (!raw) return 1;
    int n = std::atoi(raw);
    return n >= 1 ? n : 1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace structem;

    CLI::App app{"structem: structure learning for discrete belief networks from incomplete data"};
    app.require_subcommand(1);

    // learn
    auto* learn = app.add_subcommand("learn", "learn a network from a CSV dataset");
    std::string learn_data, learn_out, learn_method = "bde-summation", learn_marker = "?";
    int learn_hidden = 0, learn_hidden_arity = 2, learn_max_parents = 5;
    int learn_sem_iters = 30, learn_em_iters = 100;
    int learn_perturbations = 5, learn_walk_length = 20, learn_walks = 10;
    double learn_ess = 1.0, learn_em_tol = 1e-6, learn_time_limit = 0.0;
    std::uint64_t learn_seed = 0;
    learn->add_option("--data", learn_data, "training CSV file")->required();
    learn->add_option("--hidden", learn_hidden, "number of hidden variables");
    learn->add_option("--hidden-arity", learn_hidden_arity, "arity of hidden variables");
    learn->add_option("--method", learn_method,
                      "bde-linear|bde-summation|bde-integration|bde-laplace|bic");
    learn->add_option("--ess", learn_ess, "equivalent sample size of the Dirichlet prior");
    learn->add_option("--seed", learn_seed, "random seed");
    learn->add_option("--out", learn_out, "output network JSON file")->required();
    learn->add_option("--max-parents", learn_max_parents, "parent-set size cap");
    learn->add_option("--time-limit", learn_time_limit, "time limit in seconds (0 = none)");
    learn->add_option("--max-sem-iters", learn_sem_iters, "structural iteration cap");
    learn->add_option("--em-iters", learn_em_iters, "EM iteration cap");
    learn->add_option("--em-tol", learn_em_tol, "EM convergence threshold");
    learn->add_option("--perturbations", learn_perturbations, "hidden-edge perturbation count");
    learn->add_option("--walk-length", learn_walk_length, "random-walk move count");
    learn->add_option("--walks", learn_walks, "random-walk restart count");
    learn->add_option("--missing-marker", learn_marker, "missing-cell marker");

    // sample
    auto* sample = app.add_subcommand("sample", "draw records from a network");
    std::string sample_net, sample_out;
    int sample_n = 0;
    std::uint64_t sample_seed = 0;
    sample->add_option("--net", sample_net, "network JSON file")->required();
    sample->add_option("--n", sample_n, "number of records")->required();
    sample->add_option("--seed", sample_seed, "random seed");
    sample->add_option("--out", sample_out, "output CSV file")->required();

    // corrupt
    auto* corrupt = app.add_subcommand("corrupt", "hide cells completely at random");
    std::string corrupt_data, corrupt_out, corrupt_marker = "?";
    double corrupt_fraction = 0.0;
    std::uint64_t corrupt_seed = 0;
    corrupt->add_option("--data", corrupt_data, "input CSV file")->required();
    corrupt->add_option("--fraction", corrupt_fraction, "per-cell missing probability")->required();
    corrupt->add_option("--seed", corrupt_seed, "random seed");
    corrupt->add_option("--out", corrupt_out, "output CSV file")->required();
    corrupt->add_option("--missing-marker", corrupt_marker, "missing-cell marker");

    // score
    auto* score = app.add_subcommand("score", "score a network against a dataset");
    std::string score_net, score_data, score_method = "bde-summation", score_marker = "?";
    double score_ess = 1.0;
    score->add_option("--net", score_net, "network JSON file")->required();
    score->add_option("--data", score_data, "dataset CSV file")->required();
    score->add_option("--method", score_method,
                      "bde-linear|bde-summation|bde-integration|bde-laplace|bic");
    score->add_option("--ess", score_ess, "equivalent sample size of the Dirichlet prior");
    score->add_option("--missing-marker", score_marker, "missing-cell marker");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "compare a learned network to a reference");
    std::string eval_true, eval_learned, eval_test, eval_marker = "?";
    int eval_mc = 0;
    std::uint64_t eval_seed = 0;
    evaluate->add_option("--true", eval_true, "reference network JSON file")->required();
    evaluate->add_option("--learned", eval_learned, "learned network JSON file")->required();
    evaluate->add_option("--test", eval_test, "held-out CSV file for log loss");
    evaluate->add_option("--mc", eval_mc, "Monte-Carlo sample count for KL (0 = exact)");
    evaluate->add_option("--seed", eval_seed, "random seed for Monte-Carlo KL");
    evaluate->add_option("--missing-marker", eval_marker, "missing-cell marker");

    // benchmark
    auto* benchmark = app.add_subcommand("benchmark", "run a benchmark spec to CSV");
    std::string bench_spec, bench_out;
    benchmark->add_option("--spec", bench_spec, "benchmark spec JSON file")->required();
    benchmark->add_option("--out", bench_out, "output CSV file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    const int n_threads = threads_from_env();
    try {
        if (*learn) {
            Dataset data = read_dataset_csv(learn_data, learn_marker);
            LearnOptions options;
            options.n_hidden = learn_hidden;
            options.hidden_arity = learn_hidden_arity;
            options.method = parse_learn_method(learn_method);
            options.ess = learn_ess;
            options.seed = learn_seed;
            options.max_parents = learn_max_parents;
            options.max_sem_iters = learn_sem_iters;
            options.em_max_iters = learn_em_iters;
            options.em_tol = learn_em_tol;
            options.n_edge_perturbations = learn_perturbations;
            options.random_walk_length = learn_walk_length;
            options.n_random_walks = learn_walks;
            if (learn_time_limit > 0.0) options.time_limit_seconds = learn_time_limit;
            options.n_threads = n_threads;
            SemDiagnostics diagnostics;
            Network net = learn_network(data, options, &diagnostics);
            write_network(learn_out, net);
            std::cerr << diagnostics_tsv(diagnostics);
        } else if (*sample) {
            Network net = read_network(sample_net);
            Dataset d = ancestral_sample(net.structure, net.parameters, sample_n, sample_seed);
            write_dataset_csv(sample_out, d);
        } else if (*corrupt) {
            Dataset d = read_dataset_csv(corrupt_data, corrupt_marker);
            Dataset corrupted = inject_missing_mcar(d, corrupt_fraction, corrupt_seed);
            write_dataset_csv(corrupt_out, corrupted, corrupt_marker);
        } else if (*score) {
            Network net = read_network(score_net);
            Dataset data = read_dataset_csv(score_data, observed_schema(net.structure), score_marker);
            LearnMethod method = parse_learn_method(score_method);
            DirichletPrior prior{score_ess};
            EvidenceSet ev = bind_and_dedupe(net.structure, data);
            std::vector<FamilyKey> families;
            for (int v = 0; v < net.structure.n(); ++v) families.push_back(net.structure.family(v));
            EssOptions opts;
            opts.n_threads = n_threads;
            opts.keep_per_record = method.approx.kind == ScoreApprox::exact_pb;
            EssMap ess = accumulate_ess(net.structure, net.parameters, ev, families, opts);
            double value = method.objective == SearchObjective::bde
                               ? expected_model_score(net.structure, ess, prior, method.approx)
                               : bic_score(net.structure, ess, net.parameters);
            double cs = cheeseman_stutz(net.structure, net.parameters, ev, prior, ess);
            std::cout << "expected_score\t" << format_double(value) << '\n';
            std::cout << "cheeseman_stutz\t" << format_double(cs) << '\n';
        } else if (*evaluate) {
            Network truth = read_network(eval_true);
            Network learned = read_network(eval_learned);
            double kl = eval_mc > 0 ? kl_divergence_mc(truth, learned, eval_mc, eval_seed)
                                    : kl_divergence_exact(truth, learned);
            std::cout << "kl\t" << format_double(kl) << '\n';
            if (!eval_test.empty()) {
                Dataset test =
                    read_dataset_csv(eval_test, observed_schema(learned.structure), eval_marker);
                std::cout << "log_loss\t" << format_double(log_loss(learned, test)) << '\n';
            }
        } else if (*benchmark) {
            BenchmarkSpec spec = parse_benchmark_spec(slurp(bench_spec));
            Network generator = read_network(spec.generator_path);
            spec.n_threads = n_threads;
            spill(bench_out, run_benchmark(spec, generator));
        }
    } catch (const std::exception& e) {
        std::cerr << "structem: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
