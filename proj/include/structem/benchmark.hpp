#ifndef STRUCTEM_BENCHMARK_HPP
#define STRUCTEM_BENCHMARK_HPP

#include "structem/eval.hpp"
#include "structem/io.hpp"
#include "structem/search.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace structem {

// One of bde-linear | bde-summation | bde-integration | bde-laplace | bic.
struct LearnMethod {
    SearchObjective objective = SearchObjective::bde;
    ExpectedScoreMethod approx{};
};

LearnMethod parse_learn_method(const std::string& name);
std::string learn_method_name(const LearnMethod& method);

struct LearnOptions {
    int n_hidden = 0;
    int hidden_arity = 2;
    LearnMethod method{};
    double ess = 1.0;
    std::uint64_t seed = 0;
    int max_parents = 5;
    int max_sem_iters = 30;
    int em_max_iters = 100;
    double em_tol = 1e-6;
    int n_edge_perturbations = 5;
    int random_walk_length = 20;
    int n_random_walks = 10;
    std::optional<double> time_limit_seconds;
    int n_threads = 1;
};

// Full learning pipeline: observed variables from the dataset schema, the
// requested number of hidden variables added, then sem_with_restarts.
Network learn_network(const Dataset& data, const LearnOptions& options,
                      SemDiagnostics* diagnostics = nullptr);

struct BenchmarkSpec {
    std::string generator_path;
    std::vector<int> sizes;
    std::vector<double> missing_fractions;  // rows with hidden = 0
    std::vector<int> hidden_counts;         // rows with fraction = 0
    std::vector<std::string> methods;
    int replicates = 5;
    std::uint64_t seed = 0;
    int test_size = 2000;
    double ess = 1.0;
    int max_parents = 5;
    int max_sem_iters = 30;
    int em_max_iters = 100;
    double em_tol = 1e-6;
    int n_edge_perturbations = 5;
    int random_walk_length = 20;
    int n_random_walks = 10;
    int hidden_arity = 2;
    std::optional<double> time_limit_seconds;  // per learning run
    std::size_t kl_exact_max_states = std::size_t{1} << 20;
    int kl_mc_samples = 100000;
    int n_threads = 1;
};

BenchmarkSpec parse_benchmark_spec(const std::string& json_text);

// One row per (size, fraction-or-hidden, method, replicate) plus mean and sd
// summary rows per cell (sample standard deviation, n-1 denominator).
// Byte-identical across runs for a fixed spec in single-threaded mode.
std::string run_benchmark(const BenchmarkSpec& spec, const Network& generator);

}  // namespace structem

#endif
