#ifndef STRUCTEM_PARAM_EM_HPP
#define STRUCTEM_PARAM_EM_HPP

#include "structem/inference.hpp"
#include "structem/scoring.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace structem {

struct EmConfig {
    int max_iters = 100;
    double tol = 1e-6;                       // absolute improvement threshold
    std::optional<Parameters> init_params;   // random rows from the seed when absent
    std::uint64_t seed = 0;
    int n_threads = 1;
};

struct EmResult {
    Parameters parameters;
    // Objective per iteration (initial value first): observed-data
    // log-likelihood plus the log prior density the posterior-mean M-step
    // ascends (Dirichlet with exponents N'+1). Non-decreasing by the EM
    // argument.
    std::vector<double> trace;
    EssMap final_ess;  // expected statistics under the returned parameters
    int n_iterations = 0;
};

// MAP-style parameter fit for a fixed structure: E-step accumulates expected
// statistics, M-step is the posterior-mean update
//   theta = (mu + N') / sum(mu + N').
EmResult em_fit(const Structure& s, const Dataset& d, const DirichletPrior& prior,
                const EmConfig& config = {});
EmResult em_fit(const Structure& s, const EvidenceSet& ev, const DirichletPrior& prior,
                const EmConfig& config = {});

// The traced objective, exposed for tests.
double em_objective(const Structure& s, const Parameters& params, const EvidenceSet& ev,
                    const DirichletPrior& prior);

}  // namespace structem

#endif
