#include "structem/param_em.hpp"
#include "structem/common.hpp"
#include "structem/data.hpp"
#include "structem/special.hpp"

#include <cmath>
#include <stdexcept>

namespace structem {

double em_objective(const Structure& s, const Parameters& params, const EvidenceSet& ev,
                    const DirichletPrior& prior) {
    double objective = dataset_log_likelihood(s, params, ev);
    if (objective == kLogZero) return kLogZero;
    for (int v = 0; v < s.n(); ++v) {
        const Cpt& cpt = params.cpts[v];
        const double cell_prior = prior.cell_prior(cpt.arity, cpt.n_configs);
        const double row_norm =
            log_gamma(cpt.arity * (cell_prior + 1.0)) - cpt.arity * log_gamma(cell_prior + 1.0);
        for (std::size_t c = 0; c < cpt.n_configs; ++c) {
            objective += row_norm;
            for (int x = 0; x < cpt.arity; ++x) {
                double theta = cpt.at(c, x);
                if (theta <= 0.0) return kLogZero;
                objective += cell_prior * std::log(theta);
            }
        }
    }
    return objective;
}

EmResult em_fit(const Structure& s, const EvidenceSet& ev, const DirichletPrior& prior,
                const EmConfig& config) {
    if (config.max_iters < 1) throw std::invalid_argument("em_fit: max_iters must be >= 1");
    if (!(config.tol > 0.0)) throw std::invalid_argument("em_fit: tol must be positive");
    if (!(prior.equivalent_sample_size > 0.0))
        throw std::invalid_argument("em_fit: equivalent sample size must be positive");

    std::vector<FamilyKey> families;
    families.reserve(s.n());
    for (int v = 0; v < s.n(); ++v) families.push_back(s.family(v));

    EmResult result;
    if (config.init_params) {
        result.parameters = *config.init_params;
        auto report = validate(s, result.parameters);
        if (!report.empty())
            throw std::invalid_argument("em_fit: provided initial parameters invalid: " + report.front());
    } else {
        result.parameters = sample_dirichlet_parameters(s, 1.0, config.seed);
    }

    EssOptions ess_opts;
    ess_opts.n_threads = config.n_threads;

    result.trace.push_back(em_objective(s, result.parameters, ev, prior));
    for (int iter = 0; iter < config.max_iters; ++iter) {
        EssMap ess = accumulate_ess(s, result.parameters, ev, families, ess_opts);
        result.parameters = map_parameters_from_ess(s, ess, prior);
        ++result.n_iterations;
        double objective = em_objective(s, result.parameters, ev, prior);
        result.trace.push_back(objective);
        double prev = result.trace[result.trace.size() - 2];
        if (prev != kLogZero && objective - prev < config.tol) break;
    }
    result.final_ess = accumulate_ess(s, result.parameters, ev, families, ess_opts);
    return result;
}

EmResult em_fit(const Structure& s, const Dataset& d, const DirichletPrior& prior,
                const EmConfig& config) {
    return em_fit(s, bind_and_dedupe(s, d), prior, config);
}

}  // namespace structem
