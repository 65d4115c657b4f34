#ifndef STRUCTEM_SCORING_HPP
#define STRUCTEM_SCORING_HPP

#include "structem/inference.hpp"
#include "structem/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <vector>

namespace structem {

// Uniform-BDe Dirichlet prior: the equivalent sample size is divided evenly
// over a family's cells.
struct DirichletPrior {
    double equivalent_sample_size = 1.0;

    double cell_prior(int child_arity, std::size_t n_configs) const {
        return equivalent_sample_size / (static_cast<double>(child_arity) * static_cast<double>(n_configs));
    }
};

enum class ScoreApprox {
    linear,
    summation,
    integration,
    laplace,
    exact_pb,  // exact Poisson-binomial expectation; needs per-record statistics
};

struct ExpectedScoreMethod {
    ScoreApprox kind = ScoreApprox::summation;
    int quadrature_points = 16;  // integration only, >= 2
};

const char* score_approx_name(ScoreApprox kind);

// Log Dirichlet-multinomial marginal of one factor:
//   log G(sum N') - log G(sum (N'+N)) + sum_i [log G(N'_i+N_i) - log G(N'_i)]
// Counts may be fractional (expected counts).
double log_dirichlet_factor(std::span<const double> counts, std::span<const double> priors);

// Complete-data BDe score: sum over families and parent configurations of
// log_dirichlet_factor on raw counts. Errors if any cell is missing or a
// structure variable is absent from the dataset.
double bde_score_complete(const Structure& s, const Dataset& d, const DirichletPrior& prior);

// E[log Gamma(N + prior_count)] for a count N with the given Gaussian moments
// and integer range [min_count, max_count]:
//   linear      log Gamma(mu + prior_count)
//   summation   integer bins under the Gaussian, tail mass folded into the
//               extreme bins; falls back to integration past 1e6 bins
//   integration Gauss-Hermite quadrature of the truncated log Gamma
//   laplace     mode located by binary search on the log-integrand derivative,
//               then the closed-form second-order correction
// Any method returns log Gamma(mu + prior_count) when sigma2 < 1e-12.
double expected_log_gamma(double mu, double sigma2, double prior_count, long long min_count,
                          long long max_count, const ExpectedScoreMethod& method);

// Exact E[log Gamma(N + prior_count)] where N is the Poisson-binomial over the
// given per-record probabilities (each repeated `weight` times).
double exact_pb_expected_log_gamma(std::span<const double> probs, std::span<const long long> weights,
                                   double prior_count);

// Per parent configuration: sum of per-cell expected log-gamma terms minus the
// aggregate-count term plus the prior constant; summed over configurations.
double expected_family_score(const FamilyStatistics& stats, const DirichletPrior& prior,
                             const ExpectedScoreMethod& method);

// Sum of expected family scores plus an optional per-edge structure log
// penalty (uniform structure prior by default).
double expected_model_score(const Structure& s, const EssMap& ess, const DirichletPrior& prior,
                            const ExpectedScoreMethod& method, double edge_log_penalty = 0.0);

// Posterior-mean parameter estimate from expected counts:
//   theta = (mu + N') / sum(mu + N')
Parameters map_parameters_from_ess(const Structure& s, const EssMap& ess, const DirichletPrior& prior);

// sum_cells mu log theta_hat - (d/2) log n,  d = sum_families configs*(arity-1).
double bic_score(const Structure& s, const EssMap& ess, const Parameters& params_hat);
// Decomposed per-family version with the posterior-mean fit baked in.
double bic_family_score(const FamilyStatistics& stats, const DirichletPrior& prior);

// log P(completed | M) - log P(completed | M, theta_hat) + log P(observed | M, theta_hat),
// with the completed dataset taken as the fractional expected counts.
double cheeseman_stutz(const Structure& s, const Parameters& params_hat, const Dataset& d,
                       const DirichletPrior& prior, const EssMap& ess);
double cheeseman_stutz(const Structure& s, const Parameters& params_hat, const EvidenceSet& ev,
                       const DirichletPrior& prior, const EssMap& ess);

// Memoized expected factor scores keyed by (family, method). Entries are valid
// only for the generation that produced them; bumping the generation clears
// everything. Concurrent reads, exclusive writes.
class ScoreCache {
  public:
    std::uint64_t generation() const;
    void new_generation();
    std::optional<double> lookup(const FamilyKey& family, const ExpectedScoreMethod& method) const;
    void store(const FamilyKey& family, const ExpectedScoreMethod& method, double score);
    std::size_t size() const;

  private:
    using Key = std::pair<FamilyKey, std::pair<int, int>>;
    mutable std::shared_mutex mutex_;
    std::uint64_t generation_ = 0;
    std::map<Key, double> entries_;
};

}  // namespace structem

#endif
