#include "structem/scoring.hpp"
#include "structem/common.hpp"
#include "structem/special.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <stdexcept>

namespace structem {

const char* score_approx_name(ScoreApprox kind) {
    switch (kind) {
        case ScoreApprox::linear: return "linear";
        case ScoreApprox::summation: return "summation";
        case ScoreApprox::integration: return "integration";
        case ScoreApprox::laplace: return "laplace";
        case ScoreApprox::exact_pb: return "exact-pb";
    }
    return "?";
}

double log_dirichlet_factor(std::span<const double> counts, std::span<const double> priors) {
    if (counts.size() != priors.size() || counts.empty())
        throw std::invalid_argument("log_dirichlet_factor: counts and priors must have equal nonzero length");
    double prior_sum = 0.0, total_sum = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (!(priors[i] > 0.0))
            throw std::invalid_argument("log_dirichlet_factor: prior entries must be positive");
        if (counts[i] < 0.0)
            throw std::invalid_argument("log_dirichlet_factor: counts must be nonnegative");
        prior_sum += priors[i];
        total_sum += priors[i] + counts[i];
        acc += log_gamma(priors[i] + counts[i]) - log_gamma(priors[i]);
    }
    return log_gamma(prior_sum) - log_gamma(total_sum) + acc;
}

double bde_score_complete(const Structure& s, const Dataset& d, const DirichletPrior& prior) {
    std::vector<int> var_to_column(s.n(), -1);
    for (std::size_t c = 0; c < d.variables.size(); ++c) {
        int v = s.find_variable(d.variables[c].name);
        if (v >= 0) var_to_column[v] = static_cast<int>(c);
    }
    for (int v = 0; v < s.n(); ++v)
        if (var_to_column[v] < 0)
            throw std::invalid_argument("bde_score_complete: variable '" + s.variables[v].name +
                                        "' is missing from the dataset");
    EvidenceSet ev = bind_and_dedupe(s, d);
    for (std::size_t k = 0; k < ev.patterns.size(); ++k)
        for (int v = 0; v < s.n(); ++v)
            if (ev.patterns[k][v] == kMissing)
                throw std::invalid_argument("bde_score_complete: record " +
                                            std::to_string(ev.first_record[k]) +
                                            " has a missing cell for variable '" +
                                            s.variables[v].name + "'");

    double total = 0.0;
    for (int v = 0; v < s.n(); ++v) {
        const int arity = s.arity(v);
        const std::size_t n_configs = s.n_parent_configs(v);
        std::vector<double> counts(n_configs * arity, 0.0);
        for (std::size_t k = 0; k < ev.patterns.size(); ++k) {
            std::size_t config = parent_config_index(s, v, ev.patterns[k]);
            counts[config * arity + ev.patterns[k][v]] += static_cast<double>(ev.weights[k]);
        }
        const double cell_prior = prior.cell_prior(arity, n_configs);
        std::vector<double> priors(arity, cell_prior);
        for (std::size_t c = 0; c < n_configs; ++c)
            total += log_dirichlet_factor(
                std::span<const double>(counts.data() + c * arity, arity), priors);
    }
    return total;
}

namespace {

double summation_expected_log_gamma(double mu, double sigma2, double prior_count, long long min_count,
                                    long long max_count) {
    const double sigma = std::sqrt(sigma2);
    // bins more than ~12 sigma out carry no double-precision mass; fold their
    // share into the window edges exactly like the [min,max] tails
    long long lo = std::max(min_count, static_cast<long long>(std::floor(mu - 12.0 * sigma)));
    long long hi = std::min(max_count, static_cast<long long>(std::ceil(mu + 12.0 * sigma)));
    double total = 0.0;
    for (long long n = lo; n <= hi; ++n) {
        double z_lo = (static_cast<double>(n) - 0.5 - mu) / sigma;
        double z_hi = (static_cast<double>(n) + 0.5 - mu) / sigma;
        double mass = std_normal_cdf(z_hi) - std_normal_cdf(z_lo);
        if (n == lo) mass += std_normal_cdf(z_lo);
        if (n == hi) mass += 1.0 - std_normal_cdf(z_hi);
        total += log_gamma(static_cast<double>(n) + prior_count) * mass;
    }
    return total;
}

double integration_expected_log_gamma(double mu, double sigma2, double prior_count,
                                      long long min_count, long long max_count, int n_points) {
    const double lo = static_cast<double>(min_count);
    const double hi = static_cast<double>(max_count);
    return gauss_hermite_expectation(
        [&](double n) { return log_gamma(std::clamp(n, lo, hi) + prior_count); }, mu, sigma2,
        n_points);
}

double laplace_expected_log_gamma(double mu, double sigma2, double prior_count, long long min_count,
                                  long long max_count) {
    const double nu = mu + prior_count;
    double a = std::max(static_cast<double>(min_count) + prior_count, 1e-6);
    double b = static_cast<double>(max_count) + prior_count;
    if (!(b > a)) return log_gamma(nu);
    // log Gamma changes sign at 1 and 2, so the log-integrand derivative has
    // poles there; for nu <= 2 the integrand straddles them and the method is
    // ill-defined. For nu > 2 the integrand rises at nu, putting the mode in
    // [nu, b], where the derivative is well-behaved.
    if (nu <= 2.0) return log_gamma(nu);
    a = std::max(a, nu);
    if (!(b > a)) return log_gamma(std::min(nu, b));

    auto log_integrand_deriv = [&](double x) {
        return digamma(x) / log_gamma(x) - (x - nu) / sigma2;
    };
    double fa = log_integrand_deriv(a);
    double fb = log_integrand_deriv(b);
    double mode;
    if (std::isnan(fa) || std::isnan(fb)) return log_gamma(nu);
    if ((fa > 0.0) == (fb > 0.0)) {
        // no interior sign change: the mode sits at an end of the truncated range
        mode = fa > 0.0 ? b : a;
    } else {
        for (int step = 0; step < 64; ++step) {
            double m = 0.5 * (a + b);
            double fm = log_integrand_deriv(m);
            if (std::isnan(fm)) break;
            if ((fm > 0.0) == (fa > 0.0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        mode = 0.5 * (a + b);
    }
    const double lg = log_gamma(mode);
    if (lg == 0.0) return log_gamma(nu);
    const double ratio1 = digamma(mode) / lg;
    const double curvature = trigamma(mode) / lg - ratio1 * ratio1;
    const double correction = 1.0 - sigma2 * curvature;
    if (!(correction > 0.0)) return log_gamma(nu);
    const double dev = mode - nu;
    double value = lg * std::exp(-0.5 * dev * dev / sigma2) / std::sqrt(correction);
    if (!std::isfinite(value)) return log_gamma(nu);
    return value;
}

}  // namespace

double expected_log_gamma(double mu, double sigma2, double prior_count, long long min_count,
                          long long max_count, const ExpectedScoreMethod& method) {
    if (sigma2 < 0.0) throw std::invalid_argument("expected_log_gamma: negative variance");
    if (!(prior_count > 0.0)) throw std::invalid_argument("expected_log_gamma: prior count must be positive");
    if (method.kind == ScoreApprox::integration && method.quadrature_points < 2)
        throw std::invalid_argument("expected_log_gamma: need at least 2 quadrature points");
    mu = std::clamp(mu, static_cast<double>(min_count), static_cast<double>(max_count));
    if (sigma2 < 1e-12) return log_gamma(mu + prior_count);

    switch (method.kind) {
        case ScoreApprox::linear:
            return log_gamma(mu + prior_count);
        case ScoreApprox::summation:
            if (max_count - min_count > 1000000) {
                static bool warned = false;
                if (!warned) {
                    std::cerr << "structem: summation span exceeds 1e6 bins, using integration\n";
                    warned = true;
                }
                return integration_expected_log_gamma(mu, sigma2, prior_count, min_count, max_count, 16);
            }
            return summation_expected_log_gamma(mu, sigma2, prior_count, min_count, max_count);
        case ScoreApprox::integration:
            return integration_expected_log_gamma(mu, sigma2, prior_count, min_count, max_count,
                                                  method.quadrature_points);
        case ScoreApprox::laplace:
            return laplace_expected_log_gamma(mu, sigma2, prior_count, min_count, max_count);
        case ScoreApprox::exact_pb:
            throw std::invalid_argument(
                "expected_log_gamma: exact-pb needs per-record statistics; use exact_pb_expected_log_gamma");
    }
    throw std::invalid_argument("expected_log_gamma: unknown method");
}

double exact_pb_expected_log_gamma(std::span<const double> probs, std::span<const long long> weights,
                                   double prior_count) {
    if (probs.size() != weights.size())
        throw std::invalid_argument("exact_pb_expected_log_gamma: length mismatch");
    if (!(prior_count > 0.0))
        throw std::invalid_argument("exact_pb_expected_log_gamma: prior count must be positive");
    std::vector<double> dist{1.0};
    for (std::size_t k = 0; k < probs.size(); ++k) {
        double p = std::clamp(probs[k], 0.0, 1.0);
        for (long long rep = 0; rep < weights[k]; ++rep) {
            std::vector<double> next(dist.size() + 1, 0.0);
            for (std::size_t i = 0; i < dist.size(); ++i) {
                next[i] += dist[i] * (1.0 - p);
                next[i + 1] += dist[i] * p;
            }
            dist = std::move(next);
        }
    }
    double total = 0.0;
    for (std::size_t n = 0; n < dist.size(); ++n)
        if (dist[n] > 0.0) total += dist[n] * log_gamma(static_cast<double>(n) + prior_count);
    return total;
}

namespace {

double cell_expected_log_gamma(const FamilyStatistics& st, const DirichletPrior& prior,
                               const ExpectedScoreMethod& method, std::size_t config, int state) {
    const double cell_prior = prior.cell_prior(st.child_arity, st.n_configs);
    const std::size_t cell = config * st.child_arity + state;
    if (method.kind == ScoreApprox::exact_pb) {
        if (st.per_record.empty() && st.n_records > 0)
            throw std::invalid_argument("exact-pb scoring requires per-record statistics");
        std::vector<double> ps;
        std::vector<long long> ws;
        ps.reserve(st.per_record.size());
        ws.reserve(st.per_record.size());
        for (const auto& pr : st.per_record) {
            ps.push_back(pr.cell_probs[cell]);
            ws.push_back(pr.weight);
        }
        return exact_pb_expected_log_gamma(ps, ws, cell_prior);
    }
    return expected_log_gamma(st.mean[cell], st.variance[cell], cell_prior, st.min_count[cell],
                              st.max_count[cell], method);
}

double config_expected_log_gamma(const FamilyStatistics& st, const DirichletPrior& prior,
                                 const ExpectedScoreMethod& method, std::size_t config) {
    const double cell_prior = prior.cell_prior(st.child_arity, st.n_configs);
    const double row_prior = cell_prior * st.child_arity;
    if (method.kind == ScoreApprox::exact_pb) {
        if (st.per_record.empty() && st.n_records > 0)
            throw std::invalid_argument("exact-pb scoring requires per-record statistics");
        std::vector<double> ps;
        std::vector<long long> ws;
        for (const auto& pr : st.per_record) {
            ps.push_back(pr.config_probs[config]);
            ws.push_back(pr.weight);
        }
        return exact_pb_expected_log_gamma(ps, ws, row_prior);
    }
    return expected_log_gamma(st.config_mean[config], st.config_variance[config], row_prior,
                              st.config_min[config], st.config_max[config], method);
}

}  // namespace

double expected_family_score(const FamilyStatistics& stats, const DirichletPrior& prior,
                             const ExpectedScoreMethod& method) {
    const double cell_prior = prior.cell_prior(stats.child_arity, stats.n_configs);
    const double row_prior = cell_prior * stats.child_arity;
    const double constant = log_gamma(row_prior) - stats.child_arity * log_gamma(cell_prior);
    double total = 0.0;
    for (std::size_t c = 0; c < stats.n_configs; ++c) {
        double score = constant;
        for (int x = 0; x < stats.child_arity; ++x)
            score += cell_expected_log_gamma(stats, prior, method, c, x);
        score -= config_expected_log_gamma(stats, prior, method, c);
        total += score;
    }
    return total;
}

double expected_model_score(const Structure& s, const EssMap& ess, const DirichletPrior& prior,
                            const ExpectedScoreMethod& method, double edge_log_penalty) {
    double total = 0.0;
    for (int v = 0; v < s.n(); ++v) {
        FamilyKey key = s.family(v);
        auto it = ess.find(key);
        if (it == ess.end()) {
            std::string name = s.variables[v].name + " | {";
            for (std::size_t k = 0; k < key.parents.size(); ++k)
                name += (k ? "," : "") + s.variables[key.parents[k]].name;
            throw std::invalid_argument("expected_model_score: missing statistics for family " + name + "}");
        }
        total += expected_family_score(it->second, prior, method);
    }
    return total + edge_log_penalty * s.n_edges();
}

Parameters map_parameters_from_ess(const Structure& s, const EssMap& ess, const DirichletPrior& prior) {
    Parameters params = make_uniform_parameters(s);
    for (int v = 0; v < s.n(); ++v) {
        auto it = ess.find(s.family(v));
        if (it == ess.end())
            throw std::invalid_argument("map_parameters_from_ess: missing statistics for variable '" +
                                        s.variables[v].name + "'");
        const FamilyStatistics& st = it->second;
        Cpt& cpt = params.cpts[v];
        const double cell_prior = prior.cell_prior(st.child_arity, st.n_configs);
        for (std::size_t c = 0; c < st.n_configs; ++c) {
            double denom = 0.0;
            for (int x = 0; x < st.child_arity; ++x)
                denom += st.mean[c * st.child_arity + x] + cell_prior;
            for (int x = 0; x < st.child_arity; ++x)
                cpt.at(c, x) = (st.mean[c * st.child_arity + x] + cell_prior) / denom;
        }
    }
    return params;
}

namespace {

// sum of mu log theta with the 0 log 0 = 0 convention
double expected_log_likelihood_term(const FamilyStatistics& st, const Cpt& cpt) {
    double total = 0.0;
    for (std::size_t c = 0; c < st.n_configs; ++c) {
        for (int x = 0; x < st.child_arity; ++x) {
            double mu = st.mean[c * st.child_arity + x];
            if (mu <= 0.0) continue;
            double theta = cpt.at(c, x);
            if (theta <= 0.0) return kLogZero;
            total += mu * std::log(theta);
        }
    }
    return total;
}

}  // namespace

double bic_score(const Structure& s, const EssMap& ess, const Parameters& params_hat) {
    double log_lik = 0.0;
    long long n_records = 0;
    long long dims = 0;
    for (int v = 0; v < s.n(); ++v) {
        auto it = ess.find(s.family(v));
        if (it == ess.end())
            throw std::invalid_argument("bic_score: missing statistics for variable '" +
                                        s.variables[v].name + "'");
        const FamilyStatistics& st = it->second;
        n_records = st.n_records;
        log_lik += expected_log_likelihood_term(st, params_hat.cpts[v]);
        dims += static_cast<long long>(st.n_configs) * (st.child_arity - 1);
    }
    if (n_records == 0) return 0.0;
    return log_lik - 0.5 * static_cast<double>(dims) * std::log(static_cast<double>(n_records));
}

double bic_family_score(const FamilyStatistics& stats, const DirichletPrior& prior) {
    if (stats.n_records == 0) return 0.0;
    const double cell_prior = prior.cell_prior(stats.child_arity, stats.n_configs);
    double log_lik = 0.0;
    for (std::size_t c = 0; c < stats.n_configs; ++c) {
        double denom = 0.0;
        for (int x = 0; x < stats.child_arity; ++x)
            denom += stats.mean[c * stats.child_arity + x] + cell_prior;
        for (int x = 0; x < stats.child_arity; ++x) {
            double mu = stats.mean[c * stats.child_arity + x];
            if (mu <= 0.0) continue;
            log_lik += mu * std::log((mu + cell_prior) / denom);
        }
    }
    const double dims = static_cast<double>(stats.n_configs) * (stats.child_arity - 1);
    return log_lik - 0.5 * dims * std::log(static_cast<double>(stats.n_records));
}

double cheeseman_stutz(const Structure& s, const Parameters& params_hat, const EvidenceSet& ev,
                       const DirichletPrior& prior, const EssMap& ess) {
    double completed_bde = 0.0;
    double completed_log_lik = 0.0;
    for (int v = 0; v < s.n(); ++v) {
        auto it = ess.find(s.family(v));
        if (it == ess.end())
            throw std::invalid_argument("cheeseman_stutz: missing statistics for variable '" +
                                        s.variables[v].name + "'");
        const FamilyStatistics& st = it->second;
        const double cell_prior = prior.cell_prior(st.child_arity, st.n_configs);
        std::vector<double> priors(st.child_arity, cell_prior);
        for (std::size_t c = 0; c < st.n_configs; ++c)
            completed_bde += log_dirichlet_factor(
                std::span<const double>(st.mean.data() + c * st.child_arity, st.child_arity), priors);
        completed_log_lik += expected_log_likelihood_term(st, params_hat.cpts[v]);
    }
    double observed_log_lik = dataset_log_likelihood(s, params_hat, ev);
    return completed_bde - completed_log_lik + observed_log_lik;
}

double cheeseman_stutz(const Structure& s, const Parameters& params_hat, const Dataset& d,
                       const DirichletPrior& prior, const EssMap& ess) {
    return cheeseman_stutz(s, params_hat, bind_and_dedupe(s, d), prior, ess);
}

std::uint64_t ScoreCache::generation() const {
    std::shared_lock lock(mutex_);
    return generation_;
}

void ScoreCache::new_generation() {
    std::unique_lock lock(mutex_);
    ++generation_;
    entries_.clear();
}

std::optional<double> ScoreCache::lookup(const FamilyKey& family, const ExpectedScoreMethod& method) const {
    std::shared_lock lock(mutex_);
    int pts = method.kind == ScoreApprox::integration ? method.quadrature_points : 0;
    auto it = entries_.find({family, {static_cast<int>(method.kind), pts}});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ScoreCache::store(const FamilyKey& family, const ExpectedScoreMethod& method, double score) {
    std::unique_lock lock(mutex_);
    int pts = method.kind == ScoreApprox::integration ? method.quadrature_points : 0;
    entries_[{family, {static_cast<int>(method.kind), pts}}] = score;
}

std::size_t ScoreCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

}  // namespace structem
