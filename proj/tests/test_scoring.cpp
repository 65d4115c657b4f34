#include "structem/scoring.hpp"
#include "structem/common.hpp"
#include "structem/data.hpp"
#include "structem/param_em.hpp"
#include "structem/special.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace structem;

namespace {

Variable binary(const std::string& name) { return Variable{name, {"0", "1"}, false}; }

Dataset dataset_from_rows(const Structure& s, std::vector<std::vector<int>> rows) {
    Dataset d;
    for (const auto& v : s.variables)
        if (!v.hidden) d.variables.push_back(DatasetVariable{v.name, v.states});
    d.records = std::move(rows);
    return d;
}

Structure single_binary() {
    Structure s;
    s.variables = {binary("A")};
    s.parents = {{}};
    return s;
}

}  // namespace

TEST_CASE("log_dirichlet_factor pinned examples") {
    std::vector<double> priors{1.0, 1.0};
    CHECK(log_dirichlet_factor(std::vector<double>{0.0, 0.0}, priors) == doctest::Approx(0.0));
    CHECK(log_dirichlet_factor(std::vector<double>{1.0, 1.0}, priors) ==
          doctest::Approx(std::log(1.0 / 6.0)).epsilon(1e-12));
    CHECK(log_dirichlet_factor(std::vector<double>{2.0, 0.0}, priors) ==
          doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("log_dirichlet_factor rejects bad inputs") {
    CHECK_THROWS_AS(log_dirichlet_factor(std::vector<double>{1.0}, std::vector<double>{0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(log_dirichlet_factor(std::vector<double>{-1.0}, std::vector<double>{1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(log_dirichlet_factor(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}),
                    std::invalid_argument);
}

TEST_CASE("log_dirichlet_factor matches the sequential predictive oracle") {
    std::mt19937_64 rng(2001);
    for (int trial = 0; trial < 100; ++trial) {
        int len = 1 + static_cast<int>(rng() % 5);
        std::vector<long long> counts(len);
        std::vector<double> priors(len), counts_d(len);
        std::uniform_real_distribution<double> prior_dist(0.2, 3.0);
        for (int i = 0; i < len; ++i) {
            counts[i] = static_cast<long long>(rng() % 21);
            counts_d[i] = static_cast<double>(counts[i]);
            priors[i] = prior_dist(rng);
        }
        double expected = oracles::sequential_predictive_log_score(counts, priors);
        double actual = log_dirichlet_factor(counts_d, priors);
        CHECK(std::abs(actual - expected) <= 1e-10 * std::max(1.0, std::abs(expected)));
    }
}

TEST_CASE("bde_score_complete pinned examples") {
    Structure s = single_binary();
    DirichletPrior prior{1.0};

    Dataset empty = dataset_from_rows(s, {});
    CHECK(bde_score_complete(s, empty, prior) == doctest::Approx(0.0));

    Dataset two = dataset_from_rows(s, {{0}, {1}});
    CHECK(bde_score_complete(s, two, prior) == doctest::Approx(std::log(1.0 / 8.0)).epsilon(1e-12));
}

TEST_CASE("bde_score_complete decomposes over disconnected variables") {
    Structure ab;
    ab.variables = {binary("A"), binary("B")};
    ab.parents = {{}, {}};
    DirichletPrior prior{1.0};
    Dataset d = dataset_from_rows(ab, {{0, 1}, {1, 1}, {0, 0}});

    Structure a = single_binary();
    Dataset da = dataset_from_rows(a, {{0}, {1}, {0}});
    Structure b;
    b.variables = {binary("B")};
    b.parents = {{}};
    Dataset db = dataset_from_rows(b, {{1}, {1}, {0}});

    CHECK(bde_score_complete(ab, d, prior) ==
          doctest::Approx(bde_score_complete(a, da, prior) + bde_score_complete(b, db, prior))
              .epsilon(1e-12));
}

TEST_CASE("bde_score_complete rejects missing cells") {
    Structure s = single_binary();
    Dataset d = dataset_from_rows(s, {{kMissing}});
    CHECK_THROWS_AS(bde_score_complete(s, d, DirichletPrior{1.0}), std::invalid_argument);
}

TEST_CASE("adding a record shifts the score by its log predictive probability") {
    Structure s = oracles::random_structure(3, 3, 0.6, 404);
    Parameters p = sample_dirichlet_parameters(s, 1.0, 405);
    Dataset d = ancestral_sample(s, p, 30, 406);
    DirichletPrior prior{1.0};

    for (std::size_t cut : {std::size_t{0}, std::size_t{7}, std::size_t{29}}) {
        Dataset before = d, after = d;
        before.records.resize(cut);
        after.records.resize(cut + 1);
        const auto& rec = d.records[cut];

        // predictive probability from counts, family by family
        double log_pred = 0.0;
        for (int v = 0; v < s.n(); ++v) {
            const int arity = s.arity(v);
            std::size_t n_configs = s.n_parent_configs(v);
            double alpha = prior.cell_prior(arity, n_configs);
            std::size_t config = parent_config_index(s, v, rec);
            double cell_count = 0.0, row_count = 0.0;
            for (std::size_t r = 0; r < cut; ++r) {
                if (parent_config_index(s, v, d.records[r]) != config) continue;
                row_count += 1.0;
                if (d.records[r][v] == rec[v]) cell_count += 1.0;
            }
            log_pred += std::log((cell_count + alpha) / (row_count + arity * alpha));
        }
        CHECK(bde_score_complete(s, after, prior) - bde_score_complete(s, before, prior) ==
              doctest::Approx(log_pred).epsilon(1e-10));
    }
}

TEST_CASE("all approximation methods are exact at zero variance") {
    for (ScoreApprox kind : {ScoreApprox::linear, ScoreApprox::summation, ScoreApprox::integration,
                             ScoreApprox::laplace}) {
        ExpectedScoreMethod m{kind, 16};
        CHECK(expected_log_gamma(5.0, 0.0, 1.0, 5, 5, m) ==
              doctest::Approx(std::log(120.0)).epsilon(1e-12));
    }
}

TEST_CASE("expected_log_gamma input validation") {
    ExpectedScoreMethod m{ScoreApprox::summation, 16};
    CHECK_THROWS_AS(expected_log_gamma(1.0, -0.5, 1.0, 0, 2, m), std::invalid_argument);
    CHECK_THROWS_AS(expected_log_gamma(1.0, 0.5, 0.0, 0, 2, m), std::invalid_argument);
    CHECK_THROWS_AS(expected_log_gamma(1.0, 0.5, 1.0, 0, 2,
                                       ExpectedScoreMethod{ScoreApprox::integration, 1}),
                    std::invalid_argument);
}

TEST_CASE("summation tracks the exact Poisson-binomial expectation on the pinned case") {
    // per-record probabilities (0.5, 0.5, 1.0): N in {1,2,3} with pmf (0.25, 0.5, 0.25)
    std::vector<double> probs{0.5, 0.5, 1.0};
    std::vector<long long> weights{1, 1, 1};
    auto pmf = oracles::pb_pmf(probs, weights);
    double exact = oracles::pb_expected_log_gamma(pmf, 1.0);
    CHECK(exact == doctest::Approx(0.25 * std::log(1.0) + 0.5 * std::log(2.0) +
                                   0.25 * std::log(6.0))
                       .epsilon(1e-12));

    double mu = oracles::pb_mean(pmf);
    double sigma2 = oracles::pb_variance(pmf);
    CHECK(mu == doctest::Approx(2.0));
    double approx = expected_log_gamma(mu, sigma2, 1.0, 1, 3,
                                       ExpectedScoreMethod{ScoreApprox::summation, 16});
    CHECK(std::abs(approx - exact) <= 0.10 * std::abs(exact));

    // Jensen direction: the linear approximation sits strictly below
    double linear =
        expected_log_gamma(mu, sigma2, 1.0, 1, 3, ExpectedScoreMethod{ScoreApprox::linear, 16});
    CHECK(linear == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(linear < exact);
}

TEST_CASE("exact_pb_expected_log_gamma agrees with the DP oracle") {
    std::mt19937_64 rng(881);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 1 + static_cast<int>(rng() % 12);
        std::vector<double> probs(n);
        std::vector<long long> weights(n);
        for (int i = 0; i < n; ++i) {
            probs[i] = unif(rng);
            weights[i] = 1 + static_cast<long long>(rng() % 3);
        }
        double prior = 0.25 + unif(rng);
        auto pmf = oracles::pb_pmf(probs, weights);
        CHECK(exact_pb_expected_log_gamma(probs, weights, prior) ==
              doctest::Approx(oracles::pb_expected_log_gamma(pmf, prior)).epsilon(1e-10));
    }
}

TEST_CASE("summation and integration stay near the exact expectation on a random suite") {
    std::mt19937_64 rng(555);
    std::uniform_real_distribution<double> punif(0.02, 0.98);
    std::uniform_real_distribution<double> prior_dist(0.2, 2.0);
    int checked = 0;
    double sum_abs_err_summation = 0.0, sum_abs_err_linear = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        int n = 2 + static_cast<int>(rng() % 59);
        std::vector<double> probs(n);
        std::vector<long long> weights(n, 1);
        for (int i = 0; i < n; ++i) probs[i] = punif(rng);
        double prior = prior_dist(rng);

        auto pmf = oracles::pb_pmf(probs, weights);
        double exact = oracles::pb_expected_log_gamma(pmf, prior);
        double mu = oracles::pb_mean(pmf);
        double sigma2 = oracles::pb_variance(pmf);

        double approx_sum = expected_log_gamma(mu, sigma2, prior, 0, n,
                                               ExpectedScoreMethod{ScoreApprox::summation, 16});
        double approx_int = expected_log_gamma(mu, sigma2, prior, 0, n,
                                               ExpectedScoreMethod{ScoreApprox::integration, 16});
        double approx_lin = expected_log_gamma(mu, sigma2, prior, 0, n,
                                               ExpectedScoreMethod{ScoreApprox::linear, 16});
        sum_abs_err_summation += std::abs(approx_sum - exact);
        sum_abs_err_linear += std::abs(approx_lin - exact);
        if (std::abs(exact) > 0.5) {
            ++checked;
            CHECK(std::abs(approx_sum - exact) <= 0.05 * std::abs(exact));
            CHECK(std::abs(approx_int - exact) <= 0.10 * std::abs(exact));
        }
    }
    CHECK(checked > 10);
    CHECK(sum_abs_err_summation <= sum_abs_err_linear);
}

TEST_CASE("summation error shrinks as the record count grows with fixed missingness") {
    std::mt19937_64 rng(667);
    std::uniform_real_distribution<double> punif(0.1, 0.9);
    double rel_small = 0.0, rel_large = 0.0;
    for (int suite = 0; suite < 10; ++suite) {
        std::vector<double> base(10);
        for (double& p : base) p = punif(rng);
        double prior = 0.5;
        for (int scale : {1, 10}) {
            std::vector<double> probs;
            for (int rep = 0; rep < scale; ++rep) probs.insert(probs.end(), base.begin(), base.end());
            std::vector<long long> weights(probs.size(), 1);
            auto pmf = oracles::pb_pmf(probs, weights);
            double exact = oracles::pb_expected_log_gamma(pmf, prior);
            double approx = expected_log_gamma(oracles::pb_mean(pmf), oracles::pb_variance(pmf),
                                               prior, 0, static_cast<long long>(probs.size()),
                                               ExpectedScoreMethod{ScoreApprox::summation, 16});
            (scale == 1 ? rel_small : rel_large) += std::abs(approx - exact) / std::abs(exact);
        }
    }
    CHECK(rel_large / 10.0 < rel_small / 10.0);
}

TEST_CASE("linear approximation converges to exact for large expected counts") {
    std::vector<double> probs(200, 0.8);
    std::vector<long long> weights(200, 1);
    auto pmf = oracles::pb_pmf(probs, weights);
    double exact = oracles::pb_expected_log_gamma(pmf, 0.5);
    double mu = oracles::pb_mean(pmf);
    double sigma2 = oracles::pb_variance(pmf);
    double lin =
        expected_log_gamma(mu, sigma2, 0.5, 0, 200, ExpectedScoreMethod{ScoreApprox::linear, 16});
    double lap =
        expected_log_gamma(mu, sigma2, 0.5, 0, 200, ExpectedScoreMethod{ScoreApprox::laplace, 16});
    CHECK(std::abs(lin - exact) <= 0.01 * std::abs(exact));
    CHECK(std::abs(lap - exact) <= 0.01 * std::abs(exact));
}

TEST_CASE("laplace computes a genuine second-order value at moderate counts") {
    std::mt19937_64 rng(7171);
    std::uniform_real_distribution<double> punif(0.3, 0.9);
    int interior = 0;
    for (int trial = 0; trial < 25; ++trial) {
        int n = 10 + static_cast<int>(rng() % 40);
        std::vector<double> probs(n);
        std::vector<long long> weights(n, 1);
        for (auto& p : probs) p = punif(rng);
        double prior = 0.5;
        auto pmf = oracles::pb_pmf(probs, weights);
        double exact = oracles::pb_expected_log_gamma(pmf, prior);
        double mu = oracles::pb_mean(pmf);
        double sigma2 = oracles::pb_variance(pmf);
        double lap = expected_log_gamma(mu, sigma2, prior, 0, n,
                                        ExpectedScoreMethod{ScoreApprox::laplace, 16});
        double lin = expected_log_gamma(mu, sigma2, prior, 0, n,
                                        ExpectedScoreMethod{ScoreApprox::linear, 16});
        if (lap != lin) ++interior;
        CHECK(std::abs(lap - exact) <= 0.10 * std::abs(exact));
        // the correction moves in the convexity direction
        CHECK(lap > lin);
    }
    CHECK(interior >= 20);
}

TEST_CASE("laplace degenerates to the linear value on a spike") {
    double lap = expected_log_gamma(3.25, 5e-13, 0.5, 3, 4,
                                    ExpectedScoreMethod{ScoreApprox::laplace, 16});
    CHECK(lap == doctest::Approx(log_gamma(3.75)).epsilon(1e-12));
}

TEST_CASE("summation falls back to integration past the bin cap") {
    double a = expected_log_gamma(5e5, 1e4, 1.0, 0, 2000000,
                                  ExpectedScoreMethod{ScoreApprox::summation, 16});
    double b = expected_log_gamma(5e5, 1e4, 1.0, 0, 2000000,
                                  ExpectedScoreMethod{ScoreApprox::integration, 16});
    CHECK(a == b);
}

namespace {

// everything below needs family statistics from real data
struct FamilyFixture {
    Structure s;
    Parameters p;
    Dataset complete;
    DirichletPrior prior{1.0};

    FamilyFixture() {
        s.variables = {binary("A"), binary("B")};
        s.parents = {{}, {0}};
        p = make_uniform_parameters(s);
        p.cpts[0].p = {0.7, 0.3};
        p.cpts[1].p = {0.9, 0.1, 0.2, 0.8};
        complete = dataset_from_rows(s, {{0, 0}, {0, 1}, {1, 1}, {1, 1}, {0, 0}});
    }
};

}  // namespace

TEST_CASE("complete-data expected family scores equal the closed-form score for every method") {
    FamilyFixture fx;
    std::vector<FamilyKey> families{fx.s.family(0), fx.s.family(1)};
    EssOptions opts;
    opts.keep_per_record = true;
    EssMap ess = accumulate_ess(fx.s, fx.p, fx.complete, families, opts);
    double closed_form = bde_score_complete(fx.s, fx.complete, fx.prior);
    for (ScoreApprox kind : {ScoreApprox::linear, ScoreApprox::summation, ScoreApprox::integration,
                             ScoreApprox::laplace, ScoreApprox::exact_pb}) {
        ExpectedScoreMethod m{kind, 16};
        double total = expected_family_score(ess.at(families[0]), fx.prior, m) +
                       expected_family_score(ess.at(families[1]), fx.prior, m);
        CHECK(total == doctest::Approx(closed_form).epsilon(1e-9));
        CHECK(expected_model_score(fx.s, ess, fx.prior, m) ==
              doctest::Approx(closed_form).epsilon(1e-9));
    }
}

TEST_CASE("zero-record statistics score zero") {
    FamilyFixture fx;
    Dataset empty = dataset_from_rows(fx.s, {});
    EssMap ess = accumulate_ess(fx.s, fx.p, empty, {fx.s.family(1)});
    CHECK(expected_family_score(ess.at(fx.s.family(1)), fx.prior,
                                ExpectedScoreMethod{ScoreApprox::summation, 16}) ==
          doctest::Approx(0.0));
}

TEST_CASE("incomplete family score approximates the completion-enumeration expectation") {
    FamilyFixture fx;
    Dataset d = dataset_from_rows(fx.s, {{0, 0}, {1, kMissing}});
    FamilyKey family = fx.s.family(1);
    EssMap ess = accumulate_ess(fx.s, fx.p, d, {family});

    // exact E[log F] over the two completions, weighted by the completion
    // posterior under (s, p)
    oracles::JointOracle oracle(fx.s, fx.p);
    double alpha = fx.prior.cell_prior(2, 2);
    double expectation = 0.0;
    std::vector<int> observed{1, kMissing};
    double z = oracle.evidence_probability(observed);
    for (int h = 0; h < 2; ++h) {
        std::vector<int> completed{1, h};
        double weight = oracle.evidence_probability(completed) / z;
        double counts[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
        counts[0][0] = 1.0;  // the complete record (0,0)
        counts[1][h] += 1.0;
        double log_f = 0.0;
        for (int c = 0; c < 2; ++c) {
            log_f += std::lgamma(2 * alpha) - std::lgamma(2 * alpha + counts[c][0] + counts[c][1]);
            for (int x = 0; x < 2; ++x) log_f += std::lgamma(alpha + counts[c][x]) - std::lgamma(alpha);
        }
        expectation += weight * log_f;
    }
    double approx = expected_family_score(ess.at(family), fx.prior,
                                          ExpectedScoreMethod{ScoreApprox::summation, 16});
    CHECK(std::abs(approx - expectation) <= 0.10 * std::abs(expectation));
}

TEST_CASE("exact-pb model score equals the enumerated Q of the completion model") {
    Structure s = oracles::random_structure(3, 2, 0.7, 31415);
    Parameters completion = sample_dirichlet_parameters(s, 1.0, 31416);
    Dataset d = inject_missing_mcar(ancestral_sample(s, completion, 4, 31417), 0.3, 31418);
    DirichletPrior prior{1.0};

    EvidenceSet ev = bind_and_dedupe(s, d);
    std::vector<std::vector<int>> expanded;
    for (std::size_t k = 0; k < ev.patterns.size(); ++k)
        for (long long rep = 0; rep < ev.weights[k]; ++rep) expanded.push_back(ev.patterns[k]);

    // candidate model: a different structure over the same variables
    Structure candidate = s;
    candidate.parents = {{}, {0}, {0}};

    std::vector<FamilyKey> families;
    for (int v = 0; v < candidate.n(); ++v) families.push_back(candidate.family(v));
    EssOptions opts;
    opts.keep_per_record = true;
    EssMap ess = accumulate_ess(s, completion, ev, families, opts);
    double model_score =
        expected_model_score(candidate, ess, prior, ExpectedScoreMethod{ScoreApprox::exact_pb, 16});

    oracles::JointOracle oracle(s, completion);
    double q = 0.0;
    double z = 1.0;
    for (const auto& row : expanded) z *= oracle.evidence_probability(row);
    oracles::for_each_completion(s, expanded, [&](const std::vector<std::vector<int>>& comp) {
        double w = 1.0;
        for (const auto& row : comp) w *= oracle.evidence_probability(row);
        q += (w / z) * oracles::complete_data_log_marginal(candidate, comp, prior);
    });
    CHECK(model_score == doctest::Approx(q).epsilon(1e-8));
}

TEST_CASE("expected_model_score reports the missing family by name") {
    FamilyFixture fx;
    EssMap empty_map;
    CHECK_THROWS_WITH_AS(expected_model_score(fx.s, empty_map, fx.prior,
                                              ExpectedScoreMethod{ScoreApprox::linear, 16}),
                         doctest::Contains("A"), std::invalid_argument);
}

TEST_CASE("bic_score hand example on a single binary variable") {
    Structure s = single_binary();
    Dataset d = dataset_from_rows(s, {{0}, {0}, {0}, {1}});
    DirichletPrior prior{1.0};
    Parameters uniform = make_uniform_parameters(s);
    EssMap ess = accumulate_ess(s, uniform, d, {s.family(0)});
    Parameters fit = map_parameters_from_ess(s, ess, prior);
    double theta = (3.0 + 0.5) / (4.0 + 1.0);
    CHECK(fit.cpts[0].p[0] == doctest::Approx(theta).epsilon(1e-12));
    double expected = 3.0 * std::log(theta) + 1.0 * std::log(1.0 - theta) - 0.5 * std::log(4.0);
    CHECK(bic_score(s, ess, fit) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(bic_family_score(ess.at(s.family(0)), prior) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("adding a parent raises the BIC likelihood term and the penalty") {
    Structure s;
    s.variables = {binary("A"), binary("B")};
    s.parents = {{}, {}};
    Parameters p = make_uniform_parameters(s);
    p.cpts[0].p = {0.8, 0.2};
    Dataset d = ancestral_sample(s, p, 100, 12);
    DirichletPrior prior{1.0};

    Structure with_edge = s;
    with_edge.parents = {{}, {0}};
    Parameters uniform_small = make_uniform_parameters(s);
    Parameters uniform_big = make_uniform_parameters(with_edge);
    EssMap ess_small = accumulate_ess(s, uniform_small, d, {s.family(1)});
    EssMap ess_big = accumulate_ess(with_edge, uniform_big, d, {with_edge.family(1)});

    auto likelihood_term = [&](const FamilyStatistics& st) {
        double alpha = prior.cell_prior(st.child_arity, st.n_configs);
        double total = 0.0;
        for (std::size_t c = 0; c < st.n_configs; ++c) {
            double denom = 0.0;
            for (int x = 0; x < st.child_arity; ++x) denom += st.mean[c * 2 + x] + alpha;
            for (int x = 0; x < st.child_arity; ++x)
                if (st.mean[c * 2 + x] > 0)
                    total += st.mean[c * 2 + x] * std::log((st.mean[c * 2 + x] + alpha) / denom);
        }
        return total;
    };
    double lik_small = likelihood_term(ess_small.at(s.family(1)));
    double lik_big = likelihood_term(ess_big.at(with_edge.family(1)));
    CHECK(lik_big >= lik_small - 1e-9);
    // penalty: one extra parent configuration
    CHECK(bic_family_score(ess_big.at(with_edge.family(1)), prior) - lik_big <
          bic_family_score(ess_small.at(s.family(1)), prior) - lik_small);
}

TEST_CASE("cheeseman_stutz equals the closed-form score on complete data") {
    FamilyFixture fx;
    std::vector<FamilyKey> families{fx.s.family(0), fx.s.family(1)};
    EssMap ess = accumulate_ess(fx.s, fx.p, fx.complete, families);
    DirichletPrior prior{1.0};
    double cs = cheeseman_stutz(fx.s, fx.p, fx.complete, prior, ess);
    CHECK(cs == doctest::Approx(bde_score_complete(fx.s, fx.complete, prior)).epsilon(1e-10));
}

TEST_CASE("cheeseman_stutz approximates the true marginal on a tiny incomplete instance") {
    Structure s;
    s.variables = {binary("A"), binary("B")};
    s.parents = {{}, {0}};
    Parameters gen = make_uniform_parameters(s);
    gen.cpts[0].p = {0.5, 0.5};
    gen.cpts[1].p = {0.95, 0.05, 0.05, 0.95};
    Dataset d = dataset_from_rows(
        s, {{0, 0}, {0, 0}, {1, 1}, {1, 1}, {0, kMissing}, {1, kMissing}, {0, 0}, {1, 1}});
    DirichletPrior prior{1.0};

    EmConfig em;
    em.seed = 3;
    EmResult fit = em_fit(s, d, prior, em);
    EvidenceSet ev = bind_and_dedupe(s, d);
    double cs = cheeseman_stutz(s, fit.parameters, ev, prior, fit.final_ess);

    std::vector<std::vector<int>> rows;
    for (std::size_t k = 0; k < ev.patterns.size(); ++k)
        for (long long rep = 0; rep < ev.weights[k]; ++rep) rows.push_back(ev.patterns[k]);
    double truth = oracles::true_log_marginal(s, rows, prior);

    Structure empty = s;
    empty.parents = {{}, {}};
    double baseline = oracles::true_log_marginal(empty, rows, prior);
    double gap = std::abs(truth - baseline);
    REQUIRE(gap > 0.1);
    CHECK(std::abs(cs - truth) <= 0.15 * gap);
    CHECK(std::isfinite(cs));
}

TEST_CASE("the per-edge structure penalty shifts the model score by penalty times edges") {
    FamilyFixture fx;
    std::vector<FamilyKey> families{fx.s.family(0), fx.s.family(1)};
    EssMap ess = accumulate_ess(fx.s, fx.p, fx.complete, families);
    ExpectedScoreMethod m{ScoreApprox::summation, 16};
    double flat = expected_model_score(fx.s, ess, fx.prior, m);
    double penalized = expected_model_score(fx.s, ess, fx.prior, m, -2.5);
    CHECK(penalized == doctest::Approx(flat - 2.5 * fx.s.n_edges()).epsilon(1e-12));
}

TEST_CASE("score cache honors generations and returns stored bits") {
    ScoreCache cache;
    FamilyKey key{1, {0}};
    ExpectedScoreMethod m{ScoreApprox::summation, 16};
    CHECK(!cache.lookup(key, m));
    double value = -3.14159265358979312;
    cache.store(key, m, value);
    REQUIRE(cache.lookup(key, m));
    CHECK(*cache.lookup(key, m) == value);  // bit-identical
    CHECK(!cache.lookup(key, ExpectedScoreMethod{ScoreApprox::linear, 16}));
    std::uint64_t before = cache.generation();
    cache.new_generation();
    CHECK(cache.generation() == before + 1);
    CHECK(!cache.lookup(key, m));
    CHECK(cache.size() == 0);
}
