#include "structem/search.hpp"
#include "structem/common.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace structem {

namespace {

// is `target` reachable from `start` along directed edges?
bool reachable(const Structure& s, int start, int target, const EdgeMove* skip_edge = nullptr) {
    std::vector<std::vector<int>> children(s.n());
    for (int v = 0; v < s.n(); ++v)
        for (int p : s.parents[v]) {
            if (skip_edge && skip_edge->from == p && skip_edge->to == v) continue;
            children[p].push_back(v);
        }
    std::vector<char> seen(s.n(), 0);
    std::vector<int> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (v == target) return true;
        for (int c : children[v])
            if (!seen[c]) {
                seen[c] = 1;
                stack.push_back(c);
            }
    }
    return false;
}

bool move_legal(const Structure& s, const EdgeMove& m, int max_parents) {
    if (m.from < 0 || m.from >= s.n() || m.to < 0 || m.to >= s.n() || m.from == m.to) return false;
    switch (m.kind) {
        case MoveKind::add:
            if (s.has_edge(m.from, m.to)) return false;
            if (static_cast<int>(s.parents[m.to].size()) >= max_parents) return false;
            return !reachable(s, m.to, m.from);
        case MoveKind::remove:
            return s.has_edge(m.from, m.to);
        case MoveKind::reverse: {
            if (!s.has_edge(m.from, m.to)) return false;
            if (static_cast<int>(s.parents[m.from].size()) + 1 > max_parents) return false;
            EdgeMove removed{MoveKind::remove, m.from, m.to};
            return !reachable(s, m.from, m.to, &removed);
        }
    }
    return false;
}

}  // namespace

std::vector<EdgeMove> neighbors(const Structure& s, int max_parents) {
    std::vector<EdgeMove> moves;
    for (MoveKind kind : {MoveKind::add, MoveKind::remove, MoveKind::reverse})
        for (int from = 0; from < s.n(); ++from)
            for (int to = 0; to < s.n(); ++to) {
                EdgeMove m{kind, from, to};
                if (move_legal(s, m, max_parents)) moves.push_back(m);
            }
    return moves;
}

Structure apply_move(const Structure& s, const EdgeMove& move) {
    if (move.from < 0 || move.from >= s.n() || move.to < 0 || move.to >= s.n() ||
        move.from == move.to)
        throw std::invalid_argument("apply_move: variable indices out of range");
    if (move.kind == MoveKind::add && s.has_edge(move.from, move.to))
        throw std::invalid_argument("apply_move: edge already present");
    if (move.kind != MoveKind::add && !s.has_edge(move.from, move.to))
        throw std::invalid_argument("apply_move: edge not present");

    Structure out = s;
    auto add_parent = [&](int child, int parent) {
        auto& ps = out.parents[child];
        ps.insert(std::upper_bound(ps.begin(), ps.end(), parent), parent);
    };
    auto remove_parent = [&](int child, int parent) {
        auto& ps = out.parents[child];
        ps.erase(std::find(ps.begin(), ps.end(), parent));
    };
    switch (move.kind) {
        case MoveKind::add:
            add_parent(move.to, move.from);
            break;
        case MoveKind::remove:
            remove_parent(move.to, move.from);
            break;
        case MoveKind::reverse:
            remove_parent(move.to, move.from);
            add_parent(move.from, move.to);
            break;
    }
    if (!out.topological_order())
        throw std::invalid_argument("apply_move: move creates a cycle");
    return out;
}

namespace {

FamilyKey family_with_parent_added(const Structure& s, int child, int parent) {
    FamilyKey key = s.family(child);
    key.parents.insert(std::upper_bound(key.parents.begin(), key.parents.end(), parent), parent);
    return key;
}

FamilyKey family_with_parent_removed(const Structure& s, int child, int parent) {
    FamilyKey key = s.family(child);
    key.parents.erase(std::find(key.parents.begin(), key.parents.end(), parent));
    return key;
}

// families changed by a move, paired with their post-move keys
std::vector<std::pair<int, FamilyKey>> changed_families(const Structure& s, const EdgeMove& m) {
    switch (m.kind) {
        case MoveKind::add:
            return {{m.to, family_with_parent_added(s, m.to, m.from)}};
        case MoveKind::remove:
            return {{m.to, family_with_parent_removed(s, m.to, m.from)}};
        case MoveKind::reverse:
            return {{m.to, family_with_parent_removed(s, m.to, m.from)},
                    {m.from, family_with_parent_added(s, m.from, m.to)}};
    }
    return {};
}

}  // namespace

HillClimbResult hill_climb(const Structure& initial, const FamilyScoreFn& scorer, int max_parents) {
    HillClimbResult result;
    result.structure = initial;
    std::vector<double> family_scores(initial.n());
    for (int v = 0; v < initial.n(); ++v) family_scores[v] = scorer(result.structure.family(v));

    for (;;) {
        double best_delta = 0.0;
        std::optional<EdgeMove> best_move;
        for (const EdgeMove& m : neighbors(result.structure, max_parents)) {
            double delta = 0.0;
            for (const auto& [var, new_key] : changed_families(result.structure, m))
                delta += scorer(new_key) - family_scores[var];
            if (delta > best_delta) {
                best_delta = delta;
                best_move = m;
            }
        }
        if (!best_move) break;
        for (const auto& [var, new_key] : changed_families(result.structure, *best_move))
            family_scores[var] = scorer(new_key);
        result.structure = apply_move(result.structure, *best_move);
        ++result.n_moves;
    }
    result.total_score = 0.0;
    for (double v : family_scores) result.total_score += v;
    return result;
}

namespace {

using Clock = std::chrono::steady_clock;
using Deadline = std::optional<Clock::time_point>;

bool past(const Deadline& deadline) {
    return deadline && Clock::now() >= *deadline;
}

struct CompletionScorer {
    const Structure* completion_structure = nullptr;
    const Parameters* completion_params = nullptr;
    const EvidenceSet* evidence = nullptr;
    const DirichletPrior* prior = nullptr;
    const SemConfig* config = nullptr;
    ScoreCache* cache = nullptr;

    double operator()(const FamilyKey& key) const {
        if (auto hit = cache->lookup(key, config->score_method)) return *hit;
        EssOptions opts;
        opts.n_threads = config->n_threads;
        opts.keep_per_record = config->score_method.kind == ScoreApprox::exact_pb;
        FamilyStatistics stats =
            accumulate_family_ess(*completion_structure, *completion_params, *evidence, key, opts);
        double score = config->objective == SearchObjective::bde
                           ? expected_family_score(stats, *prior, config->score_method)
                           : bic_family_score(stats, *prior);
        score += config->edge_log_penalty * static_cast<double>(key.parents.size());
        cache->store(key, config->score_method, score);
        return score;
    }
};

SemResult bayesian_sem_impl(const Dataset& d, const Structure& initial, const DirichletPrior& prior,
                            const SemConfig& config, const Deadline& deadline) {
    if (d.records.empty()) throw std::invalid_argument("bayesian_sem: dataset is empty");
    {
        auto report = validate_structure(initial);
        if (!report.empty())
            throw std::invalid_argument("bayesian_sem: invalid initial structure: " + report.front());
    }
    EvidenceSet ev = bind_and_dedupe(initial, d);

    SemResult result;
    result.structure = initial;
    result.diagnostics.accepted.push_back(initial);
    ScoreCache cache;
    // last (structure, parameters) pair that completed an EM fit; the failure
    // path falls back to it
    Structure fitted_structure;
    Parameters fitted_params;
    bool have_params = false;

    auto finish = [&](const EmResult& em) {
        result.parameters = em.parameters;
        result.diagnostics.final_cheeseman_stutz =
            cheeseman_stutz(result.structure, em.parameters, ev, prior, em.final_ess);
        result.diagnostics.final_restart_metric =
            config.objective == SearchObjective::bde
                ? result.diagnostics.final_cheeseman_stutz
                : bic_score(result.structure, em.final_ess, em.parameters);
    };

    int n = 0;
    try {
        for (; n < config.max_sem_iters; ++n) {
            EmConfig em_config = config.em;
            em_config.seed = mix_seed(config.seed, 0xE000 + static_cast<std::uint64_t>(n));
            em_config.n_threads = config.n_threads;
            // provided initial parameters only fit the initial structure
            if (n > 0) em_config.init_params.reset();
            EmResult em = em_fit(result.structure, ev, prior, em_config);
            have_params = true;
            fitted_structure = result.structure;
            fitted_params = em.parameters;
            result.parameters = em.parameters;

            if (past(deadline)) {
                result.diagnostics.hit_time_limit = true;
                finish(em);
                return result;
            }

            cache.new_generation();
            CompletionScorer scorer{&result.structure, &em.parameters, &ev, &prior, &config, &cache};
            double score_current = 0.0;
            for (int v = 0; v < result.structure.n(); ++v)
                score_current += scorer(result.structure.family(v));
            HillClimbResult climbed = hill_climb(result.structure, scorer, config.max_parents);

            SemIterationInfo info;
            info.index = n;
            info.score_current = score_current;
            info.score_next = climbed.total_score;
            info.cheeseman_stutz =
                cheeseman_stutz(result.structure, em.parameters, ev, prior, em.final_ess);
            info.n_edges = result.structure.n_edges();
            result.diagnostics.iterations.push_back(info);

            if (climbed.total_score <= score_current + 1e-9) {
                finish(em);
                return result;
            }
            result.structure = climbed.structure;
            ++result.diagnostics.n_structure_changes;
            result.diagnostics.accepted.push_back(result.structure);
        }
        result.diagnostics.hit_iteration_limit = true;
        EmConfig em_config = config.em;
        em_config.seed = mix_seed(config.seed, 0xE000 + static_cast<std::uint64_t>(config.max_sem_iters));
        em_config.n_threads = config.n_threads;
        em_config.init_params.reset();
        EmResult em = em_fit(result.structure, ev, prior, em_config);
        finish(em);
        return result;
    } catch (const ZeroEvidenceError&) {
        // mid-search inference failure: hand back the current best with a flag
        if (!have_params) throw;
        result.diagnostics.inference_failure = true;
        result.structure = fitted_structure;
        result.parameters = fitted_params;
        return result;
    }
}

}  // namespace

SemResult bayesian_sem(const Dataset& d, const Structure& initial, const DirichletPrior& prior,
                       const SemConfig& config) {
    Deadline deadline;
    if (config.time_limit_seconds)
        deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                      std::chrono::duration<double>(*config.time_limit_seconds));
    return bayesian_sem_impl(d, initial, prior, config, deadline);
}

Structure initial_hidden_structure(const std::vector<Variable>& observed,
                                   const std::vector<Variable>& hidden) {
    Structure s;
    for (const Variable& v : observed) {
        s.variables.push_back(v);
        s.variables.back().hidden = false;
    }
    for (const Variable& v : hidden) {
        s.variables.push_back(v);
        s.variables.back().hidden = true;
    }
    const int n_obs = static_cast<int>(observed.size());
    const int n_all = s.n();
    s.parents.assign(n_all, {});
    for (int i = 0; i < n_obs; ++i)
        for (int h = n_obs; h < n_all; ++h) s.parents[i].push_back(h);
    auto report = validate_structure(s);
    if (!report.empty())
        throw std::invalid_argument("initial_hidden_structure: " + report.front());
    return s;
}

namespace {

std::vector<EdgeMove> hidden_incident_moves(const Structure& s, int max_parents) {
    std::vector<EdgeMove> out;
    for (const EdgeMove& m : neighbors(s, max_parents)) {
        if (m.kind == MoveKind::remove) continue;  // adds and reversals only
        if (s.variables[m.from].hidden || s.variables[m.to].hidden) out.push_back(m);
    }
    return out;
}

}  // namespace

SemResult sem_with_restarts(const Dataset& d, const std::vector<Variable>& variables,
                            const DirichletPrior& prior, const SemConfig& config) {
    std::vector<Variable> observed, hidden;
    for (const Variable& v : variables) (v.hidden ? hidden : observed).push_back(v);
    Structure initial = initial_hidden_structure(observed, hidden);

    Deadline deadline;
    if (config.time_limit_seconds)
        deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                      std::chrono::duration<double>(*config.time_limit_seconds));

    SemResult best = bayesian_sem_impl(d, initial, prior, config, deadline);
    double best_metric = best.diagnostics.final_restart_metric;
    int n_runs = 1;

    std::mt19937_64 rng(mix_seed(config.seed, 0x9E57A97ull));
    auto run_from = [&](const Structure& start) {
        SemConfig sub = config;
        sub.seed = mix_seed(config.seed, static_cast<std::uint64_t>(n_runs));
        sub.em.init_params.reset();  // shaped for the initial structure only
        SemResult res = bayesian_sem_impl(d, start, prior, sub, deadline);
        ++n_runs;
        return res;
    };

    auto tier1 = [&]() {
        for (int t = 0; t < config.n_edge_perturbations; ++t) {
            if (past(deadline)) return;
            std::vector<EdgeMove> moves = hidden_incident_moves(best.structure, config.max_parents);
            if (moves.empty()) return;
            std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
            Structure start = apply_move(best.structure, moves[pick(rng)]);
            SemResult res = run_from(start);
            if (res.diagnostics.final_restart_metric > best_metric) {
                best_metric = res.diagnostics.final_restart_metric;
                best = std::move(res);
            }
        }
    };

    tier1();
    for (int w = 0; w < config.n_random_walks; ++w) {
        if (past(deadline)) break;
        Structure walked = best.structure;
        for (int step = 0; step < config.random_walk_length; ++step) {
            std::vector<EdgeMove> moves = neighbors(walked, config.max_parents);
            if (moves.empty()) break;
            std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
            walked = apply_move(walked, moves[pick(rng)]);
        }
        SemResult res = run_from(walked);
        if (res.diagnostics.final_restart_metric > best_metric) {
            best_metric = res.diagnostics.final_restart_metric;
            best = std::move(res);
        }
        tier1();
    }
    best.diagnostics.n_sem_runs = n_runs;
    return best;
}

std::string diagnostics_tsv(const SemDiagnostics& diag) {
    std::ostringstream out;
    for (const SemIterationInfo& it : diag.iterations) {
        out << it.index << '\t' << format_double(it.score_next) << '\t'
            << format_double(it.cheeseman_stutz) << '\t' << it.n_edges << '\n';
    }
    return out.str();
}

}  // namespace structem
