#ifndef STRUCTEM_SEARCH_HPP
#define STRUCTEM_SEARCH_HPP

#include "structem/param_em.hpp"
#include "structem/scoring.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace structem {

enum class MoveKind { add = 0, remove = 1, reverse = 2 };

struct EdgeMove {
    MoveKind kind = MoveKind::add;
    int from = -1;
    int to = -1;

    bool operator==(const EdgeMove&) const = default;
};

// Every legal move exactly once, in deterministic lexicographic (kind, from,
// to) order. Adds respect max_parents and acyclicity; reversals respect both
// after the flip.
std::vector<EdgeMove> neighbors(const Structure& s, int max_parents);

// Applies a move, throwing std::invalid_argument if it is illegal.
Structure apply_move(const Structure& s, const EdgeMove& move);

using FamilyScoreFn = std::function<double(const FamilyKey&)>;

struct HillClimbResult {
    Structure structure;
    double total_score = 0.0;
    int n_moves = 0;
};

// Best-first greedy ascent: repeatedly applies the best strictly-improving
// move until none exists, rescoring only the affected families (one for
// add/remove, two for reverse). Ties go to the lexicographically smallest
// move.
HillClimbResult hill_climb(const Structure& initial, const FamilyScoreFn& scorer, int max_parents);

enum class SearchObjective { bde, bic };

struct SemConfig {
    int max_sem_iters = 30;
    ExpectedScoreMethod score_method{};
    SearchObjective objective = SearchObjective::bde;
    EmConfig em{};
    int max_parents = 5;
    // restart schedule
    int n_edge_perturbations = 5;
    int random_walk_length = 20;
    int n_random_walks = 10;
    std::optional<double> time_limit_seconds;
    std::uint64_t seed = 0;
    int n_threads = 1;
    double edge_log_penalty = 0.0;  // uniform structure prior when 0
};

struct SemIterationInfo {
    int index = 0;
    double score_current = 0.0;   // Score(M_n : M_n)
    double score_next = 0.0;      // Score(M_{n+1} : M_n)
    double cheeseman_stutz = 0.0; // of (M_n, theta_n)
    int n_edges = 0;              // of M_n
};

struct SemDiagnostics {
    std::vector<SemIterationInfo> iterations;
    std::vector<Structure> accepted;  // M_0, M_1, ... (last entry = returned model)
    int n_structure_changes = 0;
    bool hit_iteration_limit = false;
    bool hit_time_limit = false;
    bool inference_failure = false;
    double final_cheeseman_stutz = 0.0;
    double final_restart_metric = 0.0;  // Cheeseman-Stutz (bde) or expected BIC (bic)
    int n_sem_runs = 1;                 // filled by sem_with_restarts
};

struct SemResult {
    Structure structure;
    Parameters parameters;
    SemDiagnostics diagnostics;
};

// Structural EM: fit MAP parameters for the current model, hill-climb on the
// expected score under that completion model (fresh score-cache generation per
// iteration), stop when the search cannot improve on the current model.
SemResult bayesian_sem(const Dataset& d, const Structure& initial, const DirichletPrior& prior,
                       const SemConfig& config);

// Every hidden variable a parent of every observed variable; no other edges.
Structure initial_hidden_structure(const std::vector<Variable>& observed,
                                   const std::vector<Variable>& hidden);

// Restart schedule around bayesian_sem: first single edge changes incident to
// hidden variables, then random walks, keeping a candidate only when its
// restart metric improves.
SemResult sem_with_restarts(const Dataset& d, const std::vector<Variable>& variables,
                            const DirichletPrior& prior, const SemConfig& config);

// One line per SEM iteration: index, expected score, Cheeseman-Stutz, edges.
std::string diagnostics_tsv(const SemDiagnostics& diag);

}  // namespace structem

#endif
