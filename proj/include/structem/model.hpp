#ifndef STRUCTEM_MODEL_HPP
#define STRUCTEM_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace structem {

// A discrete network variable. Hidden variables are ordinary variables that
// datasets simply never contain.
struct Variable {
    std::string name;
    std::vector<std::string> states;
    bool hidden = false;

    int arity() const { return static_cast<int>(states.size()); }
    bool operator==(const Variable&) const = default;
};

// Child plus canonically ordered parent set; the unit of score decomposition.
// Parent indices are strictly ascending so equal families compare equal.
struct FamilyKey {
    int child = -1;
    std::vector<int> parents;

    bool operator==(const FamilyKey&) const = default;
    bool operator<(const FamilyKey& o) const {
        if (child != o.child) return child < o.child;
        return parents < o.parents;
    }
};

struct FamilyKeyHash {
    std::size_t operator()(const FamilyKey& k) const;
};

// DAG over named discrete variables. Treated as immutable after construction;
// search operates on copies.
struct Structure {
    std::vector<Variable> variables;
    std::vector<std::vector<int>> parents;  // parents[i]: ascending indices, no self, no dups

    bool operator==(const Structure&) const = default;
    int n() const { return static_cast<int>(variables.size()); }
    int arity(int i) const { return variables[i].arity(); }
    bool has_edge(int from, int to) const;
    int n_edges() const;
    FamilyKey family(int child) const { return FamilyKey{child, parents[child]}; }
    std::size_t n_parent_configs(int child) const;

    // Kahn's algorithm; nullopt when the parent relation has a cycle.
    std::optional<std::vector<int>> topological_order() const;

    int find_variable(const std::string& name) const;  // -1 when absent
};

// Conditional probability table for one variable: one row (distribution over
// child states) per parent configuration, stored flat as p[config * arity + state].
struct Cpt {
    int arity = 0;
    std::size_t n_configs = 1;
    std::vector<double> p;

    double at(std::size_t config, int state) const { return p[config * arity + state]; }
    double& at(std::size_t config, int state) { return p[config * arity + state]; }
    bool operator==(const Cpt&) const = default;
};

struct Parameters {
    std::vector<Cpt> cpts;
    bool operator==(const Parameters&) const = default;
};

struct Network {
    Structure structure;
    Parameters parameters;
};

// Mixed-radix index of a parent configuration: parents in ascending-index
// order, the first (lowest-index) parent is the least significant digit.
std::size_t parent_config_index(const Structure& s, int child, std::span<const int> full_record);
std::size_t parent_config_index_of_states(const Structure& s, const std::vector<int>& parent_set,
                                          std::span<const int> parent_states);
// State of the k-th parent (ascending order) within configuration `config`.
int parent_state_in_config(const Structure& s, const std::vector<int>& parent_set,
                           std::size_t config, int k);

// Counter over a mixed-radix assignment space (first digit least significant).
struct MixedRadixCounter {
    explicit MixedRadixCounter(std::vector<int> radices);
    const std::vector<int>& values() const { return values_; }
    std::size_t size() const { return size_; }
    bool next();  // false after the last assignment

  private:
    std::vector<int> radices_;
    std::vector<int> values_;
    std::size_t size_;
};

// Report-style validation: returns the list of violated invariants (empty when
// valid). Acyclicity is checked by topological sort.
std::vector<std::string> validate(const Structure& s, const Parameters& params);
std::vector<std::string> validate_structure(const Structure& s);

// Uniform CPTs matching the structure's arities and parent sets.
Parameters make_uniform_parameters(const Structure& s);

// Sum of log theta over families for a complete record; -inf when any factor
// is zero. Throws std::invalid_argument on wrong record size or out-of-range
// states.
double log_likelihood_complete(const Structure& s, const Parameters& params,
                               std::span<const int> record);

}  // namespace structem

#endif
