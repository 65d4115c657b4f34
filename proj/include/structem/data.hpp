#ifndef STRUCTEM_DATA_HPP
#define STRUCTEM_DATA_HPP

#include "structem/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace structem {

struct DatasetVariable {
    std::string name;
    std::vector<std::string> states;

    int arity() const { return static_cast<int>(states.size()); }
};

// Rectangular table of records over observed variables; kMissing marks an
// absent cell.
struct Dataset {
    std::vector<DatasetVariable> variables;
    std::vector<std::vector<int>> records;

    std::size_t n_records() const { return records.size(); }
    std::size_t n_columns() const { return variables.size(); }
    std::size_t n_cells() const { return records.size() * variables.size(); }
};

// Violated invariants (empty when valid): rectangularity and cell ranges.
std::vector<std::string> validate_dataset(const Dataset& d);

// n i.i.d. records sampled in topological order; hidden variables are sampled
// internally and dropped from the output.
Dataset ancestral_sample(const Structure& s, const Parameters& params, int n, std::uint64_t seed);

// Each cell independently set to missing with the given probability.
Dataset inject_missing_mcar(const Dataset& d, double fraction, std::uint64_t seed);

// Every CPT row drawn independently from a symmetric Dirichlet(alpha).
Parameters sample_dirichlet_parameters(const Structure& s, double alpha, std::uint64_t seed);

}  // namespace structem

#endif
