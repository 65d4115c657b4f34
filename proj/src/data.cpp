#include "structem/data.hpp"
#include "structem/common.hpp"

#include <random>
#include <stdexcept>

namespace structem {

std::vector<std::string> validate_dataset(const Dataset& d) {
    std::vector<std::string> report;
    for (std::size_t r = 0; r < d.records.size(); ++r) {
        const auto& row = d.records[r];
        if (row.size() != d.variables.size()) {
            report.push_back("record " + std::to_string(r) + " has wrong width");
            continue;
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c] == kMissing) continue;
            if (row[c] < 0 || row[c] >= d.variables[c].arity())
                report.push_back("record " + std::to_string(r) + " column '" +
                                 d.variables[c].name + "' has out-of-range state");
        }
    }
    return report;
}

Dataset ancestral_sample(const Structure& s, const Parameters& params, int n, std::uint64_t seed) {
    auto order = s.topological_order();
    if (!order) throw std::invalid_argument("ancestral_sample: structure is cyclic");

    Dataset out;
    std::vector<int> observed_columns;
    for (int i = 0; i < s.n(); ++i) {
        if (s.variables[i].hidden) continue;
        observed_columns.push_back(i);
        out.variables.push_back(DatasetVariable{s.variables[i].name, s.variables[i].states});
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<int> full(s.n(), 0);
    out.records.reserve(n);
    for (int r = 0; r < n; ++r) {
        for (int v : *order) {
            std::size_t config = parent_config_index(s, v, full);
            double u = unif(rng);
            double acc = 0.0;
            int state = s.arity(v) - 1;
            for (int x = 0; x < s.arity(v); ++x) {
                acc += params.cpts[v].at(config, x);
                if (u < acc) {
                    state = x;
                    break;
                }
            }
            full[v] = state;
        }
        std::vector<int> row(observed_columns.size());
        for (std::size_t c = 0; c < observed_columns.size(); ++c) row[c] = full[observed_columns[c]];
        out.records.push_back(std::move(row));
    }
    return out;
}

Dataset inject_missing_mcar(const Dataset& d, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw std::invalid_argument("inject_missing_mcar: fraction must be in [0,1)");
    Dataset out = d;
    if (fraction == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (auto& row : out.records)
        for (auto& cell : row)
            if (unif(rng) < fraction) cell = kMissing;
    return out;
}

Parameters sample_dirichlet_parameters(const Structure& s, double alpha, std::uint64_t seed) {
    if (!(alpha > 0.0)) throw std::invalid_argument("sample_dirichlet_parameters: alpha must be positive");
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> gamma(alpha, 1.0);
    Parameters params = make_uniform_parameters(s);
    for (int i = 0; i < s.n(); ++i) {
        Cpt& cpt = params.cpts[i];
        for (std::size_t c = 0; c < cpt.n_configs; ++c) {
            double row_sum = 0.0;
            for (int x = 0; x < cpt.arity; ++x) {
                double g = gamma(rng);
                if (g < 1e-300) g = 1e-300;  // guard underflow at small alpha
                cpt.at(c, x) = g;
                row_sum += g;
            }
            for (int x = 0; x < cpt.arity; ++x) cpt.at(c, x) /= row_sum;
        }
    }
    return params;
}

}  // namespace structem
