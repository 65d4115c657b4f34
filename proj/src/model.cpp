#include "structem/model.hpp"
#include "structem/common.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace structem {

std::size_t FamilyKeyHash::operator()(const FamilyKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.child) + 0x517cc1b727220a95ull;
    for (int p : k.parents) h = hash_combine(h, static_cast<std::uint64_t>(p));
    return static_cast<std::size_t>(h);
}

bool Structure::has_edge(int from, int to) const {
    const auto& ps = parents[to];
    return std::binary_search(ps.begin(), ps.end(), from);
}

int Structure::n_edges() const {
    int total = 0;
    for (const auto& ps : parents) total += static_cast<int>(ps.size());
    return total;
}

std::size_t Structure::n_parent_configs(int child) const {
    std::size_t q = 1;
    for (int p : parents[child]) q *= static_cast<std::size_t>(arity(p));
    return q;
}

std::optional<std::vector<int>> Structure::topological_order() const {
    const int nv = n();
    std::vector<int> in_degree(nv, 0);
    std::vector<std::vector<int>> children(nv);
    for (int v = 0; v < nv; ++v) {
        in_degree[v] = static_cast<int>(parents[v].size());
        for (int p : parents[v]) children[p].push_back(v);
    }
    std::vector<int> order;
    order.reserve(nv);
    std::vector<int> ready;
    for (int v = nv - 1; v >= 0; --v)
        if (in_degree[v] == 0) ready.push_back(v);
    while (!ready.empty()) {
        int v = ready.back();
        ready.pop_back();
        order.push_back(v);
        for (int c : children[v])
            if (--in_degree[c] == 0) ready.push_back(c);
    }
    if (static_cast<int>(order.size()) != nv) return std::nullopt;
    return order;
}

int Structure::find_variable(const std::string& name) const {
    for (int i = 0; i < n(); ++i)
        if (variables[i].name == name) return i;
    return -1;
}

std::size_t parent_config_index(const Structure& s, int child, std::span<const int> full_record) {
    std::size_t index = 0;
    std::size_t stride = 1;
    for (int p : s.parents[child]) {
        index += stride * static_cast<std::size_t>(full_record[p]);
        stride *= static_cast<std::size_t>(s.arity(p));
    }
    return index;
}

std::size_t parent_config_index_of_states(const Structure& s, const std::vector<int>& parent_set,
                                          std::span<const int> parent_states) {
    std::size_t index = 0;
    std::size_t stride = 1;
    for (std::size_t k = 0; k < parent_set.size(); ++k) {
        index += stride * static_cast<std::size_t>(parent_states[k]);
        stride *= static_cast<std::size_t>(s.arity(parent_set[k]));
    }
    return index;
}

int parent_state_in_config(const Structure& s, const std::vector<int>& parent_set,
                           std::size_t config, int k) {
    for (int j = 0; j < k; ++j) config /= static_cast<std::size_t>(s.arity(parent_set[j]));
    return static_cast<int>(config % static_cast<std::size_t>(s.arity(parent_set[k])));
}

MixedRadixCounter::MixedRadixCounter(std::vector<int> radices)
    : radices_(std::move(radices)), values_(radices_.size(), 0) {
    size_ = 1;
    for (int r : radices_) size_ *= static_cast<std::size_t>(r);
}

bool MixedRadixCounter::next() {
    for (std::size_t i = 0; i < radices_.size(); ++i) {
        if (++values_[i] < radices_[i]) return true;
        values_[i] = 0;
    }
    return false;
}

std::vector<std::string> validate_structure(const Structure& s) {
    std::vector<std::string> report;
    const int nv = s.n();
    std::unordered_set<std::string> names;
    for (int i = 0; i < nv; ++i) {
        const Variable& v = s.variables[i];
        if (v.arity() < 2)
            report.push_back("variable '" + v.name + "' has arity < 2");
        std::set<std::string> labels(v.states.begin(), v.states.end());
        if (labels.size() != v.states.size())
            report.push_back("variable '" + v.name + "' has duplicate state labels");
        if (!names.insert(v.name).second)
            report.push_back("duplicate variable name '" + v.name + "'");
    }
    if (static_cast<int>(s.parents.size()) != nv) {
        report.push_back("parent table size does not match variable count");
        return report;
    }
    for (int i = 0; i < nv; ++i) {
        const auto& ps = s.parents[i];
        if (!std::is_sorted(ps.begin(), ps.end()))
            report.push_back("parent set of '" + s.variables[i].name + "' is not in canonical order");
        if (std::adjacent_find(ps.begin(), ps.end()) != ps.end())
            report.push_back("parent set of '" + s.variables[i].name + "' contains duplicates");
        for (int p : ps) {
            if (p < 0 || p >= nv)
                report.push_back("parent index out of range for '" + s.variables[i].name + "'");
            else if (p == i)
                report.push_back("variable '" + s.variables[i].name + "' is its own parent");
        }
    }
    if (!s.topological_order())
        report.push_back("parent relation contains a directed cycle");
    return report;
}

std::vector<std::string> validate(const Structure& s, const Parameters& params) {
    std::vector<std::string> report = validate_structure(s);
    if (params.cpts.size() != s.variables.size()) {
        report.push_back("parameter table count does not match variable count");
        return report;
    }
    for (int i = 0; i < s.n(); ++i) {
        const Cpt& cpt = params.cpts[i];
        const std::string& name = s.variables[i].name;
        if (cpt.arity != s.arity(i) || cpt.n_configs != s.n_parent_configs(i) ||
            cpt.p.size() != cpt.n_configs * static_cast<std::size_t>(cpt.arity)) {
            report.push_back("CPT dimensions of '" + name + "' do not match structure");
            continue;
        }
        for (std::size_t c = 0; c < cpt.n_configs; ++c) {
            double row_sum = 0.0;
            bool in_range = true;
            for (int x = 0; x < cpt.arity; ++x) {
                double v = cpt.at(c, x);
                if (!(v >= 0.0 && v <= 1.0)) in_range = false;
                row_sum += v;
            }
            if (!in_range)
                report.push_back("CPT of '" + name + "' row " + std::to_string(c) +
                                 " has probabilities outside [0,1]");
            if (std::abs(row_sum - 1.0) > 1e-9)
                report.push_back("CPT of '" + name + "' row " + std::to_string(c) +
                                 " sums to " + std::to_string(row_sum));
        }
    }
    return report;
}

Parameters make_uniform_parameters(const Structure& s) {
    Parameters params;
    params.cpts.resize(s.n());
    for (int i = 0; i < s.n(); ++i) {
        Cpt& cpt = params.cpts[i];
        cpt.arity = s.arity(i);
        cpt.n_configs = s.n_parent_configs(i);
        cpt.p.assign(cpt.n_configs * cpt.arity, 1.0 / cpt.arity);
    }
    return params;
}

double log_likelihood_complete(const Structure& s, const Parameters& params,
                               std::span<const int> record) {
    if (record.size() != s.variables.size())
        throw std::invalid_argument("log_likelihood_complete: record size does not match variable count");
    for (int i = 0; i < s.n(); ++i)
        if (record[i] < 0 || record[i] >= s.arity(i))
            throw std::invalid_argument("log_likelihood_complete: state out of range for variable '" +
                                        s.variables[i].name + "'");
    double total = 0.0;
    for (int i = 0; i < s.n(); ++i) {
        std::size_t config = parent_config_index(s, i, record);
        double theta = params.cpts[i].at(config, record[i]);
        if (theta <= 0.0) return kLogZero;
        total += std::log(theta);
    }
    return total;
}

}  // namespace structem
