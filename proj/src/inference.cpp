#include "structem/inference.hpp"
#include "structem/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

namespace structem {

namespace {

struct Factor {
    std::vector<int> vars;  // ascending
    std::vector<double> values;

    bool scalar() const { return vars.empty(); }
};

Factor make_cpt_factor(const Structure& s, const Parameters& params, int child) {
    Factor f;
    f.vars = s.parents[child];
    f.vars.push_back(child);
    std::sort(f.vars.begin(), f.vars.end());
    std::vector<int> radices;
    radices.reserve(f.vars.size());
    for (int v : f.vars) radices.push_back(s.arity(v));
    MixedRadixCounter counter(radices);
    f.values.resize(counter.size());
    std::vector<int> full(s.n(), 0);
    std::size_t idx = 0;
    do {
        const auto& assign = counter.values();
        for (std::size_t k = 0; k < f.vars.size(); ++k) full[f.vars[k]] = assign[k];
        std::size_t config = parent_config_index(s, child, full);
        f.values[idx++] = params.cpts[child].at(config, full[child]);
    } while (counter.next());
    return f;
}

Factor restrict_factor(const Structure& s, const Factor& f, const std::vector<int>& evidence) {
    bool any = false;
    for (int v : f.vars)
        if (evidence[v] != kMissing) any = true;
    if (!any) return f;

    Factor out;
    std::size_t base = 0;
    std::vector<std::size_t> keep_strides;
    std::size_t stride = 1;
    for (int v : f.vars) {
        if (evidence[v] != kMissing) {
            base += stride * static_cast<std::size_t>(evidence[v]);
        } else {
            out.vars.push_back(v);
            keep_strides.push_back(stride);
        }
        stride *= static_cast<std::size_t>(s.arity(v));
    }
    std::vector<int> radices;
    for (int v : out.vars) radices.push_back(s.arity(v));
    MixedRadixCounter counter(radices);
    out.values.resize(counter.size());
    std::size_t idx = 0;
    do {
        const auto& assign = counter.values();
        std::size_t src = base;
        for (std::size_t k = 0; k < out.vars.size(); ++k)
            src += keep_strides[k] * static_cast<std::size_t>(assign[k]);
        out.values[idx++] = f.values[src];
    } while (counter.next());
    return out;
}

Factor multiply(const Structure& s, const Factor& a, const Factor& b) {
    Factor out;
    out.vars.resize(a.vars.size() + b.vars.size());
    auto end = std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
                              out.vars.begin());
    out.vars.resize(end - out.vars.begin());

    std::vector<int> radices;
    radices.reserve(out.vars.size());
    std::vector<std::size_t> stride_a(out.vars.size(), 0), stride_b(out.vars.size(), 0);
    {
        std::size_t sa = 1;
        for (std::size_t i = 0, k = 0; i < a.vars.size(); ++i) {
            while (out.vars[k] != a.vars[i]) ++k;
            stride_a[k] = sa;
            sa *= static_cast<std::size_t>(s.arity(a.vars[i]));
        }
        std::size_t sb = 1;
        for (std::size_t i = 0, k = 0; i < b.vars.size(); ++i) {
            while (out.vars[k] != b.vars[i]) ++k;
            stride_b[k] = sb;
            sb *= static_cast<std::size_t>(s.arity(b.vars[i]));
        }
    }
    for (int v : out.vars) radices.push_back(s.arity(v));
    MixedRadixCounter counter(radices);
    out.values.resize(counter.size());
    std::size_t idx = 0;
    do {
        const auto& assign = counter.values();
        std::size_t ia = 0, ib = 0;
        for (std::size_t k = 0; k < out.vars.size(); ++k) {
            ia += stride_a[k] * static_cast<std::size_t>(assign[k]);
            ib += stride_b[k] * static_cast<std::size_t>(assign[k]);
        }
        out.values[idx++] = a.values[ia] * b.values[ib];
    } while (counter.next());
    return out;
}

Factor sum_out(const Structure& s, const Factor& f, int var) {
    Factor out;
    std::size_t var_stride = 1;
    int var_arity = 0;
    std::vector<std::size_t> keep_strides;
    std::size_t stride = 1;
    for (int v : f.vars) {
        if (v == var) {
            var_stride = stride;
            var_arity = s.arity(v);
        } else {
            out.vars.push_back(v);
            keep_strides.push_back(stride);
        }
        stride *= static_cast<std::size_t>(s.arity(v));
    }
    std::vector<int> radices;
    for (int v : out.vars) radices.push_back(s.arity(v));
    MixedRadixCounter counter(radices);
    out.values.resize(counter.size());
    std::size_t idx = 0;
    do {
        const auto& assign = counter.values();
        std::size_t base = 0;
        for (std::size_t k = 0; k < out.vars.size(); ++k)
            base += keep_strides[k] * static_cast<std::size_t>(assign[k]);
        double acc = 0.0;
        for (int x = 0; x < var_arity; ++x) acc += f.values[base + var_stride * x];
        out.values[idx++] = acc;
    } while (counter.next());
    return out;
}

// Min-fill ordering over the interaction graph of the given scopes; ties go
// to the lowest variable index.
std::vector<int> min_fill_order(int n_vars, const std::vector<std::vector<int>>& scopes,
                                const std::vector<char>& eliminate) {
    std::vector<std::set<int>> adj(n_vars);
    for (const auto& scope : scopes)
        for (std::size_t i = 0; i < scope.size(); ++i)
            for (std::size_t j = i + 1; j < scope.size(); ++j) {
                adj[scope[i]].insert(scope[j]);
                adj[scope[j]].insert(scope[i]);
            }
    std::vector<char> remaining = eliminate;
    std::vector<int> order;
    for (;;) {
        int best = -1;
        long long best_fill = -1;
        for (int v = 0; v < n_vars; ++v) {
            if (!remaining[v]) continue;
            long long fill = 0;
            for (auto it = adj[v].begin(); it != adj[v].end(); ++it)
                for (auto jt = std::next(it); jt != adj[v].end(); ++jt)
                    if (!adj[*it].count(*jt)) ++fill;
            if (best < 0 || fill < best_fill) {
                best = v;
                best_fill = fill;
            }
        }
        if (best < 0) break;
        order.push_back(best);
        remaining[best] = 0;
        std::vector<int> nbrs(adj[best].begin(), adj[best].end());
        for (std::size_t i = 0; i < nbrs.size(); ++i)
            for (std::size_t j = i + 1; j < nbrs.size(); ++j) {
                adj[nbrs[i]].insert(nbrs[j]);
                adj[nbrs[j]].insert(nbrs[i]);
            }
        for (int u : nbrs) adj[u].erase(best);
        adj[best].clear();
    }
    return order;
}

// Eliminates all non-query unobserved variables; returns the unnormalized
// joint over the query (ascending order) and its total mass P(evidence).
std::pair<Factor, double> eliminate(const Structure& s, const Parameters& params,
                                    const std::vector<int>& evidence, const std::vector<int>& query) {
    std::vector<char> is_query(s.n(), 0);
    for (int q : query) is_query[q] = 1;

    std::vector<Factor> factors;
    factors.reserve(s.n());
    double scalar = 1.0;
    for (int i = 0; i < s.n(); ++i) {
        Factor f = restrict_factor(s, make_cpt_factor(s, params, i), evidence);
        if (f.scalar())
            scalar *= f.values[0];
        else
            factors.push_back(std::move(f));
    }

    std::vector<char> eliminate_var(s.n(), 0);
    std::vector<std::vector<int>> scopes;
    for (const Factor& f : factors) {
        scopes.push_back(f.vars);
        for (int v : f.vars)
            if (!is_query[v]) eliminate_var[v] = 1;
    }
    std::vector<int> order = min_fill_order(s.n(), scopes, eliminate_var);

    for (int v : order) {
        Factor combined;
        bool have = false;
        std::vector<Factor> rest;
        rest.reserve(factors.size());
        for (Factor& f : factors) {
            if (std::binary_search(f.vars.begin(), f.vars.end(), v)) {
                combined = have ? multiply(s, combined, f) : std::move(f);
                have = true;
            } else {
                rest.push_back(std::move(f));
            }
        }
        factors = std::move(rest);
        if (!have) continue;
        Factor summed = sum_out(s, combined, v);
        if (summed.scalar())
            scalar *= summed.values[0];
        else
            factors.push_back(std::move(summed));
    }

    Factor result;
    result.values = {1.0};
    for (const Factor& f : factors) result = multiply(s, result, f);
    for (double& v : result.values) v *= scalar;
    double mass = std::accumulate(result.values.begin(), result.values.end(), 0.0);
    return {std::move(result), mass};
}

void check_evidence(const Structure& s, const std::vector<int>& evidence) {
    if (static_cast<int>(evidence.size()) != s.n())
        throw std::invalid_argument("evidence width does not match variable count");
    for (int i = 0; i < s.n(); ++i)
        if (evidence[i] != kMissing && (evidence[i] < 0 || evidence[i] >= s.arity(i)))
            throw std::invalid_argument("evidence state out of range for variable '" +
                                        s.variables[i].name + "'");
}

}  // namespace

QueryResult posterior_marginal(const Structure& s, const Parameters& params,
                               const std::vector<int>& evidence, const std::vector<int>& query,
                               const InferenceOptions& opts) {
    check_evidence(s, evidence);
    std::vector<int> q = query;
    std::sort(q.begin(), q.end());
    if (std::adjacent_find(q.begin(), q.end()) != q.end())
        throw std::invalid_argument("duplicate query variable");
    std::size_t table_size = 1;
    for (int v : q) {
        if (v < 0 || v >= s.n()) throw std::invalid_argument("query variable index out of range");
        if (evidence[v] != kMissing)
            throw std::invalid_argument("query variable '" + s.variables[v].name +
                                        "' appears in the evidence");
        table_size *= static_cast<std::size_t>(s.arity(v));
        if (table_size > opts.max_query_table)
            throw std::invalid_argument("query table size exceeds the configured limit");
    }

    auto [factor, mass] = eliminate(s, params, evidence, q);
    if (!(mass > 0.0)) throw ZeroEvidenceError("evidence has probability zero under the model");
    QueryResult out;
    out.query = std::move(q);
    out.table.assign(table_size, 0.0);
    // every query variable appears in its own CPT factor, so the result scope
    // is exactly the query; the expansion branch handles any residual scope
    if (factor.vars == out.query && factor.values.size() == table_size) {
        out.table = factor.values;
    } else {
        Factor ones;
        ones.vars = out.query;
        ones.values.assign(table_size, 1.0);
        Factor full = multiply(s, ones, factor);
        out.table = full.values;
    }
    for (double& v : out.table) v /= mass;
    return out;
}

double evidence_log_probability(const Structure& s, const Parameters& params,
                                const std::vector<int>& evidence) {
    check_evidence(s, evidence);
    auto [factor, mass] = eliminate(s, params, evidence, {});
    (void)factor;
    if (!(mass > 0.0)) return kLogZero;
    return std::log(mass);
}

std::vector<double> record_family_posterior(const Structure& s, const Parameters& params,
                                            const std::vector<int>& evidence, const FamilyKey& family,
                                            const InferenceOptions& opts) {
    check_evidence(s, evidence);
    if (family.child < 0 || family.child >= s.n())
        throw std::invalid_argument("family child index out of range");
    for (int p : family.parents)
        if (p < 0 || p >= s.n() || p == family.child)
            throw std::invalid_argument("family parent index out of range");

    const int arity = s.arity(family.child);
    std::size_t n_configs = 1;
    for (int p : family.parents) n_configs *= static_cast<std::size_t>(s.arity(p));
    std::vector<double> table(n_configs * arity, 0.0);

    std::vector<int> unobserved;
    for (int p : family.parents)
        if (evidence[p] == kMissing) unobserved.push_back(p);
    if (evidence[family.child] == kMissing) unobserved.push_back(family.child);
    std::sort(unobserved.begin(), unobserved.end());

    auto cell_index = [&](std::span<const int> full) {
        std::size_t config = 0, stride = 1;
        for (int p : family.parents) {
            config += stride * static_cast<std::size_t>(full[p]);
            stride *= static_cast<std::size_t>(s.arity(p));
        }
        return config * arity + static_cast<std::size_t>(full[family.child]);
    };

    if (unobserved.empty()) {
        table[cell_index(evidence)] = 1.0;
        return table;
    }

    QueryResult q = posterior_marginal(s, params, evidence, unobserved, opts);
    std::vector<int> full(evidence);
    std::vector<int> radices;
    for (int v : q.query) radices.push_back(s.arity(v));
    MixedRadixCounter counter(radices);
    std::size_t idx = 0;
    do {
        const auto& assign = counter.values();
        for (std::size_t k = 0; k < q.query.size(); ++k) full[q.query[k]] = assign[k];
        table[cell_index(full)] = std::clamp(q.table[idx], 0.0, 1.0);
        ++idx;
    } while (counter.next());
    return table;
}

EvidenceSet bind_and_dedupe(const Structure& s, const Dataset& d) {
    std::vector<int> var_of_column(d.variables.size(), -1);
    std::vector<std::vector<int>> state_map(d.variables.size());
    for (std::size_t c = 0; c < d.variables.size(); ++c) {
        int v = s.find_variable(d.variables[c].name);
        if (v < 0)
            throw std::invalid_argument("dataset variable '" + d.variables[c].name +
                                        "' is not in the structure");
        if (s.variables[v].hidden)
            throw std::invalid_argument("dataset variable '" + d.variables[c].name +
                                        "' is hidden in the structure");
        var_of_column[c] = v;
        state_map[c].resize(d.variables[c].states.size());
        for (std::size_t k = 0; k < d.variables[c].states.size(); ++k) {
            const std::string& label = d.variables[c].states[k];
            auto it = std::find(s.variables[v].states.begin(), s.variables[v].states.end(), label);
            if (it == s.variables[v].states.end())
                throw std::invalid_argument("state '" + label + "' of dataset variable '" +
                                            d.variables[c].name + "' is not in the structure");
            state_map[c][k] = static_cast<int>(it - s.variables[v].states.begin());
        }
    }

    EvidenceSet ev;
    ev.n_records = static_cast<long long>(d.records.size());
    struct VecHash {
        std::size_t operator()(const std::vector<int>& v) const {
            std::uint64_t h = 0x9e3779b97f4a7c15ull;
            for (int x : v) h = hash_combine(h, static_cast<std::uint64_t>(x) + 2);
            return static_cast<std::size_t>(h);
        }
    };
    std::unordered_map<std::vector<int>, std::size_t, VecHash> seen;
    for (std::size_t r = 0; r < d.records.size(); ++r) {
        std::vector<int> pattern(s.n(), kMissing);
        const auto& row = d.records[r];
        if (row.size() != d.variables.size())
            throw std::invalid_argument("dataset record " + std::to_string(r) + " has wrong width");
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c] == kMissing) continue;
            if (row[c] < 0 || row[c] >= static_cast<int>(state_map[c].size()))
                throw std::invalid_argument("dataset record " + std::to_string(r) +
                                            " has out-of-range state in column '" +
                                            d.variables[c].name + "'");
            pattern[var_of_column[c]] = state_map[c][row[c]];
        }
        auto it = seen.find(pattern);
        if (it == seen.end()) {
            seen.emplace(pattern, ev.patterns.size());
            ev.patterns.push_back(std::move(pattern));
            ev.weights.push_back(1);
            ev.first_record.push_back(r);
        } else {
            ++ev.weights[it->second];
        }
    }
    return ev;
}

namespace {

void init_stats(const Structure& s, const FamilyKey& family, FamilyStatistics& st) {
    st.family = family;
    st.child_arity = s.arity(family.child);
    st.n_configs = 1;
    for (int p : family.parents) st.n_configs *= static_cast<std::size_t>(s.arity(p));
    std::size_t cells = st.n_configs * static_cast<std::size_t>(st.child_arity);
    st.mean.assign(cells, 0.0);
    st.variance.assign(cells, 0.0);
    st.min_count.assign(cells, 0);
    st.max_count.assign(cells, 0);
    st.config_mean.assign(st.n_configs, 0.0);
    st.config_variance.assign(st.n_configs, 0.0);
    st.config_min.assign(st.n_configs, 0);
    st.config_max.assign(st.n_configs, 0);
    st.n_records = 0;
}

constexpr double kZeroTol = 1e-12;

void accumulate_pattern(const Structure& s, const Parameters& params,
                        const std::vector<int>& pattern, long long weight,
                        const FamilyKey& family, FamilyStatistics& st, bool keep_per_record,
                        const InferenceOptions& iopts) {
    std::vector<double> probs = record_family_posterior(s, params, pattern, family, iopts);
    std::vector<double> config_probs(st.n_configs, 0.0);
    for (std::size_t c = 0; c < st.n_configs; ++c) {
        double q = 0.0;
        for (int x = 0; x < st.child_arity; ++x) {
            double p = std::clamp(probs[c * st.child_arity + x], 0.0, 1.0);
            std::size_t cell = c * st.child_arity + x;
            st.mean[cell] += weight * p;
            st.variance[cell] += weight * p * (1.0 - p);
            if (p >= 1.0 - kZeroTol) st.min_count[cell] += weight;
            if (p > kZeroTol) st.max_count[cell] += weight;
            q += p;
        }
        q = std::clamp(q, 0.0, 1.0);
        config_probs[c] = q;
        st.config_mean[c] += weight * q;
        st.config_variance[c] += weight * q * (1.0 - q);
        if (q >= 1.0 - kZeroTol) st.config_min[c] += weight;
        if (q > kZeroTol) st.config_max[c] += weight;
    }
    st.n_records += weight;
    if (keep_per_record)
        st.per_record.push_back(FamilyStatistics::PerRecord{std::move(probs), std::move(config_probs), weight});
}

void merge_stats(FamilyStatistics& into, FamilyStatistics& from) {
    for (std::size_t i = 0; i < into.mean.size(); ++i) {
        into.mean[i] += from.mean[i];
        into.variance[i] += from.variance[i];
        into.min_count[i] += from.min_count[i];
        into.max_count[i] += from.max_count[i];
    }
    for (std::size_t c = 0; c < into.config_mean.size(); ++c) {
        into.config_mean[c] += from.config_mean[c];
        into.config_variance[c] += from.config_variance[c];
        into.config_min[c] += from.config_min[c];
        into.config_max[c] += from.config_max[c];
    }
    into.n_records += from.n_records;
    for (auto& pr : from.per_record) into.per_record.push_back(std::move(pr));
}

}  // namespace

EssMap accumulate_ess(const Structure& s, const Parameters& params, const EvidenceSet& ev,
                      const std::vector<FamilyKey>& families, const EssOptions& opts) {
    EssMap out;
    for (const FamilyKey& f : families) {
        FamilyStatistics st;
        init_stats(s, f, st);
        out.emplace(f, std::move(st));
    }

    const std::size_t n_patterns = ev.patterns.size();
    int n_threads = std::max(1, opts.n_threads);
    if (static_cast<std::size_t>(n_threads) > n_patterns)
        n_threads = static_cast<int>(std::max<std::size_t>(1, n_patterns));

    auto run_chunk = [&](std::size_t lo, std::size_t hi, EssMap& sink) {
        for (std::size_t k = lo; k < hi; ++k) {
            for (auto& [family, st] : sink) {
                try {
                    accumulate_pattern(s, params, ev.patterns[k], ev.weights[k], family, st,
                                       opts.keep_per_record, opts.inference);
                } catch (const ZeroEvidenceError& e) {
                    throw ZeroEvidenceError(std::string(e.what()) + " (record " +
                                            std::to_string(ev.first_record[k]) + ")");
                }
            }
        }
    };

    if (n_threads == 1) {
        run_chunk(0, n_patterns, out);
    } else {
        // fixed contiguous chunks, reduced in chunk order: deterministic for a
        // given thread count
        std::vector<EssMap> partial(n_threads);
        std::vector<std::exception_ptr> errors(n_threads);
        std::vector<std::thread> workers;
        std::size_t chunk = (n_patterns + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            for (const FamilyKey& f : families) {
                FamilyStatistics st;
                init_stats(s, f, st);
                partial[t].emplace(f, std::move(st));
            }
            std::size_t lo = std::min(n_patterns, t * chunk);
            std::size_t hi = std::min(n_patterns, lo + chunk);
            workers.emplace_back([&, t, lo, hi]() {
                try {
                    run_chunk(lo, hi, partial[t]);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& w : workers) w.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        for (int t = 0; t < n_threads; ++t)
            for (auto& [family, st] : partial[t]) merge_stats(out.at(family), st);
    }

    // float-noise cleanup so the documented bounds hold exactly
    for (auto& [family, st] : out) {
        (void)family;
        for (std::size_t i = 0; i < st.mean.size(); ++i) {
            st.mean[i] = std::clamp(st.mean[i], static_cast<double>(st.min_count[i]),
                                    static_cast<double>(st.max_count[i]));
            st.variance[i] = std::max(0.0, st.variance[i]);
            if (st.min_count[i] == st.max_count[i]) st.variance[i] = 0.0;
        }
        for (std::size_t c = 0; c < st.config_mean.size(); ++c) {
            st.config_mean[c] = std::clamp(st.config_mean[c], static_cast<double>(st.config_min[c]),
                                           static_cast<double>(st.config_max[c]));
            st.config_variance[c] = std::max(0.0, st.config_variance[c]);
            if (st.config_min[c] == st.config_max[c]) st.config_variance[c] = 0.0;
        }
    }
    return out;
}

EssMap accumulate_ess(const Structure& s, const Parameters& params, const Dataset& d,
                      const std::vector<FamilyKey>& families, const EssOptions& opts) {
    return accumulate_ess(s, params, bind_and_dedupe(s, d), families, opts);
}

FamilyStatistics accumulate_family_ess(const Structure& s, const Parameters& params,
                                       const EvidenceSet& ev, const FamilyKey& family,
                                       const EssOptions& opts) {
    EssMap m = accumulate_ess(s, params, ev, std::vector<FamilyKey>{family}, opts);
    return std::move(m.begin()->second);
}

double dataset_log_likelihood(const Structure& s, const Parameters& params, const EvidenceSet& ev) {
    double total = 0.0;
    for (std::size_t k = 0; k < ev.patterns.size(); ++k) {
        double lp = evidence_log_probability(s, params, ev.patterns[k]);
        if (lp == kLogZero) return kLogZero;
        total += ev.weights[k] * lp;
    }
    return total;
}

}  // namespace structem
