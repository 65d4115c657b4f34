#include "structem/eval.hpp"
#include "structem/common.hpp"
#include "structem/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace structem {

namespace {

struct ObservedAlignment {
    std::vector<int> true_vars;                  // observed indices in the true net
    std::vector<int> learned_vars;               // matching indices in the learned net
    std::vector<std::vector<int>> state_map;     // true state -> learned state
};

ObservedAlignment align_observed(const Network& truth, const Network& learned) {
    ObservedAlignment a;
    std::size_t learned_observed = 0;
    for (const Variable& v : learned.structure.variables)
        if (!v.hidden) ++learned_observed;
    for (int i = 0; i < truth.structure.n(); ++i) {
        const Variable& v = truth.structure.variables[i];
        if (v.hidden) continue;
        int li = learned.structure.find_variable(v.name);
        if (li < 0 || learned.structure.variables[li].hidden)
            throw std::invalid_argument("networks disagree on observed variable '" + v.name + "'");
        const Variable& lv = learned.structure.variables[li];
        std::vector<int> map(v.states.size());
        for (std::size_t s = 0; s < v.states.size(); ++s) {
            auto it = std::find(lv.states.begin(), lv.states.end(), v.states[s]);
            if (it == lv.states.end())
                throw std::invalid_argument("networks disagree on states of variable '" + v.name + "'");
            map[s] = static_cast<int>(it - lv.states.begin());
        }
        a.true_vars.push_back(i);
        a.learned_vars.push_back(li);
        a.state_map.push_back(std::move(map));
    }
    if (a.true_vars.size() != learned_observed)
        throw std::invalid_argument("networks disagree on the observed variable set");
    return a;
}

}  // namespace

double kl_divergence_exact(const Network& truth, const Network& learned, std::size_t max_states) {
    ObservedAlignment a = align_observed(truth, learned);
    std::size_t n_states = 1;
    std::vector<int> radices;
    for (std::size_t k = 0; k < a.true_vars.size(); ++k) {
        radices.push_back(truth.structure.arity(a.true_vars[k]));
        n_states *= static_cast<std::size_t>(radices.back());
        if (n_states > max_states)
            throw std::invalid_argument("kl_divergence_exact: joint observed space exceeds the limit");
    }

    std::vector<int> ev_true(truth.structure.n(), kMissing);
    std::vector<int> ev_learned(learned.structure.n(), kMissing);
    double kl = 0.0;
    MixedRadixCounter counter(radices);
    do {
        const auto& assign = counter.values();
        for (std::size_t k = 0; k < a.true_vars.size(); ++k) {
            ev_true[a.true_vars[k]] = assign[k];
            ev_learned[a.learned_vars[k]] = a.state_map[k][assign[k]];
        }
        double log_p = evidence_log_probability(truth.structure, truth.parameters, ev_true);
        if (log_p == kLogZero) continue;
        double log_q = evidence_log_probability(learned.structure, learned.parameters, ev_learned);
        if (log_q == kLogZero) return std::numeric_limits<double>::infinity();
        kl += std::exp(log_p) * (log_p - log_q);
    } while (counter.next());
    return std::max(0.0, kl);  // enumeration noise can leave a tiny negative residue
}

namespace {

double mean_log_ratio(const Network& truth, const Network& learned, const Dataset& sample) {
    EvidenceSet ev_p = bind_and_dedupe(truth.structure, sample);
    EvidenceSet ev_q = bind_and_dedupe(learned.structure, sample);
    // bind_and_dedupe preserves first-occurrence pattern order for both
    double total = 0.0;
    for (std::size_t k = 0; k < ev_p.patterns.size(); ++k) {
        double log_p = evidence_log_probability(truth.structure, truth.parameters, ev_p.patterns[k]);
        double log_q =
            evidence_log_probability(learned.structure, learned.parameters, ev_q.patterns[k]);
        if (log_q == kLogZero && log_p != kLogZero) return std::numeric_limits<double>::infinity();
        total += static_cast<double>(ev_p.weights[k]) * (log_p - log_q);
    }
    return total / static_cast<double>(sample.n_records());
}

}  // namespace

double kl_divergence_mc(const Network& truth, const Network& learned, int n_samples,
                        std::uint64_t seed) {
    align_observed(truth, learned);  // validation only
    if (n_samples < 1) throw std::invalid_argument("kl_divergence_mc: need at least one sample");
    Dataset sample = ancestral_sample(truth.structure, truth.parameters, n_samples, seed);
    return mean_log_ratio(truth, learned, sample);
}

double log_loss(const Network& net, const Dataset& test, std::size_t* first_infinite_record) {
    if (test.records.empty()) return 0.0;
    EvidenceSet ev = bind_and_dedupe(net.structure, test);
    double total = 0.0;
    bool infinite = false;
    std::size_t worst_record = 0;
    for (std::size_t k = 0; k < ev.patterns.size(); ++k) {
        double lp = evidence_log_probability(net.structure, net.parameters, ev.patterns[k]);
        if (lp == kLogZero) {
            if (!infinite || ev.first_record[k] < worst_record) worst_record = ev.first_record[k];
            infinite = true;
            continue;
        }
        total -= static_cast<double>(ev.weights[k]) * lp;
    }
    if (infinite) {
        if (first_infinite_record) *first_infinite_record = worst_record;
        return std::numeric_limits<double>::infinity();
    }
    return total / static_cast<double>(test.n_records());
}

}  // namespace structem
