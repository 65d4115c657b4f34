#ifndef STRUCTEM_INFERENCE_HPP
#define STRUCTEM_INFERENCE_HPP

#include "structem/data.hpp"
#include "structem/model.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace structem {

// Evidence with probability zero under the model; distinct from malformed
// input, which raises std::invalid_argument.
class ZeroEvidenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct InferenceOptions {
    std::size_t max_query_table = std::size_t{1} << 20;
};

// Evidence is a full-width assignment over the structure's variables with
// kMissing for unobserved cells.
struct QueryResult {
    std::vector<int> query;     // ascending variable indices
    std::vector<double> table;  // mixed-radix over query, first variable least significant
};

// P(query | evidence) by variable elimination with a min-fill ordering,
// ties broken by lowest variable index. Normalized to sum 1.
QueryResult posterior_marginal(const Structure& s, const Parameters& params,
                               const std::vector<int>& evidence, const std::vector<int>& query,
                               const InferenceOptions& opts = {});

// log P(evidence); kLogZero when the evidence is impossible.
double evidence_log_probability(const Structure& s, const Parameters& params,
                                const std::vector<int>& evidence);

// P(child, parents | record) as a table indexed by
// parent_config * child_arity + child_state. One-hot when the whole family is
// observed in the record (the record's global consistency is not re-checked
// on that path).
std::vector<double> record_family_posterior(const Structure& s, const Parameters& params,
                                            const std::vector<int>& evidence, const FamilyKey& family,
                                            const InferenceOptions& opts = {});

// Expected counts for one family with per-cell variance and integer count
// bounds, plus the same moments for the aggregate count of each parent
// configuration (its own Poisson-binomial, not a sum of child cells).
struct FamilyStatistics {
    FamilyKey family;
    std::size_t n_configs = 1;
    int child_arity = 0;

    std::vector<double> mean;        // cell-indexed: config * child_arity + state
    std::vector<double> variance;
    std::vector<long long> min_count;
    std::vector<long long> max_count;

    std::vector<double> config_mean;  // parent-config aggregate count moments
    std::vector<double> config_variance;
    std::vector<long long> config_min;
    std::vector<long long> config_max;

    long long n_records = 0;

    // Per-record family posteriors, kept only on request (exact
    // Poisson-binomial scoring); one entry per distinct evidence pattern.
    struct PerRecord {
        std::vector<double> cell_probs;
        std::vector<double> config_probs;
        long long weight = 0;
    };
    std::vector<PerRecord> per_record;

    std::size_t n_cells() const { return n_configs * static_cast<std::size_t>(child_arity); }
};

// Deduplicated full-width evidence patterns for a (structure, dataset) pair.
// Columns are matched to variables by name and states by label.
struct EvidenceSet {
    std::vector<std::vector<int>> patterns;
    std::vector<long long> weights;
    std::vector<std::size_t> first_record;
    long long n_records = 0;
};

EvidenceSet bind_and_dedupe(const Structure& s, const Dataset& d);

struct EssOptions {
    bool keep_per_record = false;
    int n_threads = 1;
    InferenceOptions inference;
};

using EssMap = std::map<FamilyKey, FamilyStatistics>;

// mu_i = sum_j p_ij, sigma2_i = sum_j p_ij (1 - p_ij), m_i counts p_ij = 1
// within 1e-12, M_i counts p_ij > 1e-12. Inference errors are annotated with
// the offending record index.
EssMap accumulate_ess(const Structure& s, const Parameters& params, const Dataset& d,
                      const std::vector<FamilyKey>& families, const EssOptions& opts = {});
EssMap accumulate_ess(const Structure& s, const Parameters& params, const EvidenceSet& ev,
                      const std::vector<FamilyKey>& families, const EssOptions& opts = {});
FamilyStatistics accumulate_family_ess(const Structure& s, const Parameters& params,
                                       const EvidenceSet& ev, const FamilyKey& family,
                                       const EssOptions& opts = {});

// Sum over records of log P(observed cells), deduplicated; kLogZero if any
// record is impossible.
double dataset_log_likelihood(const Structure& s, const Parameters& params, const EvidenceSet& ev);

}  // namespace structem

#endif
