#ifndef STRUCTEM_EVAL_HPP
#define STRUCTEM_EVAL_HPP

#include "structem/data.hpp"
#include "structem/model.hpp"

#include <cstdint>
#include <cstddef>

namespace structem {

// KL(true || learned) over the shared observed variable set, each network
// marginalizing its own hidden variables. Exact mode enumerates the joint
// observed space and refuses spaces larger than max_states; a zero learned
// probability where the true probability is positive yields +infinity
// (failures throw instead).
double kl_divergence_exact(const Network& truth, const Network& learned,
                           std::size_t max_states = std::size_t{1} << 20);

// Monte-Carlo estimate: mean of log P - log Q over n ancestral samples from
// the true network.
double kl_divergence_mc(const Network& truth, const Network& learned, int n_samples,
                        std::uint64_t seed);

// Mean over records of -log P(observed cells), marginalizing hidden variables
// and missing test cells. A record with model probability zero yields
// +infinity; its index is stored in *first_infinite_record when given.
double log_loss(const Network& net, const Dataset& test,
                std::size_t* first_infinite_record = nullptr);

}  // namespace structem

#endif
