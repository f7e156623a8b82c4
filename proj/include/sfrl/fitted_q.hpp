#ifndef SFRL_FITTED_Q_HPP
#define SFRL_FITTED_Q_HPP

#include <vector>

#include "sfrl/losses.hpp"
#include "sfrl/representation.hpp"

namespace sfrl {

struct FittedQResult {
    StateRepresentation phi;            // updated copy (trainable mode)
    std::vector<Eigen::VectorXd> q;     // per-action weight vectors
    std::vector<LossTraceRow> trace;    // batch loss every 100 steps
    Eigen::MatrixXd q_values() const;   // |S| x |A| table phi * [q_a]
};

// Batch fitted Q-iteration minimizing sum_i (phi_s^T q_a - y_i)^2 with the
// bootstrap target y = r + gamma max_a' phi_s'^T q_a' treated as a constant
// (zeroed when s' is terminal). Adam on mini-batches sampled uniformly with
// replacement. Frozen mode updates only the q vectors; trainable mode also
// updates Phi.
FittedQResult fitted_q_iteration(const TransitionDataset& dataset,
                                 const StateRepresentation& phi, bool trainable_phi,
                                 const TrainConfig& config, int num_actions,
                                 const std::vector<char>& terminal);

}  // namespace sfrl

#endif
