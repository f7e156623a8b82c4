#ifndef SFRL_MDP_HPP
#define SFRL_MDP_HPP

#include <Eigen/Dense>
#include <vector>

namespace sfrl {

// Finite MDP stored as per-action row-stochastic transition matrices and
// per-action expected reward vectors r_a[s] = E[r | s, a].
struct TabularMdp {
    int num_states = 0;
    int num_actions = 0;
    std::vector<Eigen::MatrixXd> transitions;  // one |S|x|S| matrix per action
    std::vector<Eigen::VectorXd> rewards;      // one |S| vector per action
    double gamma = 0.0;
    double reward_bound = 1.0;

    // Throws std::invalid_argument on malformed data (non-stochastic rows,
    // gamma outside [0,1), reward bound violations, shape mismatches).
    void validate() const;
};

struct TabularPolicy {
    Eigen::MatrixXd probs;  // |S|x|A|, rows sum to 1

    static TabularPolicy uniform(int num_states, int num_actions);
    static TabularPolicy deterministic(const std::vector<int>& action_of, int num_actions);
    void validate(const TabularMdp& mdp) const;
};

struct Partition {
    std::vector<int> block_of;  // state -> block index, blocks 0..num_blocks-1
    int num_blocks = 0;
};

struct EvaluationResult {
    Eigen::VectorXd v;  // |S|
    Eigen::MatrixXd q;  // |S|x|A|
};

struct ValueIterationResult {
    Eigen::VectorXd v;
    Eigen::MatrixXd q;
    TabularPolicy greedy;           // deterministic, lowest-index tie-break
    std::vector<int> greedy_action;
};

// Policy-averaged transition matrix P_pi and reward vector r_pi.
Eigen::MatrixXd policy_transition_matrix(const TabularMdp& mdp, const TabularPolicy& pi);
Eigen::VectorXd policy_reward_vector(const TabularMdp& mdp, const TabularPolicy& pi);

// V = (I - gamma P_pi)^{-1} r_pi via direct solve; Q(s,a) = r_a[s] + gamma (P_a V)[s].
EvaluationResult policy_evaluation(const TabularMdp& mdp, const TabularPolicy& pi);

// Iterates the Bellman optimality operator until the sup-norm residual is <= tol.
ValueIterationResult value_iteration(const TabularMdp& mdp, double tol = 1e-10);

// k-th entry is e_s^T P_{a_1} ... P_{a_{k-1}} r_{a_k}: the expected reward
// observed at step k when executing the action sequence from state s.
std::vector<double> expected_reward_rollout(const TabularMdp& mdp, int s,
                                            const std::vector<int>& actions);

// Successor representation Psi_pi = (I - gamma P_pi)^{-1}.
Eigen::MatrixXd compute_sr(const TabularMdp& mdp, const TabularPolicy& pi);

// Action-conditioned SR: Psi_a = I + gamma P_a Psi_pi.
std::vector<Eigen::MatrixXd> compute_sr_action(const TabularMdp& mdp, const TabularPolicy& pi);

// Successor features psi(s,a) = Phi^T Psi_a^T e_s, returned as one |S|xn
// matrix per action whose row s is psi(s,a).
std::vector<Eigen::MatrixXd> compute_sf(const TabularMdp& mdp, const Eigen::MatrixXd& phi,
                                        const TabularPolicy& pi);

// Coarsest partition whose blocks agree on per-action expected rewards
// (within reward_tol) and per-action block-transition probabilities (within
// prob_tol). Blocks are numbered by lowest contained state index.
Partition bisimulation_partition(const TabularMdp& mdp, double reward_tol = 1e-6,
                                 double prob_tol = 1e-6);

// Quotient MDP built from the lowest-index representative of each block.
// Exact when the partition is a bisimulation.
TabularMdp quotient_mdp(const TabularMdp& mdp, const Partition& partition);

// One-hot |S| x num_blocks representation of a partition.
Eigen::MatrixXd one_hot_representation(const Partition& partition);

}  // namespace sfrl

#endif
