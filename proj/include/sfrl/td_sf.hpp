#ifndef SFRL_TD_SF_HPP
#define SFRL_TD_SF_HPP

#include <optional>
#include <random>
#include <vector>

#include "sfrl/clustering.hpp"
#include "sfrl/mdp.hpp"
#include "sfrl/representation.hpp"

namespace sfrl {

// State-action features: row (s*|A| + a) is xi_{s,a}.
struct BasisFunction {
    Eigen::MatrixXd xi;  // (|S|*|A|) x m
    int num_actions = 0;
    int m() const { return static_cast<int>(xi.cols()); }
    Eigen::RowVectorXd row(int s, int a) const { return xi.row(s * num_actions + a); }

    static BasisFunction one_hot_tabular(int num_states, int num_actions);
};

struct TdState {
    Eigen::VectorXd theta;  // m
};

struct SfState {
    Eigen::MatrixXd g;  // m x m
    Eigen::VectorXd w;  // reward weights with r(s,a) = xi_{s,a}^T w
};

// Bootstrap weighting: greedy backs up max_a' (lowest-index ties); policy mode
// takes the pi-expectation over next actions.
struct BootstrapMode {
    bool greedy = true;
    TabularPolicy policy;  // used when greedy == false

    static BootstrapMode make_greedy() { return BootstrapMode{}; }
    static BootstrapMode fixed(const TabularPolicy& pi) { return BootstrapMode{false, pi}; }
};

struct OnlineTransition {
    int s = 0;
    int a = 0;
    double r = 0.0;
    int s_next = 0;
    bool next_terminal = false;  // zero bootstrap when set
};

// theta <- theta + lr (y - Q(s,a;theta)) xi_{s,a} with
// y = r + gamma * (greedy or pi-weighted) Q(s',.;theta).
void td_update(TdState& state, const BasisFunction& xi, const OnlineTransition& t,
               const BootstrapMode& b, double lr, double gamma);

// G <- G + lr (ybar - G xi_{s,a}) xi_{s,a}^T with
// ybar = xi_{s,a} + gamma sum_a' b(s',a') G xi_{s',a'}; greedy b is derived
// from Q = w^T G xi.
void sf_update(SfState& state, const BasisFunction& xi, const OnlineTransition& t,
               const BootstrapMode& b, double lr, double gamma);

// Runs both iterates over the identical transition stream and returns
// max_t ||theta_t - G_t w||_inf together with the parameter scale.
struct EquivalenceResult {
    double max_deviation = 0.0;
    double theta_scale = 0.0;  // max_t ||theta_t||_inf
};
EquivalenceResult prop1_equivalence_run(const BasisFunction& xi, const Eigen::VectorXd& w,
                                        const TdState& theta0, const SfState& g0,
                                        const std::vector<OnlineTransition>& trajectory,
                                        const BootstrapMode& b, double lr, double gamma);

// Episodic simulator description shared by Q-learning and dataset collection.
struct EnvTask {
    TabularMdp mdp;
    int start_state = -1;          // negative: uniform-random starts
    std::vector<char> terminal;    // one flag per state; empty means none
    // Realized reward on entering state s'; all tasks here reward entry
    // events, so r_a[s] = P_a(s,:) . enter_reward. Empty when unused.
    Eigen::VectorXd enter_reward;
    int grid_width = 0;
    int grid_height = 0;

    bool is_terminal(int s) const {
        return !terminal.empty() && terminal[static_cast<std::size_t>(s)];
    }
    double realized_reward(int s, int a, int s_next) const {
        return enter_reward.size() > 0 ? enter_reward[s_next] : mdp.rewards[a][s];
    }
};

// Tabular Q-learning over latent indices with epsilon-greedy behavior and
// optimistic initialization. Returns per-episode step counts (capped at
// timeout).
std::vector<int> abstract_q_learning(const EnvTask& env, const DiscreteAbstraction& abstraction,
                                     double lr, double epsilon, double optimistic_init,
                                     int episodes, int timeout, unsigned long long seed);

// Samples a next state from P_a(s, .).
int sample_next_state(const TabularMdp& mdp, int s, int a, std::mt19937_64& rng);

}  // namespace sfrl

#endif
