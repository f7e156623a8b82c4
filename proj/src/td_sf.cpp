#include "sfrl/td_sf.hpp"

#include <cmath>
#include <stdexcept>

namespace sfrl {

BasisFunction BasisFunction::one_hot_tabular(int num_states, int num_actions) {
    BasisFunction basis;
    basis.num_actions = num_actions;
    basis.xi = Eigen::MatrixXd::Identity(num_states * num_actions, num_states * num_actions);
    return basis;
}

namespace {

int greedy_action_td(const TdState& state, const BasisFunction& xi, int s) {
    int best = 0;
    double best_q = xi.row(s, 0) * state.theta;
    for (int a = 1; a < xi.num_actions; ++a) {
        double q = xi.row(s, a) * state.theta;
        if (q > best_q) {
            best_q = q;
            best = a;
        }
    }
    return best;
}

int greedy_action_sf(const SfState& state, const BasisFunction& xi, int s) {
    int best = 0;
    double best_q = xi.row(s, 0) * state.g.transpose() * state.w;
    for (int a = 1; a < xi.num_actions; ++a) {
        double q = xi.row(s, a) * state.g.transpose() * state.w;
        if (q > best_q) {
            best_q = q;
            best = a;
        }
    }
    return best;
}

}  // namespace

void td_update(TdState& state, const BasisFunction& xi, const OnlineTransition& t,
               const BootstrapMode& b, double lr, double gamma) {
    double bootstrap = 0.0;
    if (!t.next_terminal) {
        if (b.greedy) {
            int a_next = greedy_action_td(state, xi, t.s_next);
            bootstrap = xi.row(t.s_next, a_next) * state.theta;
        } else {
            for (int a = 0; a < xi.num_actions; ++a)
                bootstrap +=
                    b.policy.probs(t.s_next, a) * double(xi.row(t.s_next, a) * state.theta);
        }
    }
    double y = t.r + gamma * bootstrap;
    double q = xi.row(t.s, t.a) * state.theta;
    state.theta += lr * (y - q) * xi.row(t.s, t.a).transpose();
}

void sf_update(SfState& state, const BasisFunction& xi, const OnlineTransition& t,
               const BootstrapMode& b, double lr, double gamma) {
    const int m = xi.m();
    Eigen::VectorXd bootstrap = Eigen::VectorXd::Zero(m);
    if (!t.next_terminal) {
        if (b.greedy) {
            int a_next = greedy_action_sf(state, xi, t.s_next);
            bootstrap = state.g * xi.row(t.s_next, a_next).transpose();
        } else {
            for (int a = 0; a < xi.num_actions; ++a)
                bootstrap += b.policy.probs(t.s_next, a) *
                             (state.g * xi.row(t.s_next, a).transpose());
        }
    }
    Eigen::VectorXd ybar = xi.row(t.s, t.a).transpose() + gamma * bootstrap;
    Eigen::VectorXd psi = state.g * xi.row(t.s, t.a).transpose();
    state.g += lr * (ybar - psi) * xi.row(t.s, t.a);
}

EquivalenceResult prop1_equivalence_run(const BasisFunction& xi, const Eigen::VectorXd& w,
                                        const TdState& theta0, const SfState& g0,
                                        const std::vector<OnlineTransition>& trajectory,
                                        const BootstrapMode& b, double lr, double gamma) {
    if ((theta0.theta - g0.g.transpose() * w).lpNorm<Eigen::Infinity>() > 1e-12)
        throw std::invalid_argument("prop1_equivalence_run: requires theta0 = G0^T w");
    for (const auto& t : trajectory) {
        double r_lin = xi.row(t.s, t.a) * w;
        if (std::abs(r_lin - t.r) > 1e-9)
            throw std::invalid_argument(
                "prop1_equivalence_run: reward factorization r = xi^T w violated");
    }
    TdState td = theta0;
    SfState sf = g0;
    sf.w = w;
    EquivalenceResult result;
    for (const auto& t : trajectory) {
        td_update(td, xi, t, b, lr, gamma);
        sf_update(sf, xi, t, b, lr, gamma);
        double dev = (td.theta - sf.g.transpose() * w).lpNorm<Eigen::Infinity>();
        result.max_deviation = std::max(result.max_deviation, dev);
        result.theta_scale =
            std::max(result.theta_scale, td.theta.lpNorm<Eigen::Infinity>());
    }
    return result;
}

int sample_next_state(const TabularMdp& mdp, int s, int a, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    double acc = 0.0;
    for (int t = 0; t < mdp.num_states; ++t) {
        acc += mdp.transitions[a](s, t);
        if (u <= acc) return t;
    }
    return mdp.num_states - 1;
}

std::vector<int> abstract_q_learning(const EnvTask& env, const DiscreteAbstraction& abstraction,
                                     double lr, double epsilon, double optimistic_init,
                                     int episodes, int timeout, unsigned long long seed) {
    const int na = env.mdp.num_actions;
    if (static_cast<int>(abstraction.cluster_of.size()) != env.mdp.num_states)
        throw std::invalid_argument("abstract_q_learning: abstraction not total on state space");
    Eigen::MatrixXd q =
        Eigen::MatrixXd::Constant(abstraction.num_clusters, na, optimistic_init);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> random_action(0, na - 1);
    std::uniform_int_distribution<int> random_state(0, env.mdp.num_states - 1);

    std::vector<int> lengths;
    lengths.reserve(episodes);
    for (int ep = 0; ep < episodes; ++ep) {
        int s = env.start_state >= 0 ? env.start_state : random_state(rng);
        int steps = 0;
        while (steps < timeout) {
            int z = abstraction.cluster_of[s];
            int a;
            if (unit(rng) < epsilon) {
                a = random_action(rng);
            } else {
                a = 0;
                for (int cand = 1; cand < na; ++cand)
                    if (q(z, cand) > q(z, a)) a = cand;
            }
            int s_next = sample_next_state(env.mdp, s, a, rng);
            double r = env.realized_reward(s, a, s_next);
            bool done = env.is_terminal(s_next);
            double target = r;
            if (!done) {
                int z_next = abstraction.cluster_of[s_next];
                target += env.mdp.gamma * q.row(z_next).maxCoeff();
            }
            q(z, a) += lr * (target - q(z, a));
            ++steps;
            s = s_next;
            if (done) break;
        }
        lengths.push_back(steps);
    }
    return lengths;
}

}  // namespace sfrl
