#include "sfrl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sfrl {

void TabularMdp::validate() const {
    if (num_states <= 0 || num_actions <= 0)
        throw std::invalid_argument("mdp: num_states and num_actions must be positive");
    if (gamma < 0.0 || gamma >= 1.0)
        throw std::invalid_argument("mdp: gamma must lie in [0,1)");
    if (static_cast<int>(transitions.size()) != num_actions ||
        static_cast<int>(rewards.size()) != num_actions)
        throw std::invalid_argument("mdp: need one transition matrix and reward vector per action");
    for (int a = 0; a < num_actions; ++a) {
        const auto& p = transitions[a];
        if (p.rows() != num_states || p.cols() != num_states)
            throw std::invalid_argument("mdp: transition matrix shape mismatch");
        if (rewards[a].size() != num_states)
            throw std::invalid_argument("mdp: reward vector length mismatch");
        for (int s = 0; s < num_states; ++s) {
            if (p.row(s).minCoeff() < 0.0)
                throw std::invalid_argument("mdp: negative transition probability");
            if (std::abs(p.row(s).sum() - 1.0) > 1e-9)
                throw std::invalid_argument("mdp: transition row does not sum to 1");
            if (std::abs(rewards[a][s]) > reward_bound + 1e-12)
                throw std::invalid_argument("mdp: reward exceeds declared bound");
        }
    }
}

TabularPolicy TabularPolicy::uniform(int num_states, int num_actions) {
    TabularPolicy pi;
    pi.probs = Eigen::MatrixXd::Constant(num_states, num_actions, 1.0 / num_actions);
    return pi;
}

TabularPolicy TabularPolicy::deterministic(const std::vector<int>& action_of, int num_actions) {
    TabularPolicy pi;
    pi.probs = Eigen::MatrixXd::Zero(static_cast<int>(action_of.size()), num_actions);
    for (int s = 0; s < static_cast<int>(action_of.size()); ++s)
        pi.probs(s, action_of[s]) = 1.0;
    return pi;
}

void TabularPolicy::validate(const TabularMdp& mdp) const {
    if (probs.rows() != mdp.num_states || probs.cols() != mdp.num_actions)
        throw std::invalid_argument("policy: shape mismatch");
    for (int s = 0; s < mdp.num_states; ++s) {
        if (probs.row(s).minCoeff() < 0.0 || std::abs(probs.row(s).sum() - 1.0) > 1e-9)
            throw std::invalid_argument("policy: rows must be distributions");
    }
}

Eigen::MatrixXd policy_transition_matrix(const TabularMdp& mdp, const TabularPolicy& pi) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_states);
    for (int a = 0; a < mdp.num_actions; ++a)
        p += pi.probs.col(a).asDiagonal() * mdp.transitions[a];
    return p;
}

Eigen::VectorXd policy_reward_vector(const TabularMdp& mdp, const TabularPolicy& pi) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(mdp.num_states);
    for (int a = 0; a < mdp.num_actions; ++a)
        r += pi.probs.col(a).cwiseProduct(mdp.rewards[a]);
    return r;
}

EvaluationResult policy_evaluation(const TabularMdp& mdp, const TabularPolicy& pi) {
    mdp.validate();
    pi.validate(mdp);
    const int n = mdp.num_states;
    Eigen::MatrixXd p_pi = policy_transition_matrix(mdp, pi);
    Eigen::VectorXd r_pi = policy_reward_vector(mdp, pi);
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - mdp.gamma * p_pi;
    EvaluationResult out;
    out.v = system.partialPivLu().solve(r_pi);
    out.q.resize(n, mdp.num_actions);
    for (int a = 0; a < mdp.num_actions; ++a)
        out.q.col(a) = mdp.rewards[a] + mdp.gamma * mdp.transitions[a] * out.v;
    return out;
}

ValueIterationResult value_iteration(const TabularMdp& mdp, double tol) {
    mdp.validate();
    if (tol <= 0.0) throw std::invalid_argument("value_iteration: tol must be positive");
    const int n = mdp.num_states;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd q(n, mdp.num_actions);
    while (true) {
        for (int a = 0; a < mdp.num_actions; ++a)
            q.col(a) = mdp.rewards[a] + mdp.gamma * mdp.transitions[a] * v;
        Eigen::VectorXd v_next = q.rowwise().maxCoeff();
        double residual = (v_next - v).lpNorm<Eigen::Infinity>();
        v = v_next;
        if (residual <= tol) break;
    }
    ValueIterationResult out;
    out.v = v;
    out.q = q;
    out.greedy_action.resize(n);
    for (int s = 0; s < n; ++s) {
        int best = 0;
        for (int a = 1; a < mdp.num_actions; ++a)
            if (q(s, a) > q(s, best)) best = a;
        out.greedy_action[s] = best;
    }
    out.greedy = TabularPolicy::deterministic(out.greedy_action, mdp.num_actions);
    return out;
}

std::vector<double> expected_reward_rollout(const TabularMdp& mdp, int s,
                                            const std::vector<int>& actions) {
    if (actions.empty()) throw std::invalid_argument("rollout: empty action sequence");
    if (s < 0 || s >= mdp.num_states) throw std::invalid_argument("rollout: bad state index");
    Eigen::RowVectorXd dist = Eigen::RowVectorXd::Zero(mdp.num_states);
    dist[s] = 1.0;
    std::vector<double> out;
    out.reserve(actions.size());
    for (std::size_t k = 0; k < actions.size(); ++k) {
        int a = actions[k];
        if (a < 0 || a >= mdp.num_actions) throw std::invalid_argument("rollout: bad action index");
        out.push_back(dist * mdp.rewards[a]);
        if (k + 1 < actions.size()) dist = dist * mdp.transitions[a];
    }
    return out;
}

Eigen::MatrixXd compute_sr(const TabularMdp& mdp, const TabularPolicy& pi) {
    const int n = mdp.num_states;
    Eigen::MatrixXd system =
        Eigen::MatrixXd::Identity(n, n) - mdp.gamma * policy_transition_matrix(mdp, pi);
    return system.partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
}

std::vector<Eigen::MatrixXd> compute_sr_action(const TabularMdp& mdp, const TabularPolicy& pi) {
    Eigen::MatrixXd psi = compute_sr(mdp, pi);
    std::vector<Eigen::MatrixXd> out;
    out.reserve(mdp.num_actions);
    const int n = mdp.num_states;
    for (int a = 0; a < mdp.num_actions; ++a)
        out.push_back(Eigen::MatrixXd::Identity(n, n) + mdp.gamma * mdp.transitions[a] * psi);
    return out;
}

std::vector<Eigen::MatrixXd> compute_sf(const TabularMdp& mdp, const Eigen::MatrixXd& phi,
                                        const TabularPolicy& pi) {
    if (phi.rows() != mdp.num_states)
        throw std::invalid_argument("compute_sf: phi must have one row per state");
    std::vector<Eigen::MatrixXd> out;
    out.reserve(mdp.num_actions);
    for (const auto& psi_a : compute_sr_action(mdp, pi)) out.push_back(psi_a * phi);
    return out;
}

namespace {

// Renumbers blocks so that block k is the one whose lowest state index is the
// k-th smallest; keeps output deterministic.
Partition canonicalize(std::vector<int> raw, int num_raw_blocks) {
    std::vector<int> first_state(num_raw_blocks, -1);
    for (int s = 0; s < static_cast<int>(raw.size()); ++s)
        if (first_state[raw[s]] < 0) first_state[raw[s]] = s;
    std::vector<int> order(num_raw_blocks);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return first_state[a] < first_state[b]; });
    std::vector<int> relabel(num_raw_blocks);
    for (int k = 0; k < num_raw_blocks; ++k) relabel[order[k]] = k;
    Partition p;
    p.block_of.resize(raw.size());
    for (std::size_t s = 0; s < raw.size(); ++s) p.block_of[s] = relabel[raw[s]];
    p.num_blocks = num_raw_blocks;
    return p;
}

// Groups states whose signature vectors all lie within tol of the group
// representative (greedy, lowest index first).
std::pair<std::vector<int>, int> group_by_signature(const std::vector<Eigen::VectorXd>& sig,
                                                    double tol) {
    const int n = static_cast<int>(sig.size());
    std::vector<int> label(n, -1);
    std::vector<int> reps;
    for (int s = 0; s < n; ++s) {
        for (std::size_t b = 0; b < reps.size(); ++b) {
            if ((sig[s] - sig[reps[b]]).lpNorm<Eigen::Infinity>() <= tol) {
                label[s] = static_cast<int>(b);
                break;
            }
        }
        if (label[s] < 0) {
            label[s] = static_cast<int>(reps.size());
            reps.push_back(s);
        }
    }
    return {label, static_cast<int>(reps.size())};
}

}  // namespace

Partition bisimulation_partition(const TabularMdp& mdp, double reward_tol, double prob_tol) {
    mdp.validate();
    if (reward_tol < 0.0 || prob_tol < 0.0)
        throw std::invalid_argument("bisimulation: tolerances must be >= 0");
    const int n = mdp.num_states;
    const int na = mdp.num_actions;

    // Initial partition: group by the per-action expected reward vector.
    std::vector<Eigen::VectorXd> reward_sig(n, Eigen::VectorXd(na));
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < na; ++a) reward_sig[s][a] = mdp.rewards[a][s];
    auto [label, num_blocks] = group_by_signature(reward_sig, reward_tol);

    // Refine on per-action block-transition probability signatures until stable.
    while (true) {
        std::vector<Eigen::VectorXd> sig(n, Eigen::VectorXd::Zero(na * num_blocks));
        for (int s = 0; s < n; ++s)
            for (int a = 0; a < na; ++a)
                for (int t = 0; t < n; ++t)
                    sig[s][a * num_blocks + label[t]] += mdp.transitions[a](s, t);

        // Split only within existing blocks: combine the old label into the key.
        std::vector<int> new_label(n, -1);
        int new_count = 0;
        std::vector<int> reps;
        for (int s = 0; s < n; ++s) {
            for (int r : reps) {
                if (label[r] == label[s] &&
                    (sig[s] - sig[r]).lpNorm<Eigen::Infinity>() <= prob_tol) {
                    new_label[s] = new_label[r];
                    break;
                }
            }
            if (new_label[s] < 0) {
                new_label[s] = new_count++;
                reps.push_back(s);
            }
        }
        if (new_count == num_blocks) break;
        label = new_label;
        num_blocks = new_count;
    }
    return canonicalize(label, num_blocks);
}

TabularMdp quotient_mdp(const TabularMdp& mdp, const Partition& partition) {
    const int k = partition.num_blocks;
    std::vector<int> rep(k, -1);
    for (int s = 0; s < mdp.num_states; ++s)
        if (rep[partition.block_of[s]] < 0) rep[partition.block_of[s]] = s;
    TabularMdp q;
    q.num_states = k;
    q.num_actions = mdp.num_actions;
    q.gamma = mdp.gamma;
    q.reward_bound = mdp.reward_bound;
    for (int a = 0; a < mdp.num_actions; ++a) {
        Eigen::MatrixXd p = Eigen::MatrixXd::Zero(k, k);
        Eigen::VectorXd r(k);
        for (int b = 0; b < k; ++b) {
            r[b] = mdp.rewards[a][rep[b]];
            for (int t = 0; t < mdp.num_states; ++t)
                p(b, partition.block_of[t]) += mdp.transitions[a](rep[b], t);
        }
        q.transitions.push_back(p);
        q.rewards.push_back(r);
    }
    return q;
}

Eigen::MatrixXd one_hot_representation(const Partition& partition) {
    Eigen::MatrixXd phi =
        Eigen::MatrixXd::Zero(static_cast<int>(partition.block_of.size()), partition.num_blocks);
    for (int s = 0; s < phi.rows(); ++s) phi(s, partition.block_of[s]) = 1.0;
    return phi;
}

}  // namespace sfrl
