#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "sfrl/envs.hpp"
#include "sfrl/mdp.hpp"

using namespace sfrl;

namespace {

// Action indices of the grid environments.
constexpr int kUp = 0, kDown = 1, kLeft = 2, kRight = 3;

TabularMdp random_mdp(int ns, int na, double gamma, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    TabularMdp mdp;
    mdp.num_states = ns;
    mdp.num_actions = na;
    mdp.gamma = gamma;
    for (int a = 0; a < na; ++a) {
        Eigen::MatrixXd p(ns, ns);
        for (int s = 0; s < ns; ++s) {
            for (int t = 0; t < ns; ++t) p(s, t) = -std::log(1.0 - unit(rng));
            p.row(s) /= p.row(s).sum();
        }
        Eigen::VectorXd r(ns);
        for (int s = 0; s < ns; ++s) r[s] = 2.0 * unit(rng) - 1.0;
        mdp.transitions.push_back(p);
        mdp.rewards.push_back(r);
    }
    mdp.validate();
    return mdp;
}

}  // namespace

TEST_CASE("validate rejects malformed MDPs") {
    TabularMdp mdp = build_counterexample().mdp;
    CHECK_NOTHROW(mdp.validate());

    TabularMdp bad_rows = mdp;
    bad_rows.transitions[0](0, 0) += 0.5;
    CHECK_THROWS_AS(bad_rows.validate(), std::invalid_argument);

    TabularMdp negative = mdp;
    negative.transitions[0](0, 3) = -0.25;
    negative.transitions[0](0, 2) = 1.25;
    CHECK_THROWS_AS(negative.validate(), std::invalid_argument);

    TabularMdp bad_gamma = mdp;
    bad_gamma.gamma = 1.0;
    CHECK_THROWS_AS(bad_gamma.validate(), std::invalid_argument);

    TabularMdp bad_reward = mdp;
    bad_reward.rewards[0][0] = 5.0;
    bad_reward.reward_bound = 1.0;
    CHECK_THROWS_AS(bad_reward.validate(), std::invalid_argument);
}

TEST_CASE("policy evaluation on the two-action counterexample") {
    TabularMdp mdp = build_counterexample().mdp;
    TabularPolicy uniform = TabularPolicy::uniform(4, 2);
    EvaluationResult result = policy_evaluation(mdp, uniform);

    // Under the uniform policy both A and B reach a 0.5-per-step future, so
    // every Q value at A and B equals 0.5 * gamma / (1 - gamma) = 4.5.
    for (int s : {0, 1})
        for (int a : {0, 1}) CHECK(result.q(s, a) == doctest::Approx(4.5).epsilon(1e-10));

    // Bellman identity V = r_pi + gamma P_pi V.
    Eigen::VectorXd residual = policy_reward_vector(mdp, uniform) +
                               mdp.gamma * policy_transition_matrix(mdp, uniform) * result.v -
                               result.v;
    CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-8);

    // V(s) = sum_a pi(s,a) Q(s,a).
    for (int s = 0; s < 4; ++s) {
        double mix = 0.0;
        for (int a = 0; a < 2; ++a) mix += uniform.probs(s, a) * result.q(s, a);
        CHECK(result.v[s] == doctest::Approx(mix).epsilon(1e-10));
    }
}

TEST_CASE("policy evaluation with zero discount returns one-step rewards") {
    TabularMdp mdp = random_mdp(5, 2, 0.0, 3);
    EvaluationResult result = policy_evaluation(mdp, TabularPolicy::uniform(5, 2));
    for (int s = 0; s < 5; ++s)
        for (int a = 0; a < 2; ++a)
            CHECK(result.q(s, a) == doctest::Approx(mdp.rewards[a][s]).epsilon(1e-12));
}

TEST_CASE("policy evaluation matches a Monte-Carlo return estimate") {
    TabularMdp mdp = random_mdp(6, 3, 0.9, 0);
    TabularPolicy pi = TabularPolicy::uniform(6, 3);
    EvaluationResult exact = policy_evaluation(mdp, pi);

    const int rollouts = 1000000;
    const int horizon = 200;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> action(0, 2);
    auto step = [&](int s, int a) {
        double u = unit(rng), acc = 0.0;
        for (int t = 0; t < 6; ++t) {
            acc += mdp.transitions[a](s, t);
            if (u <= acc) return t;
        }
        return 5;
    };
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < rollouts; ++i) {
        int s = 0;
        double g = 0.0, discount = 1.0;
        for (int t = 0; t < horizon; ++t) {
            int a = action(rng);
            g += discount * mdp.rewards[a][s];
            discount *= mdp.gamma;
            s = step(s, a);
        }
        sum += g;
        sum_sq += g * g;
    }
    double mean = sum / rollouts;
    double se = std::sqrt((sum_sq / rollouts - mean * mean) / rollouts);
    CHECK(std::abs(mean - exact.v[0]) < 3.0 * se + 1e-6);
}

TEST_CASE("value iteration closed forms and greedy actions") {
    TabularMdp loop;
    loop.num_states = 1;
    loop.num_actions = 1;
    loop.gamma = 0.9;
    loop.transitions = {Eigen::MatrixXd::Ones(1, 1)};
    loop.rewards = {Eigen::VectorXd::Ones(1)};
    CHECK(value_iteration(loop).v[0] == doctest::Approx(10.0).epsilon(1e-8));

    ValueIterationResult opt = value_iteration(build_counterexample().mdp);
    CHECK(opt.greedy_action[0] == 0);  // action a at A reaches the r=1 loop
    CHECK(opt.greedy_action[1] == 1);  // action b at B reaches the r=1 loop
}

TEST_CASE("greedy policy solves transfer task B quickly without slip") {
    EnvTask env = build_transfer_task('B');
    ValueIterationResult opt = value_iteration(env.mdp);
    // Follow the greedy policy while suppressing slip: always move to the
    // most likely next state.
    int s = env.start_state;
    int steps = 0;
    while (!env.is_terminal(s)) {
        REQUIRE(steps < 22);
        int a = opt.greedy_action[s];
        int next = 0;
        env.mdp.transitions[a].row(s).maxCoeff(&next);
        REQUIRE(next != s);
        s = next;
        ++steps;
    }
    CHECK(steps <= 22);
}

TEST_CASE("expected reward rollout matches the environment stories") {
    EnvTask column = build_column_world();
    // Start in the top-left corner, go right, down, right: the reward arrives
    // exactly when the right column is entered.
    std::vector<double> rewards =
        expected_reward_rollout(column.mdp, 0, {kRight, kDown, kRight});
    CHECK(rewards == std::vector<double>{0.0, 0.0, 1.0});

    EnvTask chain = build_three_state();
    CHECK(expected_reward_rollout(chain.mdp, 0, {0, 0, 0}) ==
          std::vector<double>{0.0, 0.0, 1.0});

    TabularMdp mdp = random_mdp(4, 2, 0.9, 9);
    CHECK(expected_reward_rollout(mdp, 2, {1})[0] == doctest::Approx(mdp.rewards[1][2]));
}

TEST_CASE("successor representation identities") {
    TabularMdp mdp = random_mdp(5, 2, 0.9, 17);
    TabularPolicy pi = TabularPolicy::uniform(5, 2);

    TabularMdp undiscounted = mdp;
    undiscounted.gamma = 0.0;
    CHECK((compute_sr(undiscounted, pi) - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-12);
    for (const auto& psi_a : compute_sr_action(undiscounted, pi))
        CHECK((psi_a - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-12);

    // (Psi_a - I) Psi^{-1} / gamma recovers P_a.
    Eigen::MatrixXd psi = compute_sr(mdp, pi);
    auto psi_a = compute_sr_action(mdp, pi);
    for (int a = 0; a < 2; ++a) {
        Eigen::MatrixXd recovered =
            (psi_a[a] - Eigen::MatrixXd::Identity(5, 5)) * psi.inverse() / mdp.gamma;
        CHECK((recovered - mdp.transitions[a]).cwiseAbs().maxCoeff() < 1e-8);
    }

    // (1 - gamma) Psi rows are probability vectors.
    Eigen::VectorXd row_sums = (1.0 - mdp.gamma) * psi.rowwise().sum();
    CHECK((row_sums - Eigen::VectorXd::Ones(5)).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("successor features of the five-state example") {
    TabularMdp mdp = build_five_state().mdp;
    TabularPolicy pi = TabularPolicy::uniform(5, 1);
    auto sf = compute_sf(mdp, Eigen::MatrixXd::Identity(5, 5), pi);

    Eigen::VectorXd psi_a = sf[0].row(0);
    Eigen::VectorXd expected_a(5);
    expected_a << 1.0, 0.0, 9.0, 0.0, 0.0;
    CHECK((psi_a - expected_a).lpNorm<Eigen::Infinity>() < 1e-8);

    Eigen::VectorXd psi_b = sf[0].row(1);
    Eigen::VectorXd expected_b(5);
    expected_b << 0.0, 1.0, 0.0, 4.5, 4.5;
    CHECK((psi_b - expected_b).lpNorm<Eigen::Infinity>() < 1e-8);

    // With a one-hot representation, (1 - gamma)-rescaled SF rows are
    // probability vectors.
    for (int s = 0; s < 5; ++s) {
        Eigen::VectorXd row = (1.0 - mdp.gamma) * sf[0].row(s);
        CHECK(row.minCoeff() >= -1e-12);
        CHECK(row.sum() == doctest::Approx(1.0).epsilon(1e-8));
    }

    // Identity representation coincides with the action-conditioned SR.
    auto psi_action = compute_sr_action(mdp, pi);
    CHECK((sf[0] - psi_action[0]).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("bisimulation partition on the example environments") {
    Partition columns = bisimulation_partition(build_column_world().mdp);
    CHECK(columns.num_blocks == 3);
    // Blocks are the grid columns.
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) CHECK(columns.block_of[3 * r + c] == c);

    CHECK(bisimulation_partition(build_five_state().mdp).num_blocks == 5);
}

TEST_CASE("bisimulation merges exact duplicate states") {
    // Duplicate state 0 of the three-state chain as a fourth state.
    TabularMdp mdp = build_three_state().mdp;
    TabularMdp dup;
    dup.num_states = 4;
    dup.num_actions = 1;
    dup.gamma = mdp.gamma;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(4, 4);
    p.topLeftCorner(3, 3) = mdp.transitions[0];
    p.row(3) = p.row(0);
    dup.transitions = {p};
    Eigen::VectorXd r(4);
    r << mdp.rewards[0][0], mdp.rewards[0][1], mdp.rewards[0][2], mdp.rewards[0][0];
    dup.rewards = {r};
    Partition partition = bisimulation_partition(dup);
    CHECK(partition.block_of[0] == partition.block_of[3]);
    CHECK(partition.num_blocks == 3);
}

TEST_CASE("bisimulation partition is a fixed point of refinement") {
    TabularMdp mdp = build_column_world().mdp;
    Partition first = bisimulation_partition(mdp);
    TabularMdp quotient = quotient_mdp(mdp, first);
    Partition second = bisimulation_partition(quotient);
    CHECK(second.num_blocks == quotient.num_states);
}

TEST_CASE("quotient MDP reproduces rollouts of the full MDP") {
    TabularMdp mdp = build_column_world().mdp;
    Partition partition = bisimulation_partition(mdp);
    TabularMdp quotient = quotient_mdp(mdp, partition);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        int s = static_cast<int>(rng() % 9);
        std::vector<int> actions(6);
        for (auto& a : actions) a = static_cast<int>(rng() % 4);
        auto full = expected_reward_rollout(mdp, s, actions);
        auto reduced = expected_reward_rollout(quotient, partition.block_of[s], actions);
        for (std::size_t k = 0; k < actions.size(); ++k)
            CHECK(full[k] == doctest::Approx(reduced[k]).epsilon(1e-10));
    }
}

TEST_CASE("one-hot representation of a partition") {
    Partition partition = bisimulation_partition(build_column_world().mdp);
    Eigen::MatrixXd phi = one_hot_representation(partition);
    CHECK(phi.rows() == 9);
    CHECK(phi.cols() == 3);
    for (int s = 0; s < 9; ++s) {
        CHECK(phi.row(s).sum() == doctest::Approx(1.0));
        CHECK(phi(s, partition.block_of[s]) == doctest::Approx(1.0));
    }
}
