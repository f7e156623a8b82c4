#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "sfrl/clustering.hpp"
#include "sfrl/envs.hpp"

using namespace sfrl;

TEST_CASE("agglomerative clustering basics") {
    SUBCASE("identical rows collapse into one cluster") {
        Eigen::MatrixXd phi = Eigen::MatrixXd::Ones(5, 3);
        DiscreteAbstraction c = agglomerative_cluster(phi, std::nullopt, 1e-9);
        CHECK(c.num_clusters == 1);
        for (int s = 0; s < 5; ++s) CHECK(c.cluster_of[s] == 0);
    }

    SUBCASE("three well-separated centroids under k = 3") {
        Eigen::MatrixXd phi(9, 2);
        std::mt19937_64 rng(0);
        std::uniform_real_distribution<double> jitter(-0.01, 0.01);
        Eigen::RowVector2d centers[3] = {{0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}};
        for (int i = 0; i < 9; ++i)
            phi.row(i) = centers[i % 3] + Eigen::RowVector2d(jitter(rng), jitter(rng));
        DiscreteAbstraction c = agglomerative_cluster(phi, 3, std::nullopt);
        CHECK(c.num_clusters == 3);
        for (int i = 0; i < 9; ++i) {
            CHECK(c.cluster_of[i] == c.cluster_of[i % 3]);
            if (i % 3 != 0) CHECK(c.cluster_of[i] != c.cluster_of[0]);
        }
    }

    SUBCASE("threshold zero merges only exactly equal rows") {
        Eigen::MatrixXd phi(4, 1);
        phi << 1.0, 2.0, 1.0, 3.0;
        DiscreteAbstraction c = agglomerative_cluster(phi, std::nullopt, 0.0);
        CHECK(c.num_clusters == 3);
        CHECK(c.cluster_of[0] == c.cluster_of[2]);
        CHECK(c.cluster_of[0] != c.cluster_of[1]);
        CHECK(c.cluster_of[1] != c.cluster_of[3]);
    }

    SUBCASE("cluster ids follow lowest member index") {
        Eigen::MatrixXd phi(4, 1);
        phi << 5.0, 0.0, 5.0, 0.0;
        DiscreteAbstraction c = agglomerative_cluster(phi, 2, std::nullopt);
        CHECK(c.cluster_of[0] == 0);
        CHECK(c.cluster_of[1] == 1);
        CHECK(c.cluster_of[2] == 0);
        CHECK(c.cluster_of[3] == 1);
    }

    SUBCASE("argument validation") {
        Eigen::MatrixXd phi = Eigen::MatrixXd::Random(3, 2);
        CHECK_THROWS_AS(agglomerative_cluster(phi, 4, std::nullopt), std::invalid_argument);
        CHECK_THROWS_AS(agglomerative_cluster(phi, 2, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(agglomerative_cluster(phi, std::nullopt, std::nullopt),
                        std::invalid_argument);
    }

    SUBCASE("row permutation permutes labels but not the partition") {
        std::mt19937_64 rng(42);
        Eigen::MatrixXd phi(8, 3);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 3; ++j)
                phi(i, j) = (i % 4) * 5.0 + std::uniform_real_distribution<double>(
                                                -0.1, 0.1)(rng);
        std::vector<int> perm(8);
        for (int i = 0; i < 8; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        Eigen::MatrixXd shuffled(8, 3);
        for (int i = 0; i < 8; ++i) shuffled.row(i) = phi.row(perm[i]);

        DiscreteAbstraction a = agglomerative_cluster(phi, 4, std::nullopt);
        DiscreteAbstraction b = agglomerative_cluster(shuffled, 4, std::nullopt);
        DiscreteAbstraction b_unshuffled;
        b_unshuffled.num_clusters = b.num_clusters;
        b_unshuffled.cluster_of.assign(8, -1);
        for (int i = 0; i < 8; ++i) b_unshuffled.cluster_of[perm[i]] = b.cluster_of[i];
        PartitionComparison cmp = partition_compare(a, b_unshuffled);
        CHECK(cmp.refines);
        CHECK(cmp.purity == doctest::Approx(1.0));
    }
}

TEST_CASE("Q* irrelevance abstraction") {
    SUBCASE("five-state chain merges exactly the two value-equivalent states") {
        EnvTask env = build_five_state();
        DiscreteAbstraction c = q_star_irrelevance_abstraction(env.mdp, 1e-8);
        // States A and B (0 and 1) share identical optimal Q-values while
        // differing in one-step reward dynamics.
        CHECK(c.num_clusters == 4);
        CHECK(c.cluster_of[0] == c.cluster_of[1]);
        CHECK(c.cluster_of[2] != c.cluster_of[0]);
        CHECK(c.cluster_of[3] != c.cluster_of[0]);
        CHECK(c.cluster_of[4] != c.cluster_of[0]);
    }

    SUBCASE("tolerance zero on a generic MDP keeps the identity partition") {
        EnvTask env = build_counterexample();
        DiscreteAbstraction c = q_star_irrelevance_abstraction(env.mdp, 0.0);
        CHECK(c.num_clusters == 4);
    }

    SUBCASE("target-count overload reaches exactly the requested size") {
        EnvTask env = build_column_world();
        DiscreteAbstraction c = q_star_irrelevance_abstraction(env.mdp, 4);
        CHECK(c.num_clusters == 4);
        std::vector<int> seen(4, 0);
        for (int z : c.cluster_of) ++seen[z];
        for (int count : seen) CHECK(count > 0);
    }
}

TEST_CASE("connected-states heuristic") {
    SUBCASE("1x4 corridor to two clusters pairs adjacent cells") {
        std::vector<std::string> lines = {". . . ."};
        GridWorldSpec spec = parse_grid_ascii(lines, 0.0);
        EnvTask env = make_grid_env(spec, 0.9, Eigen::VectorXd::Zero(4), {});
        DiscreteAbstraction c = connected_states_heuristic(env.mdp, 2);
        CHECK(c.num_clusters == 2);
        CHECK(c.cluster_of[0] == c.cluster_of[1]);
        CHECK(c.cluster_of[2] == c.cluster_of[3]);
        CHECK(c.cluster_of[0] != c.cluster_of[2]);
    }

    SUBCASE("target equal to the state count is the identity") {
        EnvTask env = build_column_world();
        DiscreteAbstraction c = connected_states_heuristic(env.mdp, 9);
        CHECK(c.num_clusters == 9);
        for (int s = 0; s < 9; ++s) CHECK(c.cluster_of[s] == s);
    }

    SUBCASE("10x10 grid to 50 clusters keeps members mutually reachable") {
        std::vector<std::string> lines;
        for (int r = 0; r < 10; ++r) {
            std::string row;
            for (int col = 0; col < 10; ++col) row += col ? " ." : ".";
            lines.push_back(row);
            if (r < 9) lines.push_back(std::string(19, ' '));
        }
        GridWorldSpec spec = parse_grid_ascii(lines, 0.0);
        EnvTask env = make_grid_env(spec, 0.9, Eigen::VectorXd::Zero(100), {});
        DiscreteAbstraction c = connected_states_heuristic(env.mdp, 50);
        CHECK(c.num_clusters == 50);
        // Every cluster's members must be pairwise adjacent on the grid.
        for (int s = 0; s < 100; ++s) {
            for (int t = s + 1; t < 100; ++t) {
                if (c.cluster_of[s] != c.cluster_of[t]) continue;
                bool adjacent = false;
                for (int a = 0; a < 4; ++a)
                    adjacent = adjacent || env.mdp.transitions[a](s, t) > 0.0 ||
                               env.mdp.transitions[a](t, s) > 0.0;
                CHECK(adjacent);
            }
        }
    }
}

TEST_CASE("partition comparison") {
    SUBCASE("identical partitions") {
        DiscreteAbstraction a = DiscreteAbstraction::identity(6);
        PartitionComparison cmp = partition_compare(a, a);
        CHECK(cmp.refines);
        CHECK(cmp.purity == doctest::Approx(1.0));
    }

    SUBCASE("identity refines the single block") {
        DiscreteAbstraction a = DiscreteAbstraction::identity(6);
        DiscreteAbstraction b;
        b.cluster_of.assign(6, 0);
        b.num_clusters = 1;
        PartitionComparison cmp = partition_compare(a, b);
        CHECK(cmp.refines);
        CHECK(cmp.purity == doctest::Approx(1.0));
        PartitionComparison rev = partition_compare(b, a);
        CHECK_FALSE(rev.refines);
        CHECK(rev.purity == doctest::Approx(1.0 / 6.0));
    }

    SUBCASE("hand-enumerated 3-block vs 2-block comparison") {
        // a: {0,1} {2,3} {4,5}; b: {0,1,2} {3,4,5}.
        DiscreteAbstraction a{{0, 0, 1, 1, 2, 2}, 3};
        DiscreteAbstraction b{{0, 0, 0, 1, 1, 1}, 2};
        PartitionComparison cmp = partition_compare(a, b);
        CHECK_FALSE(cmp.refines);  // a-block {2,3} straddles both b-blocks
        // Majority mapping: {0,1}->b0 (2 states), {4,5}->b1 (2 states),
        // {2,3} ties and covers 1 state either way: purity = 5/6.
        CHECK(cmp.purity == doctest::Approx(5.0 / 6.0));
    }

    SUBCASE("abstraction and partition overloads agree") {
        DiscreteAbstraction a{{0, 1, 0, 1}, 2};
        DiscreteAbstraction b{{0, 0, 1, 1}, 2};
        PartitionComparison c1 = partition_compare(a, b);
        PartitionComparison c2 = partition_compare(a.as_partition(), b.as_partition());
        CHECK(c1.refines == c2.refines);
        CHECK(c1.purity == doctest::Approx(c2.purity));
    }
}

TEST_CASE("abstraction and partition conversions roundtrip") {
    Partition p;
    p.block_of = {2, 0, 1, 0, 2};
    p.num_blocks = 3;
    DiscreteAbstraction a = DiscreteAbstraction::from_partition(p);
    Partition back = a.as_partition();
    REQUIRE(back.num_blocks == 3);
    for (int s = 0; s < 5; ++s) CHECK(back.block_of[s] == p.block_of[s]);
}
