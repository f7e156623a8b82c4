#ifndef SFRL_CLUSTERING_HPP
#define SFRL_CLUSTERING_HPP

#include <optional>
#include <vector>

#include "sfrl/mdp.hpp"

namespace sfrl {

struct DiscreteAbstraction {
    std::vector<int> cluster_of;  // state -> cluster, contiguous 0..num_clusters-1
    int num_clusters = 0;

    static DiscreteAbstraction identity(int num_states);
    static DiscreteAbstraction from_partition(const Partition& p);
    Partition as_partition() const;
};

// Bottom-up average-linkage clustering of the rows of phi under Euclidean
// distance. Exactly one of k / threshold must be given: merge until k clusters
// remain, or until no pair's linkage distance is <= threshold. Ties break on
// lower distance, then lower smallest-member index. Clusters are numbered by
// lowest member index.
DiscreteAbstraction agglomerative_cluster(const Eigen::MatrixXd& phi, std::optional<int> k,
                                          std::optional<double> threshold);

// States share a cluster iff connected through pairs with
// max_a |Q*(s,a) - Q*(s~,a)| <= tol (single-linkage transitive closure).
DiscreteAbstraction q_star_irrelevance_abstraction(const TabularMdp& mdp, double tol);
// Same criterion, merging closest pairs first until exactly target_clusters remain.
DiscreteAbstraction q_star_irrelevance_abstraction(const TabularMdp& mdp, int target_clusters);

// Greedily merges adjacent states (nonzero one-step transition probability in
// either direction) in state-index order until target_clusters remain.
DiscreteAbstraction connected_states_heuristic(const TabularMdp& mdp, int target_clusters);

struct PartitionComparison {
    bool refines = false;  // every a-block lies inside a single b-block
    double purity = 0.0;   // fraction of states covered by their a-block's majority b-block
};
PartitionComparison partition_compare(const Partition& a, const Partition& b);
PartitionComparison partition_compare(const DiscreteAbstraction& a, const DiscreteAbstraction& b);

}  // namespace sfrl

#endif
