#include "sfrl/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace sfrl {

DiscreteAbstraction DiscreteAbstraction::identity(int num_states) {
    DiscreteAbstraction a;
    a.cluster_of.resize(num_states);
    std::iota(a.cluster_of.begin(), a.cluster_of.end(), 0);
    a.num_clusters = num_states;
    return a;
}

DiscreteAbstraction DiscreteAbstraction::from_partition(const Partition& p) {
    return DiscreteAbstraction{p.block_of, p.num_blocks};
}

Partition DiscreteAbstraction::as_partition() const {
    return Partition{cluster_of, num_clusters};
}

namespace {

// Relabels raw cluster ids so clusters are numbered by lowest member index.
DiscreteAbstraction canonicalize_clusters(const std::vector<int>& raw) {
    std::map<int, int> first_state;
    for (int s = 0; s < static_cast<int>(raw.size()); ++s)
        if (!first_state.count(raw[s])) first_state[raw[s]] = s;
    std::vector<std::pair<int, int>> order;  // (first state, raw id)
    for (const auto& [id, first] : first_state) order.push_back({first, id});
    std::sort(order.begin(), order.end());
    std::map<int, int> relabel;
    for (int k = 0; k < static_cast<int>(order.size()); ++k) relabel[order[k].second] = k;
    DiscreteAbstraction out;
    out.cluster_of.resize(raw.size());
    for (std::size_t s = 0; s < raw.size(); ++s) out.cluster_of[s] = relabel[raw[s]];
    out.num_clusters = static_cast<int>(order.size());
    return out;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    // Keeps the lower root so labels stay index-ordered.
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (a > b) std::swap(a, b);
        parent[b] = a;
        return true;
    }
};

std::vector<int> roots_of(UnionFind& uf) {
    std::vector<int> raw(uf.parent.size());
    for (int s = 0; s < static_cast<int>(raw.size()); ++s) raw[s] = uf.find(s);
    return raw;
}

// max_a |Q*(s,a) - Q*(t,a)| distance table.
Eigen::MatrixXd q_star_distances(const TabularMdp& mdp) {
    Eigen::MatrixXd q = value_iteration(mdp, 1e-12).q;
    const int n = mdp.num_states;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s)
        for (int t = s + 1; t < n; ++t)
            d(s, t) = d(t, s) = (q.row(s) - q.row(t)).lpNorm<Eigen::Infinity>();
    return d;
}

}  // namespace

DiscreteAbstraction agglomerative_cluster(const Eigen::MatrixXd& phi, std::optional<int> k,
                                          std::optional<double> threshold) {
    const int n = static_cast<int>(phi.rows());
    if (k.has_value() == threshold.has_value())
        throw std::invalid_argument("agglomerative_cluster: give exactly one of k/threshold");
    if (k && (*k < 1 || *k > n))
        throw std::invalid_argument("agglomerative_cluster: k out of range");

    // Average linkage maintained by Lance-Williams updates over the pairwise
    // Euclidean distance table.
    Eigen::MatrixXd dist(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dist(i, j) = (phi.row(i) - phi.row(j)).norm();
    std::vector<bool> active(n, true);
    std::vector<int> size(n, 1);
    std::vector<int> label(n);
    std::iota(label.begin(), label.end(), 0);
    int count = n;

    while (count > 1) {
        if (k && count <= *k) break;
        int best_i = -1, best_j = -1;
        double best_d = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (int j = i + 1; j < n; ++j) {
                if (!active[j]) continue;
                double d = dist(i, j);
                if (best_i < 0 || d < best_d) {
                    best_d = d;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if (threshold && best_d > *threshold) break;
        for (int c = 0; c < n; ++c) {
            if (!active[c] || c == best_i || c == best_j) continue;
            dist(best_i, c) = dist(c, best_i) =
                (size[best_i] * dist(best_i, c) + size[best_j] * dist(best_j, c)) /
                (size[best_i] + size[best_j]);
        }
        size[best_i] += size[best_j];
        active[best_j] = false;
        for (int s = 0; s < n; ++s)
            if (label[s] == best_j) label[s] = best_i;
        --count;
    }
    return canonicalize_clusters(label);
}

DiscreteAbstraction q_star_irrelevance_abstraction(const TabularMdp& mdp, double tol) {
    if (tol < 0.0) throw std::invalid_argument("q_star_irrelevance: tol must be >= 0");
    Eigen::MatrixXd d = q_star_distances(mdp);
    UnionFind uf(mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s)
        for (int t = s + 1; t < mdp.num_states; ++t)
            if (d(s, t) <= tol) uf.unite(s, t);
    return canonicalize_clusters(roots_of(uf));
}

DiscreteAbstraction q_star_irrelevance_abstraction(const TabularMdp& mdp, int target_clusters) {
    if (target_clusters < 1 || target_clusters > mdp.num_states)
        throw std::invalid_argument("q_star_irrelevance: target out of range");
    Eigen::MatrixXd d = q_star_distances(mdp);
    struct Edge {
        double d;
        int s, t;
    };
    std::vector<Edge> edges;
    for (int s = 0; s < mdp.num_states; ++s)
        for (int t = s + 1; t < mdp.num_states; ++t) edges.push_back({d(s, t), s, t});
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return std::tie(a.d, a.s, a.t) < std::tie(b.d, b.s, b.t);
    });
    UnionFind uf(mdp.num_states);
    int count = mdp.num_states;
    for (const auto& e : edges) {
        if (count <= target_clusters) break;
        if (uf.unite(e.s, e.t)) --count;
    }
    return canonicalize_clusters(roots_of(uf));
}

DiscreteAbstraction connected_states_heuristic(const TabularMdp& mdp, int target_clusters) {
    const int n = mdp.num_states;
    if (target_clusters < 1 || target_clusters > n)
        throw std::invalid_argument("connected_states_heuristic: target out of range");
    std::vector<std::vector<char>> adjacent(n, std::vector<char>(n, 0));
    for (int a = 0; a < mdp.num_actions; ++a)
        for (int s = 0; s < n; ++s)
            for (int t = 0; t < n; ++t)
                if (s != t && mdp.transitions[a](s, t) > 0.0)
                    adjacent[s][t] = adjacent[t][s] = 1;

    UnionFind uf(n);
    int count = n;
    // First pass pairs up singletons along adjacency in state-index order.
    for (int s = 0; s < n && count > target_clusters; ++s) {
        if (uf.find(s) != s) continue;
        bool s_single = true;
        for (int t = 0; t < n; ++t)
            if (t != s && uf.find(t) == s) s_single = false;
        if (!s_single) continue;
        for (int t = s + 1; t < n; ++t) {
            if (!adjacent[s][t] || uf.find(t) != t) continue;
            bool t_single = true;
            for (int u = t + 1; u < n; ++u)
                if (uf.find(u) == t) t_single = false;
            if (!t_single) continue;
            uf.unite(s, t);
            --count;
            break;
        }
    }
    // Remaining merges join any adjacent pair of distinct clusters, lowest
    // state indices first.
    while (count > target_clusters) {
        bool merged = false;
        for (int s = 0; s < n && !merged; ++s)
            for (int t = s + 1; t < n && !merged; ++t)
                if (adjacent[s][t] && uf.unite(s, t)) {
                    --count;
                    merged = true;
                }
        if (!merged)
            throw std::invalid_argument(
                "connected_states_heuristic: graph too disconnected for target");
    }
    return canonicalize_clusters(roots_of(uf));
}

PartitionComparison partition_compare(const Partition& a, const Partition& b) {
    if (a.block_of.size() != b.block_of.size())
        throw std::invalid_argument("partition_compare: size mismatch");
    const int n = static_cast<int>(a.block_of.size());
    std::vector<std::map<int, int>> counts(a.num_blocks);
    for (int s = 0; s < n; ++s) counts[a.block_of[s]][b.block_of[s]] += 1;
    PartitionComparison out;
    out.refines = true;
    int covered = 0;
    for (const auto& block : counts) {
        if (block.size() > 1) out.refines = false;
        int majority = 0;
        for (const auto& [b_block, c] : block) majority = std::max(majority, c);
        covered += majority;
    }
    out.purity = static_cast<double>(covered) / n;
    return out;
}

PartitionComparison partition_compare(const DiscreteAbstraction& a,
                                      const DiscreteAbstraction& b) {
    return partition_compare(a.as_partition(), b.as_partition());
}

}  // namespace sfrl
