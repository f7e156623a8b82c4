#ifndef SFRL_ENVS_HPP
#define SFRL_ENVS_HPP

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sfrl/representation.hpp"
#include "sfrl/td_sf.hpp"

namespace sfrl {

// Grid maps are ASCII art at double resolution: cell (r,c) sits at line 2r,
// column 2c ('.' free, 'S' start, 'G' goal, '~' puddle); a '#' between two
// cell positions marks a blocked edge.
struct GridWorldSpec {
    int width = 0;
    int height = 0;
    std::set<std::pair<int, int>> blocked_edges;  // unordered cell-index pairs
    std::optional<int> start;
    std::optional<int> goal;
    std::vector<int> puddles;
    double slip = 0.0;

    int cell(int row, int col) const { return row * width + col; }
};

GridWorldSpec parse_grid_ascii(const std::vector<std::string>& lines, double slip);

// Builds the MDP for a grid: 4 actions (up, down, left, right), blocked or
// off-grid moves stay in place, then slip keeps the agent in place with the
// given probability. Rewards are entry rewards; terminal states absorb with
// zero reward.
EnvTask make_grid_env(const GridWorldSpec& spec, double gamma,
                      const Eigen::VectorXd& enter_reward, const std::vector<char>& terminal);

EnvTask build_column_world();
EnvTask build_three_state();
EnvTask build_five_state();
EnvTask build_counterexample();
EnvTask build_puddle_world();
EnvTask build_transfer_task(char which);  // 'A' or 'B'

enum class LockKind { Training, Test1, Test2 };

struct CombinationLockSpec {
    int dials = 3;
    int faces = 5;
    int random_dial = 2;        // re-randomized uniformly after every step
    bool reversed_left = false; // action 0 rotates the left dial backwards
    // Rewarding combinations: dial value constraints, -1 means unconstrained.
    std::vector<int> rewarding = {-1, -1, -1};
    int start_state = 0;
};

CombinationLockSpec lock_spec(LockKind kind);
EnvTask build_lock(LockKind kind);

// Abstraction keeping all dials except `dial` (25 clusters for 3 dials).
DiscreteAbstraction lock_ignore_dial_abstraction(int dial);

// Random-walk dataset with uniform-random actions; episodes restart from the
// task's start rule whenever a terminal state is entered.
TransitionDataset collect_dataset(const EnvTask& env, int count, unsigned long long seed);

// Retries collect_dataset with incremented seeds until every (state, action)
// pair with a non-terminal state appears; logs retries to stderr.
TransitionDataset collect_dataset_covering(const EnvTask& env, int count,
                                           unsigned long long seed);

}  // namespace sfrl

#endif
