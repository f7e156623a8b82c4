#ifndef SFRL_EXPERIMENTS_HPP
#define SFRL_EXPERIMENTS_HPP

#include <string>
#include <vector>

#include "sfrl/clustering.hpp"
#include "sfrl/envs.hpp"
#include "sfrl/fitted_q.hpp"
#include "sfrl/losses.hpp"
#include "sfrl/representation.hpp"

namespace sfrl {

// Deterministic per-repeat seed derivation from a master seed.
unsigned long long derive_seed(unsigned long long master, unsigned long long index);

// ---------------------------------------------------------------------------
// Randomized bound-certificate suite
// ---------------------------------------------------------------------------

struct RandomInstance {
    TabularMdp mdp;
    StateRepresentation phi;
    Lam lam;    // least-squares fit
    Lsfm lsfm;  // least-squares fit
    TransitionDataset dataset;
};

// Random MDP/representation with least-squares models, resampled until
// gamma * ||M||_F < 1. Deterministic in the seed.
RandomInstance make_random_instance(unsigned long long seed);

struct BoundsInstanceReport {
    int index = 0;
    BoundCertificate lemma1;
    bool theorem3_ok = false;
    bool theorem4_ok = false;
    bool theorem5_ok = false;
    Prop2Certificate prop2;
    bool all_ok() const {
        return lemma1.holds && theorem3_ok && theorem4_ok && theorem5_ok && prop2.holds;
    }
};

struct BoundsReport {
    std::vector<BoundsInstanceReport> instances;
    ErrorReport exact_instance;  // column-world quotient model, all slacks zero
    bool all_hold = true;
};

BoundsReport run_bounds_check(int num_instances, unsigned long long master_seed);

// ---------------------------------------------------------------------------
// Column world (matrix-form training, cluster recovery)
// ---------------------------------------------------------------------------

struct ColumnRunResult {
    double final_loss = 0.0;
    bool clusters_match_columns = false;
    DiscreteAbstraction clusters;
};

ColumnRunResult run_column_training(unsigned long long seed, int num_steps = 4000);

// ---------------------------------------------------------------------------
// Puddle world rollout evaluation
// ---------------------------------------------------------------------------

// Mean |prediction - oracle| per step over random action sequences sampled
// from random start states.
std::vector<double> rollout_eval(const TabularMdp& mdp, const StateRepresentation& phi,
                                 const Lam& lam, int sequences, int horizon,
                                 unsigned long long seed);

struct PuddleResult {
    std::vector<double> trained_error;   // per step t = 1..horizon
    std::vector<double> baseline_error;  // random-init representation
    StateRepresentation phi;
    Lsfm lsfm;
};

PuddleResult run_puddle_experiment(unsigned long long seed, int horizon = 200,
                                   int sequences = 100);

// ---------------------------------------------------------------------------
// Grid-world transfer
// ---------------------------------------------------------------------------

struct TransferCell {
    std::string method;
    int dataset_size = 0;
    double fraction_solved = 0.0;
};

struct TransferResult {
    std::vector<TransferCell> cells;
    DiscreteAbstraction reward_predictive;  // 50-cluster abstraction of Task A
    DiscreteAbstraction value_predictive;
};

TransferResult run_transfer_experiment(const std::vector<int>& dataset_sizes, int repeats,
                                       unsigned long long master_seed);

// Policy quality check used by the transfer evaluation: all episodes from the
// designated start must reach the goal within max_steps.
bool evaluate_policy_on_task(const EnvTask& env, const std::vector<int>& action_of,
                             int episodes, int max_steps, unsigned long long seed);

// ---------------------------------------------------------------------------
// Combination lock
// ---------------------------------------------------------------------------

struct LockAbstractions {
    DiscreteAbstraction baseline;      // identity over 125 states
    DiscreteAbstraction ignore_dial;   // drop the training lock's random dial
    DiscreteAbstraction reward_pred;   // clustered matrix-form LSFM representation
    DiscreteAbstraction value_pred;    // approximate Q*-irrelevance abstraction
};

LockAbstractions build_lock_abstractions(unsigned long long seed);

struct LockEpisodeRow {
    std::string agent;
    int seed_index = 0;
    int episode = 0;
    int steps = 0;
};

std::vector<LockEpisodeRow> run_lock_experiment(LockKind task, const LockAbstractions& abs,
                                                const std::vector<std::string>& agents,
                                                int episodes, int repeats,
                                                unsigned long long master_seed);

// Mean episode length of one agent over the first `episodes` episodes,
// averaged over seeds.
double mean_episode_length(const std::vector<LockEpisodeRow>& rows, const std::string& agent);

}  // namespace sfrl

#endif
