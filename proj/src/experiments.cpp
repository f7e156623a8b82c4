#include "sfrl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "sfrl/td_sf.hpp"

namespace sfrl {

unsigned long long derive_seed(unsigned long long master, unsigned long long index) {
    // splitmix64 applied to master + index.
    unsigned long long z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Randomized certificate suite
// ---------------------------------------------------------------------------

RandomInstance make_random_instance(unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        RandomInstance inst;
        int ns = 3 + static_cast<int>(rng() % 6);
        int na = 1 + static_cast<int>(rng() % 3);
        int n = 2 + static_cast<int>(rng() % std::min(3, ns - 1));
        inst.mdp.num_states = ns;
        inst.mdp.num_actions = na;
        inst.mdp.gamma = 0.3 + 0.4 * unit(rng);
        inst.mdp.reward_bound = 1.0;
        for (int a = 0; a < na; ++a) {
            Eigen::MatrixXd p(ns, ns);
            for (int s = 0; s < ns; ++s) {
                for (int t = 0; t < ns; ++t) p(s, t) = -std::log(1.0 - unit(rng));
                p.row(s) /= p.row(s).sum();
            }
            Eigen::VectorXd r(ns);
            for (int s = 0; s < ns; ++s) r[s] = 2.0 * unit(rng) - 1.0;
            inst.mdp.transitions.push_back(p);
            inst.mdp.rewards.push_back(r);
        }
        inst.phi.phi.resize(ns, n);
        for (int s = 0; s < ns; ++s) {
            for (int j = 0; j < n; ++j) inst.phi.phi(s, j) = unit(rng);
            inst.phi.phi.row(s).normalize();
        }
        LeastSquaresModels models = least_squares_init(inst.phi, inst.mdp);
        if (inst.mdp.gamma * models.lam.m_norm() >= 0.999) continue;
        inst.lam = models.lam;
        inst.lsfm = models.lsfm;
        // One record per (s,a) guarantees coverage; extras densify the fit.
        for (int s = 0; s < ns; ++s)
            for (int a = 0; a < na; ++a) {
                std::discrete_distribution<int> next(inst.mdp.transitions[a].row(s).data(),
                                                     inst.mdp.transitions[a].row(s).data() + ns);
                inst.dataset.records.push_back({s, a, inst.mdp.rewards[a][s], next(rng)});
            }
        for (int i = 0; i < 5 * ns * na; ++i) {
            int s = static_cast<int>(rng() % ns);
            int a = static_cast<int>(rng() % na);
            std::discrete_distribution<int> next(inst.mdp.transitions[a].row(s).data(),
                                                 inst.mdp.transitions[a].row(s).data() + ns);
            inst.dataset.records.push_back({s, a, inst.mdp.rewards[a][s], next(rng)});
        }
        return inst;
    }
    throw std::runtime_error("make_random_instance: could not satisfy gamma*M < 1");
}

BoundsReport run_bounds_check(int num_instances, unsigned long long master_seed) {
    BoundsReport report;
    for (int i = 0; i < num_instances; ++i) {
        unsigned long long seed = derive_seed(master_seed, i);
        RandomInstance inst = make_random_instance(seed);
        BoundsInstanceReport row;
        row.index = i;
        row.lemma1 = lemma1_certificate(inst.mdp, inst.phi, inst.lam, inst.lsfm);

        row.theorem3_ok = true;
        for (const auto& r :
             theorem3_certificate(inst.mdp, inst.phi, inst.lam, 10, 20, derive_seed(seed, 1)))
            if (r.empirical > r.bound + 1e-9) row.theorem3_ok = false;

        row.theorem5_ok = true;
        for (const auto& r : theorem5_certificate(inst.mdp, inst.phi, inst.lsfm, inst.lam, 10,
                                                  20, derive_seed(seed, 2)))
            if (r.empirical > r.bound + 1e-9) row.theorem5_ok = false;

        row.theorem4_ok = true;
        std::mt19937_64 rng(derive_seed(seed, 3));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int p = 0; p < 5; ++p) {
            Eigen::VectorXd weights(inst.mdp.num_actions);
            for (int a = 0; a < inst.mdp.num_actions; ++a)
                weights[a] = -std::log(1.0 - unit(rng));
            weights /= weights.sum();
            BoundCertificate cert =
                theorem4_certificate(inst.mdp, inst.phi, inst.lam, inst.lsfm, weights);
            if (!cert.holds) row.theorem4_ok = false;
        }

        row.prop2 = prop2_certificate(inst.dataset, inst.phi, inst.lsfm, inst.mdp.gamma);
        if (!row.all_ok()) report.all_hold = false;
        report.instances.push_back(row);
    }
    // Exact quotient model of the column world: every metric must vanish.
    EnvTask column = build_column_world();
    Partition partition = bisimulation_partition(column.mdp);
    StateRepresentation one_hot{one_hot_representation(partition)};
    report.exact_instance = error_metrics(column.mdp, one_hot,
                                          exact_quotient_lam(column.mdp, partition),
                                          exact_quotient_lsfm(column.mdp, partition));
    return report;
}

// ---------------------------------------------------------------------------
// Column world training
// ---------------------------------------------------------------------------

ColumnRunResult run_column_training(unsigned long long seed, int num_steps) {
    EnvTask column = build_column_world();
    TrainConfig config;
    config.learning_rate = 0.1;
    config.alpha_psi = 1.0;
    config.latent_dim = 3;
    config.num_steps = num_steps;
    config.seed = seed;
    config.gamma = column.mdp.gamma;
    TrainResult trained = train_representation(column.mdp, config, ModelKind::Lsfm);
    ColumnRunResult result;
    result.final_loss = trained.final_loss;
    result.clusters = agglomerative_cluster(trained.phi.phi, 3, std::nullopt);
    Partition columns = bisimulation_partition(column.mdp);
    auto fwd = partition_compare(result.clusters.as_partition(), columns);
    auto bwd = partition_compare(columns, result.clusters.as_partition());
    result.clusters_match_columns = fwd.refines && bwd.refines;
    return result;
}

// ---------------------------------------------------------------------------
// Puddle world
// ---------------------------------------------------------------------------

std::vector<double> rollout_eval(const TabularMdp& mdp, const StateRepresentation& phi,
                                 const Lam& lam, int sequences, int horizon,
                                 unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> state_dist(0, mdp.num_states - 1);
    std::uniform_int_distribution<int> action_dist(0, mdp.num_actions - 1);
    std::vector<double> mean_err(horizon, 0.0);
    for (int i = 0; i < sequences; ++i) {
        int s = state_dist(rng);
        std::vector<int> actions(horizon);
        for (int t = 0; t < horizon; ++t) actions[t] = action_dist(rng);
        auto oracle = expected_reward_rollout(mdp, s, actions);
        auto pred = lam_rollout_predict(phi, lam, s, actions);
        for (int t = 0; t < horizon; ++t) mean_err[t] += std::abs(pred[t] - oracle[t]);
    }
    for (double& e : mean_err) e /= sequences;
    return mean_err;
}

PuddleResult run_puddle_experiment(unsigned long long seed, int horizon, int sequences) {
    EnvTask env = build_puddle_world();
    TransitionDataset dataset = collect_dataset_covering(env, 10000, derive_seed(seed, 0));

    TrainConfig config;
    config.learning_rate = 0.0005;
    config.alpha_psi = 0.01;
    config.alpha_n = 0.0;
    config.latent_dim = 80;
    config.batch_size = 50;
    config.num_steps = 50000;
    config.gamma = env.mdp.gamma;
    config.seed = derive_seed(seed, 1);
    TrainResult trained = train_representation(dataset, env.mdp.num_states,
                                               env.mdp.num_actions, config, ModelKind::Lsfm);

    PuddleResult result;
    result.phi = trained.phi;
    result.lsfm = trained.lsfm;
    Lam trained_lam = lam_from_lsfm(trained.lsfm, env.mdp.gamma);

    StateRepresentation random_rep{random_phi(env.mdp.num_states, config.latent_dim,
                                              derive_seed(seed, 2))};
    Lam baseline_lam =
        least_squares_init(random_rep, dataset, env.mdp.num_actions, env.mdp.gamma).lam;

    unsigned long long eval_seed = derive_seed(seed, 3);
    result.trained_error =
        rollout_eval(env.mdp, trained.phi, trained_lam, sequences, horizon, eval_seed);
    result.baseline_error =
        rollout_eval(env.mdp, random_rep, baseline_lam, sequences, horizon, eval_seed);
    return result;
}

// ---------------------------------------------------------------------------
// Transfer
// ---------------------------------------------------------------------------

bool evaluate_policy_on_task(const EnvTask& env, const std::vector<int>& action_of,
                             int episodes, int max_steps, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    for (int ep = 0; ep < episodes; ++ep) {
        int s = env.start_state;
        int steps = 0;
        while (!env.is_terminal(s)) {
            if (++steps > max_steps) return false;
            s = sample_next_state(env.mdp, s, action_of[s], rng);
        }
    }
    return true;
}

namespace {

Eigen::MatrixXd abstraction_one_hot(const DiscreteAbstraction& abs) {
    Eigen::MatrixXd phi =
        Eigen::MatrixXd::Zero(static_cast<int>(abs.cluster_of.size()), abs.num_clusters);
    for (int s = 0; s < phi.rows(); ++s) phi(s, abs.cluster_of[s]) = 1.0;
    return phi;
}

std::vector<int> greedy_from_q_table(const Eigen::MatrixXd& q) {
    std::vector<int> action_of(q.rows());
    for (int s = 0; s < q.rows(); ++s) {
        int best = 0;
        for (int a = 1; a < q.cols(); ++a)
            if (q(s, a) > q(s, best)) best = a;
        action_of[s] = best;
    }
    return action_of;
}

// Empirical tabular model with uniform transitions and zero reward for
// unobserved state-action pairs; terminal states stay absorbing.
TabularMdp empirical_model(const TransitionDataset& dataset, const EnvTask& env) {
    const int ns = env.mdp.num_states;
    const int na = env.mdp.num_actions;
    TabularMdp model;
    model.num_states = ns;
    model.num_actions = na;
    model.gamma = env.mdp.gamma;
    model.reward_bound = env.mdp.reward_bound;
    model.transitions.assign(na, Eigen::MatrixXd::Zero(ns, ns));
    model.rewards.assign(na, Eigen::VectorXd::Zero(ns));
    std::vector<std::vector<int>> count(na, std::vector<int>(ns, 0));
    for (const auto& rec : dataset.records) {
        model.transitions[rec.a](rec.s, rec.s_next) += 1.0;
        model.rewards[rec.a][rec.s] += rec.r;
        count[rec.a][rec.s] += 1;
    }
    for (int a = 0; a < na; ++a)
        for (int s = 0; s < ns; ++s) {
            if (env.is_terminal(s)) {
                model.transitions[a].row(s).setZero();
                model.transitions[a](s, s) = 1.0;
                model.rewards[a][s] = 0.0;
            } else if (count[a][s] > 0) {
                model.transitions[a].row(s) /= count[a][s];
                model.rewards[a][s] /= count[a][s];
            } else {
                model.transitions[a].row(s).setConstant(1.0 / ns);
            }
        }
    return model;
}

TrainConfig transfer_eval_config(unsigned long long seed) {
    TrainConfig config;
    config.learning_rate = 0.001;
    config.batch_size = 50;
    config.num_steps = 20000;
    config.gamma = 0.9;
    config.seed = seed;
    return config;
}

}  // namespace

TransferResult run_transfer_experiment(const std::vector<int>& dataset_sizes, int repeats,
                                       unsigned long long master_seed) {
    EnvTask task_a = build_transfer_task('A');
    EnvTask task_b = build_transfer_task('B');
    EnvTask task_a_uniform = task_a;
    task_a_uniform.start_state = -1;  // random-walk data uses uniform starts
    EnvTask task_b_uniform = task_b;
    task_b_uniform.start_state = -1;

    TransferResult result;
    // Reward-predictive representation: dataset-form LSFM on Task A.
    TransitionDataset dataset_a =
        collect_dataset(task_a_uniform, 10000, derive_seed(master_seed, 1000));
    TrainConfig lsfm_config;
    lsfm_config.learning_rate = 0.001;
    lsfm_config.alpha_psi = 0.0001;
    lsfm_config.alpha_n = 0.0;
    lsfm_config.latent_dim = 50;
    lsfm_config.batch_size = 50;
    lsfm_config.num_steps = 50000;
    lsfm_config.gamma = task_a.mdp.gamma;
    lsfm_config.seed = derive_seed(master_seed, 1001);
    TrainResult reward_rep = train_representation(dataset_a, task_a.mdp.num_states,
                                                  task_a.mdp.num_actions, lsfm_config,
                                                  ModelKind::Lsfm);
    result.reward_predictive = agglomerative_cluster(reward_rep.phi.phi, 50, std::nullopt);

    // Value-predictive representation: trainable fitted Q-iteration on Task A.
    TrainConfig fq_config;
    fq_config.learning_rate = 0.001;
    fq_config.batch_size = 50;
    fq_config.num_steps = 50000;
    fq_config.gamma = task_a.mdp.gamma;
    fq_config.seed = derive_seed(master_seed, 1002);
    StateRepresentation phi0{
        random_phi(task_a.mdp.num_states, 50, derive_seed(master_seed, 1003))};
    FittedQResult value_rep = fitted_q_iteration(dataset_a, phi0, true, fq_config,
                                                 task_a.mdp.num_actions, task_a.terminal);
    result.value_predictive = agglomerative_cluster(value_rep.phi.phi, 50, std::nullopt);

    Eigen::MatrixXd reward_one_hot = abstraction_one_hot(result.reward_predictive);
    Eigen::MatrixXd value_one_hot = abstraction_one_hot(result.value_predictive);

    std::map<std::string, std::map<int, int>> successes;
    for (std::size_t si = 0; si < dataset_sizes.size(); ++si) {
        int size = dataset_sizes[si];
        for (int rep = 0; rep < repeats; ++rep) {
            unsigned long long seed =
                derive_seed(master_seed, 2000 + 100 * si + static_cast<unsigned long long>(rep));
            TransitionDataset dataset_b = collect_dataset(task_b_uniform, size, seed);
            unsigned long long eval_seed = derive_seed(seed, 7);

            auto frozen_run = [&](const Eigen::MatrixXd& phi) {
                FittedQResult fit =
                    fitted_q_iteration(dataset_b, StateRepresentation{phi}, false,
                                       transfer_eval_config(derive_seed(seed, 8)),
                                       task_b.mdp.num_actions, task_b.terminal);
                return evaluate_policy_on_task(task_b, greedy_from_q_table(fit.q_values()), 20,
                                               22, eval_seed);
            };
            if (frozen_run(reward_one_hot)) successes["reward_predictive"][size] += 1;
            if (frozen_run(value_one_hot)) successes["value_predictive"][size] += 1;

            TabularMdp model = empirical_model(dataset_b, task_b);
            auto greedy = value_iteration(model, 1e-8).greedy_action;
            if (evaluate_policy_on_task(task_b, greedy, 20, 22, eval_seed))
                successes["tabular"][size] += 1;
        }
    }
    for (const auto& method : {"reward_predictive", "value_predictive", "tabular"})
        for (int size : dataset_sizes)
            result.cells.push_back({method, size,
                                    static_cast<double>(successes[method][size]) / repeats});
    return result;
}

// ---------------------------------------------------------------------------
// Combination lock
// ---------------------------------------------------------------------------

LockAbstractions build_lock_abstractions(unsigned long long seed) {
    EnvTask training = build_lock(LockKind::Training);
    LockAbstractions abs;
    abs.baseline = DiscreteAbstraction::identity(training.mdp.num_states);
    abs.ignore_dial = lock_ignore_dial_abstraction(2);

    // Training at lr 0.1 with a full-weight SF term collapses the rows of
    // states sharing a (left, middle) pair; weaker settings leave the random
    // initialization noise in Phi and clustering cannot recover the blocks.
    TrainConfig config;
    config.learning_rate = 0.1;
    config.alpha_psi = 1.0;
    config.latent_dim = 25;
    config.num_steps = 100000;
    config.gamma = training.mdp.gamma;
    config.seed = seed;
    TrainResult trained = train_representation(training.mdp, config, ModelKind::Lsfm);
    abs.reward_pred = agglomerative_cluster(trained.phi.phi, 25, std::nullopt);

    abs.value_pred = q_star_irrelevance_abstraction(training.mdp, 1e-4);
    return abs;
}

std::vector<LockEpisodeRow> run_lock_experiment(LockKind task, const LockAbstractions& abs,
                                                const std::vector<std::string>& agents,
                                                int episodes, int repeats,
                                                unsigned long long master_seed) {
    EnvTask env = build_lock(task);
    std::map<std::string, const DiscreteAbstraction*> table = {
        {"baseline", &abs.baseline},
        {"ignore-dial", &abs.ignore_dial},
        {"reward-pred", &abs.reward_pred},
        {"value-pred", &abs.value_pred},
    };
    std::vector<LockEpisodeRow> rows;
    for (std::size_t ai = 0; ai < agents.size(); ++ai) {
        auto it = table.find(agents[ai]);
        if (it == table.end())
            throw std::invalid_argument("run_lock_experiment: unknown agent " + agents[ai]);
        for (int rep = 0; rep < repeats; ++rep) {
            auto lengths = abstract_q_learning(
                env, *it->second, 0.9, 0.05, 1.0, episodes, 5000,
                derive_seed(master_seed, 10000 * (ai + 1) + static_cast<unsigned long long>(rep)));
            for (int ep = 0; ep < static_cast<int>(lengths.size()); ++ep)
                rows.push_back({agents[ai], rep, ep, lengths[ep]});
        }
    }
    return rows;
}

double mean_episode_length(const std::vector<LockEpisodeRow>& rows, const std::string& agent) {
    double sum = 0.0;
    int count = 0;
    for (const auto& row : rows)
        if (row.agent == agent) {
            sum += row.steps;
            ++count;
        }
    if (count == 0) throw std::invalid_argument("mean_episode_length: no rows for " + agent);
    return sum / count;
}

}  // namespace sfrl
