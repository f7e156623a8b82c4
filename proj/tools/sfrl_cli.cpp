// Command-line front end: certificate suites, representation training,
// rollout evaluation, and the transfer and combination-lock studies. Every
// subcommand resolves its configuration, runs deterministically from a master
// seed, and writes config.json, results.csv, and summary.json into one run
// directory via atomic renames.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sfrl/experiments.hpp"
#include "sfrl/serialize.hpp"
#include "sfrl/td_sf.hpp"

namespace {

using sfrl::Json;

sfrl::EnvTask env_by_id(const std::string& id) {
    if (id == "column") return sfrl::build_column_world();
    if (id == "puddle") return sfrl::build_puddle_world();
    if (id == "three-state") return sfrl::build_three_state();
    if (id == "five-state") return sfrl::build_five_state();
    if (id == "transfer-a") return sfrl::build_transfer_task('A');
    if (id == "transfer-b") return sfrl::build_transfer_task('B');
    if (id == "lock-training") return sfrl::build_lock(sfrl::LockKind::Training);
    if (id == "lock-test1") return sfrl::build_lock(sfrl::LockKind::Test1);
    if (id == "lock-test2") return sfrl::build_lock(sfrl::LockKind::Test2);
    throw std::invalid_argument("unknown environment id: " + id);
}

sfrl::TrainConfig config_from_json(const Json& j, const sfrl::TrainConfig& base) {
    sfrl::TrainConfig c = base;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.alpha_psi = j.value("alpha_psi", c.alpha_psi);
    c.alpha_p = j.value("alpha_p", c.alpha_p);
    c.alpha_n = j.value("alpha_n", c.alpha_n);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.num_steps = j.value("num_steps", c.num_steps);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.gamma = j.value("gamma", c.gamma);
    if (c.learning_rate <= 0 || c.batch_size <= 0 || c.num_steps < 0 || c.latent_dim <= 0 ||
        c.gamma < 0 || c.gamma >= 1)
        throw std::invalid_argument("train config: values out of range");
    return c;
}

Json config_to_json(const sfrl::TrainConfig& c) {
    return Json{{"learning_rate", c.learning_rate}, {"alpha_psi", c.alpha_psi},
                {"alpha_p", c.alpha_p},             {"alpha_n", c.alpha_n},
                {"batch_size", c.batch_size},       {"num_steps", c.num_steps},
                {"latent_dim", c.latent_dim},       {"gamma", c.gamma},
                {"seed", c.seed}};
}

void write_run(const std::string& dir, const Json& config, const std::string& results_csv,
               const Json& summary) {
    sfrl::atomic_write_file(dir + "/config.json", config.dump(2) + "\n");
    sfrl::atomic_write_file(dir + "/results.csv", results_csv);
    sfrl::atomic_write_file(dir + "/summary.json", summary.dump(2) + "\n");
}

int cmd_bounds_check(int instances, unsigned long long seed, const std::string& output) {
    sfrl::BoundsReport report = sfrl::run_bounds_check(instances, seed);
    std::ostringstream csv;
    csv << "index,lemma1_lhs,lemma1_rhs,lemma1_holds,theorem3_ok,theorem4_ok,theorem5_ok,"
           "prop2_delta_sq,prop2_bound,prop2_holds\n";
    for (const auto& row : report.instances)
        csv << row.index << ',' << sfrl::format_double(row.lemma1.lhs) << ','
            << sfrl::format_double(row.lemma1.rhs) << ',' << int(row.lemma1.holds) << ','
            << int(row.theorem3_ok) << ',' << int(row.theorem4_ok) << ','
            << int(row.theorem5_ok) << ',' << sfrl::format_double(row.prop2.delta * row.prop2.delta)
            << ',' << sfrl::format_double(row.prop2.bound) << ',' << int(row.prop2.holds) << '\n';
    Json summary{{"all_hold", report.all_hold},
                 {"instances", instances},
                 {"exact_instance", sfrl::error_report_to_json(report.exact_instance)}};
    write_run(output, Json{{"command", "bounds-check"}, {"instances", instances}, {"seed", seed}},
              csv.str(), summary);
    if (!report.all_hold) {
        std::cerr << "bounds-check: at least one certificate failed\n";
        return 1;
    }
    return 0;
}

int cmd_train(const std::string& env_id, const std::string& model, const std::string& form,
              const std::string& config_file, unsigned long long seed,
              const std::string& output) {
    sfrl::EnvTask env = env_by_id(env_id);
    sfrl::TrainConfig base;
    base.gamma = env.mdp.gamma;
    int dataset_size = 10000;
    if (env_id == "column") {
        base.learning_rate = 0.1;
        base.alpha_psi = 1.0;
        base.latent_dim = 3;
        base.num_steps = 4000;
    } else if (env_id == "puddle") {
        base.learning_rate = 0.0005;
        base.alpha_psi = 0.01;
        base.latent_dim = 80;
        base.num_steps = 50000;
    } else if (env_id == "lock-training") {
        base.learning_rate = 0.1;
        base.alpha_psi = 1.0;
        base.latent_dim = 25;
        base.num_steps = 100000;
    }
    if (model == "lam") {
        base.alpha_p = 1.0;
        base.alpha_n = form == "dataset" ? 0.1 : 0.0;
    }
    Json overrides = Json::object();
    if (!config_file.empty()) overrides = Json::parse(sfrl::read_file(config_file));
    sfrl::TrainConfig config = config_from_json(overrides, base);
    config.seed = seed;
    dataset_size = overrides.value("dataset_size", dataset_size);

    sfrl::ModelKind kind = model == "lam" ? sfrl::ModelKind::Lam : sfrl::ModelKind::Lsfm;
    sfrl::TrainResult result;
    if (form == "matrix") {
        result = sfrl::train_representation(env.mdp, config, kind);
    } else {
        sfrl::TransitionDataset data =
            sfrl::collect_dataset_covering(env, dataset_size, sfrl::derive_seed(seed, 0));
        sfrl::TrainConfig dconfig = config;
        dconfig.seed = sfrl::derive_seed(seed, 1);
        result = sfrl::train_representation(data, env.mdp.num_states, env.mdp.num_actions,
                                            dconfig, kind);
    }

    std::ostringstream csv;
    csv << "step,total,l_r,l_psi,l_n\n";
    for (const auto& row : result.trace)
        csv << row.step << ',' << sfrl::format_double(row.total) << ','
            << sfrl::format_double(row.l_r) << ',' << sfrl::format_double(row.l_psi) << ','
            << sfrl::format_double(row.l_n) << '\n';

    sfrl::Checkpoint cp;
    cp.phi = result.phi;
    cp.gamma = config.gamma;
    if (kind == sfrl::ModelKind::Lam) {
        cp.lam = result.lam;
        cp.has_lam = true;
    } else {
        cp.lsfm = result.lsfm;
        cp.has_lsfm = true;
    }
    sfrl::atomic_write_file(output + "/checkpoint.json",
                            sfrl::checkpoint_to_json(cp).dump(2) + "\n");

    Json resolved = config_to_json(config);
    resolved["command"] = "train";
    resolved["env"] = env_id;
    resolved["model"] = model;
    resolved["form"] = form;
    if (form == "dataset") resolved["dataset_size"] = dataset_size;
    write_run(output, resolved, csv.str(),
              Json{{"final_loss", result.final_loss}, {"steps", config.num_steps}});
    return 0;
}

int cmd_rollout_eval(const std::string& checkpoint_file, const std::string& env_id,
                     int sequences, int horizon, unsigned long long seed,
                     const std::string& output) {
    sfrl::EnvTask env = env_by_id(env_id);
    sfrl::Checkpoint cp =
        sfrl::checkpoint_from_json(Json::parse(sfrl::read_file(checkpoint_file)));
    if (cp.phi.phi.rows() != env.mdp.num_states)
        throw std::invalid_argument("rollout-eval: checkpoint does not match environment size");
    sfrl::Lam lam;
    if (cp.has_lam)
        lam = cp.lam;
    else if (cp.has_lsfm)
        lam = sfrl::lam_from_lsfm(cp.lsfm, cp.gamma);
    else
        throw std::invalid_argument("rollout-eval: checkpoint carries no model");

    std::vector<double> err = sfrl::rollout_eval(env.mdp, cp.phi, lam, sequences, horizon, seed);
    std::ostringstream csv;
    csv << "step,mean_abs_error\n";
    for (int t = 0; t < horizon; ++t)
        csv << (t + 1) << ',' << sfrl::format_double(err[t]) << '\n';
    double total = 0.0;
    for (double e : err) total += e;
    write_run(output,
              Json{{"command", "rollout-eval"},
                   {"checkpoint", checkpoint_file},
                   {"env", env_id},
                   {"sequences", sequences},
                   {"horizon", horizon},
                   {"seed", seed}},
              csv.str(), Json{{"mean_error", total / horizon}});
    return 0;
}

int cmd_transfer(const std::vector<int>& sizes, int repeats, unsigned long long seed,
                 const std::string& output) {
    for (int s : sizes)
        if (s < 0) throw std::invalid_argument("transfer: dataset sizes must be >= 0");
    sfrl::TransferResult result = sfrl::run_transfer_experiment(sizes, repeats, seed);
    std::ostringstream csv;
    csv << "method,dataset_size,fraction_solved\n";
    for (const auto& cell : result.cells)
        csv << cell.method << ',' << cell.dataset_size << ','
            << sfrl::format_double(cell.fraction_solved) << '\n';

    double best_margin = -1.0;
    double worst_value_pred = 0.0;
    for (const auto& cell : result.cells) {
        if (cell.method == "value_predictive")
            worst_value_pred = std::max(worst_value_pred, cell.fraction_solved);
        if (cell.method != "reward_predictive") continue;
        for (const auto& other : result.cells)
            if (other.method == "tabular" && other.dataset_size == cell.dataset_size)
                best_margin = std::max(best_margin, cell.fraction_solved - other.fraction_solved);
    }
    Json summary{{"reward_pred_beats_tabular_by", best_margin},
                 {"value_pred_max_fraction", worst_value_pred},
                 {"reward_pred_margin_ok", best_margin >= 0.2},
                 {"value_pred_low_ok", worst_value_pred <= 0.1}};
    write_run(output,
              Json{{"command", "transfer"},
                   {"dataset_sizes", sizes},
                   {"repeats", repeats},
                   {"seed", seed}},
              csv.str(), summary);
    return 0;
}

int cmd_lock(const std::string& task, const std::vector<std::string>& agents, int episodes,
             int repeats, unsigned long long seed, const std::string& output) {
    sfrl::LockKind kind;
    if (task == "test1")
        kind = sfrl::LockKind::Test1;
    else if (task == "test2")
        kind = sfrl::LockKind::Test2;
    else
        throw std::invalid_argument("lock: task must be test1 or test2");

    sfrl::LockAbstractions abs = sfrl::build_lock_abstractions(sfrl::derive_seed(seed, 999));
    auto rows = sfrl::run_lock_experiment(kind, abs, agents, episodes, repeats, seed);
    std::ostringstream csv;
    csv << "agent,seed_index,episode,steps\n";
    for (const auto& row : rows)
        csv << row.agent << ',' << row.seed_index << ',' << row.episode << ',' << row.steps
            << '\n';
    Json means = Json::object();
    for (const auto& agent : agents) means[agent] = sfrl::mean_episode_length(rows, agent);
    write_run(output,
              Json{{"command", "lock"},
                   {"task", task},
                   {"agents", agents},
                   {"episodes", episodes},
                   {"repeats", repeats},
                   {"seed", seed}},
              csv.str(), Json{{"mean_episode_length", means}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Successor-feature state representation toolkit"};
    app.require_subcommand(1);

    unsigned long long seed = 0;
    std::string output = "run";

    auto* bounds = app.add_subcommand("bounds-check", "Randomized bound-certificate suite");
    int instances = 200;
    bounds->add_option("--instances", instances, "Number of random instances")
        ->check(CLI::NonNegativeNumber);
    bounds->add_option("--seed", seed, "Master seed");
    bounds->add_option("--output", output, "Run directory");

    auto* train = app.add_subcommand("train", "Train a representation");
    std::string env_id, model = "lsfm", form = "matrix", config_file;
    train->add_option("--env", env_id, "Environment id")->required();
    train->add_option("--model", model, "Model family")
        ->check(CLI::IsMember({"lsfm", "lam"}));
    train->add_option("--form", form, "Loss form")
        ->check(CLI::IsMember({"matrix", "dataset"}));
    train->add_option("--config", config_file, "JSON config overrides")
        ->check(CLI::ExistingFile);
    train->add_option("--seed", seed, "Master seed");
    train->add_option("--output", output, "Run directory");

    auto* rollout = app.add_subcommand("rollout-eval", "Rollout reward-prediction error");
    std::string checkpoint_file;
    int sequences = 100, horizon = 200;
    rollout->add_option("--checkpoint", checkpoint_file, "Checkpoint JSON")
        ->required()
        ->check(CLI::ExistingFile);
    rollout->add_option("--env", env_id, "Environment id")->required();
    rollout->add_option("--sequences", sequences)->check(CLI::PositiveNumber);
    rollout->add_option("--horizon", horizon)->check(CLI::PositiveNumber);
    rollout->add_option("--seed", seed, "Master seed");
    rollout->add_option("--output", output, "Run directory");

    auto* transfer = app.add_subcommand("transfer", "Grid-world transfer study");
    std::vector<int> sizes = {250, 500, 1000, 2000, 4000, 8000};
    int repeats = 20;
    transfer->add_option("--dataset-sizes", sizes, "Transition counts to sweep");
    transfer->add_option("--repeats", repeats)->check(CLI::PositiveNumber);
    transfer->add_option("--seed", seed, "Master seed");
    transfer->add_option("--output", output, "Run directory");

    auto* lock = app.add_subcommand("lock", "Combination-lock transfer study");
    std::string task;
    std::vector<std::string> agents = {"baseline", "ignore-dial", "value-pred", "reward-pred"};
    int episodes = 100;
    lock->add_option("--task", task, "test1 or test2")->required();
    lock->add_option("--agents", agents, "Agent list")->delimiter(',');
    lock->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
    lock->add_option("--repeats", repeats)->check(CLI::PositiveNumber);
    lock->add_option("--seed", seed, "Master seed");
    lock->add_option("--output", output, "Run directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (bounds->parsed()) return cmd_bounds_check(instances, seed, output);
        if (train->parsed()) return cmd_train(env_id, model, form, config_file, seed, output);
        if (rollout->parsed())
            return cmd_rollout_eval(checkpoint_file, env_id, sequences, horizon, seed, output);
        if (transfer->parsed()) return cmd_transfer(sizes, repeats, seed, output);
        if (lock->parsed()) return cmd_lock(task, agents, episodes, repeats, seed, output);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
