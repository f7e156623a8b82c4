#include "sfrl/envs.hpp"

#include <iostream>
#include <stdexcept>

namespace sfrl {

namespace {

char at(const std::vector<std::string>& lines, int row, int col) {
    if (row < 0 || row >= static_cast<int>(lines.size())) return ' ';
    if (col < 0 || col >= static_cast<int>(lines[row].size())) return ' ';
    return lines[row][col];
}

std::pair<int, int> edge_key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

}  // namespace

GridWorldSpec parse_grid_ascii(const std::vector<std::string>& lines, double slip) {
    GridWorldSpec spec;
    spec.slip = slip;
    spec.height = (static_cast<int>(lines.size()) + 1) / 2;
    int max_len = 0;
    for (const auto& line : lines) max_len = std::max(max_len, static_cast<int>(line.size()));
    spec.width = (max_len + 1) / 2;
    for (int r = 0; r < spec.height; ++r) {
        for (int c = 0; c < spec.width; ++c) {
            char ch = at(lines, 2 * r, 2 * c);
            int s = spec.cell(r, c);
            switch (ch) {
                case '.':
                    break;
                case 'S':
                    spec.start = s;
                    break;
                case 'G':
                    spec.goal = s;
                    break;
                case '~':
                    spec.puddles.push_back(s);
                    break;
                default:
                    throw std::invalid_argument("parse_grid_ascii: unknown cell character");
            }
            if (c + 1 < spec.width && at(lines, 2 * r, 2 * c + 1) == '#')
                spec.blocked_edges.insert(edge_key(s, spec.cell(r, c + 1)));
            if (r + 1 < spec.height && at(lines, 2 * r + 1, 2 * c) == '#')
                spec.blocked_edges.insert(edge_key(s, spec.cell(r + 1, c)));
        }
    }
    return spec;
}

EnvTask make_grid_env(const GridWorldSpec& spec, double gamma,
                      const Eigen::VectorXd& enter_reward, const std::vector<char>& terminal) {
    const int n = spec.width * spec.height;
    const int num_actions = 4;
    static const int dr[4] = {-1, 1, 0, 0};  // up, down, left, right
    static const int dc[4] = {0, 0, -1, 1};

    EnvTask env;
    env.mdp.num_states = n;
    env.mdp.num_actions = num_actions;
    env.mdp.gamma = gamma;
    env.grid_width = spec.width;
    env.grid_height = spec.height;
    env.start_state = spec.start.value_or(-1);
    env.terminal = terminal;
    env.enter_reward = enter_reward;

    for (int a = 0; a < num_actions; ++a) {
        Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
        for (int r = 0; r < spec.height; ++r) {
            for (int c = 0; c < spec.width; ++c) {
                int s = spec.cell(r, c);
                if (!terminal.empty() && terminal[s]) {
                    p(s, s) = 1.0;
                    continue;
                }
                int rr = r + dr[a], cc = c + dc[a];
                int target = s;
                if (rr >= 0 && rr < spec.height && cc >= 0 && cc < spec.width &&
                    !spec.blocked_edges.count(edge_key(s, spec.cell(rr, cc))))
                    target = spec.cell(rr, cc);
                p(s, target) += 1.0 - spec.slip;
                p(s, s) += spec.slip;
            }
        }
        env.mdp.transitions.push_back(p);
        Eigen::VectorXd rew = env.mdp.transitions[a] * enter_reward;
        if (!terminal.empty())
            for (int s = 0; s < n; ++s)
                if (terminal[s]) rew[s] = 0.0;
        env.mdp.rewards.push_back(rew);
    }
    env.mdp.reward_bound = std::max(1.0, enter_reward.cwiseAbs().maxCoeff());
    env.mdp.validate();
    return env;
}

EnvTask build_column_world() {
    std::vector<std::string> lines = {
        ". . .",
        "     ",
        ". . .",
        "     ",
        ". . .",
    };
    GridWorldSpec spec = parse_grid_ascii(lines, 0.0);
    Eigen::VectorXd enter = Eigen::VectorXd::Zero(9);
    for (int r = 0; r < 3; ++r) enter[spec.cell(r, 2)] = 1.0;  // right column
    EnvTask env = make_grid_env(spec, 0.9, enter, {});
    env.start_state = 0;
    return env;
}

namespace {

EnvTask chain_env(int n, int num_actions, double gamma) {
    EnvTask env;
    env.mdp.num_states = n;
    env.mdp.num_actions = num_actions;
    env.mdp.gamma = gamma;
    env.mdp.transitions.assign(num_actions, Eigen::MatrixXd::Zero(n, n));
    env.mdp.rewards.assign(num_actions, Eigen::VectorXd::Zero(n));
    return env;
}

}  // namespace

EnvTask build_three_state() {
    EnvTask env = chain_env(3, 1, 0.9);
    env.mdp.transitions[0](0, 1) = 1.0;
    env.mdp.transitions[0](1, 2) = 1.0;
    env.mdp.transitions[0](2, 2) = 1.0;
    env.mdp.rewards[0][2] = 1.0;  // only the self-loop at the last state pays
    env.mdp.validate();
    env.start_state = 0;
    return env;
}

EnvTask build_five_state() {
    // States: 0=A, 1=B, 2=C, 3=D, 4=E.
    EnvTask env = chain_env(5, 1, 0.9);
    auto& p = env.mdp.transitions[0];
    p(0, 2) = 1.0;
    p(1, 3) = 0.5;
    p(1, 4) = 0.5;
    p(2, 2) = 1.0;
    p(3, 3) = 1.0;
    p(4, 4) = 1.0;
    env.mdp.rewards[0] << 0.0, 0.0, 0.5, 1.0, 0.0;
    env.mdp.validate();
    return env;
}

EnvTask build_counterexample() {
    // States: 0=A, 1=B, 2=C, 3=D; actions: 0=a, 1=b.
    EnvTask env = chain_env(4, 2, 0.9);
    auto& pa = env.mdp.transitions[0];
    auto& pb = env.mdp.transitions[1];
    pa(0, 3) = 1.0;
    pb(0, 2) = 1.0;
    pa(1, 2) = 1.0;
    pb(1, 3) = 1.0;
    pa(2, 2) = pb(2, 2) = 1.0;
    pa(3, 3) = pb(3, 3) = 1.0;
    env.mdp.rewards[0] << 0.0, 0.0, 0.5, 1.0;
    env.mdp.rewards[1] << 0.0, 0.0, 0.5, 0.0;
    env.mdp.validate();
    return env;
}

EnvTask build_puddle_world() {
    std::vector<std::string> lines = {
        ". . . . . . . . . G",
        "                   ",
        ". . . . . . . . . .",
        "                   ",
        ". . . . . . . . . .",
        "                   ",
        ". . . . . . . . . .",
        "                   ",
        ". . ~ ~ ~ ~ ~ ~ . .",
        "                   ",
        ". . ~ ~ ~ ~ ~ ~ . .",
        "                   ",
        ". . ~ ~ ~ ~ ~ ~ . .",
        "                   ",
        ". . . . . . . . . .",
        "                   ",
        ". . . . . . . . . .",
        "                   ",
        "S . . . . . . . . .",
    };
    GridWorldSpec spec = parse_grid_ascii(lines, 0.05);
    const int n = spec.width * spec.height;
    Eigen::VectorXd enter = Eigen::VectorXd::Zero(n);
    for (int s : spec.puddles) enter[s] = -1.0;
    enter[*spec.goal] = 1.0;
    std::vector<char> terminal(n, 0);
    terminal[*spec.goal] = 1;
    return make_grid_env(spec, 0.9, enter, terminal);
}

EnvTask build_transfer_task(char which) {
    std::vector<std::string> lines;
    if (which == 'A') {
        lines = {
            "S . . . . . . . . .",
            "                   ",
            ". . . . . . . . . .",
            "                   ",
            ". . . . . . . . . .",
            "                   ",
            ". . . . . . . . . .",
            "                   ",
            ". . . . . . . . . .",
            "      # # # #      ",
            ". . . . . . . . . .",
            "                   ",
            ". . . . . . . . . .",
            "                   ",
            ". . . . . . . . . .",
            "                   ",
            ". . . . . . . . . .",
            "                   ",
            ". . . . . . . . . G",
        };
    } else if (which == 'B') {
        lines = {
            ". . . . . . . . . G",
            "                   ",
            ". . . . . . . . . .",
            "                   ",
            ". . . . . . . . . .",
            "                   ",
            ". . . . . . . . . .",
            "                   ",
            ". . . . .#. . . . .",
            "                   ",
            "S . . . .#. . . . .",
            "                   ",
            ". . . . .#. . . . .",
            "                   ",
            ". . . . .#. . . . .",
            "                   ",
            ". . . . . . . . . .",
            "                   ",
            ". . . . . . . . . .",
        };
    } else {
        throw std::invalid_argument("build_transfer_task: which must be 'A' or 'B'");
    }
    GridWorldSpec spec = parse_grid_ascii(lines, 0.05);
    const int n = spec.width * spec.height;
    Eigen::VectorXd enter = Eigen::VectorXd::Zero(n);
    enter[*spec.goal] = 1.0;
    std::vector<char> terminal(n, 0);
    terminal[*spec.goal] = 1;
    return make_grid_env(spec, 0.9, enter, terminal);
}

CombinationLockSpec lock_spec(LockKind kind) {
    CombinationLockSpec spec;
    switch (kind) {
        case LockKind::Training:
            spec.random_dial = 2;
            spec.reversed_left = false;
            spec.rewarding = {4, 4, -1};
            spec.start_state = 0;  // (0,0,0)
            break;
        case LockKind::Test1:
            spec.random_dial = 2;
            spec.reversed_left = true;
            spec.rewarding = {2, 3, -1};
            spec.start_state = 2 * 25 + 4 * 5 + 0;  // left=2, middle=4
            break;
        case LockKind::Test2:
            spec.random_dial = 1;
            spec.reversed_left = true;
            spec.rewarding = {2, -1, 3};
            spec.start_state = 2 * 25 + 0 * 5 + 4;  // left=2, right=4
            break;
    }
    return spec;
}

namespace {

bool lock_rewarding(const CombinationLockSpec& spec, const int dials[3]) {
    for (int d = 0; d < 3; ++d)
        if (spec.rewarding[d] >= 0 && dials[d] != spec.rewarding[d]) return false;
    return true;
}

}  // namespace

EnvTask build_lock(LockKind kind) {
    CombinationLockSpec spec = lock_spec(kind);
    const int n = 125;
    EnvTask env = chain_env(n, 3, 0.9);
    env.start_state = spec.start_state;
    env.terminal.assign(n, 0);
    env.enter_reward = Eigen::VectorXd::Zero(n);
    for (int s = 0; s < n; ++s) {
        int dials[3] = {s / 25, (s / 5) % 5, s % 5};
        if (lock_rewarding(spec, dials)) {
            env.terminal[s] = 1;
            env.enter_reward[s] = 1.0;
        }
    }
    for (int a = 0; a < 3; ++a) {
        auto& p = env.mdp.transitions[a];
        for (int s = 0; s < n; ++s) {
            if (env.terminal[s]) {
                p(s, s) = 1.0;
                continue;
            }
            int dials[3] = {s / 25, (s / 5) % 5, s % 5};
            if (a != spec.random_dial) {
                int step = (a == 0 && spec.reversed_left) ? 4 : 1;  // -1 mod 5
                dials[a] = (dials[a] + step) % 5;
            }
            // The random dial re-randomizes every step regardless of action.
            for (int face = 0; face < 5; ++face) {
                dials[spec.random_dial] = face;
                p(s, dials[0] * 25 + dials[1] * 5 + dials[2]) += 0.2;
            }
        }
        env.mdp.rewards[a] = p * env.enter_reward;
        for (int s = 0; s < n; ++s)
            if (env.terminal[s]) env.mdp.rewards[a][s] = 0.0;
    }
    env.mdp.validate();
    return env;
}

DiscreteAbstraction lock_ignore_dial_abstraction(int dial) {
    if (dial < 0 || dial > 2)
        throw std::invalid_argument("lock_ignore_dial_abstraction: dial must be 0..2");
    DiscreteAbstraction abs;
    abs.cluster_of.resize(125);
    for (int s = 0; s < 125; ++s) {
        int dials[3] = {s / 25, (s / 5) % 5, s % 5};
        int kept[2];
        int k = 0;
        for (int d = 0; d < 3; ++d)
            if (d != dial) kept[k++] = dials[d];
        abs.cluster_of[s] = kept[0] * 5 + kept[1];
    }
    abs.num_clusters = 25;
    return abs;
}

TransitionDataset collect_dataset(const EnvTask& env, int count, unsigned long long seed) {
    if (count < 1) throw std::invalid_argument("collect_dataset: count must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> random_action(0, env.mdp.num_actions - 1);
    std::uniform_int_distribution<int> random_state(0, env.mdp.num_states - 1);
    auto reset = [&]() {
        if (env.start_state >= 0) return env.start_state;
        int s = random_state(rng);
        while (env.is_terminal(s)) s = random_state(rng);
        return s;
    };
    TransitionDataset data;
    data.records.reserve(count);
    int s = reset();
    for (int i = 0; i < count; ++i) {
        int a = random_action(rng);
        int s_next = sample_next_state(env.mdp, s, a, rng);
        data.records.push_back({s, a, env.realized_reward(s, a, s_next), s_next});
        s = env.is_terminal(s_next) ? reset() : s_next;
    }
    return data;
}

TransitionDataset collect_dataset_covering(const EnvTask& env, int count,
                                           unsigned long long seed) {
    for (int attempt = 0;; ++attempt) {
        TransitionDataset data = collect_dataset(env, count, seed + attempt);
        std::vector<char> seen(env.mdp.num_states * env.mdp.num_actions, 0);
        for (const auto& rec : data.records) seen[rec.s * env.mdp.num_actions + rec.a] = 1;
        bool covered = true;
        for (int s = 0; s < env.mdp.num_states && covered; ++s) {
            if (env.is_terminal(s)) continue;
            for (int a = 0; a < env.mdp.num_actions; ++a)
                if (!seen[s * env.mdp.num_actions + a]) covered = false;
        }
        if (covered) {
            if (attempt > 0)
                std::cerr << "collect_dataset_covering: reseeded " << attempt
                          << " time(s) to reach full coverage\n";
            return data;
        }
    }
}

}  // namespace sfrl
