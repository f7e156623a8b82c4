// Acceptance gate: runs every headline verification end to end and prints one
// PASS/FAIL line per criterion. Exits nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sfrl/experiments.hpp"
#include "sfrl/serialize.hpp"
#include "sfrl/td_sf.hpp"

using namespace sfrl;

namespace {

int failures = 0;

void report(int index, const char* name, bool ok, double seconds, const std::string& detail) {
    std::printf("[%s] %2d %-28s (%6.1fs) %s\n", ok ? "PASS" : "FAIL", index, name, seconds,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double run_timed(const std::function<bool(std::string&)>& body, int index, const char* name) {
    auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report(index, name, ok, seconds, detail);
    return seconds;
}

// --- criterion 1: randomized bound certificates ---------------------------

bool criterion_bounds(std::string& detail) {
    BoundsReport report = run_bounds_check(200, 1);
    int held = 0;
    for (const auto& inst : report.instances) held += inst.all_ok();
    std::ostringstream out;
    out << held << "/200 instances hold";
    detail = out.str();
    return report.all_hold && held == 200;
}

// --- criterion 2: TD/SF iterate equivalence --------------------------------

std::vector<OnlineTransition> column_walk(const EnvTask& env, int steps,
                                          unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> action(0, env.mdp.num_actions - 1);
    std::vector<OnlineTransition> out;
    int s = env.start_state;
    for (int i = 0; i < steps; ++i) {
        int a = action(rng);
        int s_next = sample_next_state(env.mdp, s, a, rng);
        out.push_back({s, a, env.realized_reward(s, a, s_next), s_next, false});
        s = s_next;
    }
    return out;
}

bool criterion_td_sf(std::string& detail) {
    EnvTask column = build_column_world();
    BasisFunction xi = BasisFunction::one_hot_tabular(9, 4);
    Eigen::VectorXd w(36);
    for (int s = 0; s < 9; ++s)
        for (int a = 0; a < 4; ++a) w[s * 4 + a] = column.mdp.rewards[a][s];
    TdState theta0;
    theta0.theta = Eigen::VectorXd::Zero(36);
    SfState g0;
    g0.g = Eigen::MatrixXd::Zero(36, 36);
    g0.w = w;
    auto stream = column_walk(column, 10000, 2);

    double worst = 0.0;
    bool ok = true;
    for (bool greedy : {true, false}) {
        BootstrapMode mode = greedy ? BootstrapMode::make_greedy()
                                    : BootstrapMode::fixed(TabularPolicy::uniform(9, 4));
        EquivalenceResult r =
            prop1_equivalence_run(xi, w, theta0, g0, stream, mode, 0.1, column.mdp.gamma);
        double scale = std::max(1.0, r.theta_scale);
        worst = std::max(worst, r.max_deviation / scale);
        ok = ok && r.max_deviation <= 1e-9 * scale;
    }
    std::ostringstream out;
    out << "max relative deviation " << worst;
    detail = out.str();
    return ok;
}

// --- criterion 3: exact models achieve zero error metrics ------------------

bool criterion_exact_zero(std::string& detail) {
    TabularMdp column = build_column_world().mdp;
    Partition partition = bisimulation_partition(column);
    StateRepresentation phi{one_hot_representation(partition)};
    Lam lam = exact_quotient_lam(column, partition);
    Lsfm lsfm = exact_quotient_lsfm(column, partition);
    ErrorReport col = error_metrics(column, phi, lam, lsfm);
    bool col_ok = col.eps_r < 1e-10 && col.eps_p < 1e-10 && col.eps_psi < 1e-10 &&
                  check_theorem1(column, phi, lam, 1e-8).holds() &&
                  check_theorem2(column, phi, lsfm, 1e-8).holds();

    TabularMdp five = build_five_state().mdp;
    StateRepresentation fphi;
    fphi.phi.resize(5, 3);
    fphi.phi << 1, 0, 0, 1, 0, 0, 0, 0.5, 0.5, 0, 1, 0, 0, 0, 1;
    Lam flam;
    Eigen::MatrixXd m(3, 3);
    m << 0, 0.5, 0.5, 0, 1, 0, 0, 0, 1;
    Eigen::VectorXd w(3);
    w << 0, 1, 0;
    flam.m = {m};
    flam.w = {w};
    Lsfm flsfm = lsfm_from_lam(flam, five.gamma);
    ErrorReport fr = error_metrics(five, fphi, flam, flsfm);
    bool five_ok = fr.eps_r < 1e-10 && fr.eps_p < 1e-10 && fr.eps_psi < 1e-10;

    std::ostringstream out;
    out << "column eps=(" << col.eps_r << "," << col.eps_p << "," << col.eps_psi
        << ") five-state eps=(" << fr.eps_r << "," << fr.eps_p << "," << fr.eps_psi << ")";
    detail = out.str();
    return col_ok && five_ok;
}

// --- criterion 4: column-world cluster recovery -----------------------------

bool criterion_column(std::string& detail) {
    int matched = 0;
    for (unsigned long long seed = 0; seed < 20; ++seed)
        matched += run_column_training(seed).clusters_match_columns;
    std::ostringstream out;
    out << matched << "/20 seeds recover the column partition";
    detail = out.str();
    return matched >= 18;
}

// --- criterion 5: puddle-world rollout dominance ----------------------------

bool criterion_puddle(std::string& detail) {
    PuddleResult r = run_puddle_experiment(3);
    bool ok = true;
    double max_trained = 0.0, min_baseline = 1e9;
    for (int t = 0; t < 50; ++t) {
        ok = ok && r.trained_error[t] < r.baseline_error[t];
        max_trained = std::max(max_trained, r.trained_error[t]);
        min_baseline = std::min(min_baseline, r.baseline_error[t]);
    }
    std::ostringstream out;
    out << "t<=50 trained<=" << max_trained << " baseline>=" << min_baseline;
    detail = out.str();
    return ok;
}

// --- criterion 6: successor feature oracles ---------------------------------

bool criterion_sf_oracle(std::string& detail) {
    TabularMdp five = build_five_state().mdp;
    StateRepresentation id;
    id.phi = Eigen::MatrixXd::Identity(5, 5);
    TabularPolicy pi = TabularPolicy::uniform(5, 1);
    auto psi = compute_sf(five, id.phi, pi);
    Eigen::RowVectorXd expected(5);
    expected << 1, 0, 9, 0, 0;
    double dev = (psi[0].row(0) - expected).lpNorm<Eigen::Infinity>();
    bool psi_ok = dev <= 1e-8;

    // Footnote identity: P_a = (Psi_a - I) (gamma Psi_pi)^{-1}.
    TabularMdp column = build_column_world().mdp;
    TabularPolicy upi = TabularPolicy::uniform(9, 4);
    Eigen::MatrixXd sr = compute_sr(column, upi);
    auto sr_a = compute_sr_action(column, upi);
    double max_p_err = 0.0;
    for (int a = 0; a < 4; ++a) {
        Eigen::MatrixXd p =
            (sr_a[a] - Eigen::MatrixXd::Identity(9, 9)) * (column.gamma * sr).inverse();
        max_p_err = std::max(max_p_err, (p - column.transitions[a]).cwiseAbs().maxCoeff());
    }
    std::ostringstream out;
    out << "psi(A) deviation " << dev << ", SR transition recovery error " << max_p_err;
    detail = out.str();
    return psi_ok && max_p_err < 1e-8;
}

// --- criterion 7: grid-world transfer ---------------------------------------

bool criterion_transfer(std::string& detail) {
    const std::vector<int> sizes = {250, 500, 1000, 2000, 4000, 8000};
    TransferResult r = run_transfer_experiment(sizes, 20, 9);
    std::map<std::string, std::map<int, double>> frac;
    for (const auto& cell : r.cells) frac[cell.method][cell.dataset_size] = cell.fraction_solved;

    double best_margin = -1.0;
    double worst_value_pred = 0.0;
    for (int size : sizes) {
        best_margin =
            std::max(best_margin, frac["reward_predictive"][size] - frac["tabular"][size]);
        worst_value_pred = std::max(worst_value_pred, frac["value_predictive"][size]);
    }
    std::ostringstream out;
    out << "best reward-pred margin over tabular " << best_margin << ", max value-pred fraction "
        << worst_value_pred;
    detail = out.str();
    return best_margin >= 0.2 && worst_value_pred <= 0.1;
}

// --- criterion 8: combination lock ------------------------------------------

bool criterion_lock(std::string& detail) {
    LockAbstractions abs = build_lock_abstractions(5);
    const std::vector<std::string> agents = {"baseline", "ignore-dial", "reward-pred",
                                             "value-pred"};
    auto rows1 = run_lock_experiment(LockKind::Test1, abs, agents, 100, 20, 7);
    auto rows2 = run_lock_experiment(LockKind::Test2, abs, agents, 100, 20, 7);

    double b1 = mean_episode_length(rows1, "baseline");
    double i1 = mean_episode_length(rows1, "ignore-dial");
    double r1 = mean_episode_length(rows1, "reward-pred");
    double b2 = mean_episode_length(rows2, "baseline");
    double r2 = mean_episode_length(rows2, "reward-pred");
    double v2 = mean_episode_length(rows2, "value-pred");

    std::ostringstream out;
    out << "test1 base=" << b1 << " ignore=" << i1 << " reward=" << r1 << "; test2 base=" << b2
        << " reward=" << r2 << " value=" << v2;
    detail = out.str();
    return i1 < b1 && r1 < b1 && r2 > b2 && v2 > b2;
}

// --- criterion 9: gradient checks -------------------------------------------

struct FdInstance {
    TransitionDataset dataset;
    TabularMdp mdp;
    StateRepresentation phi;
    Lam lam;
    Lsfm lsfm;
    double gamma = 0.9;
};

FdInstance fd_instance(unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    FdInstance inst;
    int ns = 3 + static_cast<int>(rng() % 3);
    int na = 1 + static_cast<int>(rng() % 2);
    int n = 2 + static_cast<int>(rng() % 2);
    inst.gamma = 0.5 + 0.4 * unit(rng);
    inst.mdp.num_states = ns;
    inst.mdp.num_actions = na;
    inst.mdp.gamma = inst.gamma;
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
    for (int s = 0; s < ns; ++s)
        for (int j = 0; j < n; ++j) inst.phi.phi(s, j) = 2.0 * unit(rng) - 1.0;
    for (int a = 0; a < na; ++a) {
        Eigen::MatrixXd m(n, n), f(n, n);
        Eigen::VectorXd w(n), fw(n);
        for (int i = 0; i < n; ++i) {
            w[i] = 2.0 * unit(rng) - 1.0;
            fw[i] = 2.0 * unit(rng) - 1.0;
            for (int j = 0; j < n; ++j) {
                m(i, j) = 2.0 * unit(rng) - 1.0;
                f(i, j) = 2.0 * unit(rng) - 1.0;
            }
        }
        inst.lam.m.push_back(m);
        inst.lam.w.push_back(w);
        inst.lsfm.f.push_back(f);
        inst.lsfm.w.push_back(fw);
    }
    for (int i = 0; i < 3 * ns * na; ++i)
        inst.dataset.records.push_back({static_cast<int>(rng() % ns),
                                        static_cast<int>(rng() % na), 2.0 * unit(rng) - 1.0,
                                        static_cast<int>(rng() % ns)});
    return inst;
}

double fd_block(Eigen::MatrixXd& x, const Eigen::MatrixXd& analytic,
                const std::function<double()>& f) {
    const double h = 1e-5;
    double worst = 0.0;
    for (int r = 0; r < x.rows(); ++r)
        for (int c = 0; c < x.cols(); ++c) {
            double saved = x(r, c);
            x(r, c) = saved + h;
            double up = f();
            x(r, c) = saved - h;
            double down = f();
            x(r, c) = saved;
            double numeric = (up - down) / (2.0 * h);
            double err = std::abs(analytic(r, c) - numeric) /
                         std::max({1.0, std::abs(analytic(r, c)), std::abs(numeric)});
            worst = std::max(worst, err);
        }
    return worst;
}

bool criterion_gradients(std::string& detail) {
    double worst = 0.0;
    for (unsigned long long seed = 0; seed < 50; ++seed) {
        FdInstance inst = fd_instance(seed);

        // Dataset LSFM: the SF target is a stop-gradient constant, so the
        // finite-difference oracle evaluates the loss with the target frozen.
        {
            LossGradients g = grad_lsfm(inst.dataset, inst.phi, inst.lsfm, 0.7, 0.3, inst.gamma);
            Lsfm frozen_model = inst.lsfm;
            StateRepresentation frozen_phi = inst.phi;
            auto f = [&] {
                Eigen::MatrixXd f_bar = frozen_model.f_bar();
                double total = 0.0;
                for (const auto& rec : inst.dataset.records) {
                    Eigen::RowVectorXd phi_s = inst.phi.phi.row(rec.s);
                    double e_r = phi_s * inst.lsfm.w[rec.a] - rec.r;
                    Eigen::RowVectorXd target = frozen_phi.phi.row(rec.s) +
                                                inst.gamma * frozen_phi.phi.row(rec.s_next) * f_bar;
                    Eigen::RowVectorXd resid = phi_s * inst.lsfm.f[rec.a] - target;
                    double e_n = phi_s.squaredNorm() - 1.0;
                    total += e_r * e_r + 0.7 * resid.squaredNorm() + 0.3 * e_n * e_n;
                }
                return total;
            };
            worst = std::max(worst, fd_block(inst.phi.phi, g.d_phi, f));
            for (std::size_t a = 0; a < inst.lsfm.f.size(); ++a) {
                worst = std::max(worst, fd_block(inst.lsfm.f[a], g.d_mat[a], f));
                Eigen::MatrixXd w_mat = inst.lsfm.w[a];
                auto fw = [&] {
                    inst.lsfm.w[a] = w_mat;
                    return f();
                };
                worst = std::max(worst, fd_block(w_mat, g.d_w[a], fw));
            }
        }
        // Dataset LAM (fully differentiated).
        {
            auto f = [&] { return loss_lam(inst.dataset, inst.phi, inst.lam, 0.8, 0.2).total; };
            LossGradients g = grad_lam(inst.dataset, inst.phi, inst.lam, 0.8, 0.2);
            worst = std::max(worst, fd_block(inst.phi.phi, g.d_phi, f));
            for (std::size_t a = 0; a < inst.lam.m.size(); ++a) {
                worst = std::max(worst, fd_block(inst.lam.m[a], g.d_mat[a], f));
                Eigen::MatrixXd w_mat = inst.lam.w[a];
                auto fw = [&] {
                    inst.lam.w[a] = w_mat;
                    return f();
                };
                worst = std::max(worst, fd_block(w_mat, g.d_w[a], fw));
            }
        }
        // Matrix forms (fully differentiated).
        {
            auto f = [&] { return loss_lsfm_mat(inst.mdp, inst.phi, inst.lsfm, 0.6).total; };
            LossGradients g = grad_lsfm_mat(inst.mdp, inst.phi, inst.lsfm, 0.6);
            worst = std::max(worst, fd_block(inst.phi.phi, g.d_phi, f));
            for (std::size_t a = 0; a < inst.lsfm.f.size(); ++a) {
                worst = std::max(worst, fd_block(inst.lsfm.f[a], g.d_mat[a], f));
                Eigen::MatrixXd w_mat = inst.lsfm.w[a];
                auto fw = [&] {
                    inst.lsfm.w[a] = w_mat;
                    return f();
                };
                worst = std::max(worst, fd_block(w_mat, g.d_w[a], fw));
            }
        }
        {
            auto f = [&] { return loss_lam_mat(inst.mdp, inst.phi, inst.lam, 0.9).total; };
            LossGradients g = grad_lam_mat(inst.mdp, inst.phi, inst.lam, 0.9);
            worst = std::max(worst, fd_block(inst.phi.phi, g.d_phi, f));
            for (std::size_t a = 0; a < inst.lam.m.size(); ++a) {
                worst = std::max(worst, fd_block(inst.lam.m[a], g.d_mat[a], f));
                Eigen::MatrixXd w_mat = inst.lam.w[a];
                auto fw = [&] {
                    inst.lam.w[a] = w_mat;
                    return f();
                };
                worst = std::max(worst, fd_block(w_mat, g.d_w[a], fw));
            }
        }
    }
    std::ostringstream out;
    out << "max relative gradient error " << worst;
    detail = out.str();
    return worst < 1e-4;
}

// --- criterion 10: determinism ----------------------------------------------

std::string bounds_csv(const BoundsReport& r) {
    std::ostringstream out;
    out << "index,lemma1_lhs,lemma1_rhs,prop2_delta,prop2_bound\n";
    for (const auto& inst : r.instances)
        out << inst.index << ',' << format_double(inst.lemma1.lhs) << ','
            << format_double(inst.lemma1.rhs) << ',' << format_double(inst.prop2.delta) << ','
            << format_double(inst.prop2.bound) << '\n';
    return out.str();
}

std::string lock_csv(const std::vector<LockEpisodeRow>& rows) {
    std::ostringstream out;
    out << "agent,seed,episode,steps\n";
    for (const auto& row : rows)
        out << row.agent << ',' << row.seed_index << ',' << row.episode << ',' << row.steps
            << '\n';
    return out.str();
}

bool criterion_determinism(std::string& detail) {
    bool bounds_same = bounds_csv(run_bounds_check(20, 17)) == bounds_csv(run_bounds_check(20, 17));

    EnvTask column = build_column_world();
    bool data_same =
        dataset_to_csv(collect_dataset(column, 1000, 4)) == dataset_to_csv(collect_dataset(column, 1000, 4));

    ColumnRunResult c1 = run_column_training(3), c2 = run_column_training(3);
    bool column_same = format_double(c1.final_loss) == format_double(c2.final_loss) &&
                       c1.clusters.cluster_of == c2.clusters.cluster_of;

    LockAbstractions abs;
    abs.baseline = DiscreteAbstraction::identity(125);
    abs.ignore_dial = lock_ignore_dial_abstraction(2);
    abs.reward_pred = abs.ignore_dial;
    abs.value_pred = abs.baseline;
    auto l1 = run_lock_experiment(LockKind::Test1, abs, {"baseline", "ignore-dial"}, 20, 3, 5);
    auto l2 = run_lock_experiment(LockKind::Test1, abs, {"baseline", "ignore-dial"}, 20, 3, 5);
    bool lock_same = lock_csv(l1) == lock_csv(l2);

    std::ostringstream out;
    out << "bounds " << (bounds_same ? "ok" : "DIFF") << ", dataset "
        << (data_same ? "ok" : "DIFF") << ", column " << (column_same ? "ok" : "DIFF")
        << ", lock " << (lock_same ? "ok" : "DIFF");
    detail = out.str();
    return bounds_same && data_same && column_same && lock_same;
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        bool (*body)(std::string&);
        double budget_seconds;  // advisory runtime limit from the test plan
    };
    const Entry entries[] = {
        {"bound-certificates", criterion_bounds, 60.0},
        {"td-sf-equivalence", criterion_td_sf, 0.0},
        {"exact-zero-metrics", criterion_exact_zero, 0.0},
        {"column-cluster-recovery", criterion_column, 120.0},
        {"puddle-rollout-dominance", criterion_puddle, 900.0},
        {"sf-oracles", criterion_sf_oracle, 0.0},
        {"transfer-fractions", criterion_transfer, 1800.0},
        {"lock-episode-ordering", criterion_lock, 600.0},
        {"gradient-checks", criterion_gradients, 0.0},
        {"determinism", criterion_determinism, 0.0},
    };
    int index = 1;
    for (const auto& entry : entries) {
        double seconds = run_timed(entry.body, index, entry.name);
        if (entry.budget_seconds > 0.0 && seconds > entry.budget_seconds) {
            std::printf("[FAIL] %2d %-28s exceeded runtime budget of %.0fs\n", index, entry.name,
                        entry.budget_seconds);
            ++failures;
        }
        ++index;
    }
    if (failures > 0) {
        std::printf("%d criterion check(s) failed\n", failures);
        return 1;
    }
    std::printf("all acceptance criteria hold\n");
    return 0;
}
