#include "sfrl/representation.hpp"

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace sfrl {

namespace {

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
    return m.completeOrthogonalDecomposition().pseudoInverse();
}

double eps_r_metric(const TabularMdp& mdp, const StateRepresentation& phi, const Lam& lam) {
    double worst = 0.0;
    for (int a = 0; a < mdp.num_actions; ++a)
        worst = std::max(worst,
                         (mdp.rewards[a] - phi.phi * lam.w[a]).lpNorm<Eigen::Infinity>());
    return worst;
}

double eps_p_metric(const TabularMdp& mdp, const StateRepresentation& phi, const Lam& lam) {
    double worst = 0.0;
    for (int a = 0; a < mdp.num_actions; ++a) {
        Eigen::MatrixXd residual = mdp.transitions[a] * phi.phi - phi.phi * lam.m[a];
        for (int s = 0; s < mdp.num_states; ++s)
            worst = std::max(worst, residual.row(s).norm());
    }
    return worst;
}

double eps_psi_metric(const TabularMdp& mdp, const StateRepresentation& phi, const Lsfm& lsfm) {
    Eigen::MatrixXd f_bar = lsfm.f_bar();
    double worst = 0.0;
    for (int a = 0; a < mdp.num_actions; ++a) {
        Eigen::MatrixXd target = phi.phi + mdp.gamma * mdp.transitions[a] * phi.phi * f_bar;
        Eigen::MatrixXd residual = target - phi.phi * lsfm.f[a];
        for (int s = 0; s < mdp.num_states; ++s)
            worst = std::max(worst, residual.row(s).norm());
    }
    return worst;
}

double delta_metric(const Lam& lam, const Lsfm& lsfm, double gamma) {
    Eigen::MatrixXd f_bar = lsfm.f_bar();
    const int n = static_cast<int>(f_bar.rows());
    double worst = 0.0;
    for (std::size_t a = 0; a < lsfm.f.size(); ++a) {
        Eigen::MatrixXd residual =
            Eigen::MatrixXd::Identity(n, n) + gamma * lam.m[a] * f_bar - lsfm.f[a];
        worst = std::max(worst, residual.norm());
    }
    return worst;
}

// eps_p * sum_{k=1}^{t-1} M^k W + eps_r for t = 1..horizon.
std::vector<double> rollout_bounds(double eps_r, double eps_p, double m_norm, double w_norm,
                                   int horizon) {
    std::vector<double> out(horizon);
    double geometric_sum = 0.0;
    double m_power = 1.0;
    for (int t = 1; t <= horizon; ++t) {
        out[t - 1] = eps_p * geometric_sum * w_norm + eps_r;
        m_power *= m_norm;
        geometric_sum += m_power;
    }
    return out;
}

std::vector<RolloutBoundRow> rollout_certificate(const TabularMdp& mdp,
                                                 const StateRepresentation& phi, const Lam& lam,
                                                 const std::vector<double>& bounds, int horizon,
                                                 int num_sequences, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> state_dist(0, mdp.num_states - 1);
    std::uniform_int_distribution<int> action_dist(0, mdp.num_actions - 1);
    std::vector<RolloutBoundRow> rows(horizon);
    for (int t = 0; t < horizon; ++t) rows[t] = {t + 1, 0.0, bounds[t]};
    for (int i = 0; i < num_sequences; ++i) {
        int s = state_dist(rng);
        std::vector<int> actions(horizon);
        for (int t = 0; t < horizon; ++t) actions[t] = action_dist(rng);
        auto oracle = expected_reward_rollout(mdp, s, actions);
        auto pred = lam_rollout_predict(phi, lam, s, actions);
        for (int t = 0; t < horizon; ++t)
            rows[t].empirical = std::max(rows[t].empirical, std::abs(pred[t] - oracle[t]));
    }
    return rows;
}

}  // namespace

double StateRepresentation::feature_norm_bound() const {
    double worst = 0.0;
    for (int s = 0; s < phi.rows(); ++s) worst = std::max(worst, phi.row(s).norm());
    return worst;
}

double Lam::m_norm() const {
    double worst = 0.0;
    for (const auto& m_a : m) worst = std::max(worst, m_a.norm());
    return worst;
}

double Lam::w_norm() const {
    double worst = 0.0;
    for (const auto& w_a : w) worst = std::max(worst, w_a.norm());
    return worst;
}

Eigen::MatrixXd Lsfm::f_bar() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(f[0].rows(), f[0].cols());
    for (const auto& f_a : f) out += f_a;
    return out / static_cast<double>(f.size());
}

std::vector<double> lam_rollout_predict(const StateRepresentation& phi, const Lam& lam, int s,
                                        const std::vector<int>& actions) {
    if (actions.empty()) throw std::invalid_argument("lam_rollout_predict: empty action sequence");
    Eigen::RowVectorXd latent = phi.phi.row(s);
    std::vector<double> out;
    out.reserve(actions.size());
    for (std::size_t k = 0; k < actions.size(); ++k) {
        out.push_back(latent * lam.w[actions[k]]);
        if (k + 1 < actions.size()) latent = latent * lam.m[actions[k]];
    }
    return out;
}

Lam lam_from_lsfm(const Lsfm& lsfm, double gamma) {
    if (gamma <= 0.0) throw std::domain_error("lam_from_lsfm: gamma must be positive");
    Eigen::MatrixXd f_bar_inv = lsfm.f_bar().partialPivLu().inverse();
    const int n = static_cast<int>(f_bar_inv.rows());
    Lam lam;
    for (std::size_t a = 0; a < lsfm.f.size(); ++a) {
        lam.m.push_back((lsfm.f[a] - Eigen::MatrixXd::Identity(n, n)) * f_bar_inv / gamma);
        lam.w.push_back(lsfm.w[a]);
    }
    return lam;
}

ErrorReport error_metrics(const TabularMdp& mdp, const StateRepresentation& phi, const Lam& lam,
                          const Lsfm& lsfm) {
    ErrorReport report;
    report.eps_r = eps_r_metric(mdp, phi, lam);
    report.eps_p = eps_p_metric(mdp, phi, lam);
    report.eps_psi = eps_psi_metric(mdp, phi, lsfm);
    report.delta = delta_metric(lam, lsfm, mdp.gamma);
    report.m_norm = lam.m_norm();
    report.w_norm = lam.w_norm();
    report.n_norm = phi.feature_norm_bound();
    return report;
}

BoundCertificate lemma1_certificate(const TabularMdp& mdp, const StateRepresentation& phi,
                                    const Lam& lam, const Lsfm& lsfm) {
    double gamma = mdp.gamma;
    double m_norm = lam.m_norm();
    if (gamma == 0.0 || gamma * m_norm >= 1.0)
        throw std::domain_error("lemma1_certificate: requires gamma > 0 and gamma*M < 1");
    ErrorReport report = error_metrics(mdp, phi, lam, lsfm);
    double c = (1.0 + gamma) * (1.0 + gamma * m_norm) * report.n_norm /
               (gamma * (1.0 - gamma * m_norm));
    BoundCertificate cert;
    cert.lhs = report.eps_p;
    cert.rhs = report.eps_psi * (1.0 + gamma * m_norm) / gamma + c * report.delta;
    cert.holds = cert.lhs <= cert.rhs + 1e-9;
    return cert;
}

std::vector<RolloutBoundRow> theorem3_certificate(const TabularMdp& mdp,
                                                  const StateRepresentation& phi, const Lam& lam,
                                                  int horizon, int num_sequences,
                                                  unsigned long long seed) {
    if (horizon < 1) throw std::invalid_argument("theorem3_certificate: horizon must be >= 1");
    double eps_r = eps_r_metric(mdp, phi, lam);
    double eps_p = eps_p_metric(mdp, phi, lam);
    auto bounds = rollout_bounds(eps_r, eps_p, lam.m_norm(), lam.w_norm(), horizon);
    return rollout_certificate(mdp, phi, lam, bounds, horizon, num_sequences, seed);
}

std::vector<RolloutBoundRow> theorem5_certificate(const TabularMdp& mdp,
                                                  const StateRepresentation& phi, const Lsfm& lsfm,
                                                  const Lam& lam, int horizon, int num_sequences,
                                                  unsigned long long seed) {
    if (horizon < 1) throw std::invalid_argument("theorem5_certificate: horizon must be >= 1");
    double gamma = mdp.gamma;
    double m_norm = lam.m_norm();
    if (gamma == 0.0 || gamma * m_norm >= 1.0)
        throw std::domain_error("theorem5_certificate: requires gamma > 0 and gamma*M < 1");
    ErrorReport report = error_metrics(mdp, phi, lam, lsfm);
    double c = (1.0 + gamma) * (1.0 + gamma * m_norm) * report.n_norm /
               (gamma * (1.0 - gamma * m_norm));
    double eps_p_bound = report.eps_psi * (1.0 + gamma * m_norm) / gamma + c * report.delta;
    auto bounds = rollout_bounds(report.eps_r, eps_p_bound, m_norm, lam.w_norm(), horizon);
    return rollout_certificate(mdp, phi, lam, bounds, horizon, num_sequences, seed);
}

namespace {

LatentValueResult latent_solve(const Lam& lam, const Eigen::MatrixXd& m_pi,
                               const Eigen::VectorXd& w_pi, double gamma) {
    const int n = static_cast<int>(w_pi.size());
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - gamma * m_pi;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    double rcond = 1.0;
    {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(system);
        double smin = svd.singularValues().minCoeff();
        double smax = svd.singularValues().maxCoeff();
        rcond = smax > 0 ? smin / smax : 0.0;
    }
    if (rcond < 1e-12)
        throw std::domain_error("theorem4_value_vectors: latent dynamics not contractive");
    LatentValueResult out;
    out.v = lu.solve(w_pi);
    for (std::size_t a = 0; a < lam.m.size(); ++a)
        out.q.push_back(lam.w[a] + gamma * lam.m[a] * out.v);
    return out;
}

}  // namespace

LatentValueResult theorem4_value_vectors(const Lam& lam, const Eigen::MatrixXd& pi_latent,
                                         double gamma) {
    const int n = static_cast<int>(lam.m[0].rows());
    if (pi_latent.rows() != n || pi_latent.cols() != static_cast<int>(lam.m.size()))
        throw std::invalid_argument("theorem4_value_vectors: latent policy shape mismatch");
    Eigen::MatrixXd m_pi = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd w_pi = Eigen::VectorXd::Zero(n);
    for (std::size_t a = 0; a < lam.m.size(); ++a) {
        m_pi += pi_latent.col(a).asDiagonal() * lam.m[a];
        w_pi += pi_latent.col(a).cwiseProduct(lam.w[a]);
    }
    return latent_solve(lam, m_pi, w_pi, gamma);
}

LatentValueResult theorem4_value_vectors(const Lam& lam, const Eigen::VectorXd& action_weights,
                                         double gamma) {
    const int n = static_cast<int>(lam.m[0].rows());
    Eigen::MatrixXd m_pi = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd w_pi = Eigen::VectorXd::Zero(n);
    for (std::size_t a = 0; a < lam.m.size(); ++a) {
        m_pi += action_weights[a] * lam.m[a];
        w_pi += action_weights[a] * lam.w[a];
    }
    return latent_solve(lam, m_pi, w_pi, gamma);
}

BoundCertificate theorem4_certificate(const TabularMdp& mdp, const StateRepresentation& phi,
                                      const Lam& lam, const Lsfm& lsfm,
                                      const Eigen::VectorXd& action_weights) {
    LatentValueResult latent = theorem4_value_vectors(lam, action_weights, mdp.gamma);
    TabularPolicy pi;
    pi.probs = action_weights.transpose().replicate(mdp.num_states, 1);
    EvaluationResult ground = policy_evaluation(mdp, pi);
    BoundCertificate cert;
    cert.lhs = (ground.v - phi.phi * latent.v).lpNorm<Eigen::Infinity>();
    double eps_r = eps_r_metric(mdp, phi, lam);
    double eps_p = eps_p_metric(mdp, phi, lam);
    cert.rhs = (eps_r + mdp.gamma * eps_p * latent.v.norm()) / (1.0 - mdp.gamma);
    cert.holds = cert.lhs <= cert.rhs + 1e-9;
    (void)lsfm;
    return cert;
}

Prop2Certificate prop2_certificate(const TransitionDataset& dataset,
                                   const StateRepresentation& phi, const Lsfm& lsfm,
                                   double gamma) {
    std::map<int, std::vector<const TransitionRecord*>> by_action;
    for (const auto& rec : dataset.records) by_action[rec.a].push_back(&rec);
    const int num_actions = static_cast<int>(lsfm.f.size());
    const int n = phi.n();
    for (int a = 0; a < num_actions; ++a)
        if (!by_action.count(a))
            throw std::invalid_argument("prop2_certificate: action absent from dataset");

    Eigen::MatrixXd f_bar = lsfm.f_bar();
    Lam lam;
    lam.m.resize(num_actions);
    lam.w.resize(num_actions, Eigen::VectorXd::Zero(n));
    double l_psi = 0.0;
    double worst_pinv_sq = 0.0;
    for (int a = 0; a < num_actions; ++a) {
        const auto& recs = by_action[a];
        Eigen::MatrixXd phi_a(recs.size(), n), phi_next(recs.size(), n);
        for (std::size_t i = 0; i < recs.size(); ++i) {
            phi_a.row(i) = phi.phi.row(recs[i]->s);
            phi_next.row(i) = phi.phi.row(recs[i]->s_next);
        }
        Eigen::MatrixXd pinv = pseudo_inverse(phi_a);
        lam.m[a] = pinv * phi_next;
        worst_pinv_sq = std::max(worst_pinv_sq, pinv.squaredNorm());
        Eigen::MatrixXd residual = phi_a + gamma * phi_next * f_bar - phi_a * lsfm.f[a];
        l_psi += residual.squaredNorm();
    }
    Prop2Certificate cert;
    cert.delta = delta_metric(lam, lsfm, gamma);
    cert.l_psi = l_psi;
    cert.bound = worst_pinv_sq * l_psi;
    cert.holds = cert.delta * cert.delta <= cert.bound + 1e-9;
    return cert;
}

namespace {

std::vector<int> latent_index_of_one_hot(const Eigen::MatrixXd& phi) {
    std::vector<int> index(phi.rows());
    for (int s = 0; s < phi.rows(); ++s) {
        int hot = -1;
        for (int j = 0; j < phi.cols(); ++j) {
            double v = phi(s, j);
            if (v == 1.0 && hot < 0)
                hot = j;
            else if (v != 0.0)
                throw std::invalid_argument("representation is not one-hot");
        }
        if (hot < 0) throw std::invalid_argument("representation is not one-hot");
        index[s] = hot;
    }
    return index;
}

bool one_hot_respects_partition(const std::vector<int>& latent, const Partition& partition) {
    std::map<int, int> block_of_latent;
    for (std::size_t s = 0; s < latent.size(); ++s) {
        auto it = block_of_latent.find(latent[s]);
        if (it == block_of_latent.end())
            block_of_latent[latent[s]] = partition.block_of[s];
        else if (it->second != partition.block_of[s])
            return false;
    }
    return true;
}

}  // namespace

TheoremCheckVerdict check_theorem1(const TabularMdp& mdp, const StateRepresentation& one_hot_phi,
                                   const Lam& lam, double tol) {
    auto latent = latent_index_of_one_hot(one_hot_phi.phi);
    TheoremCheckVerdict verdict;
    verdict.conditions_met = true;
    for (int a = 0; a < mdp.num_actions; ++a) {
        double reward_res =
            (one_hot_phi.phi * lam.w[a] - mdp.rewards[a]).lpNorm<Eigen::Infinity>();
        double trans_res = (one_hot_phi.phi * lam.m[a] - mdp.transitions[a] * one_hot_phi.phi)
                               .cwiseAbs()
                               .maxCoeff();
        if (reward_res > tol || trans_res > tol) verdict.conditions_met = false;
    }
    Partition partition = bisimulation_partition(mdp, tol, tol);
    verdict.bisimulation_respected = one_hot_respects_partition(latent, partition);
    return verdict;
}

TheoremCheckVerdict check_theorem2(const TabularMdp& mdp, const StateRepresentation& one_hot_phi,
                                   const Lsfm& lsfm, double tol) {
    auto latent = latent_index_of_one_hot(one_hot_phi.phi);
    TheoremCheckVerdict verdict;
    verdict.conditions_met = true;
    Eigen::MatrixXd f_bar = lsfm.f_bar();
    for (int a = 0; a < mdp.num_actions; ++a) {
        Eigen::MatrixXd target =
            one_hot_phi.phi + mdp.gamma * mdp.transitions[a] * one_hot_phi.phi * f_bar;
        double fixed_point_res =
            (one_hot_phi.phi * lsfm.f[a] - target).cwiseAbs().maxCoeff();
        double reward_res =
            (one_hot_phi.phi * lsfm.w[a] - mdp.rewards[a]).lpNorm<Eigen::Infinity>();
        if (fixed_point_res > tol || reward_res > tol) verdict.conditions_met = false;
    }
    Partition partition = bisimulation_partition(mdp, tol, tol);
    verdict.bisimulation_respected = one_hot_respects_partition(latent, partition);
    return verdict;
}

Lam exact_quotient_lam(const TabularMdp& mdp, const Partition& partition) {
    TabularMdp quotient = quotient_mdp(mdp, partition);
    Lam lam;
    for (int a = 0; a < quotient.num_actions; ++a) {
        lam.m.push_back(quotient.transitions[a]);
        lam.w.push_back(quotient.rewards[a]);
    }
    return lam;
}

Lsfm lsfm_from_lam(const Lam& lam, double gamma) {
    const int n = static_cast<int>(lam.m[0].rows());
    Eigen::MatrixXd m_bar = Eigen::MatrixXd::Zero(n, n);
    for (const auto& m_a : lam.m) m_bar += m_a;
    m_bar /= static_cast<double>(lam.m.size());
    Eigen::MatrixXd f_bar = (Eigen::MatrixXd::Identity(n, n) - gamma * m_bar)
                                .partialPivLu()
                                .solve(Eigen::MatrixXd::Identity(n, n));
    Lsfm lsfm;
    for (std::size_t a = 0; a < lam.m.size(); ++a) {
        lsfm.f.push_back(Eigen::MatrixXd::Identity(n, n) + gamma * lam.m[a] * f_bar);
        lsfm.w.push_back(lam.w[a]);
    }
    return lsfm;
}

Lsfm exact_quotient_lsfm(const TabularMdp& mdp, const Partition& partition) {
    return lsfm_from_lam(exact_quotient_lam(mdp, partition), mdp.gamma);
}

}  // namespace sfrl
