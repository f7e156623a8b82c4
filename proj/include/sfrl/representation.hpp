#ifndef SFRL_REPRESENTATION_HPP
#define SFRL_REPRESENTATION_HPP

#include <vector>

#include "sfrl/mdp.hpp"

namespace sfrl {

struct StateRepresentation {
    Eigen::MatrixXd phi;  // |S| x n, row s is the latent vector of state s
    int n() const { return static_cast<int>(phi.cols()); }
    // sup_s ||phi_s||_2
    double feature_norm_bound() const;
};

// Linear action model: latent dynamics phi_s^T M_a and rewards phi_s^T w_a.
struct Lam {
    std::vector<Eigen::MatrixXd> m;  // per-action n x n
    std::vector<Eigen::VectorXd> w;  // per-action n
    double m_norm() const;           // max_a ||M_a||_F
    double w_norm() const;           // max_a ||w_a||_2
};

// Linear successor feature model: psi(s,a) ~= F_a^T phi_s plus rewards w_a.
struct Lsfm {
    std::vector<Eigen::MatrixXd> f;  // per-action n x n
    std::vector<Eigen::VectorXd> w;  // per-action n
    Eigen::MatrixXd f_bar() const;   // uniform action average of F_a
};

struct ErrorReport {
    double eps_r = 0.0;    // max |r_a[s] - phi_s^T w_a|
    double eps_p = 0.0;    // max ||E[phi_s' | s,a] - M_a^T phi_s||
    double eps_psi = 0.0;  // max ||phi_s^T + gamma (P_a Phi Fbar)(s,:) - phi_s^T F_a||
    double delta = 0.0;    // max_a ||I + gamma M_a Fbar - F_a||_F
    double m_norm = 0.0;
    double w_norm = 0.0;
    double n_norm = 0.0;
};

struct TransitionRecord {
    int s = 0;
    int a = 0;
    double r = 0.0;
    int s_next = 0;
};

struct TransitionDataset {
    std::vector<TransitionRecord> records;
};

// k-th value is phi_s^T M_{a_1} ... M_{a_{k-1}} w_{a_k}.
std::vector<double> lam_rollout_predict(const StateRepresentation& phi, const Lam& lam, int s,
                                        const std::vector<int>& actions);

// Recovers latent transition matrices from an LSFM via M_a = (F_a - I) Fbar^{-1} / gamma.
Lam lam_from_lsfm(const Lsfm& lsfm, double gamma);

ErrorReport error_metrics(const TabularMdp& mdp, const StateRepresentation& phi, const Lam& lam,
                          const Lsfm& lsfm);

struct BoundCertificate {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

// Checks eps_p <= eps_psi (1 + gamma M)/gamma + C * delta with
// C = (1+gamma)(1+gamma M) N / (gamma (1 - gamma M)).
// Throws std::domain_error when gamma == 0 or gamma*M >= 1.
BoundCertificate lemma1_certificate(const TabularMdp& mdp, const StateRepresentation& phi,
                                    const Lam& lam, const Lsfm& lsfm);

struct RolloutBoundRow {
    int t = 0;               // 1-based step index
    double empirical = 0.0;  // max |prediction - oracle| over sampled sequences
    double bound = 0.0;
};

// Empirical rollout errors of the LAM against the exact oracle versus the
// bound eps_p * sum_{k=1}^{t-1} M^k W + eps_r.
std::vector<RolloutBoundRow> theorem3_certificate(const TabularMdp& mdp,
                                                  const StateRepresentation& phi, const Lam& lam,
                                                  int horizon, int num_sequences = 20,
                                                  unsigned long long seed = 0);

// Same empirical errors with eps_p replaced by its lemma-1 upper bound.
std::vector<RolloutBoundRow> theorem5_certificate(const TabularMdp& mdp,
                                                  const StateRepresentation& phi, const Lsfm& lsfm,
                                                  const Lam& lam, int horizon,
                                                  int num_sequences = 20,
                                                  unsigned long long seed = 0);

struct LatentValueResult {
    Eigen::VectorXd v;                // n
    std::vector<Eigen::VectorXd> q;   // per-action n
};

// Latent value vectors for an abstract policy given as an n x |A| matrix of
// per-latent-index action probabilities (one-hot representations), solving
// v = w_pi + gamma M_pi v with row-wise policy averaging.
LatentValueResult theorem4_value_vectors(const Lam& lam, const Eigen::MatrixXd& pi_latent,
                                         double gamma);
// Same for a state-independent action distribution.
LatentValueResult theorem4_value_vectors(const Lam& lam, const Eigen::VectorXd& action_weights,
                                         double gamma);

// Compares max_s |V_pi(s) - phi_s^T v_pi| against (eps_r + gamma eps_p ||v_pi||)/(1-gamma)
// for a state-independent mixed policy.
BoundCertificate theorem4_certificate(const TabularMdp& mdp, const StateRepresentation& phi,
                                      const Lam& lam, const Lsfm& lsfm,
                                      const Eigen::VectorXd& action_weights);

struct Prop2Certificate {
    double delta = 0.0;     // of the least-squares LAM fit to the dataset
    double l_psi = 0.0;     // dataset SF loss of the LSFM
    double bound = 0.0;     // max_a ||pinv(Phi_a)||_F^2 * l_psi
    bool holds = false;     // delta^2 <= bound + 1e-9 (the proof bounds the squared norm)
};

Prop2Certificate prop2_certificate(const TransitionDataset& dataset, const StateRepresentation& phi,
                                   const Lsfm& lsfm, double gamma);

struct TheoremCheckVerdict {
    bool conditions_met = false;          // model equations hold within tol
    bool bisimulation_respected = false;  // states sharing a latent are co-blocked
    bool holds() const { return conditions_met && bisimulation_respected; }
};

// Requires a one-hot representation; throws std::invalid_argument otherwise.
TheoremCheckVerdict check_theorem1(const TabularMdp& mdp, const StateRepresentation& one_hot_phi,
                                   const Lam& lam, double tol);
TheoremCheckVerdict check_theorem2(const TabularMdp& mdp, const StateRepresentation& one_hot_phi,
                                   const Lsfm& lsfm, double tol);

// Exact latent models built from a bisimulation partition's quotient MDP.
Lam exact_quotient_lam(const TabularMdp& mdp, const Partition& partition);
Lsfm exact_quotient_lsfm(const TabularMdp& mdp, const Partition& partition);

// Lsfm with F_a = I + gamma M_a Fbar, Fbar = (I - gamma Mbar)^{-1}; delta = 0
// by construction.
Lsfm lsfm_from_lam(const Lam& lam, double gamma);

}  // namespace sfrl

#endif
