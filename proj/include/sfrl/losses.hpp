#ifndef SFRL_LOSSES_HPP
#define SFRL_LOSSES_HPP

#include <optional>
#include <string>
#include <vector>

#include "sfrl/mdp.hpp"
#include "sfrl/representation.hpp"

namespace sfrl {

struct TrainConfig {
    double learning_rate = 0.001;
    double alpha_psi = 0.0;
    double alpha_p = 0.0;
    double alpha_n = 0.0;
    int batch_size = 50;
    int num_steps = 50000;
    int latent_dim = 50;
    unsigned long long seed = 0;
    double gamma = 0.9;
};

struct LossComponents {
    double total = 0.0;
    double l_r = 0.0;
    double l_psi = 0.0;  // transition/SF term (L_p for LAM losses)
    double l_n = 0.0;
};

// Gradients for one loss evaluation; model blocks are empty when unused.
struct LossGradients {
    Eigen::MatrixXd d_phi;
    std::vector<Eigen::MatrixXd> d_mat;  // d/dF_a or d/dM_a
    std::vector<Eigen::VectorXd> d_w;
};

// Dataset-form LSFM loss. The SF target phi_s^T + gamma phi_s'^T Fbar is a
// stop-gradient constant: no gradient flows through it.
LossComponents loss_lsfm(const TransitionDataset& dataset, const StateRepresentation& phi,
                         const Lsfm& lsfm, double alpha_psi, double alpha_n, double gamma);
LossGradients grad_lsfm(const TransitionDataset& dataset, const StateRepresentation& phi,
                        const Lsfm& lsfm, double alpha_psi, double alpha_n, double gamma);

// Dataset-form LAM loss; the transition target phi_s' is differentiated through.
LossComponents loss_lam(const TransitionDataset& dataset, const StateRepresentation& phi,
                        const Lam& lam, double alpha_p, double alpha_n);
LossGradients grad_lam(const TransitionDataset& dataset, const StateRepresentation& phi,
                       const Lam& lam, double alpha_p, double alpha_n);

// Matrix-form losses over the full transition and reward tables; fully
// differentiated (no stop-gradient).
LossComponents loss_lsfm_mat(const TabularMdp& mdp, const StateRepresentation& phi,
                             const Lsfm& lsfm, double alpha_psi);
LossGradients grad_lsfm_mat(const TabularMdp& mdp, const StateRepresentation& phi,
                            const Lsfm& lsfm, double alpha_psi);
LossComponents loss_lam_mat(const TabularMdp& mdp, const StateRepresentation& phi, const Lam& lam,
                            double alpha_p);
LossGradients grad_lam_mat(const TabularMdp& mdp, const StateRepresentation& phi, const Lam& lam,
                           double alpha_p);

// Least-squares model fits for a fixed representation.
struct LeastSquaresModels {
    Lam lam;
    Lsfm lsfm;
};
LeastSquaresModels least_squares_init(const StateRepresentation& phi, const TabularMdp& mdp);
LeastSquaresModels least_squares_init(const StateRepresentation& phi,
                                      const TransitionDataset& dataset, int num_actions,
                                      double gamma);

// Adam over a flat list of parameter tensors (vectors are n x 1 matrices).
struct AdamState {
    std::vector<Eigen::MatrixXd> m;
    std::vector<Eigen::MatrixXd> v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState like(const std::vector<Eigen::MatrixXd>& params);
};
void adam_step(AdamState& state, std::vector<Eigen::MatrixXd>& params,
               const std::vector<Eigen::MatrixXd>& grads, double lr);

enum class ModelKind { Lam, Lsfm };

struct LossTraceRow {
    int step = 0;
    double total = 0.0;
    double l_r = 0.0;
    double l_psi = 0.0;
    double l_n = 0.0;
};

struct TrainResult {
    StateRepresentation phi;
    Lam lam;    // filled when kind == Lam
    Lsfm lsfm;  // filled when kind == Lsfm
    ModelKind kind = ModelKind::Lsfm;
    std::vector<LossTraceRow> trace;  // recorded every 100 steps plus the last
    double final_loss = 0.0;
};

// Matrix-form training on the full MDP tables. Phi entries start uniform on
// [0,1]; the model starts from the least-squares fit for that Phi.
TrainResult train_representation(const TabularMdp& mdp, const TrainConfig& config, ModelKind kind);

// Dataset-form training on sampled transitions with uniform-with-replacement
// mini-batches. LSFM models start at zero; LAM models start from least squares.
TrainResult train_representation(const TransitionDataset& dataset, int num_states, int num_actions,
                                 const TrainConfig& config, ModelKind kind);

// Fills Phi with entries uniform on [0,1] from the given seed.
Eigen::MatrixXd random_phi(int num_states, int latent_dim, unsigned long long seed);

}  // namespace sfrl

#endif
