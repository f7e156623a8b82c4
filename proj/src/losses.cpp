#include "sfrl/losses.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace sfrl {

namespace {

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
    return m.completeOrthogonalDecomposition().pseudoInverse();
}

LossGradients zero_gradients(int num_states, int n, int num_actions, bool with_mat,
                             bool with_w) {
    LossGradients g;
    g.d_phi = Eigen::MatrixXd::Zero(num_states, n);
    if (with_mat) g.d_mat.assign(num_actions, Eigen::MatrixXd::Zero(n, n));
    if (with_w) g.d_w.assign(num_actions, Eigen::VectorXd::Zero(n));
    return g;
}

}  // namespace

LossComponents loss_lsfm(const TransitionDataset& dataset, const StateRepresentation& phi,
                         const Lsfm& lsfm, double alpha_psi, double alpha_n, double gamma) {
    Eigen::MatrixXd f_bar = lsfm.f_bar();
    LossComponents out;
    for (const auto& rec : dataset.records) {
        Eigen::RowVectorXd phi_s = phi.phi.row(rec.s);
        double e_r = phi_s * lsfm.w[rec.a] - rec.r;
        out.l_r += e_r * e_r;
        Eigen::RowVectorXd target = phi_s + gamma * phi.phi.row(rec.s_next) * f_bar;
        Eigen::RowVectorXd resid = phi_s * lsfm.f[rec.a] - target;
        out.l_psi += resid.squaredNorm();
        double e_n = phi_s.squaredNorm() - 1.0;
        out.l_n += e_n * e_n;
    }
    out.total = out.l_r + alpha_psi * out.l_psi + alpha_n * out.l_n;
    return out;
}

LossGradients grad_lsfm(const TransitionDataset& dataset, const StateRepresentation& phi,
                        const Lsfm& lsfm, double alpha_psi, double alpha_n, double gamma) {
    const int num_actions = static_cast<int>(lsfm.f.size());
    Eigen::MatrixXd f_bar = lsfm.f_bar();
    LossGradients g = zero_gradients(static_cast<int>(phi.phi.rows()), phi.n(), num_actions,
                                     true, true);
    for (const auto& rec : dataset.records) {
        Eigen::RowVectorXd phi_s = phi.phi.row(rec.s);
        double e_r = phi_s * lsfm.w[rec.a] - rec.r;
        g.d_w[rec.a] += 2.0 * e_r * phi_s.transpose();
        g.d_phi.row(rec.s) += 2.0 * e_r * lsfm.w[rec.a].transpose();
        // The target is a stop-gradient constant: neither Fbar nor the feature
        // rows inside it receive gradient.
        Eigen::RowVectorXd target = phi_s + gamma * phi.phi.row(rec.s_next) * f_bar;
        Eigen::RowVectorXd resid = phi_s * lsfm.f[rec.a] - target;
        g.d_mat[rec.a] += 2.0 * alpha_psi * phi_s.transpose() * resid;
        g.d_phi.row(rec.s) += 2.0 * alpha_psi * resid * lsfm.f[rec.a].transpose();
        double e_n = phi_s.squaredNorm() - 1.0;
        g.d_phi.row(rec.s) += 4.0 * alpha_n * e_n * phi_s;
    }
    return g;
}

LossComponents loss_lam(const TransitionDataset& dataset, const StateRepresentation& phi,
                        const Lam& lam, double alpha_p, double alpha_n) {
    LossComponents out;
    for (const auto& rec : dataset.records) {
        Eigen::RowVectorXd phi_s = phi.phi.row(rec.s);
        double e_r = phi_s * lam.w[rec.a] - rec.r;
        out.l_r += e_r * e_r;
        Eigen::RowVectorXd resid = phi_s * lam.m[rec.a] - phi.phi.row(rec.s_next);
        out.l_psi += resid.squaredNorm();
        double e_n = phi_s.squaredNorm() - 1.0;
        out.l_n += e_n * e_n;
    }
    out.total = out.l_r + alpha_p * out.l_psi + alpha_n * out.l_n;
    return out;
}

LossGradients grad_lam(const TransitionDataset& dataset, const StateRepresentation& phi,
                       const Lam& lam, double alpha_p, double alpha_n) {
    const int num_actions = static_cast<int>(lam.m.size());
    LossGradients g = zero_gradients(static_cast<int>(phi.phi.rows()), phi.n(), num_actions,
                                     true, true);
    for (const auto& rec : dataset.records) {
        Eigen::RowVectorXd phi_s = phi.phi.row(rec.s);
        double e_r = phi_s * lam.w[rec.a] - rec.r;
        g.d_w[rec.a] += 2.0 * e_r * phi_s.transpose();
        g.d_phi.row(rec.s) += 2.0 * e_r * lam.w[rec.a].transpose();
        Eigen::RowVectorXd resid = phi_s * lam.m[rec.a] - phi.phi.row(rec.s_next);
        g.d_mat[rec.a] += 2.0 * alpha_p * phi_s.transpose() * resid;
        g.d_phi.row(rec.s) += 2.0 * alpha_p * resid * lam.m[rec.a].transpose();
        g.d_phi.row(rec.s_next) -= 2.0 * alpha_p * resid;
        double e_n = phi_s.squaredNorm() - 1.0;
        g.d_phi.row(rec.s) += 4.0 * alpha_n * e_n * phi_s;
    }
    return g;
}

LossComponents loss_lsfm_mat(const TabularMdp& mdp, const StateRepresentation& phi,
                             const Lsfm& lsfm, double alpha_psi) {
    Eigen::MatrixXd f_bar = lsfm.f_bar();
    LossComponents out;
    for (int a = 0; a < mdp.num_actions; ++a) {
        Eigen::VectorXd r_res = phi.phi * lsfm.w[a] - mdp.rewards[a];
        out.l_r += r_res.squaredNorm();
        Eigen::MatrixXd sf_res = phi.phi + mdp.gamma * mdp.transitions[a] * phi.phi * f_bar -
                                 phi.phi * lsfm.f[a];
        out.l_psi += sf_res.squaredNorm();
    }
    out.total = out.l_r + alpha_psi * out.l_psi;
    return out;
}

LossGradients grad_lsfm_mat(const TabularMdp& mdp, const StateRepresentation& phi,
                            const Lsfm& lsfm, double alpha_psi) {
    const int na = mdp.num_actions;
    Eigen::MatrixXd f_bar = lsfm.f_bar();
    LossGradients g = zero_gradients(mdp.num_states, phi.n(), na, true, true);
    std::vector<Eigen::MatrixXd> sf_res(na);
    for (int a = 0; a < na; ++a) {
        Eigen::VectorXd r_res = phi.phi * lsfm.w[a] - mdp.rewards[a];
        g.d_w[a] = 2.0 * phi.phi.transpose() * r_res;
        g.d_phi += 2.0 * r_res * lsfm.w[a].transpose();
        sf_res[a] = phi.phi + mdp.gamma * mdp.transitions[a] * phi.phi * f_bar -
                    phi.phi * lsfm.f[a];
    }
    // Fbar is differentiated through: every F_b receives a share of every
    // action's residual.
    Eigen::MatrixXd shared = Eigen::MatrixXd::Zero(phi.n(), phi.n());
    for (int a = 0; a < na; ++a)
        shared += (mdp.transitions[a] * phi.phi).transpose() * sf_res[a];
    shared *= mdp.gamma / static_cast<double>(na);
    for (int a = 0; a < na; ++a) {
        g.d_mat[a] = 2.0 * alpha_psi * (shared - phi.phi.transpose() * sf_res[a]);
        g.d_phi += 2.0 * alpha_psi *
                   (sf_res[a] + mdp.gamma * mdp.transitions[a].transpose() * sf_res[a] *
                                    f_bar.transpose() -
                    sf_res[a] * lsfm.f[a].transpose());
    }
    return g;
}

LossComponents loss_lam_mat(const TabularMdp& mdp, const StateRepresentation& phi, const Lam& lam,
                            double alpha_p) {
    LossComponents out;
    for (int a = 0; a < mdp.num_actions; ++a) {
        out.l_r += (phi.phi * lam.w[a] - mdp.rewards[a]).squaredNorm();
        out.l_psi += (phi.phi * lam.m[a] - mdp.transitions[a] * phi.phi).squaredNorm();
    }
    out.total = out.l_r + alpha_p * out.l_psi;
    return out;
}

LossGradients grad_lam_mat(const TabularMdp& mdp, const StateRepresentation& phi, const Lam& lam,
                           double alpha_p) {
    LossGradients g = zero_gradients(mdp.num_states, phi.n(), mdp.num_actions, true, true);
    for (int a = 0; a < mdp.num_actions; ++a) {
        Eigen::VectorXd r_res = phi.phi * lam.w[a] - mdp.rewards[a];
        g.d_w[a] = 2.0 * phi.phi.transpose() * r_res;
        Eigen::MatrixXd t_res = phi.phi * lam.m[a] - mdp.transitions[a] * phi.phi;
        g.d_mat[a] = 2.0 * alpha_p * phi.phi.transpose() * t_res;
        g.d_phi += 2.0 * r_res * lam.w[a].transpose() +
                   2.0 * alpha_p *
                       (t_res * lam.m[a].transpose() - mdp.transitions[a].transpose() * t_res);
    }
    return g;
}

LeastSquaresModels least_squares_init(const StateRepresentation& phi, const TabularMdp& mdp) {
    Eigen::MatrixXd pinv = pseudo_inverse(phi.phi);
    LeastSquaresModels out;
    for (int a = 0; a < mdp.num_actions; ++a) {
        out.lam.m.push_back(pinv * (mdp.transitions[a] * phi.phi));
        out.lam.w.push_back(pinv * mdp.rewards[a]);
        // SF fit with Fbar taken as the identity, iterated once.
        out.lsfm.f.push_back(pinv *
                             (phi.phi + mdp.gamma * mdp.transitions[a] * phi.phi));
        out.lsfm.w.push_back(out.lam.w.back());
    }
    return out;
}

LeastSquaresModels least_squares_init(const StateRepresentation& phi,
                                      const TransitionDataset& dataset, int num_actions,
                                      double gamma) {
    const int n = phi.n();
    LeastSquaresModels out;
    for (int a = 0; a < num_actions; ++a) {
        std::vector<const TransitionRecord*> recs;
        for (const auto& rec : dataset.records)
            if (rec.a == a) recs.push_back(&rec);
        if (recs.empty())
            throw std::invalid_argument("least_squares_init: action absent from dataset");
        Eigen::MatrixXd phi_a(recs.size(), n), phi_next(recs.size(), n);
        Eigen::VectorXd r_a(recs.size());
        for (std::size_t i = 0; i < recs.size(); ++i) {
            phi_a.row(i) = phi.phi.row(recs[i]->s);
            phi_next.row(i) = phi.phi.row(recs[i]->s_next);
            r_a[i] = recs[i]->r;
        }
        Eigen::MatrixXd pinv = pseudo_inverse(phi_a);
        out.lam.m.push_back(pinv * phi_next);
        out.lam.w.push_back(pinv * r_a);
        out.lsfm.f.push_back(pinv * (phi_a + gamma * phi_next));
        out.lsfm.w.push_back(out.lam.w.back());
    }
    return out;
}

AdamState AdamState::like(const std::vector<Eigen::MatrixXd>& params) {
    AdamState state;
    for (const auto& p : params) {
        state.m.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
        state.v.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    }
    return state;
}

void adam_step(AdamState& state, std::vector<Eigen::MatrixXd>& params,
               const std::vector<Eigen::MatrixXd>& grads, double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i].array().matrix() +
                     (1.0 - state.beta2) * grads[i].cwiseProduct(grads[i]);
        Eigen::ArrayXXd m_hat = state.m[i].array() / bc1;
        Eigen::ArrayXXd v_hat = state.v[i].array() / bc2;
        params[i].array() -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
}

Eigen::MatrixXd random_phi(int num_states, int latent_dim, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd phi(num_states, latent_dim);
    for (int s = 0; s < num_states; ++s)
        for (int j = 0; j < latent_dim; ++j) phi(s, j) = unit(rng);
    return phi;
}

namespace {

void check_divergence(double total, int step) {
    if (!std::isfinite(total) || total > 1e12)
        throw std::runtime_error("training diverged at step " + std::to_string(step) +
                                 " (loss " + std::to_string(total) + ")");
}

std::vector<Eigen::MatrixXd> pack(const Eigen::MatrixXd& phi,
                                  const std::vector<Eigen::MatrixXd>& mats,
                                  const std::vector<Eigen::VectorXd>& ws) {
    std::vector<Eigen::MatrixXd> params;
    params.push_back(phi);
    for (const auto& m : mats) params.push_back(m);
    for (const auto& w : ws) params.push_back(w);
    return params;
}

void unpack(const std::vector<Eigen::MatrixXd>& params, Eigen::MatrixXd& phi,
            std::vector<Eigen::MatrixXd>& mats, std::vector<Eigen::VectorXd>& ws) {
    phi = params[0];
    for (std::size_t a = 0; a < mats.size(); ++a) mats[a] = params[1 + a];
    for (std::size_t a = 0; a < ws.size(); ++a) ws[a] = params[1 + mats.size() + a];
}

}  // namespace

TrainResult train_representation(const TabularMdp& mdp, const TrainConfig& config,
                                 ModelKind kind) {
    TrainResult result;
    result.kind = kind;
    result.phi.phi = random_phi(mdp.num_states, config.latent_dim, config.seed);
    LeastSquaresModels init = least_squares_init(result.phi, mdp);
    std::vector<Eigen::MatrixXd> mats =
        (kind == ModelKind::Lsfm) ? init.lsfm.f : init.lam.m;
    std::vector<Eigen::VectorXd> ws = (kind == ModelKind::Lsfm) ? init.lsfm.w : init.lam.w;
    std::vector<Eigen::MatrixXd> params = pack(result.phi.phi, mats, ws);
    AdamState adam = AdamState::like(params);

    LossComponents comps;
    for (int step = 0; step < config.num_steps; ++step) {
        unpack(params, result.phi.phi, mats, ws);
        LossGradients g;
        if (kind == ModelKind::Lsfm) {
            Lsfm lsfm{mats, ws};
            comps = loss_lsfm_mat(mdp, result.phi, lsfm, config.alpha_psi);
            g = grad_lsfm_mat(mdp, result.phi, lsfm, config.alpha_psi);
        } else {
            Lam lam{mats, ws};
            comps = loss_lam_mat(mdp, result.phi, lam, config.alpha_p);
            g = grad_lam_mat(mdp, result.phi, lam, config.alpha_p);
        }
        check_divergence(comps.total, step);
        if (step % 100 == 0)
            result.trace.push_back({step, comps.total, comps.l_r, comps.l_psi, comps.l_n});
        std::vector<Eigen::MatrixXd> grads = pack(g.d_phi, g.d_mat, {});
        for (const auto& w : g.d_w) grads.push_back(w);
        adam_step(adam, params, grads, config.learning_rate);
    }
    unpack(params, result.phi.phi, mats, ws);
    if (kind == ModelKind::Lsfm) {
        result.lsfm = Lsfm{mats, ws};
        comps = loss_lsfm_mat(mdp, result.phi, result.lsfm, config.alpha_psi);
    } else {
        result.lam = Lam{mats, ws};
        comps = loss_lam_mat(mdp, result.phi, result.lam, config.alpha_p);
    }
    result.trace.push_back({config.num_steps, comps.total, comps.l_r, comps.l_psi, comps.l_n});
    result.final_loss = comps.total;
    return result;
}

TrainResult train_representation(const TransitionDataset& dataset, int num_states,
                                 int num_actions, const TrainConfig& config, ModelKind kind) {
    if (dataset.records.empty())
        throw std::invalid_argument("train_representation: empty dataset");
    TrainResult result;
    result.kind = kind;
    result.phi.phi = random_phi(num_states, config.latent_dim, config.seed);
    const int n = config.latent_dim;

    std::vector<Eigen::MatrixXd> mats;
    std::vector<Eigen::VectorXd> ws;
    if (kind == ModelKind::Lsfm) {
        mats.assign(num_actions, Eigen::MatrixXd::Zero(n, n));
        ws.assign(num_actions, Eigen::VectorXd::Zero(n));
    } else {
        LeastSquaresModels init =
            least_squares_init(result.phi, dataset, num_actions, config.gamma);
        mats = init.lam.m;
        ws = init.lam.w;
    }
    std::vector<Eigen::MatrixXd> params = pack(result.phi.phi, mats, ws);
    AdamState adam = AdamState::like(params);

    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, dataset.records.size() - 1);
    TransitionDataset batch;
    batch.records.resize(config.batch_size);

    for (int step = 0; step < config.num_steps; ++step) {
        for (int i = 0; i < config.batch_size; ++i) batch.records[i] = dataset.records[pick(rng)];
        unpack(params, result.phi.phi, mats, ws);
        LossComponents comps;
        LossGradients g;
        if (kind == ModelKind::Lsfm) {
            Lsfm lsfm{mats, ws};
            comps = loss_lsfm(batch, result.phi, lsfm, config.alpha_psi, config.alpha_n,
                              config.gamma);
            g = grad_lsfm(batch, result.phi, lsfm, config.alpha_psi, config.alpha_n,
                          config.gamma);
        } else {
            Lam lam{mats, ws};
            comps = loss_lam(batch, result.phi, lam, config.alpha_p, config.alpha_n);
            g = grad_lam(batch, result.phi, lam, config.alpha_p, config.alpha_n);
        }
        check_divergence(comps.total, step);
        if (step % 100 == 0)
            result.trace.push_back({step, comps.total, comps.l_r, comps.l_psi, comps.l_n});
        result.final_loss = comps.total;
        std::vector<Eigen::MatrixXd> grads = pack(g.d_phi, g.d_mat, {});
        for (const auto& w : g.d_w) grads.push_back(w);
        adam_step(adam, params, grads, config.learning_rate);
    }
    unpack(params, result.phi.phi, mats, ws);
    if (kind == ModelKind::Lsfm)
        result.lsfm = Lsfm{mats, ws};
    else
        result.lam = Lam{mats, ws};
    return result;
}

}  // namespace sfrl
