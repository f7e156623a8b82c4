#include "sfrl/fitted_q.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace sfrl {

Eigen::MatrixXd FittedQResult::q_values() const {
    Eigen::MatrixXd out(phi.phi.rows(), q.size());
    for (std::size_t a = 0; a < q.size(); ++a) out.col(a) = phi.phi * q[a];
    return out;
}

FittedQResult fitted_q_iteration(const TransitionDataset& dataset,
                                 const StateRepresentation& phi, bool trainable_phi,
                                 const TrainConfig& config, int num_actions,
                                 const std::vector<char>& terminal) {
    if (dataset.records.empty())
        throw std::invalid_argument("fitted_q_iteration: empty dataset");
    FittedQResult result;
    result.phi = phi;
    const int n = phi.n();
    result.q.assign(num_actions, Eigen::VectorXd::Zero(n));

    std::vector<Eigen::MatrixXd> params;
    if (trainable_phi) params.push_back(result.phi.phi);
    for (const auto& q_a : result.q) params.push_back(q_a);
    AdamState adam = AdamState::like(params);

    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, dataset.records.size() - 1);

    auto is_terminal = [&](int s) {
        return !terminal.empty() && terminal[static_cast<std::size_t>(s)];
    };

    for (int step = 0; step < config.num_steps; ++step) {
        std::size_t offset = trainable_phi ? 1 : 0;
        Eigen::MatrixXd d_phi = Eigen::MatrixXd::Zero(result.phi.phi.rows(), n);
        std::vector<Eigen::VectorXd> d_q(num_actions, Eigen::VectorXd::Zero(n));
        double batch_loss = 0.0;
        for (int i = 0; i < config.batch_size; ++i) {
            const auto& rec = dataset.records[pick(rng)];
            Eigen::RowVectorXd phi_s = result.phi.phi.row(rec.s);
            double y = rec.r;
            if (!is_terminal(rec.s_next)) {
                Eigen::RowVectorXd phi_next = result.phi.phi.row(rec.s_next);
                double best = phi_next * result.q[0];
                for (int a = 1; a < num_actions; ++a)
                    best = std::max(best, double(phi_next * result.q[a]));
                y += config.gamma * best;
            }
            double e = phi_s * result.q[rec.a] - y;
            batch_loss += e * e;
            d_q[rec.a] += 2.0 * e * phi_s.transpose();
            if (trainable_phi) d_phi.row(rec.s) += 2.0 * e * result.q[rec.a].transpose();
        }
        if (!std::isfinite(batch_loss) || batch_loss > 1e12)
            throw std::runtime_error("fitted_q_iteration diverged at step " +
                                     std::to_string(step));
        if (step % 100 == 0)
            result.trace.push_back({step, batch_loss, batch_loss, 0.0, 0.0});

        std::vector<Eigen::MatrixXd> grads;
        if (trainable_phi) grads.push_back(d_phi);
        for (const auto& g : d_q) grads.push_back(g);
        adam_step(adam, params, grads, config.learning_rate);
        if (trainable_phi) result.phi.phi = params[0];
        for (int a = 0; a < num_actions; ++a) result.q[a] = params[offset + a];
    }
    return result;
}

}  // namespace sfrl
