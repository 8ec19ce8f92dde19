#include "moluq/nnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "moluq/common/error.hpp"
#include "moluq/common/hash.hpp"

namespace moluq::nnet {

namespace {

struct Adam {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;

    explicit Adam(Eigen::Index n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

    void update(Eigen::Map<Eigen::VectorXd> params, const Eigen::VectorXd& grad, double lr) {
        ++step;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        params -= (lr / c1) * m.cwiseQuotient(((v / c2).cwiseSqrt().array() + eps).matrix());
    }
};

// Learning rate at a step position within the current cycle: linear warmup
// from lr_init to lr_max, then linear decay back to lr_init by cycle end.
double schedule_lr(const TrainSchedule& s, long cycle_pos, long cycle_steps) {
    const long warmup =
        std::max<long>(1, std::lround(s.warmup_fraction * static_cast<double>(cycle_steps)));
    if (cycle_pos < warmup) {
        const double frac = static_cast<double>(cycle_pos + 1) / static_cast<double>(warmup);
        return s.lr_init + (s.lr_max - s.lr_init) * frac;
    }
    const long decay_span = std::max<long>(1, cycle_steps - warmup);
    const double frac = static_cast<double>(cycle_pos - warmup + 1) /
                        static_cast<double>(decay_span);
    return s.lr_max - (s.lr_max - s.lr_init) * std::min(1.0, frac);
}

}  // namespace

double rmse(const TrainedModel& model, const std::vector<Sample>& inputs,
            const std::vector<double>& targets) {
    double sse = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const double r = forward(model, inputs[i]).prediction - targets[i];
        sse += r * r;
    }
    return std::sqrt(sse / static_cast<double>(inputs.size()));
}

TrainResult train(const NetConfig& config, const std::vector<Sample>& train_inputs,
                  const std::vector<double>& train_targets,
                  const std::vector<Sample>& val_inputs,
                  const std::vector<double>& val_targets, const TrainSchedule& schedule) {
    if (train_inputs.empty() || val_inputs.empty()) {
        throw TrainingError("train: empty train or validation set");
    }
    if (train_inputs.size() != train_targets.size() ||
        val_inputs.size() != val_targets.size()) {
        throw TrainingError("train: inputs/targets size mismatch");
    }

    TrainResult result;
    TrainedModel& model = result.model;
    model.config = config;
    model.parameters = init_parameters(config, derive_seed(schedule.seed, "init"));

    const std::size_t n = train_inputs.size();
    const std::size_t batch = std::max<std::size_t>(
        1, std::min<std::size_t>(static_cast<std::size_t>(schedule.batch_size), n));
    const long steps_per_epoch = static_cast<long>((n + batch - 1) / batch);
    const bool snapshotting = schedule.snapshot_period > 0;
    const long cycle_epochs = snapshotting ? schedule.snapshot_period : schedule.epochs;
    const long cycle_steps = cycle_epochs * steps_per_epoch;

    Adam opt(static_cast<Eigen::Index>(model.parameters.size()));
    Rng order_rng(derive_seed(schedule.seed, "shuffle"));
    Rng dropout_rng(derive_seed(schedule.seed, "dropout"));
    Rng* mask_source = config.dropout > 0.0 ? &dropout_rng : nullptr;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::vector<double> best_params = model.parameters;
    double best_val = std::numeric_limits<double>::infinity();
    int stale_epochs = 0;
    long global_step = 0;

    for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
        order_rng.shuffle(order);
        double epoch_loss = 0.0;
        model.epoch_learning_rates.push_back(
            schedule_lr(schedule, global_step % cycle_steps, cycle_steps));

        for (std::size_t at = 0; at < n; at += batch) {
            const std::size_t stop = std::min(n, at + batch);
            std::vector<const Sample*> inputs;
            std::vector<double> targets;
            inputs.reserve(stop - at);
            targets.reserve(stop - at);
            for (std::size_t i = at; i < stop; ++i) {
                inputs.push_back(&train_inputs[order[i]]);
                targets.push_back(train_targets[order[i]]);
            }
            const BatchGradient bg = gradient(model, inputs, targets, mask_source);
            if (!std::isfinite(bg.loss)) {
                throw TrainingError("train: non-finite loss at epoch " +
                                    std::to_string(epoch + 1) + ", step " +
                                    std::to_string(at / batch + 1) + " (diverged)");
            }
            epoch_loss += bg.loss * static_cast<double>(stop - at);
            const double lr = schedule_lr(schedule, global_step % cycle_steps, cycle_steps);
            opt.update(Eigen::Map<Eigen::VectorXd>(model.parameters.data(),
                                                   static_cast<Eigen::Index>(
                                                       model.parameters.size())),
                       bg.gradient, lr);
            ++global_step;
        }
        model.train_losses.push_back(epoch_loss / static_cast<double>(n));

        const double val = rmse(model, val_inputs, val_targets);
        model.validation_rmse.push_back(val);
        if (val < best_val) {
            best_val = val;
            best_params = model.parameters;
            stale_epochs = 0;
        } else {
            ++stale_epochs;
        }

        if (snapshotting && (epoch + 1) % schedule.snapshot_period == 0) {
            TrainedModel snap;
            snap.config = config;
            snap.parameters = model.parameters;
            result.snapshots.push_back(std::move(snap));
            // global_step is a multiple of cycle_steps here, so the next
            // step starts a fresh warmup: the learning rate resets.
        }

        if (!snapshotting && schedule.patience > 0 && stale_epochs >= schedule.patience) {
            break;
        }
    }

    model.parameters = std::move(best_params);
    for (double p : model.parameters) {
        if (!std::isfinite(p)) throw TrainingError("train: non-finite parameters after training");
    }
    return result;
}

}  // namespace moluq::nnet
