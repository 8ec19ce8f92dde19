#pragma once

#include <cstdint>
#include <vector>

#include "moluq/nnet/net.hpp"

namespace moluq::nnet {

struct TrainSchedule {
    int epochs = 30;
    int batch_size = 32;
    double lr_max = 5e-3;
    double lr_init = 5e-4;          // warmup start and decay floor
    double warmup_fraction = 0.1;   // of a schedule cycle, in steps
    int patience = 5;               // early stopping on validation RMSE; <= 0 disables
    int snapshot_period = 0;        // epochs between snapshots; 0 disables snapshotting
    std::uint64_t seed = 0;
};

struct TrainResult {
    TrainedModel model;                   // best-validation-loss parameters
    std::vector<TrainedModel> snapshots;  // one per completed period, in epoch order
};

// Adam over shuffled mini-batches with a warmup-then-linear-decay learning
// rate. With snapshotting on, the schedule cycle is the snapshot period and
// restarts after each snapshot (early stopping is disabled so the member
// count is exactly epochs / period). Divergence aborts with a diagnostic.
TrainResult train(const NetConfig& config,
                  const std::vector<Sample>& train_inputs,
                  const std::vector<double>& train_targets,
                  const std::vector<Sample>& val_inputs,
                  const std::vector<double>& val_targets,
                  const TrainSchedule& schedule);

// RMSE of point predictions (the MVE head contributes its mean).
double rmse(const TrainedModel& model, const std::vector<Sample>& inputs,
            const std::vector<double>& targets);

}  // namespace moluq::nnet
