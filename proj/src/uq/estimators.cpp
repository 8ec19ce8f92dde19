#include "moluq/uq/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "moluq/chem/smiles.hpp"
#include "moluq/common/error.hpp"
#include "moluq/common/hash.hpp"
#include "moluq/shallow/forest.hpp"
#include "moluq/shallow/linear_gp.hpp"

namespace moluq::uq {

namespace {

std::string base_name(BaseModel b) {
    return b == BaseModel::Mpnn ? "mpnn" : "ffn";
}

const std::vector<nnet::Sample>& samples_for(const SplitContext& ctx, BaseModel base) {
    return base == BaseModel::Mpnn ? ctx.graph_samples : ctx.fp_samples;
}

nnet::NetConfig net_config(const EstimatorConfig& config, BaseModel base, nnet::Head head,
                           double dropout) {
    nnet::NetConfig c = config.net;
    c.featurizer = base == BaseModel::Mpnn ? nnet::Featurizer::Graph
                                           : nnet::Featurizer::Fingerprint;
    c.head = head;
    c.dropout = dropout;
    c.fingerprint_length = config.fingerprint_length;
    return c;
}

struct Gathered {
    std::vector<nnet::Sample> train_x;
    std::vector<double> train_y;  // scaled
    std::vector<nnet::Sample> val_x;
    std::vector<double> val_y;    // scaled
};

Gathered gather(const SplitContext& ctx, BaseModel base) {
    const auto& samples = samples_for(ctx, base);
    Gathered g;
    for (std::size_t i : ctx.split.train) {
        g.train_x.push_back(samples[i]);
        g.train_y.push_back(ctx.scaled_targets[i]);
    }
    for (std::size_t i : ctx.split.validation) {
        g.val_x.push_back(samples[i]);
        g.val_y.push_back(ctx.scaled_targets[i]);
    }
    return g;
}

PredictionSet make_set(const SplitContext& ctx, const std::vector<std::size_t>& indices,
                       const std::string& estimator_id, UqSemantics semantics,
                       std::vector<double> predictions, std::vector<double> uncertainties) {
    PredictionSet ps;
    ps.estimator_id = estimator_id;
    ps.split_id = ctx.split.id();
    ps.semantics = semantics;
    ps.predictions = std::move(predictions);
    ps.uncertainties = std::move(uncertainties);
    for (std::size_t i : indices) {
        ps.smiles.push_back(ctx.smiles[i]);
        ps.truths.push_back(ctx.targets[i]);
    }
    ps.validate();
    return ps;
}

std::vector<double> predict_unscaled(const nnet::TrainedModel& model, const SplitContext& ctx,
                                     const std::vector<std::size_t>& indices, BaseModel base) {
    const auto& samples = samples_for(ctx, base);
    std::vector<double> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) {
        out.push_back(ctx.scaler.inverse(nnet::forward(model, samples[i]).prediction));
    }
    return out;
}

// Ensemble aggregation over per-member unscaled prediction tables:
// rows = members, aligned columns = molecules.
void aggregate_members(const std::vector<std::vector<double>>& members,
                       std::vector<double>& means, std::vector<double>& variances) {
    const std::size_t n_points = members.front().size();
    means.resize(n_points);
    variances.resize(n_points);
    std::vector<double> column(members.size());
    for (std::size_t i = 0; i < n_points; ++i) {
        for (std::size_t m = 0; m < members.size(); ++m) column[m] = members[m][i];
        const EnsembleStats stats = ensemble_predict(column);
        means[i] = stats.mean;
        variances[i] = stats.variance;
    }
}

EstimatorRun assemble_ensemble_run(const SplitContext& ctx, const std::string& id,
                                   const std::vector<std::vector<double>>& val_members,
                                   const std::vector<std::vector<double>>& test_members,
                                   nlohmann::json details) {
    std::vector<double> means, variances;
    EstimatorRun run;
    aggregate_members(val_members, means, variances);
    run.validation = make_set(ctx, ctx.split.validation, id, UqSemantics::VarianceLike,
                              means, variances);
    aggregate_members(test_members, means, variances);
    run.test = make_set(ctx, ctx.split.test, id, UqSemantics::VarianceLike, means, variances);
    run.details_json = details.dump(2) + "\n";
    return run;
}

Eigen::MatrixXd fingerprint_matrix(const SplitContext& ctx,
                                   const std::vector<std::size_t>& indices) {
    const int d = ctx.fingerprints.front().length;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(indices.size()), d);
    for (std::size_t row = 0; row < indices.size(); ++row) {
        for (int bit : ctx.fingerprints[indices[row]].set_bits()) {
            m(static_cast<Eigen::Index>(row), bit) = 1.0;
        }
    }
    return m;
}

Eigen::MatrixXd embedding_matrix(const nnet::TrainedModel& model, const SplitContext& ctx,
                                 const std::vector<std::size_t>& indices, BaseModel base) {
    const auto& samples = samples_for(ctx, base);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(indices.size()), model.config.hidden_size);
    for (std::size_t row = 0; row < indices.size(); ++row) {
        m.row(static_cast<Eigen::Index>(row)) =
            nnet::forward(model, samples[indices[row]]).embedding.transpose();
    }
    return m;
}

struct TailPredictions {
    std::vector<double> means;      // original units
    std::vector<double> variances;  // original units
};

// Fits the requested tail on (inputs, scaled targets) and predicts the query
// rows, unscaling means and variances.
class Tail {
public:
    Tail(TailModel kind, const EstimatorConfig& config, const Eigen::MatrixXd& inputs,
         const std::vector<double>& scaled_targets, std::uint64_t seed)
        : kind_(kind) {
        Eigen::VectorXd y(static_cast<Eigen::Index>(scaled_targets.size()));
        for (std::size_t i = 0; i < scaled_targets.size(); ++i) {
            y[static_cast<Eigen::Index>(i)] = scaled_targets[i];
        }
        if (kind_ == TailModel::Gp) {
            gp_ = shallow::LinearGP::fit(inputs, y, config.gp_noise, config.gp_prior_variance);
        } else {
            shallow::ForestConfig fc;
            fc.tree_count = config.forest_trees;
            fc.min_leaf = config.forest_min_leaf;
            fc.seed = seed;
            forest_ = shallow::Forest::fit(inputs, y, fc);
        }
    }

    TailPredictions predict(const Eigen::MatrixXd& queries,
                            const data::TargetScaler& scaler) const {
        TailPredictions out;
        const double var_scale = scaler.std * scaler.std;
        for (Eigen::Index r = 0; r < queries.rows(); ++r) {
            double mean, variance;
            if (kind_ == TailModel::Gp) {
                const auto p = gp_->predict(queries.row(r).transpose());
                mean = p.mean;
                variance = p.variance;
            } else {
                const auto p = forest_->predict(queries.row(r).transpose());
                mean = p.mean;
                variance = p.variance;
            }
            out.means.push_back(scaler.inverse(mean));
            out.variances.push_back(variance * var_scale);
        }
        return out;
    }

private:
    TailModel kind_;
    std::optional<shallow::LinearGP> gp_;
    std::optional<shallow::Forest> forest_;
};

std::string tail_name(TailModel t) {
    return t == TailModel::Gp ? "gp" : "rf";
}

}  // namespace

SplitContext SplitContext::build(const data::Dataset& dataset,
                                 const data::SplitAssignment& split,
                                 const EstimatorConfig& config) {
    SplitContext ctx;
    ctx.split = split;
    ctx.smiles.reserve(dataset.size());
    ctx.targets.reserve(dataset.size());
    for (const auto& r : dataset.records) {
        ctx.smiles.push_back(r.smiles);
        ctx.targets.push_back(r.target);
    }

    const nnet::NetConfig graph_cfg = net_config(config, BaseModel::Mpnn,
                                                 nnet::Head::Scalar, 0.0);
    const nnet::NetConfig fp_cfg = net_config(config, BaseModel::Ffn,
                                              nnet::Head::Scalar, 0.0);
    for (const auto& smiles : ctx.smiles) {
        const chem::Molecule mol = chem::parse_smiles(smiles);
        ctx.fingerprints.push_back(chem::circular_fingerprint(
            mol, config.fingerprint_length, config.fingerprint_radius));
        ctx.graph_samples.push_back(nnet::featurize(mol, graph_cfg));
        ctx.fp_samples.push_back(nnet::featurize(ctx.fingerprints.back(), fp_cfg));
    }

    std::vector<double> train_targets;
    train_targets.reserve(split.train.size());
    for (std::size_t i : split.train) train_targets.push_back(ctx.targets[i]);
    try {
        ctx.scaler = data::standardize_targets(train_targets);
    } catch (const DataError&) {
        // Constant train targets: center only, unit scale.
        double mean = 0.0;
        for (double y : train_targets) mean += y;
        ctx.scaler = data::TargetScaler{mean / static_cast<double>(train_targets.size()), 1.0};
    }
    ctx.scaled_targets.reserve(ctx.targets.size());
    for (double y : ctx.targets) ctx.scaled_targets.push_back(ctx.scaler.transform(y));
    return ctx;
}

EstimatorRun run_traditional_ensemble(const SplitContext& ctx, const EstimatorConfig& config,
                                      BaseModel base, std::uint64_t master_seed) {
    const std::string id = base_name(base) + "_ensemble";
    if (config.ensemble_size < 2) throw Error(id + ": ensemble size must be >= 2");
    const Gathered g = gather(ctx, base);
    const nnet::NetConfig net = net_config(config, base, nnet::Head::Scalar, 0.0);

    std::vector<std::vector<double>> val_members, test_members;
    std::vector<std::uint64_t> member_seeds;
    for (int m = 0; m < config.ensemble_size; ++m) {
        nnet::TrainSchedule sched = config.schedule;
        sched.seed = derive_seed(master_seed, id + ".member." + std::to_string(m));
        member_seeds.push_back(sched.seed);
        try {
            const auto result = nnet::train(net, g.train_x, g.train_y, g.val_x, g.val_y, sched);
            val_members.push_back(
                predict_unscaled(result.model, ctx, ctx.split.validation, base));
            test_members.push_back(predict_unscaled(result.model, ctx, ctx.split.test, base));
        } catch (const TrainingError& e) {
            throw TrainingError(id + " member " + std::to_string(m) + ": " + e.what());
        }
    }

    nlohmann::json details;
    details["estimator"] = id;
    details["ensemble"] = {{"size", config.ensemble_size}, {"mechanism", "init"}};
    details["member_seeds"] = member_seeds;
    return assemble_ensemble_run(ctx, id, val_members, test_members, std::move(details));
}

EstimatorRun run_bootstrap_ensemble(const SplitContext& ctx, const EstimatorConfig& config,
                                    BaseModel base, std::uint64_t master_seed) {
    const std::string id = base_name(base) + "_bootstrap";
    if (config.ensemble_size < 2) throw Error(id + ": ensemble size must be >= 2");
    if (!(config.bootstrap_fraction > 0.0 && config.bootstrap_fraction <= 1.0)) {
        throw Error(id + ": bootstrap fraction must be in (0,1]");
    }
    const auto& samples = samples_for(ctx, base);
    const Gathered g = gather(ctx, base);

    const std::size_t subset_size = static_cast<std::size_t>(
        config.bootstrap_fraction * static_cast<double>(ctx.split.train.size()));
    if (subset_size < 1) throw Error(id + ": training set too small for the subset fraction");

    const nnet::NetConfig net = net_config(config, base, nnet::Head::Scalar, 0.0);
    std::vector<std::vector<double>> val_members, test_members;
    std::vector<std::vector<std::size_t>> subsets;  // dataset record indices
    std::vector<std::string> warnings;
    for (int m = 0; m < config.ensemble_size; ++m) {
        Rng subset_rng(derive_seed(master_seed, id + ".subset." + std::to_string(m)));
        const auto rows =
            subset_rng.sample_without_replacement(ctx.split.train.size(), subset_size);
        std::vector<nnet::Sample> train_x;
        std::vector<double> train_y;
        std::vector<std::size_t> subset;
        for (std::size_t r : rows) {
            const std::size_t rec = ctx.split.train[r];
            subset.push_back(rec);
            train_x.push_back(samples[rec]);
            train_y.push_back(ctx.scaled_targets[rec]);
        }
        subsets.push_back(std::move(subset));
        if (subset_size < static_cast<std::size_t>(config.schedule.batch_size)) {
            warnings.push_back("member " + std::to_string(m) +
                               ": subset smaller than batch size, batches shrink");
        }
        nnet::TrainSchedule sched = config.schedule;
        sched.seed = derive_seed(master_seed, id + ".member." + std::to_string(m));
        try {
            const auto result = nnet::train(net, train_x, train_y, g.val_x, g.val_y, sched);
            val_members.push_back(
                predict_unscaled(result.model, ctx, ctx.split.validation, base));
            test_members.push_back(predict_unscaled(result.model, ctx, ctx.split.test, base));
        } catch (const TrainingError& e) {
            throw TrainingError(id + " member " + std::to_string(m) + ": " + e.what());
        }
    }

    std::set<std::size_t> covered;
    for (const auto& s : subsets) covered.insert(s.begin(), s.end());

    nlohmann::json details;
    details["estimator"] = id;
    details["ensemble"] = {{"size", config.ensemble_size},
                           {"mechanism", "bootstrap"},
                           {"fraction", config.bootstrap_fraction}};
    details["subset_size"] = subset_size;
    details["subsets"] = subsets;
    details["train_coverage"] =
        static_cast<double>(covered.size()) / static_cast<double>(ctx.split.train.size());
    if (!warnings.empty()) details["warnings"] = warnings;
    return assemble_ensemble_run(ctx, id, val_members, test_members, std::move(details));
}

EstimatorRun run_snapshot_ensemble(const SplitContext& ctx, const EstimatorConfig& config,
                                   BaseModel base, std::uint64_t master_seed) {
    const std::string id = base_name(base) + "_snapshot";
    if (config.snapshot_period < 1) throw Error(id + ": snapshot period must be >= 1");
    const Gathered g = gather(ctx, base);
    const nnet::NetConfig net = net_config(config, base, nnet::Head::Scalar, 0.0);

    nnet::TrainSchedule sched = config.schedule;
    sched.snapshot_period = config.snapshot_period;
    sched.epochs = config.snapshot_period * config.ensemble_size;
    sched.seed = derive_seed(master_seed, id + ".training");

    nnet::TrainResult result;
    try {
        result = nnet::train(net, g.train_x, g.train_y, g.val_x, g.val_y, sched);
    } catch (const TrainingError& e) {
        throw TrainingError(id + ": " + std::string(e.what()));
    }
    if (result.snapshots.size() < 2) {
        throw Error(id + ": fewer than 2 snapshots, ensemble degenerate");
    }

    std::vector<std::vector<double>> val_members, test_members;
    std::vector<int> snapshot_epochs;
    for (std::size_t m = 0; m < result.snapshots.size(); ++m) {
        val_members.push_back(
            predict_unscaled(result.snapshots[m], ctx, ctx.split.validation, base));
        test_members.push_back(predict_unscaled(result.snapshots[m], ctx, ctx.split.test, base));
        snapshot_epochs.push_back(static_cast<int>(m + 1) * config.snapshot_period);
    }

    nlohmann::json details;
    details["estimator"] = id;
    details["ensemble"] = {{"size", static_cast<int>(result.snapshots.size())},
                           {"mechanism", "snapshot"},
                           {"period_epochs", config.snapshot_period}};
    details["snapshot_epochs"] = snapshot_epochs;  // member list in epoch order
    details["epoch_learning_rates"] = result.model.epoch_learning_rates;
    return assemble_ensemble_run(ctx, id, val_members, test_members, std::move(details));
}

EstimatorRun run_mc_dropout(const SplitContext& ctx, const EstimatorConfig& config,
                            BaseModel base, double dropout_rate, int passes,
                            std::uint64_t master_seed) {
    std::ostringstream label;
    label << base_name(base) << "_dropout_" << std::lround(dropout_rate * 100.0);
    const std::string id = label.str();
    if (!(dropout_rate > 0.0)) throw Error(id + ": dropout ensemble undefined for p = 0");
    if (passes < 2) throw Error(id + ": need at least 2 stochastic passes");

    const Gathered g = gather(ctx, base);
    const nnet::NetConfig net = net_config(config, base, nnet::Head::Scalar, dropout_rate);
    nnet::TrainSchedule sched = config.schedule;
    sched.seed = derive_seed(master_seed, id + ".training");
    nnet::TrainResult result;
    try {
        result = nnet::train(net, g.train_x, g.train_y, g.val_x, g.val_y, sched);
    } catch (const TrainingError& e) {
        throw TrainingError(id + ": " + std::string(e.what()));
    }

    const auto& samples = samples_for(ctx, base);
    auto stochastic_members = [&](const std::vector<std::size_t>& indices,
                                  const char* tag) {
        std::vector<std::vector<double>> members(static_cast<std::size_t>(passes));
        for (int p = 0; p < passes; ++p) {
            members[p].reserve(indices.size());
            for (std::size_t i : indices) {
                Rng mask_rng(derive_seed(master_seed, id + "." + tag + ".pass." +
                                                          std::to_string(p) + ".row." +
                                                          std::to_string(i)));
                const double pred =
                    nnet::forward(result.model, samples[i], &mask_rng).prediction;
                members[p].push_back(ctx.scaler.inverse(pred));
            }
        }
        return members;
    };

    nlohmann::json details;
    details["estimator"] = id;
    details["ensemble"] = {{"size", passes},
                           {"mechanism", "mc-dropout"},
                           {"rate", dropout_rate},
                           {"passes", passes}};
    details["prediction_rule"] = "mean over stochastic passes";
    return assemble_ensemble_run(ctx, id, stochastic_members(ctx.split.validation, "val"),
                                 stochastic_members(ctx.split.test, "test"),
                                 std::move(details));
}

EstimatorRun run_mve(const SplitContext& ctx, const EstimatorConfig& config, BaseModel base,
                     std::uint64_t master_seed) {
    const std::string id = base_name(base) + "_mve";
    const Gathered g = gather(ctx, base);
    const nnet::NetConfig net = net_config(config, base, nnet::Head::MeanVariance, 0.0);
    nnet::TrainSchedule sched = config.schedule;
    sched.seed = derive_seed(master_seed, id + ".training");
    nnet::TrainResult result;
    try {
        result = nnet::train(net, g.train_x, g.train_y, g.val_x, g.val_y, sched);
    } catch (const TrainingError& e) {
        throw TrainingError(id + ": " + std::string(e.what()));
    }

    const auto& samples = samples_for(ctx, base);
    const double var_scale = ctx.scaler.std * ctx.scaler.std;
    int floor_hits = 0;
    auto predict = [&](const std::vector<std::size_t>& indices, int* hits) {
        std::vector<double> means, variances;
        for (std::size_t i : indices) {
            const auto out = nnet::forward(result.model, samples[i]);
            means.push_back(ctx.scaler.inverse(out.prediction));
            const double v = out.variance.value();
            if (hits != nullptr && v <= net.variance_floor * (1.0 + 1e-9)) ++(*hits);
            variances.push_back(v * var_scale);
        }
        return std::pair(means, variances);
    };

    EstimatorRun run;
    auto [val_m, val_v] = predict(ctx.split.validation, nullptr);
    run.validation = make_set(ctx, ctx.split.validation, id, UqSemantics::VarianceLike,
                              std::move(val_m), std::move(val_v));
    auto [test_m, test_v] = predict(ctx.split.test, &floor_hits);
    run.test = make_set(ctx, ctx.split.test, id, UqSemantics::VarianceLike,
                        std::move(test_m), std::move(test_v));

    nlohmann::json details;
    details["estimator"] = id;
    details["variance_floor"] = net.variance_floor;
    details["floor_hits_test"] = floor_hits;
    if (floor_hits * 2 > static_cast<int>(ctx.split.test.size())) {
        details["warnings"] = {"variance floor hit on more than half of the test set "
                               "(likely collapse)"};
    }
    details["train_losses"] = result.model.train_losses;
    run.details_json = details.dump(2) + "\n";
    return run;
}

double knn_mean(std::vector<double> distances, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > distances.size()) {
        throw Error("knn_mean: k out of range");
    }
    std::nth_element(distances.begin(), distances.begin() + (k - 1), distances.end());
    double total = 0.0;
    for (int i = 0; i < k; ++i) total += distances[static_cast<std::size_t>(i)];
    return total / static_cast<double>(k);
}

EstimatorRun run_distance_uq(const SplitContext& ctx, const EstimatorConfig& config,
                             BaseModel base, DistanceSpace space, std::uint64_t master_seed) {
    const std::string id = base_name(base) +
                           (space == DistanceSpace::Structure ? "_tanimoto" : "_latent");
    const int k = config.knn_k;
    if (k < 1 || static_cast<std::size_t>(k) > ctx.split.train.size()) {
        throw Error(id + ": k = " + std::to_string(k) + " exceeds the training set");
    }

    // Base model: point predictions, and the embedding space when latent.
    const Gathered g = gather(ctx, base);
    const nnet::NetConfig net = net_config(config, base, nnet::Head::Scalar, 0.0);
    nnet::TrainSchedule sched = config.schedule;
    sched.seed = derive_seed(master_seed, id + ".training");
    nnet::TrainResult result;
    try {
        result = nnet::train(net, g.train_x, g.train_y, g.val_x, g.val_y, sched);
    } catch (const TrainingError& e) {
        throw TrainingError(id + ": " + std::string(e.what()));
    }

    // Distance tables query x train; infinities (empty fingerprint
    // intersections) are replaced by (max finite + 1) so k-NN means stay
    // finite. The replacement value is shared across the whole run.
    std::vector<std::vector<double>> val_rows(ctx.split.validation.size());
    std::vector<std::vector<double>> test_rows(ctx.split.test.size());
    double max_finite = 0.0;
    bool any_infinite = false;

    if (space == DistanceSpace::Structure) {
        auto fill = [&](const std::vector<std::size_t>& queries,
                        std::vector<std::vector<double>>& rows) {
            for (std::size_t q = 0; q < queries.size(); ++q) {
                rows[q].reserve(ctx.split.train.size());
                for (std::size_t t : ctx.split.train) {
                    const double d = chem::tanimoto_distance(ctx.fingerprints[queries[q]],
                                                             ctx.fingerprints[t]);
                    if (std::isinf(d)) {
                        any_infinite = true;
                    } else {
                        max_finite = std::max(max_finite, d);
                    }
                    rows[q].push_back(d);
                }
            }
        };
        fill(ctx.split.validation, val_rows);
        fill(ctx.split.test, test_rows);
        const double replacement = max_finite + 1.0;
        for (auto* rows : {&val_rows, &test_rows}) {
            for (auto& row : *rows) {
                for (double& d : row) {
                    if (std::isinf(d)) d = replacement;
                }
            }
        }
    } else {
        const Eigen::MatrixXd train_emb =
            embedding_matrix(result.model, ctx, ctx.split.train, base);
        auto fill = [&](const std::vector<std::size_t>& queries,
                        std::vector<std::vector<double>>& rows) {
            const Eigen::MatrixXd emb = embedding_matrix(result.model, ctx, queries, base);
            for (Eigen::Index q = 0; q < emb.rows(); ++q) {
                rows[static_cast<std::size_t>(q)].resize(
                    static_cast<std::size_t>(train_emb.rows()));
                for (Eigen::Index t = 0; t < train_emb.rows(); ++t) {
                    rows[static_cast<std::size_t>(q)][static_cast<std::size_t>(t)] =
                        (emb.row(q) - train_emb.row(t)).norm();
                }
            }
        };
        fill(ctx.split.validation, val_rows);
        fill(ctx.split.test, test_rows);
    }

    auto knn_all = [k](const std::vector<std::vector<double>>& rows) {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& row : rows) out.push_back(knn_mean(row, k));
        return out;
    };

    EstimatorRun run;
    run.validation = make_set(ctx, ctx.split.validation, id, UqSemantics::Relative,
                              predict_unscaled(result.model, ctx, ctx.split.validation, base),
                              knn_all(val_rows));
    run.test = make_set(ctx, ctx.split.test, id, UqSemantics::Relative,
                        predict_unscaled(result.model, ctx, ctx.split.test, base),
                        knn_all(test_rows));

    nlohmann::json details;
    details["estimator"] = id;
    details["space"] = space == DistanceSpace::Structure ? "structure" : "latent";
    details["k"] = k;
    if (space == DistanceSpace::Structure) {
        details["infinite_distances_seen"] = any_infinite;
        details["replacement_value"] = max_finite + 1.0;
    }
    run.details_json = details.dump(2) + "\n";
    return run;
}

EstimatorRun run_union(const SplitContext& ctx, const EstimatorConfig& config, BaseModel base,
                       TailModel tail, std::uint64_t master_seed) {
    const std::string id = base_name(base) + "_" + tail_name(tail);
    if (ctx.split.validation.size() < 10) {
        throw Error(id + ": validation set too small for the tail model (" +
                    std::to_string(ctx.split.validation.size()) + " < 10)");
    }

    const Gathered g = gather(ctx, base);
    const nnet::NetConfig net = net_config(config, base, nnet::Head::Scalar, 0.0);
    nnet::TrainSchedule sched = config.schedule;
    sched.seed = derive_seed(master_seed, id + ".training");
    nnet::TrainResult result;
    try {
        result = nnet::train(net, g.train_x, g.train_y, g.val_x, g.val_y, sched);
    } catch (const TrainingError& e) {
        throw TrainingError(id + ": " + std::string(e.what()));
    }

    // The tail trains on exactly the transformed validation set; the network
    // head is dropped and every prediction now comes from the tail.
    const Eigen::MatrixXd val_emb = embedding_matrix(result.model, ctx, ctx.split.validation, base);
    const Tail fitted(tail, config, val_emb, g.val_y,
                      derive_seed(master_seed, id + ".tail"));

    EstimatorRun run;
    const TailPredictions val_pred = fitted.predict(val_emb, ctx.scaler);
    run.validation = make_set(ctx, ctx.split.validation, id, UqSemantics::VarianceLike,
                              val_pred.means, val_pred.variances);
    const Eigen::MatrixXd test_emb = embedding_matrix(result.model, ctx, ctx.split.test, base);
    const TailPredictions test_pred = fitted.predict(test_emb, ctx.scaler);
    run.test = make_set(ctx, ctx.split.test, id, UqSemantics::VarianceLike, test_pred.means,
                        test_pred.variances);

    nlohmann::json details;
    details["estimator"] = id;
    details["tail"] = tail_name(tail);
    details["tail_fitted_on"] = "validation";
    details["tail_training_rows"] = ctx.split.validation.size();
    if (tail == TailModel::Gp) {
        details["gp"] = {{"noise", config.gp_noise}, {"prior_variance", config.gp_prior_variance}};
    } else {
        details["forest"] = {{"trees", config.forest_trees},
                             {"min_leaf", config.forest_min_leaf}};
    }
    run.details_json = details.dump(2) + "\n";
    return run;
}

EstimatorRun run_fp_baseline(const SplitContext& ctx, const EstimatorConfig& config,
                             TailModel tail, std::uint64_t master_seed) {
    const std::string id = "fp_" + tail_name(tail);
    if (ctx.split.train.size() < 2) throw Error(id + ": training set too small");

    // Unlike the union methods, the tail fits directly on the training-set
    // fingerprints.
    std::vector<double> train_y;
    for (std::size_t i : ctx.split.train) train_y.push_back(ctx.scaled_targets[i]);
    const Eigen::MatrixXd train_fp = fingerprint_matrix(ctx, ctx.split.train);
    const Tail fitted(tail, config, train_fp, train_y,
                      derive_seed(master_seed, id + ".tail"));

    EstimatorRun run;
    const TailPredictions val_pred =
        fitted.predict(fingerprint_matrix(ctx, ctx.split.validation), ctx.scaler);
    run.validation = make_set(ctx, ctx.split.validation, id, UqSemantics::VarianceLike,
                              val_pred.means, val_pred.variances);
    const TailPredictions test_pred =
        fitted.predict(fingerprint_matrix(ctx, ctx.split.test), ctx.scaler);
    run.test = make_set(ctx, ctx.split.test, id, UqSemantics::VarianceLike, test_pred.means,
                        test_pred.variances);

    nlohmann::json details;
    details["estimator"] = id;
    details["tail"] = tail_name(tail);
    details["tail_fitted_on"] = "train";
    details["tail_training_rows"] = ctx.split.train.size();
    if (tail == TailModel::Gp) {
        details["gp"] = {{"noise", config.gp_noise}, {"prior_variance", config.gp_prior_variance}};
    } else {
        details["forest"] = {{"trees", config.forest_trees},
                             {"min_leaf", config.forest_min_leaf}};
    }
    run.details_json = details.dump(2) + "\n";
    return run;
}

std::vector<std::string> full_roster() {
    std::vector<std::string> roster;
    for (const char* base : {"mpnn", "ffn"}) {
        for (const char* kind : {"ensemble", "bootstrap", "snapshot", "dropout_10",
                                 "dropout_20", "mve", "tanimoto", "latent", "gp", "rf"}) {
            roster.push_back(std::string(base) + "_" + kind);
        }
    }
    roster.push_back("fp_gp");
    roster.push_back("fp_rf");
    return roster;
}

bool is_known_estimator(const std::string& id) {
    const auto roster = full_roster();
    return std::find(roster.begin(), roster.end(), id) != roster.end();
}

bool is_relative_estimator(const std::string& id) {
    return id.ends_with("_tanimoto") || id.ends_with("_latent");
}

EstimatorRun run_estimator(const std::string& id, const SplitContext& ctx,
                           const EstimatorConfig& config, std::uint64_t master_seed) {
    if (id == "fp_gp") return run_fp_baseline(ctx, config, TailModel::Gp, master_seed);
    if (id == "fp_rf") return run_fp_baseline(ctx, config, TailModel::Rf, master_seed);

    BaseModel base;
    std::string kind;
    if (id.starts_with("mpnn_")) {
        base = BaseModel::Mpnn;
        kind = id.substr(5);
    } else if (id.starts_with("ffn_")) {
        base = BaseModel::Ffn;
        kind = id.substr(4);
    } else {
        throw ConfigError("unknown estimator id: " + id);
    }

    if (kind == "ensemble") return run_traditional_ensemble(ctx, config, base, master_seed);
    if (kind == "bootstrap") return run_bootstrap_ensemble(ctx, config, base, master_seed);
    if (kind == "snapshot") return run_snapshot_ensemble(ctx, config, base, master_seed);
    // The two dropout roster slots map onto the configured rate list.
    if (kind == "dropout_10") {
        return run_mc_dropout(ctx, config, base, config.dropout_rates.at(0),
                              config.dropout_passes, master_seed);
    }
    if (kind == "dropout_20") {
        return run_mc_dropout(ctx, config, base, config.dropout_rates.at(1),
                              config.dropout_passes, master_seed);
    }
    if (kind == "mve") return run_mve(ctx, config, base, master_seed);
    if (kind == "tanimoto") {
        return run_distance_uq(ctx, config, base, DistanceSpace::Structure, master_seed);
    }
    if (kind == "latent") {
        return run_distance_uq(ctx, config, base, DistanceSpace::Latent, master_seed);
    }
    if (kind == "gp") return run_union(ctx, config, base, TailModel::Gp, master_seed);
    if (kind == "rf") return run_union(ctx, config, base, TailModel::Rf, master_seed);
    throw ConfigError("unknown estimator id: " + id);
}

}  // namespace moluq::uq
