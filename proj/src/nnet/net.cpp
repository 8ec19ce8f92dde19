#include "moluq/nnet/net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "moluq/common/error.hpp"
#include "moluq/common/hash.hpp"

namespace moluq::nnet {

namespace {

constexpr const char* kCheckpointMagic = "MOLUQNET";
constexpr std::uint32_t kCheckpointVersion = 1;

const char* kTopElements[10] = {"C", "N", "O", "S", "F", "Cl", "Br", "I", "P", "B"};

int element_index(const std::string& symbol) {
    for (int i = 0; i < 10; ++i) {
        if (symbol == kTopElements[i]) return i;
    }
    return 10;  // "other"
}

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Flat parameter layout. Blocks appear in a fixed order; weight matrices are
// column-major h x in_dim so that a column holds one input feature.
struct Layout {
    bool graph = false;
    int hidden = 0;
    int input_dim = 0;   // atom features or fingerprint length
    int dense = 0;       // number of dense layers
    int out_dim = 1;
    int message_steps = 0;

    int w_in = 0, b_in = 0;              // graph only
    int w_msg = 0, b_msg = 0;            // graph only
    std::vector<int> dense_w, dense_b;   // dense[0] input dim differs for FFN
    int head_w = 0, head_b = 0;
    int total = 0;

    int dense_input(int layer) const {
        if (graph) return hidden;
        return layer == 0 ? input_dim : hidden;
    }
};

Layout make_layout(const NetConfig& c) {
    if (c.hidden_size < 1) throw Error("net config: hidden size must be >= 1");
    if (c.dense_layers < 1) throw Error("net config: at least one dense layer required");
    if (c.message_steps < 0) throw Error("net config: message steps must be >= 0");
    if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw Error("net config: dropout must be in [0,1)");
    if (c.fingerprint_length < 8) throw Error("net config: fingerprint length must be >= 8");
    Layout L;
    L.graph = c.featurizer == Featurizer::Graph;
    L.hidden = c.hidden_size;
    L.input_dim = L.graph ? kAtomFeatureCount : c.fingerprint_length;
    L.dense = c.dense_layers;
    L.out_dim = c.head == Head::MeanVariance ? 2 : 1;
    L.message_steps = c.message_steps;

    int at = 0;
    auto block = [&at](int rows, int cols) {
        const int off = at;
        at += rows * cols;
        return off;
    };
    if (L.graph) {
        L.w_in = block(L.hidden, L.input_dim);
        L.b_in = block(L.hidden, 1);
        L.w_msg = block(L.hidden, L.hidden);
        L.b_msg = block(L.hidden, 1);
    }
    for (int l = 0; l < L.dense; ++l) {
        L.dense_w.push_back(block(L.hidden, L.dense_input(l)));
        L.dense_b.push_back(block(L.hidden, 1));
    }
    L.head_w = block(L.out_dim, L.hidden);
    L.head_b = block(L.out_dim, 1);
    L.total = at;
    return L;
}

using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using MutMat = Eigen::Map<Eigen::MatrixXd>;
using MutVec = Eigen::Map<Eigen::VectorXd>;

// One dropout mask per dense layer, pre-scaled by 1/(1-p). Empty when
// dropout is inactive (p == 0 or no mask source).
std::vector<Eigen::VectorXd> draw_masks(const NetConfig& c, Rng* source) {
    std::vector<Eigen::VectorXd> masks;
    if (source == nullptr || c.dropout <= 0.0) return masks;
    const double keep = 1.0 - c.dropout;
    masks.reserve(static_cast<std::size_t>(c.dense_layers));
    for (int l = 0; l < c.dense_layers; ++l) {
        Eigen::VectorXd m(c.hidden_size);
        for (int i = 0; i < c.hidden_size; ++i) {
            m[i] = source->bernoulli(keep) ? 1.0 / keep : 0.0;
        }
        masks.push_back(std::move(m));
    }
    return masks;
}

// Everything the backward pass needs from one forward evaluation.
struct Trace {
    std::vector<Eigen::MatrixXd> msg_pre;   // graph: pre-activations per step (0 = input layer)
    std::vector<Eigen::MatrixXd> msg_act;   // graph: activations per step
    std::vector<Eigen::MatrixXd> msg_sum;   // graph: self-inclusive neighbor sums per step
    Eigen::VectorXd readout;
    std::vector<Eigen::VectorXd> dense_pre;
    std::vector<Eigen::VectorXd> dense_act;  // post-relu, post-dropout
    std::vector<Eigen::VectorXd> masks;
    Eigen::VectorXd head_out;
};

void forward_trace(const NetConfig& c, const Layout& L, const double* p,
                   const Sample& s, Rng* dropout_source, Trace& t) {
    if (c.featurizer == Featurizer::Graph) {
        if (s.kind != Featurizer::Graph) {
            throw Error("forward: graph model fed a fingerprint sample");
        }
        const int atoms = static_cast<int>(s.atom_features.rows());
        ConstMat w_in(p + L.w_in, L.hidden, L.input_dim);
        ConstVec b_in(p + L.b_in, L.hidden);
        ConstMat w_msg(p + L.w_msg, L.hidden, L.hidden);
        ConstVec b_msg(p + L.b_msg, L.hidden);

        t.msg_pre.assign(1, (w_in * s.atom_features.transpose()).colwise() + b_in);
        t.msg_act.assign(1, t.msg_pre[0].cwiseMax(0.0));
        t.msg_sum.clear();
        for (int step = 0; step < c.message_steps; ++step) {
            const Eigen::MatrixXd& h = t.msg_act.back();
            Eigen::MatrixXd sum = h;  // self-inclusive neighborhood sum
            for (int a = 0; a < atoms; ++a) {
                for (int nb : s.adjacency[a]) sum.col(a) += h.col(nb);
            }
            t.msg_sum.push_back(sum);
            t.msg_pre.push_back((w_msg * sum).colwise() + b_msg);
            t.msg_act.push_back(t.msg_pre.back().cwiseMax(0.0));
        }
        t.readout = t.msg_act.back().rowwise().sum();
    } else {
        if (s.kind != Featurizer::Fingerprint) {
            throw Error("forward: fingerprint model fed a graph sample");
        }
        t.readout.resize(0);
    }

    t.masks = draw_masks(c, dropout_source);
    t.dense_pre.clear();
    t.dense_act.clear();
    Eigen::VectorXd cur;
    for (int l = 0; l < L.dense; ++l) {
        ConstMat w(p + L.dense_w[l], L.hidden, L.dense_input(l));
        ConstVec b(p + L.dense_b[l], L.hidden);
        Eigen::VectorXd z;
        if (!L.graph && l == 0) {
            z = b;
            for (int bit : s.bits) z += w.col(bit);
        } else {
            const Eigen::VectorXd& input = (l == 0) ? t.readout : cur;
            z = w * input + b;
        }
        t.dense_pre.push_back(z);
        cur = z.cwiseMax(0.0);
        if (!t.masks.empty()) cur = cur.cwiseProduct(t.masks[static_cast<std::size_t>(l)]);
        t.dense_act.push_back(cur);
    }

    ConstMat head_w(p + L.head_w, L.out_dim, L.hidden);
    ConstVec head_b(p + L.head_b, L.out_dim);
    t.head_out = head_w * cur + head_b;
}

}  // namespace

int parameter_count(const NetConfig& config) {
    return make_layout(config).total;
}

Sample featurize(const chem::Molecule& m, const NetConfig& config) {
    (void)config;
    Sample s;
    s.kind = Featurizer::Graph;
    const int atoms = static_cast<int>(m.atoms.size());
    s.atom_features = Eigen::MatrixXd::Zero(atoms, kAtomFeatureCount);
    s.adjacency.assign(static_cast<std::size_t>(atoms), {});
    for (const auto& b : m.bonds) {
        s.adjacency[static_cast<std::size_t>(b.a)].push_back(b.b);
        s.adjacency[static_cast<std::size_t>(b.b)].push_back(b.a);
    }
    for (int a = 0; a < atoms; ++a) {
        const auto& atom = m.atoms[static_cast<std::size_t>(a)];
        s.atom_features(a, element_index(atom.element)) = 1.0;
        s.atom_features(a, 11) = atom.aromatic ? 1.0 : 0.0;
        const int degree = std::min(static_cast<int>(s.adjacency[a].size()), 5);
        s.atom_features(a, 12 + degree) = 1.0;
        s.atom_features(a, 18) = static_cast<double>(atom.formal_charge);
    }
    return s;
}

Sample featurize(const chem::Fingerprint& fp, const NetConfig& config) {
    if (fp.length != config.fingerprint_length) {
        throw Error("featurize: fingerprint length " + std::to_string(fp.length) +
                    " != configured " + std::to_string(config.fingerprint_length));
    }
    Sample s;
    s.kind = Featurizer::Fingerprint;
    s.bits = fp.set_bits();
    return s;
}

Output forward(const TrainedModel& model, const Sample& sample, Rng* dropout_source) {
    const Layout L = make_layout(model.config);
    if (static_cast<int>(model.parameters.size()) != L.total) {
        throw Error("forward: parameter vector size mismatch");
    }
    Trace t;
    forward_trace(model.config, L, model.parameters.data(), sample, dropout_source, t);

    Output out;
    out.embedding = t.dense_act.empty() ? t.readout : t.dense_act.back();
    out.prediction = t.head_out[0];
    if (model.config.head == Head::MeanVariance) {
        out.variance = softplus(t.head_out[1]) + model.config.variance_floor;
    }
    return out;
}

double mve_loss(double mean, double variance, double truth) {
    if (!(variance > 0.0)) throw NumericalError("mve_loss: variance must be > 0");
    constexpr double half_ln_2pi = 0.91893853320467274178;
    const double r = truth - mean;
    return half_ln_2pi + 0.5 * std::log(variance) + r * r / (2.0 * variance);
}

BatchGradient gradient(const TrainedModel& model, const std::vector<const Sample*>& batch,
                       const std::vector<double>& targets, Rng* dropout_source) {
    if (batch.empty()) throw Error("gradient: empty batch");
    if (batch.size() != targets.size()) throw Error("gradient: batch/target size mismatch");

    const NetConfig& c = model.config;
    const Layout L = make_layout(c);
    const double* p = model.parameters.data();

    BatchGradient out;
    out.gradient = Eigen::VectorXd::Zero(L.total);
    double* g = out.gradient.data();

    Trace t;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        forward_trace(c, L, p, *batch[i], dropout_source, t);
        const double y = targets[i];

        // Head loss and its gradient.
        Eigen::VectorXd dhead(L.out_dim);
        if (c.head == Head::MeanVariance) {
            const double mu = t.head_out[0];
            const double raw = t.head_out[1];
            const double var = softplus(raw) + c.variance_floor;
            out.loss += mve_loss(mu, var, y);
            const double dvar = 0.5 / var - (y - mu) * (y - mu) / (2.0 * var * var);
            dhead[0] = (mu - y) / var;
            dhead[1] = dvar * sigmoid(raw);
        } else {
            const double r = t.head_out[0] - y;
            out.loss += 0.5 * r * r;
            dhead[0] = r;
        }

        ConstMat head_w(p + L.head_w, L.out_dim, L.hidden);
        MutMat g_head_w(g + L.head_w, L.out_dim, L.hidden);
        MutVec g_head_b(g + L.head_b, L.out_dim);
        const Eigen::VectorXd& last_act = t.dense_act.back();
        g_head_w.noalias() += dhead * last_act.transpose();
        g_head_b += dhead;

        Eigen::VectorXd delta = head_w.transpose() * dhead;

        // Dense stack, last to first.
        for (int l = L.dense - 1; l >= 0; --l) {
            if (!t.masks.empty()) {
                delta = delta.cwiseProduct(t.masks[static_cast<std::size_t>(l)]);
            }
            delta = delta.cwiseProduct(
                (t.dense_pre[static_cast<std::size_t>(l)].array() > 0.0).cast<double>().matrix());

            MutMat g_w(g + L.dense_w[l], L.hidden, L.dense_input(l));
            MutVec g_b(g + L.dense_b[l], L.hidden);
            g_b += delta;
            if (!L.graph && l == 0) {
                for (int bit : batch[i]->bits) g_w.col(bit) += delta;
                delta.resize(0);
            } else {
                const Eigen::VectorXd& input =
                    (l == 0) ? t.readout : t.dense_act[static_cast<std::size_t>(l - 1)];
                g_w.noalias() += delta * input.transpose();
                ConstMat w(p + L.dense_w[l], L.hidden, L.dense_input(l));
                delta = w.transpose() * delta;
            }
        }

        // Message passing, last step back to the atom input layer.
        if (L.graph) {
            const int atoms = static_cast<int>(batch[i]->atom_features.rows());
            // d loss / d h_T: the readout sum broadcasts delta to every atom.
            Eigen::MatrixXd dh = delta.replicate(1, atoms);

            ConstMat w_msg(p + L.w_msg, L.hidden, L.hidden);
            MutMat g_w_msg(g + L.w_msg, L.hidden, L.hidden);
            MutVec g_b_msg(g + L.b_msg, L.hidden);
            for (int step = c.message_steps; step >= 1; --step) {
                const Eigen::MatrixXd dz =
                    dh.cwiseProduct((t.msg_pre[static_cast<std::size_t>(step)].array() > 0.0)
                                        .cast<double>()
                                        .matrix());
                g_w_msg.noalias() +=
                    dz * t.msg_sum[static_cast<std::size_t>(step - 1)].transpose();
                g_b_msg += dz.rowwise().sum();
                const Eigen::MatrixXd back = w_msg.transpose() * dz;
                dh = back;  // self term
                for (int a = 0; a < atoms; ++a) {
                    for (int nb : batch[i]->adjacency[static_cast<std::size_t>(a)]) {
                        dh.col(nb) += back.col(a);
                    }
                }
            }
            const Eigen::MatrixXd dz0 = dh.cwiseProduct(
                (t.msg_pre[0].array() > 0.0).cast<double>().matrix());
            MutMat g_w_in(g + L.w_in, L.hidden, L.input_dim);
            MutVec g_b_in(g + L.b_in, L.hidden);
            g_w_in.noalias() += dz0 * batch[i]->atom_features;
            g_b_in += dz0.rowwise().sum();
        }
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    out.gradient *= inv;
    return out;
}

std::vector<double> init_parameters(const NetConfig& config, std::uint64_t seed) {
    const Layout L = make_layout(config);
    std::vector<double> params(static_cast<std::size_t>(L.total), 0.0);
    Rng rng(seed);
    auto fill_block = [&](int offset, int rows, int cols) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
        for (int i = 0; i < rows * cols; ++i) {
            params[static_cast<std::size_t>(offset + i)] = rng.uniform(-scale, scale);
        }
    };
    if (L.graph) {
        fill_block(L.w_in, L.hidden, L.input_dim);
        fill_block(L.w_msg, L.hidden, L.hidden);
    }
    for (int l = 0; l < L.dense; ++l) fill_block(L.dense_w[l], L.hidden, L.dense_input(l));
    fill_block(L.head_w, L.out_dim, L.hidden);
    // Biases stay zero; an MVE raw variance of 0 starts at softplus(0) ~ 0.69.
    return params;
}

void TrainedModel::save(const std::string& path) const {
    nlohmann::json j;
    j["featurizer"] = config.featurizer == Featurizer::Graph ? "graph" : "fingerprint";
    j["head"] = config.head == Head::MeanVariance ? "mean_variance" : "scalar";
    j["message_steps"] = config.message_steps;
    j["hidden_size"] = config.hidden_size;
    j["dense_layers"] = config.dense_layers;
    j["dropout"] = config.dropout;
    j["fingerprint_length"] = config.fingerprint_length;
    j["variance_floor"] = config.variance_floor;
    const std::string header = j.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 8);
    const std::uint32_t version = kCheckpointVersion;
    const std::uint32_t header_len = static_cast<std::uint32_t>(header.size());
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    const std::uint64_t count = parameters.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(parameters.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
}

TrainedModel TrainedModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, kCheckpointMagic, 8) != 0) {
        throw Error("not a moluq checkpoint: " + path);
    }
    std::uint32_t version = 0, header_len = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kCheckpointVersion) {
        throw Error("unsupported checkpoint version " + std::to_string(version));
    }
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    std::string header(header_len, '\0');
    in.read(header.data(), header_len);
    const auto j = nlohmann::json::parse(header);

    TrainedModel model;
    model.config.featurizer = j.at("featurizer").get<std::string>() == "graph"
                                  ? Featurizer::Graph
                                  : Featurizer::Fingerprint;
    model.config.head = j.at("head").get<std::string>() == "mean_variance"
                            ? Head::MeanVariance
                            : Head::Scalar;
    model.config.message_steps = j.at("message_steps").get<int>();
    model.config.hidden_size = j.at("hidden_size").get<int>();
    model.config.dense_layers = j.at("dense_layers").get<int>();
    model.config.dropout = j.at("dropout").get<double>();
    model.config.fingerprint_length = j.at("fingerprint_length").get<int>();
    model.config.variance_floor = j.at("variance_floor").get<double>();

    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    model.parameters.resize(count);
    in.read(reinterpret_cast<char*>(model.parameters.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw Error("truncated checkpoint: " + path);
    if (static_cast<int>(count) != parameter_count(model.config)) {
        throw Error("checkpoint parameter count inconsistent with its config");
    }
    return model;
}

}  // namespace moluq::nnet
