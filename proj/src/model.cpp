#include "vmgcn/model.hpp"

#include <cmath>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <random>

#include "vmgcn/errors.hpp"

namespace vmgcn {

using ad::Tape;
using ad::Var;
using Eigen::Index;
using Eigen::MatrixXd;

std::string to_string(Variant v) {
    switch (v) {
        case Variant::V1: return "v1";
        case Variant::V2: return "v2";
        case Variant::V3: return "v3";
    }
    return "v2";
}

Variant variant_from_string(const std::string& s) {
    if (s == "v1") return Variant::V1;
    if (s == "v2") return Variant::V2;
    if (s == "v3") return Variant::V3;
    throw InvalidConfig("unknown variant '" + s + "' (expected v1, v2 or v3)");
}

std::vector<std::string> channel_labels(int num_modes, Variant v) {
    if (num_modes < 1) throw InvalidConfig("feature assembly needs at least one mode");
    std::vector<std::string> labels;
    for (int k = 1; k <= num_modes; ++k) labels.push_back("mode_" + std::to_string(k));
    labels.push_back("time_of_day");
    labels.push_back("day_of_week");
    if (v == Variant::V1) labels.push_back("signal");
    if (v == Variant::V3) labels.push_back("phi");
    return labels;
}

MatrixXd node_channels(const ModeSet& modes, const TimeSeries& raw, std::span<const double> phi, Variant v) {
    const Index k = static_cast<Index>(modes.modes.size());
    const Index len = static_cast<Index>(raw.size());
    if (k == 0) throw InvalidConfig("feature assembly needs at least one mode");
    for (const auto& m : modes.modes)
        if (static_cast<Index>(m.size()) != len) throw InvalidConfig("mode length differs from the raw series");
    if (v == Variant::V3 && static_cast<Index>(phi.size()) != len)
        throw InvalidConfig("v3 needs a phi sequence as long as the raw series");

    const Index d = k + 2 + (v == Variant::V2 ? 0 : 1);
    MatrixXd out(d, len);
    for (Index c = 0; c < k; ++c)
        for (Index t = 0; t < len; ++t) out(c, t) = modes.modes[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
    for (Index t = 0; t < len; ++t) {
        const Timestamp ts = raw.time_at(static_cast<std::size_t>(t));
        out(k, t) = time_of_day(ts);
        out(k + 1, t) = day_of_week(ts) / 6.0;
        if (v == Variant::V1) out(k + 2, t) = raw.values[static_cast<std::size_t>(t)];
        if (v == Variant::V3) out(k + 2, t) = phi[static_cast<std::size_t>(t)];
    }
    return out;
}

FeatureTensor assemble_features(const std::vector<MatrixXd>& stacks, const std::vector<std::string>& channel_map,
                                std::size_t start, std::size_t steps) {
    if (stacks.empty()) throw InvalidInput("assemble_features: no nodes");
    FeatureTensor x;
    x.nodes = static_cast<Index>(stacks.size());
    x.channels = static_cast<Index>(channel_map.size());
    x.steps = static_cast<Index>(steps);
    x.channel_map = channel_map;
    x.data.resize(x.nodes, x.channels * x.steps);
    for (Index n = 0; n < x.nodes; ++n) {
        const MatrixXd& s = stacks[static_cast<std::size_t>(n)];
        if (s.rows() != x.channels) throw InvalidConfig("channel stack does not match the channel map");
        if (static_cast<std::size_t>(s.cols()) < start + steps) throw InvalidInput("window runs past the series");
        for (Index t = 0; t < x.steps; ++t)
            for (Index c = 0; c < x.channels; ++c) x.at(n, c, t) = s(c, static_cast<Index>(start) + t);
    }
    return x;
}

FeatureTensor assemble_features(const ModeSet& modes, const TimeSeries& raw, std::span<const double> phi,
                                Variant v, std::size_t start, std::size_t steps) {
    const auto labels = channel_labels(static_cast<int>(modes.modes.size()), v);
    return assemble_features({node_channels(modes, raw, phi, v)}, labels, start, steps);
}

void ModelConfig::validate() const {
    if (nodes < 1) throw InvalidConfig("model needs at least one node");
    if (in_channels < 1) throw InvalidConfig("model needs at least one input channel");
    if (window < 1 || horizon < 1) throw InvalidConfig("window and horizon must be positive");
    if (blocks < 1) throw InvalidConfig("model needs at least one ST block");
    if (cheb_order < 1) throw InvalidConfig("Chebyshev order must be >= 1");
    if (channels < 1) throw InvalidConfig("channel width must be positive");
    if (time_kernel < 1 || time_kernel > window) throw InvalidConfig("time kernel must be in [1, window]");
}

namespace {

// Visits every tensor slot in a fixed order. B is StBlockParams or BlockVars.
template <class B, class F>
void visit_block(B& b, const std::string& p, F&& f) {
    f(p + "Vs", b.Vs);
    f(p + "bs", b.bs);
    f(p + "W1", b.W1);
    f(p + "W2", b.W2);
    f(p + "W3", b.W3);
    f(p + "Ve", b.Ve);
    f(p + "be", b.be);
    f(p + "U1", b.U1);
    f(p + "U2", b.U2);
    f(p + "U3", b.U3);
    for (std::size_t m = 0; m < b.theta.size(); ++m) f(p + "theta." + std::to_string(m), b.theta[m]);
    for (std::size_t j = 0; j < b.time_kernel.size(); ++j) f(p + "time_kernel." + std::to_string(j), b.time_kernel[j]);
    f(p + "time_bias", b.time_bias);
    f(p + "residual_weight", b.residual_weight);
    f(p + "residual_bias", b.residual_bias);
    f(p + "ln_gain", b.ln_gain);
    f(p + "ln_bias", b.ln_bias);
}

template <class M, class F>
void visit_model(M& m, F&& f) {
    for (std::size_t i = 0; i < m.blocks.size(); ++i) visit_block(m.blocks[i], "block" + std::to_string(i) + ".", f);
    f(std::string("final_weight"), m.final_weight);
    f(std::string("final_bias"), m.final_bias);
}

}  // namespace

void StModelParams::for_each(const std::function<void(const std::string&, MatrixXd&)>& fn) {
    visit_model(*this, fn);
}

void StModelParams::for_each(const std::function<void(const std::string&, const MatrixXd&)>& fn) const {
    visit_model(*this, fn);
}

std::size_t StModelParams::parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const MatrixXd& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
}

StModelParams StModelParams::zeros_like() const {
    StModelParams z = *this;
    z.for_each([](const std::string&, MatrixXd& m) { m.setZero(); });
    return z;
}

StModelParams init_params(const ModelConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    auto fill = [&](Index rows, Index cols, double fan_in) {
        const double bound = 1.0 / std::sqrt(fan_in);
        MatrixXd m(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) {
                const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                m(i, j) = bound * (2.0 * u - 1.0);
            }
        return m;
    };

    const Index n = cfg.nodes, t = cfg.window, c = cfg.channels, kw = cfg.time_kernel;
    StModelParams p;
    p.config = cfg;
    Index cin = cfg.in_channels;
    for (int b = 0; b < cfg.blocks; ++b) {
        StBlockParams bp;
        const double fn = static_cast<double>(n), ft = static_cast<double>(t), fc = static_cast<double>(cin);
        bp.Vs = fill(n, n, fn);
        bp.bs = fill(n, n, fn);
        bp.W1 = fill(t, 1, ft);
        bp.W2 = fill(cin, t, fc);
        bp.W3 = fill(cin, 1, fc);
        bp.Ve = fill(t, t, ft);
        bp.be = fill(t, t, ft);
        bp.U1 = fill(n, 1, fn);
        bp.U2 = fill(n, cin, fn);
        bp.U3 = fill(cin, 1, fc);
        for (int m = 0; m < cfg.cheb_order; ++m) bp.theta.push_back(fill(cin, c, fc * cfg.cheb_order));
        for (Index j = 0; j < kw; ++j) bp.time_kernel.push_back(fill(c, c, static_cast<double>(c * kw)));
        bp.time_bias = fill(1, c, static_cast<double>(c * kw));
        bp.residual_weight = fill(cin, c, fc);
        bp.residual_bias = fill(1, c, fc);
        bp.ln_gain = MatrixXd::Ones(1, c);
        bp.ln_bias = MatrixXd::Zero(1, c);
        p.blocks.push_back(std::move(bp));
        cin = c;
    }
    p.final_weight = fill(c * t, cfg.horizon, static_cast<double>(c * t));
    p.final_bias = fill(1, cfg.horizon, static_cast<double>(c * t));
    return p;
}

namespace {

struct BlockVars {
    Var Vs, bs, W1, W2, W3, Ve, be, U1, U2, U3;
    std::vector<Var> theta, time_kernel;
    Var time_bias, residual_weight, residual_bias, ln_gain, ln_bias;
};

struct ModelVars {
    std::vector<BlockVars> blocks;
    Var final_weight, final_bias;
    std::vector<Var> all;  // visit order
};

Var leaf(Tape& t, const MatrixXd& m, bool trainable) { return trainable ? t.parameter(m) : t.constant(m); }

BlockVars bind_block(Tape& t, const StBlockParams& p, bool trainable, std::vector<Var>* all = nullptr) {
    std::vector<const MatrixXd*> tensors;
    visit_block(p, "", [&](const std::string&, const MatrixXd& m) { tensors.push_back(&m); });
    BlockVars v;
    v.theta.resize(p.theta.size());
    v.time_kernel.resize(p.time_kernel.size());
    std::size_t i = 0;
    visit_block(v, "", [&](const std::string&, Var& slot) {
        slot = leaf(t, *tensors[i++], trainable);
        if (all) all->push_back(slot);
    });
    return v;
}

ModelVars bind_model(Tape& t, const StModelParams& p, bool trainable) {
    ModelVars mv;
    for (const auto& b : p.blocks) mv.blocks.push_back(bind_block(t, b, trainable, &mv.all));
    mv.final_weight = leaf(t, p.final_weight, trainable);
    mv.final_bias = leaf(t, p.final_bias, trainable);
    mv.all.push_back(mv.final_weight);
    mv.all.push_back(mv.final_bias);
    return mv;
}

// Channel contraction X[n, :, t] . w for every (n, t); X is (N, C, T). Returns N x T.
Var contract_channels(Tape& t, Var x, Var w, Index n, Index c, Index steps) {
    Var ntc = ad::reshape(t, ad::swap_last_axes(t, x, c, steps), n * steps, c);
    return ad::reshape(t, ad::matmul(t, ntc, w), n, steps);
}

Var temporal_attention_var(Tape& t, Var x, const BlockVars& p, Index n, Index c, Index steps) {
    Var u1x = ad::matmul(t, ad::transpose(t, p.U1), x);                        // 1 x (C*T)
    Var lhs = ad::transpose(t, ad::reshape(t, u1x, c, steps));                 // T x C
    lhs = ad::matmul(t, lhs, ad::transpose(t, p.U2));                          // T x N
    Var rhs = contract_channels(t, x, p.U3, n, c, steps);                      // N x T
    Var e = ad::sigmoid(t, ad::add(t, ad::matmul(t, lhs, rhs), p.be));
    return ad::softmax_rows(t, ad::matmul(t, p.Ve, e));
}

Var spatial_attention_var(Tape& t, Var x, const BlockVars& p, Index n, Index c, Index steps) {
    Var xw1 = ad::matmul(t, ad::reshape(t, x, n * c, steps), p.W1);            // (N*C) x 1
    Var lhs = ad::matmul(t, ad::reshape(t, xw1, n, c), p.W2);                  // N x T
    Var rhs = contract_channels(t, x, p.W3, n, c, steps);                      // N x T
    Var s = ad::sigmoid(t, ad::add(t, ad::matmul(t, lhs, ad::transpose(t, rhs)), p.bs));
    return ad::softmax_rows(t, ad::matmul(t, p.Vs, s));
}

// Returns relu(sum_m (T_m .* S') X_t theta_m) in (N, T, C_out) layout as (N*T) x C_out.
Var cheb_conv_var(Tape& t, Var x, const std::vector<MatrixXd>& basis, Var attention, const std::vector<Var>& theta,
                  Index n, Index c, Index steps) {
    if (basis.size() != theta.size()) throw ShapeMismatch("Chebyshev basis and theta orders differ");
    Var ntc = ad::swap_last_axes(t, x, c, steps);  // N x (T*C)
    std::vector<Var> terms;
    for (std::size_t m = 0; m < basis.size(); ++m) {
        Var masked = ad::hadamard(t, t.constant(basis[m]), attention);
        Var y = ad::reshape(t, ad::matmul(t, masked, ntc), n * steps, c);
        terms.push_back(ad::matmul(t, y, theta[m]));
    }
    return ad::relu(t, ad::sum(t, terms));
}

// g is (N, T, C) as (N*T) x C; same padding, stride 1.
Var time_conv_var(Tape& t, Var g, const std::vector<Var>& kernel, Var bias, Index n) {
    const Index pad = static_cast<Index>(kernel.size()) / 2;
    std::vector<Var> terms;
    for (std::size_t j = 0; j < kernel.size(); ++j) {
        const Index off = (static_cast<Index>(j) - pad) * n;
        terms.push_back(ad::matmul(t, ad::shift_rows(t, g, off), kernel[j]));
    }
    return ad::add_row(t, ad::sum(t, terms), bias);
}

Var st_block_var(Tape& t, Var x, const BlockVars& p, const SpectralOps& ops, Index n, Index cin, Index steps) {
    const Index cout = t.value(p.residual_weight).cols();
    Var e = temporal_attention_var(t, x, p, n, cin, steps);
    Var xt = ad::matmul(t, ad::reshape(t, x, n * cin, steps), ad::transpose(t, e));
    xt = ad::reshape(t, xt, n, cin * steps);
    Var s = spatial_attention_var(t, xt, p, n, cin, steps);
    Var g = cheb_conv_var(t, xt, ops.cheb_basis, s, p.theta, n, cin, steps);
    Var tc = time_conv_var(t, g, p.time_kernel, p.time_bias, n);
    Var res = ad::reshape(t, ad::swap_last_axes(t, x, cin, steps), n * steps, cin);
    res = ad::add_row(t, ad::matmul(t, res, p.residual_weight), p.residual_bias);
    Var z = ad::layer_norm_rows(t, ad::add(t, tc, res));
    z = ad::add_row(t, ad::mul_cols(t, z, p.ln_gain), p.ln_bias);
    return ad::swap_last_axes(t, ad::reshape(t, z, n, steps * cout), steps, cout);
}

void check_block_shapes(const StBlockParams& p, Index n, Index c, Index steps) {
    auto need = [](const MatrixXd& m, Index r, Index cc, const char* name) {
        if (m.rows() != r || m.cols() != cc)
            throw InvalidInput(std::string("parameter ") + name + " has shape " + std::to_string(m.rows()) + "x" +
                               std::to_string(m.cols()) + ", expected " + std::to_string(r) + "x" +
                               std::to_string(cc));
    };
    need(p.Vs, n, n, "Vs");
    need(p.bs, n, n, "bs");
    need(p.W1, steps, 1, "W1");
    need(p.W2, c, steps, "W2");
    need(p.W3, c, 1, "W3");
    need(p.Ve, steps, steps, "Ve");
    need(p.be, steps, steps, "be");
    need(p.U1, n, 1, "U1");
    need(p.U2, n, c, "U2");
    need(p.U3, c, 1, "U3");
}

Var model_var(Tape& t, Var x, const ModelVars& mv, const StModelParams& params, const SpectralOps& ops,
              const FeatureTensor& window) {
    const Index n = window.nodes, steps = window.steps;
    Index c = window.channels;
    if (params.blocks.empty()) throw InvalidInput("model has no blocks");
    if (static_cast<Index>(ops.cheb_basis.size()) == 0 || ops.cheb_basis[0].rows() != n)
        throw ShapeMismatch("spectral operators do not match the node count");
    for (std::size_t b = 0; b < params.blocks.size(); ++b) {
        check_block_shapes(params.blocks[b], n, c, steps);
        x = st_block_var(t, x, mv.blocks[b], ops, n, c, steps);
        c = params.blocks[b].residual_weight.cols();
    }
    if (params.final_weight.rows() != c * steps) throw ShapeMismatch("final projection does not match block output");
    return ad::add_row(t, ad::matmul(t, x, mv.final_weight), mv.final_bias);
}

FeatureTensor wrap(const MatrixXd& data, Index n, Index c, Index steps) {
    FeatureTensor f;
    f.nodes = n;
    f.channels = c;
    f.steps = steps;
    f.data = data;
    return f;
}

void check_features(const FeatureTensor& x) {
    if (x.data.rows() != x.nodes || x.data.cols() != x.channels * x.steps)
        throw InvalidInput("feature tensor data does not match its declared shape");
}

}  // namespace

MatrixXd spatial_attention(const FeatureTensor& x, const StBlockParams& p) {
    check_features(x);
    check_block_shapes(p, x.nodes, x.channels, x.steps);
    Tape t(false);
    const BlockVars bv = bind_block(t, p, false);
    return t.value(spatial_attention_var(t, t.constant(x.data), bv, x.nodes, x.channels, x.steps));
}

MatrixXd temporal_attention(const FeatureTensor& x, const StBlockParams& p) {
    check_features(x);
    check_block_shapes(p, x.nodes, x.channels, x.steps);
    Tape t(false);
    const BlockVars bv = bind_block(t, p, false);
    return t.value(temporal_attention_var(t, t.constant(x.data), bv, x.nodes, x.channels, x.steps));
}

FeatureTensor cheb_conv_attended(const FeatureTensor& x, const std::vector<MatrixXd>& basis,
                                 const MatrixXd& attention, const std::vector<MatrixXd>& theta) {
    check_features(x);
    if (basis.size() != theta.size()) throw ShapeMismatch("Chebyshev basis and theta orders differ");
    if (attention.rows() != x.nodes || attention.cols() != x.nodes) throw ShapeMismatch("attention must be N x N");
    for (const auto& th : theta)
        if (th.rows() != x.channels) throw ShapeMismatch("theta rows must equal the input channel count");
    for (const auto& tm : basis)
        if (tm.rows() != x.nodes || tm.cols() != x.nodes) throw ShapeMismatch("Chebyshev matrices must be N x N");
    Tape t(false);
    std::vector<Var> th;
    for (const auto& m : theta) th.push_back(t.constant(m));
    Var out = cheb_conv_var(t, t.constant(x.data), basis, t.constant(attention), th, x.nodes, x.channels, x.steps);
    const Index cout = theta.empty() ? 0 : theta[0].cols();
    Var back = ad::swap_last_axes(t, ad::reshape(t, out, x.nodes, x.steps * cout), x.steps, cout);
    return wrap(t.value(back), x.nodes, cout, x.steps);
}

Index conv_output_size(Index input, Index kernel, Index stride) {
    if (stride < 1) throw InvalidConfig("stride must be >= 1");
    if (kernel > input) throw InvalidInput("kernel larger than the (padded) input");
    return (input - kernel) / stride + 1;
}

FeatureTensor time_convolution(const FeatureTensor& h, const std::vector<MatrixXd>& kernel, const MatrixXd& bias,
                               const TimeConvOptions& opts) {
    check_features(h);
    const Index kw = static_cast<Index>(kernel.size());
    if (kw == 0) throw InvalidInput("empty time kernel");
    const Index cout = kernel[0].cols();
    for (const auto& w : kernel)
        if (w.rows() != h.channels || w.cols() != cout) throw ShapeMismatch("time kernel tap shape");
    if (bias.size() != cout) throw ShapeMismatch("time conv bias length");
    const Index pad_left = opts.same_padding ? kw / 2 : 0;
    const Index padded = h.steps + (opts.same_padding ? kw - 1 : 0);
    const Index tout = conv_output_size(padded, kw, opts.stride);

    FeatureTensor out = wrap(MatrixXd::Zero(h.nodes, cout * tout), h.nodes, cout, tout);
    for (Index n = 0; n < h.nodes; ++n)
        for (Index to = 0; to < tout; ++to)
            for (Index co = 0; co < cout; ++co) {
                double acc = bias(co);
                for (Index j = 0; j < kw; ++j) {
                    const Index ti = to * opts.stride + j - pad_left;
                    if (ti < 0 || ti >= h.steps) continue;
                    for (Index ci = 0; ci < h.channels; ++ci) acc += h.at(n, ci, ti) * kernel[static_cast<std::size_t>(j)](ci, co);
                }
                out.at(n, co, to) = acc;
            }
    return out;
}

FeatureTensor st_block_forward(const FeatureTensor& x, const StBlockParams& p, const SpectralOps& ops) {
    check_features(x);
    check_block_shapes(p, x.nodes, x.channels, x.steps);
    Tape t(false);
    const BlockVars bv = bind_block(t, p, false);
    Var out = st_block_var(t, t.constant(x.data), bv, ops, x.nodes, x.channels, x.steps);
    return wrap(t.value(out), x.nodes, p.residual_weight.cols(), x.steps);
}

MatrixXd model_forward(const FeatureTensor& window, const StModelParams& params, const SpectralOps& ops) {
    check_features(window);
    Tape t(false);
    const ModelVars mv = bind_model(t, params, false);
    return t.value(model_var(t, t.constant(window.data), mv, params, ops, window));
}

Gradients model_backward(const FeatureTensor& window, const StModelParams& params, const SpectralOps& ops,
                         const MatrixXd& target, LossKind loss) {
    check_features(window);
    Tape t(true);
    const ModelVars mv = bind_model(t, params, true);
    Var pred = model_var(t, t.constant(window.data), mv, params, ops, window);
    Var l = loss == LossKind::MAE ? ad::mae_loss(t, pred, target) : ad::mse_loss(t, pred, target);
    Gradients g;
    g.loss = t.value(l)(0, 0);
    if (!std::isfinite(g.loss)) throw NonFiniteLoss("loss is not finite");
    g.prediction = t.value(pred);
    t.backward(l);
    g.grads = params.zeros_like();
    std::size_t i = 0;
    g.grads.for_each([&](const std::string&, MatrixXd& m) { m = t.grad(mv.all[i++]); });
    return g;
}

namespace {

using json = nlohmann::json;

json matrix_to_json(const MatrixXd& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["data"] = std::vector<double>(m.data(), m.data() + m.size());  // column-major
    return j;
}

MatrixXd matrix_from_json(const json& j) {
    const Index r = j.at("rows").get<Index>();
    const Index c = j.at("cols").get<Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Index>(data.size()) != r * c) throw InvalidInput("checkpoint tensor size mismatch");
    return Eigen::Map<const MatrixXd>(data.data(), r, c);
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
    const ModelConfig& c = ck.params.config;
    json j;
    j["format"] = "vmgcn-checkpoint";
    j["version"] = 1;
    j["fingerprint"] = ck.fingerprint;
    j["seed"] = c.seed;
    j["config"] = {{"nodes", c.nodes},       {"in_channels", c.in_channels}, {"window", c.window},
                   {"horizon", c.horizon},   {"blocks", c.blocks},           {"cheb_order", c.cheb_order},
                   {"channels", c.channels}, {"time_kernel", c.time_kernel}, {"seed", c.seed}};
    j["variant"] = to_string(ck.variant);
    j["channel_map"] = ck.channel_map;
    j["normalization"] = {{"channel_mean", ck.norm.channel_mean},
                          {"channel_std", ck.norm.channel_std},
                          {"target_mean", ck.norm.target_mean},
                          {"target_std", ck.norm.target_std}};
    json tensors = json::object();
    ck.params.for_each([&](const std::string& name, const MatrixXd& m) { tensors[name] = matrix_to_json(m); });
    j["tensors"] = std::move(tensors);
    os << j.dump(1) << '\n';
}

Checkpoint read_checkpoint(std::istream& is) {
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    if (j.value("format", "") != "vmgcn-checkpoint") throw InvalidInput("not a vmgcn checkpoint");
    try {
        Checkpoint ck;
        const json& c = j.at("config");
        ModelConfig cfg;
        cfg.nodes = c.at("nodes");
        cfg.in_channels = c.at("in_channels");
        cfg.window = c.at("window");
        cfg.horizon = c.at("horizon");
        cfg.blocks = c.at("blocks");
        cfg.cheb_order = c.at("cheb_order");
        cfg.channels = c.at("channels");
        cfg.time_kernel = c.at("time_kernel");
        cfg.seed = c.at("seed");
        ck.params = init_params(cfg);  // shapes; every tensor is then overwritten
        const json& tensors = j.at("tensors");
        ck.params.for_each([&](const std::string& name, MatrixXd& m) {
            MatrixXd loaded = matrix_from_json(tensors.at(name));
            if (loaded.rows() != m.rows() || loaded.cols() != m.cols())
                throw InvalidInput("checkpoint tensor " + name + " has the wrong shape");
            m = std::move(loaded);
        });
        ck.fingerprint = j.at("fingerprint");
        ck.variant = variant_from_string(j.at("variant"));
        ck.channel_map = j.at("channel_map").get<std::vector<std::string>>();
        const json& nm = j.at("normalization");
        ck.norm.channel_mean = nm.at("channel_mean").get<std::vector<double>>();
        ck.norm.channel_std = nm.at("channel_std").get<std::vector<double>>();
        ck.norm.target_mean = nm.at("target_mean");
        ck.norm.target_std = nm.at("target_std");
        return ck;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("checkpoint is missing fields: ") + e.what());
    }
}

}  // namespace vmgcn
