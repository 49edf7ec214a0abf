#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vmgcn/autodiff.hpp"
#include "vmgcn/graph.hpp"
#include "vmgcn/time_series.hpp"
#include "vmgcn/vmd.hpp"

namespace vmgcn {

/// v1: modes, calendar, signal. v2: modes, calendar. v3: modes, calendar, phi.
enum class Variant { V1, V2, V3 };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Channel labels in their fixed order: mode_1..mode_K, time_of_day,
/// day_of_week, then signal (v1) or phi (v3).
std::vector<std::string> channel_labels(int num_modes, Variant v);

/// N x d x T tensor. Element (n, c, t) lives at data(n, c + d * t), which is the
/// column-major layout, so reshaping to (N*d) x T is free.
struct FeatureTensor {
    Eigen::Index nodes = 0;
    Eigen::Index channels = 0;
    Eigen::Index steps = 0;
    Eigen::MatrixXd data;
    std::vector<std::string> channel_map;

    double& at(Eigen::Index n, Eigen::Index c, Eigen::Index t) { return data(n, c + channels * t); }
    double at(Eigen::Index n, Eigen::Index c, Eigen::Index t) const { return data(n, c + channels * t); }
};

/// Full-length channel stack for one node, d x L. `phi` is only read for v3.
Eigen::MatrixXd node_channels(const ModeSet& modes, const TimeSeries& raw, std::span<const double> phi,
                              Variant v);

/// Slices [start, start + steps) out of per-node channel stacks.
FeatureTensor assemble_features(const std::vector<Eigen::MatrixXd>& node_stacks,
                                const std::vector<std::string>& channel_map, std::size_t start,
                                std::size_t steps);

/// Single-node, single-window convenience form.
FeatureTensor assemble_features(const ModeSet& modes, const TimeSeries& raw, std::span<const double> phi,
                                Variant v, std::size_t start, std::size_t steps);

struct ModelConfig {
    int nodes = 0;
    int in_channels = 0;
    int window = 12;      // T_w
    int horizon = 12;     // N_H
    int blocks = 2;       // B
    int cheb_order = 3;   // M
    int channels = 16;    // C, Chebyshev and time-conv width
    int time_kernel = 3;  // K_w
    std::uint64_t seed = 0;

    void validate() const;
};

struct StBlockParams {
    Eigen::MatrixXd Vs, bs;              // N x N
    Eigen::MatrixXd W1;                  // T x 1
    Eigen::MatrixXd W2;                  // C_in x T
    Eigen::MatrixXd W3;                  // C_in x 1
    Eigen::MatrixXd Ve, be;              // T x T
    Eigen::MatrixXd U1;                  // N x 1
    Eigen::MatrixXd U2;                  // N x C_in
    Eigen::MatrixXd U3;                  // C_in x 1
    std::vector<Eigen::MatrixXd> theta;  // M of C_in x C
    std::vector<Eigen::MatrixXd> time_kernel;  // K_w of C x C, tap j reads t + j - K_w/2
    Eigen::MatrixXd time_bias;           // 1 x C
    Eigen::MatrixXd residual_weight;     // C_in x C
    Eigen::MatrixXd residual_bias;       // 1 x C
    Eigen::MatrixXd ln_gain, ln_bias;    // 1 x C
};

struct StModelParams {
    ModelConfig config;
    std::vector<StBlockParams> blocks;
    Eigen::MatrixXd final_weight;  // (C*T) x N_H
    Eigen::MatrixXd final_bias;    // 1 x N_H

    /// Stable enumeration of every tensor with a dotted name.
    void for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn);
    void for_each(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const;
    std::size_t parameter_count() const;
    /// Same shapes, all zeros.
    StModelParams zeros_like() const;
};

/// Fan-in scaled symmetric uniform initialization; layer-norm gain 1, bias 0.
StModelParams init_params(const ModelConfig& cfg);

// Stand-alone operators for inspection, tests and benchmarks.

/// Row-stochastic N x N spatial attention S'.
Eigen::MatrixXd spatial_attention(const FeatureTensor& x, const StBlockParams& p);
/// Row-stochastic T x T temporal attention E'.
Eigen::MatrixXd temporal_attention(const FeatureTensor& x, const StBlockParams& p);
/// relu(sum_m (T_m .* S') X[:, :, t] theta_m) for every t; returns N x C_out x T.
FeatureTensor cheb_conv_attended(const FeatureTensor& x, const std::vector<Eigen::MatrixXd>& cheb_basis,
                                 const Eigen::MatrixXd& attention, const std::vector<Eigen::MatrixXd>& theta);

struct TimeConvOptions {
    int stride = 1;
    bool same_padding = true;
};
/// Per-node convolution along time. With same padding and stride 1 the output
/// keeps T steps; otherwise floor((T_padded - K_w) / stride) + 1.
FeatureTensor time_convolution(const FeatureTensor& h, const std::vector<Eigen::MatrixXd>& kernel,
                               const Eigen::MatrixXd& bias, const TimeConvOptions& opts = {});
Eigen::Index conv_output_size(Eigen::Index input, Eigen::Index kernel, Eigen::Index stride);

FeatureTensor st_block_forward(const FeatureTensor& x, const StBlockParams& p, const SpectralOps& ops);

/// N x N_H forecast in the normalized target space.
Eigen::MatrixXd model_forward(const FeatureTensor& window, const StModelParams& params, const SpectralOps& ops);

enum class LossKind { MAE, MSE };

struct Gradients {
    double loss = 0.0;
    StModelParams grads;
    Eigen::MatrixXd prediction;
};

/// Exact gradients of the scalar loss. Throws NonFiniteLoss on NaN/inf.
Gradients model_backward(const FeatureTensor& window, const StModelParams& params, const SpectralOps& ops,
                         const Eigen::MatrixXd& target, LossKind loss);

/// Per-channel input statistics and the target scaling used in training.
struct Normalization {
    std::vector<double> channel_mean, channel_std;
    double target_mean = 0.0, target_std = 1.0;
};

struct Checkpoint {
    StModelParams params;
    Normalization norm;
    std::vector<std::string> channel_map;
    Variant variant = Variant::V2;
    std::string fingerprint;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);

}  // namespace vmgcn
