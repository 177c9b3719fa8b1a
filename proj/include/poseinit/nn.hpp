#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace poseinit::nn {

/// Dense channel-major stack: value(c, y, x) = data[(c * height + y) * width + x].
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int c, int h, int w)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * w, 0.0) {}

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

/// Fixed regressor: four [3x3 conv, stride 2, pad 1, ReLU] blocks with widths
/// 16/32/64/128, global average pooling, a 128 -> 6 fully connected layer,
/// then tanh.
///
/// Parameters live in one flat vector in this order:
///   conv1.weight [16, in, 3, 3], conv1.bias [16],
///   conv2.weight [32, 16, 3, 3], conv2.bias [32],
///   conv3.weight [64, 32, 3, 3], conv3.bias [64],
///   conv4.weight [128, 64, 3, 3], conv4.bias [128],
///   fc.weight [6, 128], fc.bias [6]
/// Every weight tensor is row-major in the bracketed shape.
class PoseRegressorNet {
public:
    static constexpr std::array<int, 4> kWidths{16, 32, 64, 128};
    static constexpr int kKernel = 3;
    static constexpr int kStride = 2;
    static constexpr int kPad = 1;
    static constexpr int kOutputs = 6;

    struct Segment {
        std::size_t offset;
        std::size_t size;
    };

    explicit PoseRegressorNet(int in_channels);

    int in_channels() const { return in_channels_; }
    std::size_t parameter_count() const { return params_.size(); }
    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }

    /// Layer-ordered segments: conv1.w, conv1.b, ..., fc.w, fc.b.
    const std::vector<Segment>& segments() const { return segments_; }

    /// He-style fan-in uniform for conv weights (bound sqrt(6 / fan_in)),
    /// 1 / sqrt(fan_in) for the fully connected layer, zero biases.
    void initialize(std::uint64_t seed);
    void set_zero();

    /// Intermediate values kept for backpropagation.
    struct Cache {
        std::vector<Tensor> inputs;              // input to each conv block
        std::vector<std::vector<double>> cols;   // im2col of each block input
        std::vector<Tensor> activations;         // post-ReLU output of each block
        std::vector<double> pooled;              // global average pool, size 128
        std::array<double, kOutputs> output{};   // post-tanh
    };

    std::array<double, kOutputs> forward(const Tensor& input, Cache* cache = nullptr) const;

    /// Accumulates dL/dparams into grad (same layout as parameters()) given
    /// dL/doutput for the post-tanh output of the pass recorded in cache.
    void backward(const Cache& cache, const std::array<double, kOutputs>& d_output,
                  std::span<double> grad) const;

private:
    struct ConvShape {
        int in_c, out_c, in_h, in_w, out_h, out_w;
    };
    ConvShape conv_shape(int block, int in_h, int in_w) const;

    int in_channels_;
    std::vector<double> params_;
    std::vector<Segment> segments_;
};

/// Spatial size after one stride-2, pad-1, 3x3 convolution.
constexpr int conv_output_size(int n) {
    return (n + 2 * PoseRegressorNet::kPad - PoseRegressorNet::kKernel) / PoseRegressorNet::kStride +
           1;
}

}  // namespace poseinit::nn
