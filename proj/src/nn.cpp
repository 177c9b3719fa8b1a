#include "poseinit/nn.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "poseinit/rng.hpp"

namespace poseinit::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

constexpr int kTaps = PoseRegressorNet::kKernel * PoseRegressorNet::kKernel;

// col is (in_c * 9) x (out_h * out_w), row-major.
void im2col(const Tensor& in, int out_h, int out_w, std::vector<double>& col) {
    const int k = PoseRegressorNet::kKernel;
    const int s = PoseRegressorNet::kStride;
    const int pad = PoseRegressorNet::kPad;
    const std::size_t n_out = static_cast<std::size_t>(out_h) * out_w;
    col.assign(static_cast<std::size_t>(in.channels) * kTaps * n_out, 0.0);
    for (int c = 0; c < in.channels; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                double* row = col.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * n_out;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * s - pad + ky;
                    if (iy < 0 || iy >= in.height) {
                        continue;
                    }
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * s - pad + kx;
                        if (ix >= 0 && ix < in.width) {
                            row[static_cast<std::size_t>(oy) * out_w + ox] = in.at(c, iy, ix);
                        }
                    }
                }
            }
        }
    }
}

void col2im(const std::vector<double>& col, int out_h, int out_w, Tensor& d_in) {
    const int k = PoseRegressorNet::kKernel;
    const int s = PoseRegressorNet::kStride;
    const int pad = PoseRegressorNet::kPad;
    const std::size_t n_out = static_cast<std::size_t>(out_h) * out_w;
    std::fill(d_in.data.begin(), d_in.data.end(), 0.0);
    for (int c = 0; c < d_in.channels; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const double* row =
                    col.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * n_out;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * s - pad + ky;
                    if (iy < 0 || iy >= d_in.height) {
                        continue;
                    }
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * s - pad + kx;
                        if (ix >= 0 && ix < d_in.width) {
                            d_in.at(c, iy, ix) += row[static_cast<std::size_t>(oy) * out_w + ox];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

PoseRegressorNet::PoseRegressorNet(int in_channels) : in_channels_(in_channels) {
    if (in_channels < 1) {
        throw std::invalid_argument("PoseRegressorNet: need at least one input channel");
    }
    std::size_t offset = 0;
    int prev = in_channels;
    for (int w : kWidths) {
        const std::size_t wsize = static_cast<std::size_t>(w) * prev * kTaps;
        segments_.push_back({offset, wsize});
        offset += wsize;
        segments_.push_back({offset, static_cast<std::size_t>(w)});
        offset += static_cast<std::size_t>(w);
        prev = w;
    }
    segments_.push_back({offset, static_cast<std::size_t>(kOutputs) * prev});
    offset += static_cast<std::size_t>(kOutputs) * prev;
    segments_.push_back({offset, static_cast<std::size_t>(kOutputs)});
    offset += kOutputs;
    params_.assign(offset, 0.0);
}

void PoseRegressorNet::set_zero() { std::fill(params_.begin(), params_.end(), 0.0); }

void PoseRegressorNet::initialize(std::uint64_t seed) {
    Rng rng(seed);
    set_zero();
    int prev = in_channels_;
    for (std::size_t b = 0; b < kWidths.size(); ++b) {
        const double bound = std::sqrt(6.0 / (prev * kTaps));
        const auto& seg = segments_[2 * b];
        for (std::size_t i = 0; i < seg.size; ++i) {
            params_[seg.offset + i] = rng.uniform(-bound, bound);
        }
        prev = kWidths[b];
    }
    const auto& fc = segments_[2 * kWidths.size()];
    const double bound = 1.0 / std::sqrt(static_cast<double>(prev));
    for (std::size_t i = 0; i < fc.size; ++i) {
        params_[fc.offset + i] = rng.uniform(-bound, bound);
    }
}

PoseRegressorNet::ConvShape PoseRegressorNet::conv_shape(int block, int in_h, int in_w) const {
    const int in_c = block == 0 ? in_channels_ : kWidths[static_cast<std::size_t>(block) - 1];
    return {in_c, kWidths[static_cast<std::size_t>(block)], in_h, in_w, conv_output_size(in_h),
            conv_output_size(in_w)};
}

std::array<double, PoseRegressorNet::kOutputs> PoseRegressorNet::forward(const Tensor& input,
                                                                          Cache* cache) const {
    if (input.channels != in_channels_) {
        throw std::invalid_argument("PoseRegressorNet::forward: expected " +
                                    std::to_string(in_channels_) + " channels, got " +
                                    std::to_string(input.channels));
    }
    if (input.height < 1 || input.width < 1) {
        throw std::invalid_argument("PoseRegressorNet::forward: empty input");
    }
    Cache local;
    Cache& c = cache ? *cache : local;
    c.inputs.clear();
    c.cols.clear();
    c.activations.clear();

    Tensor x = input;
    for (int b = 0; b < static_cast<int>(kWidths.size()); ++b) {
        const ConvShape sh = conv_shape(b, x.height, x.width);
        std::vector<double> col;
        im2col(x, sh.out_h, sh.out_w, col);
        const int n_out = sh.out_h * sh.out_w;
        const auto& wseg = segments_[2 * static_cast<std::size_t>(b)];
        const auto& bseg = segments_[2 * static_cast<std::size_t>(b) + 1];
        ConstMatMap w(params_.data() + wseg.offset, sh.out_c, sh.in_c * kTaps);
        ConstVecMap bias(params_.data() + bseg.offset, sh.out_c);
        ConstMatMap cm(col.data(), sh.in_c * kTaps, n_out);

        Tensor y(sh.out_c, sh.out_h, sh.out_w);
        MatMap ym(y.data.data(), sh.out_c, n_out);
        ym.noalias() = w * cm;
        ym.colwise() += bias;
        ym = ym.cwiseMax(0.0);

        c.inputs.push_back(std::move(x));
        c.cols.push_back(std::move(col));
        c.activations.push_back(y);
        x = std::move(y);
    }

    const int feat = x.channels;
    const std::size_t plane = static_cast<std::size_t>(x.height) * x.width;
    c.pooled.assign(static_cast<std::size_t>(feat), 0.0);
    for (int ch = 0; ch < feat; ++ch) {
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            s += x.data[static_cast<std::size_t>(ch) * plane + i];
        }
        c.pooled[static_cast<std::size_t>(ch)] = s / static_cast<double>(plane);
    }

    const auto& fw = segments_[2 * kWidths.size()];
    const auto& fb = segments_[2 * kWidths.size() + 1];
    for (int o = 0; o < kOutputs; ++o) {
        double z = params_[fb.offset + static_cast<std::size_t>(o)];
        for (int i = 0; i < feat; ++i) {
            z += params_[fw.offset + static_cast<std::size_t>(o) * feat + i] *
                 c.pooled[static_cast<std::size_t>(i)];
        }
        c.output[static_cast<std::size_t>(o)] = std::tanh(z);
    }
    return c.output;
}

void PoseRegressorNet::backward(const Cache& c, const std::array<double, kOutputs>& d_output,
                                std::span<double> grad) const {
    if (grad.size() != params_.size()) {
        throw std::invalid_argument("PoseRegressorNet::backward: gradient buffer size mismatch");
    }
    const int feat = kWidths.back();
    const auto& fw = segments_[2 * kWidths.size()];
    const auto& fb = segments_[2 * kWidths.size() + 1];

    std::array<double, kOutputs> dz{};
    for (int o = 0; o < kOutputs; ++o) {
        const double y = c.output[static_cast<std::size_t>(o)];
        dz[static_cast<std::size_t>(o)] = d_output[static_cast<std::size_t>(o)] * (1.0 - y * y);
    }
    std::vector<double> d_pooled(static_cast<std::size_t>(feat), 0.0);
    for (int o = 0; o < kOutputs; ++o) {
        const double g = dz[static_cast<std::size_t>(o)];
        grad[fb.offset + static_cast<std::size_t>(o)] += g;
        for (int i = 0; i < feat; ++i) {
            const std::size_t wi = fw.offset + static_cast<std::size_t>(o) * feat + i;
            grad[wi] += g * c.pooled[static_cast<std::size_t>(i)];
            d_pooled[static_cast<std::size_t>(i)] += g * params_[wi];
        }
    }

    const Tensor& last = c.activations.back();
    Tensor d_act(last.channels, last.height, last.width);
    const std::size_t plane = static_cast<std::size_t>(last.height) * last.width;
    for (int ch = 0; ch < last.channels; ++ch) {
        const double g = d_pooled[static_cast<std::size_t>(ch)] / static_cast<double>(plane);
        for (std::size_t i = 0; i < plane; ++i) {
            d_act.data[static_cast<std::size_t>(ch) * plane + i] = g;
        }
    }

    for (int b = static_cast<int>(kWidths.size()) - 1; b >= 0; --b) {
        const auto bi = static_cast<std::size_t>(b);
        const Tensor& in = c.inputs[bi];
        const Tensor& act = c.activations[bi];
        const ConvShape sh = conv_shape(b, in.height, in.width);
        const int n_out = sh.out_h * sh.out_w;

        // ReLU gate.
        for (std::size_t i = 0; i < d_act.data.size(); ++i) {
            if (act.data[i] <= 0.0) {
                d_act.data[i] = 0.0;
            }
        }
        ConstMatMap dy(d_act.data.data(), sh.out_c, n_out);
        ConstMatMap cm(c.cols[bi].data(), sh.in_c * kTaps, n_out);
        const auto& wseg = segments_[2 * bi];
        const auto& bseg = segments_[2 * bi + 1];
        MatMap dw(grad.data() + wseg.offset, sh.out_c, sh.in_c * kTaps);
        VecMap db(grad.data() + bseg.offset, sh.out_c);
        dw.noalias() += dy * cm.transpose();
        db += dy.rowwise().sum();

        if (b == 0) {
            break;
        }
        ConstMatMap w(params_.data() + wseg.offset, sh.out_c, sh.in_c * kTaps);
        std::vector<double> dcol(static_cast<std::size_t>(sh.in_c) * kTaps * n_out);
        MatMap dcm(dcol.data(), sh.in_c * kTaps, n_out);
        dcm.noalias() = w.transpose() * dy;
        Tensor d_in(in.channels, in.height, in.width);
        col2im(dcol, sh.out_h, sh.out_w, d_in);
        d_act = std::move(d_in);
    }
}

}  // namespace poseinit::nn
