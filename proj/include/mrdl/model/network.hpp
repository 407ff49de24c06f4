#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mrdl/core/error.hpp"
#include "mrdl/core/field.hpp"
#include "mrdl/core/rng.hpp"

namespace mrdl::model {

template <class Real>
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LayerShape {
    std::size_t kernel_h = 3;
    std::size_t kernel_w = 3;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;

    std::size_t fan_in() const { return in_channels * kernel_h * kernel_w; }
    std::size_t parameter_count() const { return out_channels * fan_in(); }
    friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

struct Architecture {
    std::size_t depth = 8;
    std::size_t kernel = 3;
    std::size_t hidden_channels = 32;
    // Scales the output layer's init bound. A small start keeps the early
    // ADAM steps from driving the hidden ReLUs silent.
    double output_gain = 0.01;

    static constexpr std::size_t kInputChannels = 2;   // real, imaginary
    static constexpr std::size_t kOutputChannels = 4;  // ring (re, im), noise (re, im)

    std::vector<LayerShape> layers() const;
};

/// Channel-major activations: row c holds channel c as a row-major image.
template <class Real>
struct FeatureMap {
    Matrix<Real> data;
    std::size_t height = 0;
    std::size_t width = 0;
};

// Bias-free fully convolutional network with "same" zero padding, ReLU on
// every hidden layer and a linear final layer. Without bias terms and with
// zero padding every layer is positively homogeneous, hence so is the net.
//
// Weight layout per layer: out_channels x (in_channels * kh * kw), column
// index (c * kh + ky) * kw + kx; this is also the serialization order.
template <class Real>
class BasicDenoiseModel {
public:
    BasicDenoiseModel() = default;

    explicit BasicDenoiseModel(std::vector<LayerShape> shapes) : shapes_(std::move(shapes)) {
        validate_shapes();
        for (const auto& s : shapes_)
            weights_.emplace_back(Matrix<Real>::Zero(static_cast<Eigen::Index>(s.out_channels),
                                                     static_cast<Eigen::Index>(s.fan_in())));
    }

    /// Zero-mean uniform init with bound sqrt(6 / fan_in).
    static BasicDenoiseModel initialized(const Architecture& arch, std::uint64_t seed) {
        BasicDenoiseModel m(arch.layers());
        Rng rng(derive_seed(seed, {0x1417ull}));
        for (std::size_t l = 0; l < m.shapes_.size(); ++l) {
            double bound = std::sqrt(6.0 / static_cast<double>(m.shapes_[l].fan_in()));
            if (l + 1 == m.shapes_.size()) bound *= arch.output_gain;
            auto& w = m.weights_[l];
            for (Eigen::Index i = 0; i < w.size(); ++i)
                w.data()[i] = static_cast<Real>(rng.uniform(-bound, bound));
        }
        return m;
    }

    const std::vector<LayerShape>& shapes() const { return shapes_; }
    std::vector<Matrix<Real>>& weights() { return weights_; }
    const std::vector<Matrix<Real>>& weights() const { return weights_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& s : shapes_) n += s.parameter_count();
        return n;
    }

    /// Side length of the square input patch that influences one output pixel.
    std::size_t receptive_field() const {
        std::size_t rf = 1;
        for (const auto& s : shapes_) rf += std::max(s.kernel_h, s.kernel_w) - 1;
        return rf;
    }

    template <class Other>
    BasicDenoiseModel<Other> cast() const {
        BasicDenoiseModel<Other> out(shapes_);
        for (std::size_t l = 0; l < weights_.size(); ++l) out.weights()[l] = weights_[l].template cast<Other>();
        return out;
    }

    /// Inputs to each layer (post-activation of the previous one); kept for backprop.
    struct Trace {
        std::vector<FeatureMap<Real>> inputs;
    };

    FeatureMap<Real> forward(FeatureMap<Real> x, Trace* trace = nullptr) const {
        check_input(x);
        if (trace) trace->inputs.clear();
        for (std::size_t l = 0; l < shapes_.size(); ++l) {
            FeatureMap<Real> y{convolve(x, l), x.height, x.width};
            if (l + 1 < shapes_.size()) y.data = y.data.cwiseMax(Real(0));
            if (trace) trace->inputs.push_back(std::move(x));
            x = std::move(y);
        }
        return x;
    }

    /// Weight gradients given d(loss)/d(output) and the trace of the forward pass.
    std::vector<Matrix<Real>> backward(const Trace& trace, Matrix<Real> grad_out) const {
        std::vector<Matrix<Real>> grads(shapes_.size());
        for (std::size_t l = shapes_.size(); l-- > 0;) {
            const auto& in = trace.inputs[l];
            const Matrix<Real> col = im2col(in, shapes_[l]);
            grads[l].noalias() = grad_out * col.transpose();
            if (l == 0) break;
            const Matrix<Real> grad_col = weights_[l].transpose() * grad_out;
            Matrix<Real> grad_in = col2im(grad_col, shapes_[l], in.height, in.width);
            // ReLU gate: the layer input is the previous layer's activation.
            grad_out = grad_in.cwiseProduct(
                (in.data.array() > Real(0)).template cast<Real>().matrix());
        }
        return grads;
    }

private:
    void validate_shapes() const {
        if (shapes_.empty()) throw ParameterError("network needs at least one layer");
        if (shapes_.front().in_channels != Architecture::kInputChannels)
            throw ParameterError("first layer must take 2 channels (real, imaginary)");
        if (shapes_.back().out_channels != Architecture::kOutputChannels)
            throw ParameterError("last layer must emit 4 channels (two complex residuals)");
        for (std::size_t l = 0; l < shapes_.size(); ++l) {
            const auto& s = shapes_[l];
            if (s.kernel_h % 2 == 0 || s.kernel_w % 2 == 0)
                throw ParameterError("kernel sizes must be odd");
            if (l > 0 && shapes_[l - 1].out_channels != s.in_channels)
                throw ParameterError("layer " + std::to_string(l) + " channel mismatch");
        }
    }

    void check_input(const FeatureMap<Real>& x) const {
        const std::size_t rf = receptive_field();
        if (x.height < rf || x.width < rf)
            throw DimensionError("input " + std::to_string(x.width) + "x" + std::to_string(x.height) +
                                 " is smaller than the receptive field " + std::to_string(rf));
        if (static_cast<std::size_t>(x.data.rows()) != shapes_.front().in_channels ||
            static_cast<std::size_t>(x.data.cols()) != x.height * x.width)
            throw DimensionError("feature map shape mismatch");
    }

    // Convolution in bands of output rows so the im2col buffer stays cache-sized.
    Matrix<Real> convolve(const FeatureMap<Real>& x, std::size_t l) const {
        constexpr std::size_t kBandPixels = 2048;
        const auto& s = shapes_[l];
        const std::size_t band = std::max<std::size_t>(1, kBandPixels / x.width);
        if (band >= x.height) return weights_[l] * im2col(x, s);
        Matrix<Real> y(static_cast<Eigen::Index>(s.out_channels), static_cast<Eigen::Index>(x.height * x.width));
        for (std::size_t y0 = 0; y0 < x.height; y0 += band) {
            const std::size_t y1 = std::min(x.height, y0 + band);
            const auto cols = static_cast<Eigen::Index>((y1 - y0) * x.width);
            y.middleCols(static_cast<Eigen::Index>(y0 * x.width), cols).noalias() =
                weights_[l] * im2col(x, s, y0, y1);
        }
        return y;
    }

    /// Patch matrix for output rows [row_begin, row_end) (all rows by default).
    static Matrix<Real> im2col(const FeatureMap<Real>& x, const LayerShape& s, std::size_t row_begin = 0,
                               std::size_t row_end = static_cast<std::size_t>(-1)) {
        row_end = std::min(row_end, x.height);
        const auto h = static_cast<std::ptrdiff_t>(x.height);
        const auto w = static_cast<std::ptrdiff_t>(x.width);
        const auto r0 = static_cast<std::ptrdiff_t>(row_begin);
        const auto r1 = static_cast<std::ptrdiff_t>(row_end);
        const auto ph = static_cast<std::ptrdiff_t>(s.kernel_h / 2);
        const auto pw = static_cast<std::ptrdiff_t>(s.kernel_w / 2);
        Matrix<Real> col = Matrix<Real>::Zero(static_cast<Eigen::Index>(s.fan_in()), (r1 - r0) * w);
        std::size_t row = 0;
        for (std::size_t c = 0; c < s.in_channels; ++c) {
            const Real* src = x.data.row(static_cast<Eigen::Index>(c)).data();
            for (std::ptrdiff_t ky = 0; ky < static_cast<std::ptrdiff_t>(s.kernel_h); ++ky) {
                for (std::ptrdiff_t kx = 0; kx < static_cast<std::ptrdiff_t>(s.kernel_w); ++kx, ++row) {
                    Real* dst = col.row(static_cast<Eigen::Index>(row)).data();
                    const std::ptrdiff_t dy = ky - ph, dx = kx - pw;
                    const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
                    const std::ptrdiff_t x1 = std::min(w, w - dx);
                    const std::ptrdiff_t y_lo = std::max<std::ptrdiff_t>(r0, -dy);
                    const std::ptrdiff_t y_hi = std::min(r1, h - dy);
                    for (std::ptrdiff_t y = y_lo; y < y_hi; ++y)
                        std::copy(src + (y + dy) * w + x0 + dx, src + (y + dy) * w + x1 + dx,
                                  dst + (y - r0) * w + x0);
                }
            }
        }
        return col;
    }

    static Matrix<Real> col2im(const Matrix<Real>& col, const LayerShape& s, std::size_t height, std::size_t width) {
        const auto h = static_cast<std::ptrdiff_t>(height);
        const auto w = static_cast<std::ptrdiff_t>(width);
        const auto ph = static_cast<std::ptrdiff_t>(s.kernel_h / 2);
        const auto pw = static_cast<std::ptrdiff_t>(s.kernel_w / 2);
        Matrix<Real> out = Matrix<Real>::Zero(static_cast<Eigen::Index>(s.in_channels), h * w);
        std::size_t row = 0;
        for (std::size_t c = 0; c < s.in_channels; ++c) {
            Real* dst = out.row(static_cast<Eigen::Index>(c)).data();
            for (std::ptrdiff_t ky = 0; ky < static_cast<std::ptrdiff_t>(s.kernel_h); ++ky) {
                for (std::ptrdiff_t kx = 0; kx < static_cast<std::ptrdiff_t>(s.kernel_w); ++kx, ++row) {
                    const Real* src = col.row(static_cast<Eigen::Index>(row)).data();
                    const std::ptrdiff_t dy = ky - ph, dx = kx - pw;
                    const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
                    const std::ptrdiff_t x1 = std::min(w, w - dx);
                    for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(0, -dy); y < std::min(h, h - dy); ++y) {
                        Real* d = dst + (y + dy) * w + dx;
                        const Real* sp = src + y * w;
                        for (std::ptrdiff_t xx = x0; xx < x1; ++xx) d[xx] += sp[xx];
                    }
                }
            }
        }
        return out;
    }

    std::vector<LayerShape> shapes_;
    std::vector<Matrix<Real>> weights_;
};

using DenoiseModel = BasicDenoiseModel<float>;

template <class Real>
FeatureMap<Real> to_feature_map(const ComplexField& image) {
    FeatureMap<Real> m{Matrix<Real>(2, static_cast<Eigen::Index>(image.size())), image.height(), image.width()};
    for (std::size_t i = 0; i < image.size(); ++i) {
        m.data(0, static_cast<Eigen::Index>(i)) = static_cast<Real>(image[i].real());
        m.data(1, static_cast<Eigen::Index>(i)) = static_cast<Real>(image[i].imag());
    }
    return m;
}

/// Complex field from channels (re_row, re_row + 1) of a feature map.
template <class Real>
ComplexField complex_channels(const FeatureMap<Real>& m, Eigen::Index re_row) {
    ComplexField out({m.width, m.height}, Domain::Image);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        out[i] = Complex(static_cast<double>(m.data(re_row, c)), static_cast<double>(m.data(re_row + 1, c)));
    }
    return out;
}

struct Residuals {
    ComplexField ring;
    ComplexField noise;
};

/// Runs the network on a complex image; returns the ringing and noise residual estimates.
template <class Real>
Residuals cnn_forward(const BasicDenoiseModel<Real>& model, const ComplexField& image) {
    image.require_domain(Domain::Image, "cnn_forward");
    const auto out = model.forward(to_feature_map<Real>(image));
    return {complex_channels(out, 0), complex_channels(out, 2)};
}

}  // namespace mrdl::model
