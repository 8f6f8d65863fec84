#pragma once

#include <cstddef>
#include <vector>

namespace contactforge {

// Dense H x W x C feature map, channels innermost.
struct Tensor {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {}

    std::size_t offset(int y, int x, int ch = 0) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + ch;
    }
    double& at(int y, int x, int ch) { return data[offset(y, x, ch)]; }
    double at(int y, int x, int ch) const { return data[offset(y, x, ch)]; }
    double* pixel(int y, int x) { return data.data() + offset(y, x); }
    const double* pixel(int y, int x) const { return data.data() + offset(y, x); }

    std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
    bool same_shape(const Tensor& o) const { return height == o.height && width == o.width && channels == o.channels; }
};

// k x k convolution, stride 1, zero "same" padding. Weight layout is
// [out][ky][kx][in].
struct ConvParams {
    int in = 0;
    int out = 0;
    int k = 1;
    std::vector<double> weight;
    std::vector<double> bias;

    ConvParams() = default;
    ConvParams(int in_ch, int out_ch, int kernel)
        : in(in_ch), out(out_ch), k(kernel),
          weight(static_cast<std::size_t>(out_ch) * kernel * kernel * in_ch, 0.0), bias(out_ch, 0.0) {}
};

Tensor conv_forward(const Tensor& input, const ConvParams& conv);

// Accumulates into grad_weight/grad_bias (shaped like conv) and, when
// non-null, into grad_input.
void conv_backward(const Tensor& input, const ConvParams& conv, const Tensor& grad_output, ConvParams& grad,
                   Tensor* grad_input);

}  // namespace contactforge
