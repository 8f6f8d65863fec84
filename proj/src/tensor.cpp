#include "contactforge/tensor.hpp"

#include <stdexcept>

namespace contactforge {

Tensor conv_forward(const Tensor& input, const ConvParams& conv) {
    if (input.channels != conv.in) throw std::invalid_argument("conv input channel mismatch");
    Tensor out(input.height, input.width, conv.out);
    const int r = conv.k / 2;
    for (int y = 0; y < input.height; ++y) {
        for (int x = 0; x < input.width; ++x) {
            double* dst = out.pixel(y, x);
            for (int o = 0; o < conv.out; ++o) {
                double acc = conv.bias[o];
                for (int ky = 0; ky < conv.k; ++ky) {
                    const int iy = y + ky - r;
                    if (iy < 0 || iy >= input.height) continue;
                    for (int kx = 0; kx < conv.k; ++kx) {
                        const int ix = x + kx - r;
                        if (ix < 0 || ix >= input.width) continue;
                        const double* src = input.pixel(iy, ix);
                        const double* w = conv.weight.data() + ((static_cast<std::size_t>(o) * conv.k + ky) * conv.k + kx) * conv.in;
                        for (int c = 0; c < conv.in; ++c) acc += w[c] * src[c];
                    }
                }
                dst[o] = acc;
            }
        }
    }
    return out;
}

void conv_backward(const Tensor& input, const ConvParams& conv, const Tensor& grad_output, ConvParams& grad,
                   Tensor* grad_input) {
    const int r = conv.k / 2;
    for (int y = 0; y < input.height; ++y) {
        for (int x = 0; x < input.width; ++x) {
            const double* g_out = grad_output.pixel(y, x);
            for (int o = 0; o < conv.out; ++o) {
                const double g = g_out[o];
                if (g == 0.0) continue;
                grad.bias[o] += g;
                for (int ky = 0; ky < conv.k; ++ky) {
                    const int iy = y + ky - r;
                    if (iy < 0 || iy >= input.height) continue;
                    for (int kx = 0; kx < conv.k; ++kx) {
                        const int ix = x + kx - r;
                        if (ix < 0 || ix >= input.width) continue;
                        const std::size_t w_off = ((static_cast<std::size_t>(o) * conv.k + ky) * conv.k + kx) * conv.in;
                        const double* src = input.pixel(iy, ix);
                        double* gw = grad.weight.data() + w_off;
                        for (int c = 0; c < conv.in; ++c) gw[c] += g * src[c];
                        if (grad_input) {
                            const double* w = conv.weight.data() + w_off;
                            double* gi = grad_input->pixel(iy, ix);
                            for (int c = 0; c < conv.in; ++c) gi[c] += g * w[c];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace contactforge
