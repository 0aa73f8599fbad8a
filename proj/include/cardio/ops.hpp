#pragma once

#include <vector>

#include "cardio/rng.hpp"
#include "cardio/tensor.hpp"

// Layer primitives with explicit backward passes. The sequential Net in net.hpp
// is built on these; composite graphs (the segmenter's encoder-decoder) call
// them directly.
namespace cardio::ops {

enum class Padding { same, valid };

// x: [Cin,H,W], w: [Cout,Cin,k,k], b: [Cout]. Zero padding; "same" keeps H,W at stride 1.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, Padding pad);
void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gout, int stride, Padding pad,
                     Tensor* gx, Tensor* gw, Tensor* gb);

// x: [C,H,W]. Ties broken by first index in row-major window order.
Tensor maxpool2d_forward(const Tensor& x, int kernel, int stride, std::vector<int>* argmax);
Tensor maxpool2d_backward(const std::vector<int>& argmax, const std::vector<int>& in_shape,
                          const Tensor& gout);

// x: flattened to [N], w: [M,N], b: [M] -> [M]
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);
void dense_backward(const Tensor& x, const Tensor& w, const Tensor& gout,
                    Tensor* gx, Tensor* gw, Tensor* gb);

// x: [T,C], w: [K,C], b: [C]; valid padding -> [T-K+1,C]. One kernel per channel.
Tensor dwconv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b);
void dwconv1d_backward(const Tensor& x, const Tensor& w, const Tensor& gout,
                       Tensor* gx, Tensor* gw, Tensor* gb);

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& gout); // subgradient 0 at x == 0

Tensor sigmoid_forward(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& gout); // from forward output y

// Inverted dropout: kept values scaled by 1/(1-rate). mask holds the applied scale factors.
Tensor dropout_forward(const Tensor& x, double rate, Rng& rng, Tensor* mask);
Tensor dropout_backward(const Tensor& mask, const Tensor& gout);

// Nearest-neighbor 2x upsampling, [C,H,W] -> [C,2H,2W]; backward is a 2x2 sum pool.
Tensor upsample2x_forward(const Tensor& x);
Tensor upsample2x_backward(const Tensor& gout);

// Channel concatenation of [Ca,H,W] and [Cb,H,W] -> [Ca+Cb,H,W].
Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& g, int ca, Tensor* ga, Tensor* gb);

std::vector<int> conv2d_output_shape(const std::vector<int>& in, int out_ch, int kernel, int stride,
                                     Padding pad);
std::vector<int> maxpool2d_output_shape(const std::vector<int>& in, int kernel, int stride);

} // namespace cardio::ops
