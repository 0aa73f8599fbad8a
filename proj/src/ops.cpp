#include "cardio/ops.hpp"

#include <algorithm>
#include <cmath>

namespace cardio::ops {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.shape.size() != rank)
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(t.shape));
}

inline int out_extent(int in, int kernel, int stride, int pad) {
    return (in + 2 * pad - kernel) / stride + 1;
}

} // namespace

std::vector<int> conv2d_output_shape(const std::vector<int>& in, int out_ch, int kernel, int stride,
                                     Padding pad) {
    if (in.size() != 3) throw ShapeError("conv2d: input must be [C,H,W], got " + shape_str(in));
    const int p = pad == Padding::same ? (kernel - 1) / 2 : 0;
    const int oh = out_extent(in[1], kernel, stride, p);
    const int ow = out_extent(in[2], kernel, stride, p);
    if (oh <= 0 || ow <= 0)
        throw ShapeError("conv2d: kernel " + std::to_string(kernel) + " too large for input " +
                         shape_str(in));
    return {out_ch, oh, ow};
}

std::vector<int> maxpool2d_output_shape(const std::vector<int>& in, int kernel, int stride) {
    if (in.size() != 3) throw ShapeError("maxpool2d: input must be [C,H,W], got " + shape_str(in));
    const int oh = out_extent(in[1], kernel, stride, 0);
    const int ow = out_extent(in[2], kernel, stride, 0);
    if (oh <= 0 || ow <= 0)
        throw ShapeError("maxpool2d: kernel too large for input " + shape_str(in));
    return {in[0], oh, ow};
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, Padding pad) {
    require_rank(x, 3, "conv2d input");
    require_rank(w, 4, "conv2d weight");
    const int cin = x.shape[0], h = x.shape[1], wd = x.shape[2];
    const int cout = w.shape[0], k = w.shape[2];
    if (w.shape[1] != cin || w.shape[3] != k)
        throw ShapeError("conv2d: weight " + shape_str(w.shape) + " does not match input " +
                         shape_str(x.shape));
    require_shape(b, {cout}, "conv2d bias");

    const int p = pad == Padding::same ? (k - 1) / 2 : 0;
    const int oh = out_extent(h, k, stride, p);
    const int ow = out_extent(wd, k, stride, p);
    if (oh <= 0 || ow <= 0) throw ShapeError("conv2d: empty output for input " + shape_str(x.shape));

    Tensor y({cout, oh, ow});
    for (int co = 0; co < cout; ++co) {
        double* yc = y.data.data() + static_cast<std::size_t>(co) * oh * ow;
        std::fill(yc, yc + static_cast<std::size_t>(oh) * ow, b[co]);
    }

    for (int co = 0; co < cout; ++co) {
        for (int ci = 0; ci < cin; ++ci) {
            const double* xc = x.data.data() + static_cast<std::size_t>(ci) * h * wd;
            double* yc = y.data.data() + static_cast<std::size_t>(co) * oh * ow;
            for (int kh = 0; kh < k; ++kh) {
                for (int kw = 0; kw < k; ++kw) {
                    const double wv = w.data[((static_cast<std::size_t>(co) * cin + ci) * k + kh) * k + kw];
                    if (wv == 0.0) continue;
                    // ih = oi*stride + kh - p must be in [0,h)
                    int oi_lo = 0, oi_hi = oh;
                    while (oi_lo < oh && oi_lo * stride + kh - p < 0) ++oi_lo;
                    while (oi_hi > oi_lo && (oi_hi - 1) * stride + kh - p >= h) --oi_hi;
                    int oj_lo = 0, oj_hi = ow;
                    while (oj_lo < ow && oj_lo * stride + kw - p < 0) ++oj_lo;
                    while (oj_hi > oj_lo && (oj_hi - 1) * stride + kw - p >= wd) --oj_hi;
                    for (int oi = oi_lo; oi < oi_hi; ++oi) {
                        const double* xrow = xc + static_cast<std::size_t>(oi * stride + kh - p) * wd;
                        double* yrow = yc + static_cast<std::size_t>(oi) * ow;
                        if (stride == 1) {
                            const double* xs = xrow + (kw - p);
                            for (int oj = oj_lo; oj < oj_hi; ++oj) yrow[oj] += wv * xs[oj];
                        } else {
                            for (int oj = oj_lo; oj < oj_hi; ++oj)
                                yrow[oj] += wv * xrow[oj * stride + kw - p];
                        }
                    }
                }
            }
        }
    }
    return y;
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gout, int stride, Padding pad,
                     Tensor* gx, Tensor* gw, Tensor* gb) {
    const int cin = x.shape[0], h = x.shape[1], wd = x.shape[2];
    const int cout = w.shape[0], k = w.shape[2];
    const int p = pad == Padding::same ? (k - 1) / 2 : 0;
    const int oh = gout.shape[1], ow = gout.shape[2];

    if (gb) {
        require_shape(*gb, {cout}, "conv2d grad bias");
        for (int co = 0; co < cout; ++co) {
            const double* gc = gout.data.data() + static_cast<std::size_t>(co) * oh * ow;
            double acc = 0.0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) acc += gc[i];
            gb->data[co] += acc;
        }
    }

    for (int co = 0; co < cout; ++co) {
        const double* gc = gout.data.data() + static_cast<std::size_t>(co) * oh * ow;
        for (int ci = 0; ci < cin; ++ci) {
            const double* xc = x.data.data() + static_cast<std::size_t>(ci) * h * wd;
            double* gxc = gx ? gx->data.data() + static_cast<std::size_t>(ci) * h * wd : nullptr;
            for (int kh = 0; kh < k; ++kh) {
                for (int kw = 0; kw < k; ++kw) {
                    int oi_lo = 0, oi_hi = oh;
                    while (oi_lo < oh && oi_lo * stride + kh - p < 0) ++oi_lo;
                    while (oi_hi > oi_lo && (oi_hi - 1) * stride + kh - p >= h) --oi_hi;
                    int oj_lo = 0, oj_hi = ow;
                    while (oj_lo < ow && oj_lo * stride + kw - p < 0) ++oj_lo;
                    while (oj_hi > oj_lo && (oj_hi - 1) * stride + kw - p >= wd) --oj_hi;

                    const std::size_t widx =
                        ((static_cast<std::size_t>(co) * cin + ci) * k + kh) * k + kw;
                    const double wv = w.data[widx];
                    // dW and dX accumulate in separate passes; the single-stream
                    // loops vectorize where the interleaved version does not
                    if (gw) {
                        // four accumulators break the FP dependency chain
                        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
                        for (int oi = oi_lo; oi < oi_hi; ++oi) {
                            const int ih = oi * stride + kh - p;
                            const double* __restrict grow = gc + static_cast<std::size_t>(oi) * ow;
                            const double* __restrict xrow =
                                xc + static_cast<std::size_t>(ih) * wd;
                            if (stride == 1) {
                                const double* __restrict xs = xrow + (kw - p);
                                int oj = oj_lo;
                                for (; oj + 4 <= oj_hi; oj += 4) {
                                    a0 += grow[oj] * xs[oj];
                                    a1 += grow[oj + 1] * xs[oj + 1];
                                    a2 += grow[oj + 2] * xs[oj + 2];
                                    a3 += grow[oj + 3] * xs[oj + 3];
                                }
                                for (; oj < oj_hi; ++oj) a0 += grow[oj] * xs[oj];
                            } else {
                                for (int oj = oj_lo; oj < oj_hi; ++oj)
                                    a0 += grow[oj] * xrow[oj * stride + kw - p];
                            }
                        }
                        gw->data[widx] += (a0 + a1) + (a2 + a3);
                    }
                    if (gxc && wv != 0.0) {
                        for (int oi = oi_lo; oi < oi_hi; ++oi) {
                            const int ih = oi * stride + kh - p;
                            const double* __restrict grow = gc + static_cast<std::size_t>(oi) * ow;
                            double* __restrict gxrow = gxc + static_cast<std::size_t>(ih) * wd;
                            if (stride == 1) {
                                double* __restrict gs = gxrow + (kw - p);
                                for (int oj = oj_lo; oj < oj_hi; ++oj) gs[oj] += wv * grow[oj];
                            } else {
                                for (int oj = oj_lo; oj < oj_hi; ++oj)
                                    gxrow[oj * stride + kw - p] += wv * grow[oj];
                            }
                        }
                    }
                }
            }
        }
    }
}

Tensor maxpool2d_forward(const Tensor& x, int kernel, int stride, std::vector<int>* argmax) {
    require_rank(x, 3, "maxpool2d input");
    const auto oshape = maxpool2d_output_shape(x.shape, kernel, stride);
    const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
    const int oh = oshape[1], ow = oshape[2];
    Tensor y(oshape);
    if (argmax) argmax->assign(y.data.size(), 0);
    std::size_t oidx = 0;
    for (int ch = 0; ch < c; ++ch) {
        const double* xc = x.data.data() + static_cast<std::size_t>(ch) * h * w;
        for (int oi = 0; oi < oh; ++oi) {
            for (int oj = 0; oj < ow; ++oj, ++oidx) {
                double best = -std::numeric_limits<double>::infinity();
                int best_idx = 0;
                for (int kh = 0; kh < kernel; ++kh) {
                    const int ih = oi * stride + kh;
                    for (int kw = 0; kw < kernel; ++kw) {
                        const int iw = oj * stride + kw;
                        const int idx = ih * w + iw;
                        if (xc[idx] > best) { // strict: first max wins in row-major order
                            best = xc[idx];
                            best_idx = idx;
                        }
                    }
                }
                y.data[oidx] = best;
                if (argmax) (*argmax)[oidx] = ch * h * w + best_idx;
            }
        }
    }
    return y;
}

Tensor maxpool2d_backward(const std::vector<int>& argmax, const std::vector<int>& in_shape,
                          const Tensor& gout) {
    Tensor gx(in_shape);
    if (argmax.size() != gout.data.size())
        throw StateError("maxpool2d backward: argmax record does not match upstream gradient");
    for (std::size_t i = 0; i < argmax.size(); ++i)
        gx.data[static_cast<std::size_t>(argmax[i])] += gout.data[i];
    return gx;
}

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_rank(w, 2, "dense weight");
    const int n = w.shape[1], m = w.shape[0];
    if (x.size() != n)
        throw ShapeError("dense: input size " + std::to_string(x.size()) + " != " + std::to_string(n));
    require_shape(b, {m}, "dense bias");
    Tensor y({m});
    for (int i = 0; i < m; ++i) {
        const double* wr = w.data.data() + static_cast<std::size_t>(i) * n;
        double acc = b[i];
        for (int j = 0; j < n; ++j) acc += wr[j] * x.data[j];
        y.data[i] = acc;
    }
    return y;
}

void dense_backward(const Tensor& x, const Tensor& w, const Tensor& gout,
                    Tensor* gx, Tensor* gw, Tensor* gb) {
    const int m = w.shape[0], n = w.shape[1];
    if (gb)
        for (int i = 0; i < m; ++i) gb->data[i] += gout.data[i];
    if (gw) {
        for (int i = 0; i < m; ++i) {
            const double g = gout.data[i];
            if (g == 0.0) continue;
            double* gwr = gw->data.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) gwr[j] += g * x.data[j];
        }
    }
    if (gx) {
        for (int i = 0; i < m; ++i) {
            const double g = gout.data[i];
            if (g == 0.0) continue;
            const double* wr = w.data.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) gx->data[j] += g * wr[j];
        }
    }
}

Tensor dwconv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_rank(x, 2, "dwconv1d input");
    require_rank(w, 2, "dwconv1d weight");
    const int t = x.shape[0], c = x.shape[1], k = w.shape[0];
    if (w.shape[1] != c)
        throw ShapeError("dwconv1d: weight channels " + std::to_string(w.shape[1]) +
                         " != input channels " + std::to_string(c));
    require_shape(b, {c}, "dwconv1d bias");
    const int to = t - k + 1;
    if (to <= 0) throw ShapeError("dwconv1d: input length " + std::to_string(t) +
                                  " shorter than kernel " + std::to_string(k));
    Tensor y({to, c});
    for (int ot = 0; ot < to; ++ot) {
        double* yr = y.data.data() + static_cast<std::size_t>(ot) * c;
        for (int ch = 0; ch < c; ++ch) yr[ch] = b[ch];
        for (int kk = 0; kk < k; ++kk) {
            const double* xr = x.data.data() + static_cast<std::size_t>(ot + kk) * c;
            const double* wr = w.data.data() + static_cast<std::size_t>(kk) * c;
            for (int ch = 0; ch < c; ++ch) yr[ch] += wr[ch] * xr[ch];
        }
    }
    return y;
}

void dwconv1d_backward(const Tensor& x, const Tensor& w, const Tensor& gout,
                       Tensor* gx, Tensor* gw, Tensor* gb) {
    const int c = x.shape[1], k = w.shape[0];
    const int to = gout.shape[0];
    for (int ot = 0; ot < to; ++ot) {
        const double* gr = gout.data.data() + static_cast<std::size_t>(ot) * c;
        if (gb)
            for (int ch = 0; ch < c; ++ch) gb->data[ch] += gr[ch];
        for (int kk = 0; kk < k; ++kk) {
            const double* xr = x.data.data() + static_cast<std::size_t>(ot + kk) * c;
            const double* wr = w.data.data() + static_cast<std::size_t>(kk) * c;
            double* gxr = gx ? gx->data.data() + static_cast<std::size_t>(ot + kk) * c : nullptr;
            double* gwr = gw ? gw->data.data() + static_cast<std::size_t>(kk) * c : nullptr;
            for (int ch = 0; ch < c; ++ch) {
                if (gwr) gwr[ch] += gr[ch] * xr[ch];
                if (gxr) gxr[ch] += gr[ch] * wr[ch];
            }
        }
    }
}

Tensor relu_forward(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& gout) {
    Tensor gx(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        gx.data[i] = x.data[i] > 0.0 ? gout.data[i] : 0.0;
    return gx;
}

Tensor sigmoid_forward(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
    return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& gout) {
    Tensor gx(y.shape);
    for (std::size_t i = 0; i < y.data.size(); ++i)
        gx.data[i] = gout.data[i] * y.data[i] * (1.0 - y.data[i]);
    return gx;
}

Tensor dropout_forward(const Tensor& x, double rate, Rng& rng, Tensor* mask) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0,1)");
    Tensor y(x.shape);
    if (mask) *mask = Tensor(x.shape);
    const double scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double m = rng.uniform() < rate ? 0.0 : scale;
        y.data[i] = x.data[i] * m;
        if (mask) mask->data[i] = m;
    }
    return y;
}

Tensor dropout_backward(const Tensor& mask, const Tensor& gout) {
    Tensor gx(mask.shape);
    for (std::size_t i = 0; i < mask.data.size(); ++i) gx.data[i] = mask.data[i] * gout.data[i];
    return gx;
}

Tensor upsample2x_forward(const Tensor& x) {
    require_rank(x, 3, "upsample2x input");
    const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
    Tensor y({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch) {
        const double* xc = x.data.data() + static_cast<std::size_t>(ch) * h * w;
        double* yc = y.data.data() + static_cast<std::size_t>(ch) * 4 * h * w;
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                const double v = xc[i * w + j];
                double* row0 = yc + static_cast<std::size_t>(2 * i) * 2 * w + 2 * j;
                double* row1 = row0 + static_cast<std::size_t>(2 * w);
                row0[0] = row0[1] = row1[0] = row1[1] = v;
            }
        }
    }
    return y;
}

Tensor upsample2x_backward(const Tensor& gout) {
    const int c = gout.shape[0], h2 = gout.shape[1], w2 = gout.shape[2];
    const int h = h2 / 2, w = w2 / 2;
    Tensor gx({c, h, w});
    for (int ch = 0; ch < c; ++ch) {
        const double* gc = gout.data.data() + static_cast<std::size_t>(ch) * h2 * w2;
        double* gxc = gx.data.data() + static_cast<std::size_t>(ch) * h * w;
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                const double* row0 = gc + static_cast<std::size_t>(2 * i) * w2 + 2 * j;
                const double* row1 = row0 + static_cast<std::size_t>(w2);
                gxc[i * w + j] = row0[0] + row0[1] + row1[0] + row1[1];
            }
    }
    return gx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.shape.size() != 3 || b.shape.size() != 3 || a.shape[1] != b.shape[1] ||
        a.shape[2] != b.shape[2])
        throw ShapeError("concat_channels: incompatible shapes " + shape_str(a.shape) + " and " +
                         shape_str(b.shape));
    Tensor y({a.shape[0] + b.shape[0], a.shape[1], a.shape[2]});
    std::copy(a.data.begin(), a.data.end(), y.data.begin());
    std::copy(b.data.begin(), b.data.end(), y.data.begin() + a.data.size());
    return y;
}

void split_channels(const Tensor& g, int ca, Tensor* ga, Tensor* gb) {
    const int h = g.shape[1], w = g.shape[2];
    const std::size_t na = static_cast<std::size_t>(ca) * h * w;
    if (ga) {
        *ga = Tensor({ca, h, w});
        std::copy(g.data.begin(), g.data.begin() + na, ga->data.begin());
    }
    if (gb) {
        *gb = Tensor({g.shape[0] - ca, h, w});
        std::copy(g.data.begin() + na, g.data.end(), gb->data.begin());
    }
}

} // namespace cardio::ops
