// Copyright 2026 The PACLab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "paclab/core/errors.hpp"
#include "paclab/core/rng.hpp"
#include "paclab/tensor.hpp"

namespace paclab {

template <class S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using VecT = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using MatRM = MatT<float>;
using VecF = VecT<float>;

/// One flat parameter array plus its gradient accumulator.
template <class S>
struct ParamT {
  VecT<S> value;
  VecT<S> grad;

  void init_size(Eigen::Index n) {
    value.setZero(n);
    grad.setZero(n);
  }
  void zero_grad() { grad.setZero(); }
};

using Param = ParamT<float>;

/// Fan-in-scaled uniform initialization: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
template <class S>
inline void init_fan_in_uniform(ParamT<S>& p, Eigen::Index fan_in,
                                RngStream& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < p.value.size(); ++i)
    p.value[i] = static_cast<S>(rng.uniform(-bound, bound));
}

/// 3x3 convolution, stride 1, zero padding 1 (shape preserving).
class Conv3x3 {
 public:
  Conv3x3(int in_c, int out_c) : in_c_(in_c), out_c_(out_c) {
    weight_.init_size(static_cast<Eigen::Index>(out_c) * in_c * 9);
    bias_.init_size(out_c);
  }

  void init(RngStream& rng) {
    init_fan_in_uniform(weight_, static_cast<Eigen::Index>(in_c_) * 9, rng);
    bias_.value.setZero();
  }

  void forward(const Batch4& x, Batch4& y) {
    if (x.c != in_c_) throw ShapeError("Conv3x3: channel mismatch");
    n_ = x.n;
    h_ = x.h;
    w_ = x.w;
    const int hw = h_ * w_;
    const Eigen::Index K = static_cast<Eigen::Index>(in_c_) * 9;
    const Eigen::Index ncols = static_cast<Eigen::Index>(x.n) * hw;
    y.resize(x.n, out_c_, h_, w_);
    cols_.resize(K, ncols);
    for (int i = 0; i < x.n; ++i)
      im2col(x.image_data(i), i, hw);

    // One batched product per layer. Image column blocks are hw columns
    // wide (a multiple of the GEMM panel width for every supported size),
    // so each image's slice is computed independently of its neighbors.
    Eigen::Map<const MatRM> W(weight_.value.data(), out_c_, K);
    yall_.resize(out_c_, ncols);
    yall_.noalias() = W * cols_;

    const float* bias = bias_.value.data();
    for (int i = 0; i < x.n; ++i) {
      float* dst = y.image_data(i);
      for (int oc = 0; oc < out_c_; ++oc) {
        const float* src = yall_.data() + static_cast<std::size_t>(oc) * ncols +
                           static_cast<std::size_t>(i) * hw;
        const float b = bias[oc];
        float* out = dst + static_cast<std::size_t>(oc) * hw;
        for (int j = 0; j < hw; ++j) out[j] = src[j] + b;
      }
    }
  }

  void backward(const Batch4& dy, Batch4* dx) {
    const int hw = h_ * w_;
    const Eigen::Index K = static_cast<Eigen::Index>(in_c_) * 9;
    const Eigen::Index ncols = static_cast<Eigen::Index>(n_) * hw;
    Eigen::Map<const MatRM> W(weight_.value.data(), out_c_, K);
    Eigen::Map<MatRM> dW(weight_.grad.data(), out_c_, K);
    Eigen::Map<VecF> db(bias_.grad.data(), out_c_);

    // Gather dy into the (out_c x n*hw) layout used by the batched GEMMs.
    dyall_.resize(out_c_, ncols);
    for (int i = 0; i < n_; ++i) {
      const float* src = dy.image_data(i);
      for (int oc = 0; oc < out_c_; ++oc)
        std::copy(src + static_cast<std::size_t>(oc) * hw,
                  src + static_cast<std::size_t>(oc + 1) * hw,
                  dyall_.data() + static_cast<std::size_t>(oc) * ncols +
                      static_cast<std::size_t>(i) * hw);
    }

    dW.noalias() += dyall_ * cols_.transpose();
    // Fixed-order unrolled accumulation: a SIMD reduction over arbitrary
    // heap buffers would order the sum by alignment, breaking bit-for-bit
    // reproducibility.
    for (int oc = 0; oc < out_c_; ++oc) {
      const float* row = dyall_.data() + static_cast<std::size_t>(oc) * ncols;
      double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
      Eigen::Index j = 0;
      for (; j + 4 <= ncols; j += 4) {
        s0 += row[j];
        s1 += row[j + 1];
        s2 += row[j + 2];
        s3 += row[j + 3];
      }
      for (; j < ncols; ++j) s0 += row[j];
      db[oc] += static_cast<float>((s0 + s1) + (s2 + s3));
    }

    if (dx) {
      dx->resize(n_, in_c_, h_, w_);
      dcols_.resize(K, ncols);
      dcols_.noalias() = W.transpose() * dyall_;
      for (int i = 0; i < n_; ++i) col2im(i, dx->image_data(i), hw);
    }
  }

  std::vector<Param*> params() { return {&weight_, &bias_}; }
  int out_channels() const { return out_c_; }

 private:
  // Column layout of cols_: row = (ci*3 + ky)*3 + kx, column = i*hw + y*w + x.
  void im2col(const float* img, int image_index, int hw) {
    const Eigen::Index ncols = cols_.cols();
    float* base = cols_.data() + static_cast<std::size_t>(image_index) * hw;
    for (int ci = 0; ci < in_c_; ++ci) {
      const float* src = img + static_cast<std::size_t>(ci) * hw;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          float* dst = base + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) *
                                  ncols;
          const int oy = ky - 1, ox = kx - 1;
          for (int y = 0; y < h_; ++y) {
            const int sy = y + oy;
            float* drow = dst + static_cast<std::size_t>(y) * w_;
            if (sy < 0 || sy >= h_) {
              std::fill(drow, drow + w_, 0.0f);
              continue;
            }
            const float* srow = src + static_cast<std::size_t>(sy) * w_;
            for (int x = 0; x < w_; ++x) {
              const int sx = x + ox;
              drow[x] = (sx < 0 || sx >= w_) ? 0.0f : srow[sx];
            }
          }
        }
      }
    }
  }

  void col2im(int image_index, float* img, int hw) const {
    const Eigen::Index ncols = dcols_.cols();
    const float* base =
        dcols_.data() + static_cast<std::size_t>(image_index) * hw;
    std::fill(img, img + static_cast<std::size_t>(in_c_) * hw, 0.0f);
    for (int ci = 0; ci < in_c_; ++ci) {
      float* dst = img + static_cast<std::size_t>(ci) * hw;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const float* src =
              base +
              (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * ncols;
          const int oy = ky - 1, ox = kx - 1;
          for (int y = 0; y < h_; ++y) {
            const int sy = y + oy;
            if (sy < 0 || sy >= h_) continue;
            const float* srow = src + static_cast<std::size_t>(y) * w_;
            float* drow = dst + static_cast<std::size_t>(sy) * w_;
            for (int x = 0; x < w_; ++x) {
              const int sx = x + ox;
              if (sx >= 0 && sx < w_) drow[sx] += srow[x];
            }
          }
        }
      }
    }
  }

  int in_c_, out_c_;
  int n_ = 0, h_ = 0, w_ = 0;
  Param weight_, bias_;
  MatRM cols_;    // im2col of the last forward, all images side by side
  MatRM yall_;    // batched forward output staging
  MatRM dyall_;   // batched backward staging
  MatRM dcols_;   // batched input-gradient staging
};

/// Per-example, per-channel normalization over the spatial extent with a
/// learned scale and shift. Batch-independent, so train and eval behave
/// identically and batch composition never changes a single example's
/// features.
class InstanceNorm {
 public:
  explicit InstanceNorm(int channels) : c_(channels) {
    gamma_.init_size(channels);
    beta_.init_size(channels);
    gamma_.value.setOnes();
  }

  void init(RngStream&) {
    gamma_.value.setOnes();
    beta_.value.setZero();
  }

  void forward(const Batch4& x, Batch4& y) {
    if (x.c != c_) throw ShapeError("InstanceNorm: channel mismatch");
    n_ = x.n;
    hw_ = x.h * x.w;
    y.resize(x.n, x.c, x.h, x.w);
    xhat_.resize(x.v.size());
    inv_std_.resize(static_cast<std::size_t>(x.n) * c_);
    for (int i = 0; i < x.n; ++i) {
      for (int ch = 0; ch < c_; ++ch) {
        const float* px =
            x.image_data(i) + static_cast<std::size_t>(ch) * hw_;
        float* pxh = xhat_.data() +
                     (static_cast<std::size_t>(i) * c_ + ch) * hw_;
        float* py = y.image_data(i) + static_cast<std::size_t>(ch) * hw_;
        double sum, sq;
        sums4(px, hw_, sum, sq);
        const double mean = sum / hw_;
        const double var = std::max(0.0, sq / hw_ - mean * mean);
        const float inv = static_cast<float>(1.0 / std::sqrt(var + kEps));
        inv_std_[static_cast<std::size_t>(i) * c_ + ch] = inv;
        const float m = static_cast<float>(mean);
        const float g = gamma_.value[ch], b = beta_.value[ch];
        for (int j = 0; j < hw_; ++j) {
          const float xh = (px[j] - m) * inv;
          pxh[j] = xh;
          py[j] = g * xh + b;
        }
      }
    }
  }

  void backward(const Batch4& dy, Batch4* dx) {
    if (dx) dx->resize(n_, c_, dy.h, dy.w);
    for (int i = 0; i < n_; ++i) {
      for (int ch = 0; ch < c_; ++ch) {
        const float* pdy =
            dy.image_data(i) + static_cast<std::size_t>(ch) * hw_;
        const float* pxh = xhat_.data() +
                           (static_cast<std::size_t>(i) * c_ + ch) * hw_;
        const float g = gamma_.value[ch];
        const float inv = inv_std_[static_cast<std::size_t>(i) * c_ + ch];
        double sum_dy, sum_dy_xhat;
        dots4(pdy, pxh, hw_, sum_dy, sum_dy_xhat);
        gamma_.grad[ch] += static_cast<float>(sum_dy_xhat);
        beta_.grad[ch] += static_cast<float>(sum_dy);
        if (dx) {
          float* pdx = dx->image_data(i) + static_cast<std::size_t>(ch) * hw_;
          const float mean_dy = static_cast<float>(sum_dy / hw_);
          const float mean_dy_xhat = static_cast<float>(sum_dy_xhat / hw_);
          for (int j = 0; j < hw_; ++j)
            pdx[j] = g * inv * (pdy[j] - mean_dy - pxh[j] * mean_dy_xhat);
        }
      }
    }
  }

  std::vector<Param*> params() { return {&gamma_, &beta_}; }

  static constexpr double kEps = 1e-5;

 private:
  // Four-lane unrolled reductions: a fixed accumulation order that does not
  // depend on buffer alignment, unlike SIMD redux over raw maps.
  static void sums4(const float* p, int n, double& sum, double& sumsq) {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    double q0 = 0, q1 = 0, q2 = 0, q3 = 0;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      a0 += p[j];
      a1 += p[j + 1];
      a2 += p[j + 2];
      a3 += p[j + 3];
      q0 += static_cast<double>(p[j]) * p[j];
      q1 += static_cast<double>(p[j + 1]) * p[j + 1];
      q2 += static_cast<double>(p[j + 2]) * p[j + 2];
      q3 += static_cast<double>(p[j + 3]) * p[j + 3];
    }
    for (; j < n; ++j) {
      a0 += p[j];
      q0 += static_cast<double>(p[j]) * p[j];
    }
    sum = (a0 + a1) + (a2 + a3);
    sumsq = (q0 + q1) + (q2 + q3);
  }

  static void dots4(const float* a, const float* b, int n, double& sum_a,
                    double& dot_ab) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    double d0 = 0, d1 = 0, d2 = 0, d3 = 0;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      s0 += a[j];
      s1 += a[j + 1];
      s2 += a[j + 2];
      s3 += a[j + 3];
      d0 += static_cast<double>(a[j]) * b[j];
      d1 += static_cast<double>(a[j + 1]) * b[j + 1];
      d2 += static_cast<double>(a[j + 2]) * b[j + 2];
      d3 += static_cast<double>(a[j + 3]) * b[j + 3];
    }
    for (; j < n; ++j) {
      s0 += a[j];
      d0 += static_cast<double>(a[j]) * b[j];
    }
    sum_a = (s0 + s1) + (s2 + s3);
    dot_ab = (d0 + d1) + (d2 + d3);
  }

  int c_;
  int n_ = 0, hw_ = 0;
  Param gamma_, beta_;
  std::vector<float> xhat_;
  std::vector<float> inv_std_;
};

class ReluLayer {
 public:
  void forward(const Batch4& x, Batch4& y) {
    y.resize(x.n, x.c, x.h, x.w);
    mask_.assign(x.v.size(), 0);
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      if (x.v[i] > 0.0f) {
        y.v[i] = x.v[i];
        mask_[i] = 1;
      } else {
        y.v[i] = 0.0f;
      }
    }
  }

  void backward(const Batch4& dy, Batch4* dx) {
    if (!dx) return;
    dx->resize(dy.n, dy.c, dy.h, dy.w);
    for (std::size_t i = 0; i < dy.v.size(); ++i)
      dx->v[i] = mask_[i] ? dy.v[i] : 0.0f;
  }

 private:
  std::vector<char> mask_;
};

/// 2x2 max pooling, stride 2. Requires even spatial dims. Argmax ties break
/// to the first cell in scan order.
class MaxPool2 {
 public:
  void forward(const Batch4& x, Batch4& y) {
    if (x.h % 2 != 0 || x.w % 2 != 0)
      throw ShapeError("MaxPool2: spatial dims must be even");
    n_ = x.n;
    c_ = x.c;
    h_ = x.h;
    w_ = x.w;
    y.resize(x.n, x.c, x.h / 2, x.w / 2);
    arg_.assign(y.v.size(), 0);
    const int oh = x.h / 2, ow = x.w / 2;
    std::size_t oi = 0;
    for (int i = 0; i < x.n; ++i) {
      for (int ch = 0; ch < x.c; ++ch) {
        const float* src =
            x.image_data(i) + static_cast<std::size_t>(ch) * x.h * x.w;
        for (int y0 = 0; y0 < oh; ++y0) {
          for (int x0 = 0; x0 < ow; ++x0, ++oi) {
            const int by = 2 * y0, bx = 2 * x0;
            float best = src[by * x.w + bx];
            int arg = 0;
            const float cands[3] = {src[by * x.w + bx + 1],
                                    src[(by + 1) * x.w + bx],
                                    src[(by + 1) * x.w + bx + 1]};
            for (int k = 0; k < 3; ++k)
              if (cands[k] > best) {
                best = cands[k];
                arg = k + 1;
              }
            y.v[oi] = best;
            arg_[oi] = static_cast<char>(arg);
          }
        }
      }
    }
  }

  void backward(const Batch4& dy, Batch4* dx) {
    if (!dx) return;
    dx->resize(n_, c_, h_, w_);
    std::fill(dx->v.begin(), dx->v.end(), 0.0f);
    const int oh = h_ / 2, ow = w_ / 2;
    std::size_t oi = 0;
    for (int i = 0; i < n_; ++i) {
      for (int ch = 0; ch < c_; ++ch) {
        float* dst =
            dx->image_data(i) + static_cast<std::size_t>(ch) * h_ * w_;
        for (int y0 = 0; y0 < oh; ++y0) {
          for (int x0 = 0; x0 < ow; ++x0, ++oi) {
            const int by = 2 * y0, bx = 2 * x0;
            const int arg = arg_[oi];
            const int yy = by + (arg >> 1), xx = bx + (arg & 1);
            dst[yy * w_ + xx] += dy.v[oi];
          }
        }
      }
    }
  }

 private:
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<char> arg_;
};

/// Dense affine map on row-major feature matrices: y = x W^T + b.
template <class S>
class LinearT {
 public:
  LinearT(int in_dim, int out_dim) : in_(in_dim), out_(out_dim) {
    weight_.init_size(static_cast<Eigen::Index>(out_dim) * in_dim);
    bias_.init_size(out_dim);
  }

  void init(RngStream& rng) {
    init_fan_in_uniform(weight_, in_, rng);
    bias_.value.setZero();
  }

  void forward(const MatT<S>& x, MatT<S>& y) {
    if (x.cols() != in_) throw ShapeError("Linear: input dim mismatch");
    x_ = x;
    Eigen::Map<const MatT<S>> W(weight_.value.data(), out_, in_);
    y.resize(x.rows(), out_);
    // Row-by-row products: a row's output never depends on its position in
    // the batch, so permuting a batch permutes the outputs bit-for-bit.
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      y.row(i).noalias() = x.row(i) * W.transpose();
    y.rowwise() +=
        Eigen::Map<const VecT<S>>(bias_.value.data(), out_).transpose();
  }

  void backward(const MatT<S>& dy, MatT<S>* dx) {
    Eigen::Map<const MatT<S>> W(weight_.value.data(), out_, in_);
    Eigen::Map<MatT<S>> dW(weight_.grad.data(), out_, in_);
    dW.noalias() += dy.transpose() * x_;
    Eigen::Map<VecT<S>>(bias_.grad.data(), out_).noalias() +=
        dy.colwise().sum().transpose();
    if (dx) {
      dx->resize(dy.rows(), in_);
      for (Eigen::Index i = 0; i < dy.rows(); ++i)
        dx->row(i).noalias() = dy.row(i) * W;
    }
  }

  std::vector<ParamT<S>*> params() { return {&weight_, &bias_}; }
  int in_dim() const { return in_; }
  int out_dim() const { return out_; }

 private:
  int in_, out_;
  ParamT<S> weight_, bias_;
  MatT<S> x_;
};

using Linear = LinearT<float>;

template <class S>
class ReluRowsT {
 public:
  void forward(const MatT<S>& x, MatT<S>& y) {
    y = x.cwiseMax(S(0));
    mask_ = (x.array() > S(0)).template cast<S>();
  }
  void backward(const MatT<S>& dy, MatT<S>* dx) {
    if (dx) *dx = dy.cwiseProduct(mask_);
  }

 private:
  MatT<S> mask_;
};

using ReluRows = ReluRowsT<float>;

/// Row-wise L2 normalization with an epsilon-guarded denominator. The norm
/// accumulates in double so that re-normalizing an already unit row is an
/// identity to well under 1e-7.
template <class S>
class L2NormalizeRowsT {
 public:
  static constexpr S kEps = S(1e-12);

  void forward(const MatT<S>& x, MatT<S>& y) {
    y.resize(x.rows(), x.cols());
    norms_.resize(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double sq = 0.0;
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        sq += static_cast<double>(x(i, j)) * static_cast<double>(x(i, j));
      const S n = std::max(static_cast<S>(std::sqrt(sq)), kEps);
      norms_[i] = n;
      y.row(i) = x.row(i) / n;
    }
    y_ = y;
  }

  void backward(const MatT<S>& dy, MatT<S>* dx) {
    if (!dx) return;
    dx->resize(dy.rows(), dy.cols());
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
      const S dot = y_.row(i).dot(dy.row(i));
      dx->row(i) = (dy.row(i) - dot * y_.row(i)) / norms_[i];
    }
  }

 private:
  MatT<S> y_;
  VecT<S> norms_;
};

using L2NormalizeRows = L2NormalizeRowsT<float>;

inline void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

}  // namespace paclab
