// Convolutions via im2col + one GEMM per sample. Keeping N out of the GEMM
// makes every sample's arithmetic independent of the batch it arrives in.

#include <Eigen/Core>
#include <string>

#include "pyrofocus/errors.hpp"
#include "pyrofocus/numerics/ops.hpp"

namespace pyrofocus::nn {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConvGeometry {
  std::size_t channels, height, width;      // input image
  std::size_t kernel_h, kernel_w;
  std::size_t out_h, out_w;
  std::size_t stride, padding;

  std::size_t col_rows() const { return channels * kernel_h * kernel_w; }
  std::size_t col_cols() const { return out_h * out_w; }
};

template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* cols) {
  const auto ncols = g.col_cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    const T* plane = image + c * g.height * g.width;
    for (std::size_t i = 0; i < g.kernel_h; ++i) {
      for (std::size_t j = 0; j < g.kernel_w; ++j) {
        T* row = cols + ((c * g.kernel_h + i) * g.kernel_w + j) * ncols;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh * g.stride + i) -
                          static_cast<std::ptrdiff_t>(g.padding);
          T* dst = row + oh * g.out_w;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.height)) {
            std::fill(dst, dst + g.out_w, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(ih) * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const auto iw = static_cast<std::ptrdiff_t>(ow * g.stride + j) -
                            static_cast<std::ptrdiff_t>(g.padding);
            dst[ow] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.width))
                          ? T{0}
                          : src[static_cast<std::size_t>(iw)];
          }
        }
      }
    }
  }
}

// Accumulating inverse scatter of im2col.
template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* image) {
  const auto ncols = g.col_cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    T* plane = image + c * g.height * g.width;
    for (std::size_t i = 0; i < g.kernel_h; ++i) {
      for (std::size_t j = 0; j < g.kernel_w; ++j) {
        const T* row = cols + ((c * g.kernel_h + i) * g.kernel_w + j) * ncols;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh * g.stride + i) -
                          static_cast<std::ptrdiff_t>(g.padding);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.height)) continue;
          T* dst = plane + static_cast<std::size_t>(ih) * g.width;
          const T* src = row + oh * g.out_w;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const auto iw = static_cast<std::ptrdiff_t>(ow * g.stride + j) -
                            static_cast<std::ptrdiff_t>(g.padding);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.width)) continue;
            dst[static_cast<std::size_t>(iw)] += src[ow];
          }
        }
      }
    }
  }
}

template <typename T>
void require_rank4(const Tensor<T>& t, const char* what) {
  if (!t.defined() || t.rank() != 4) {
    throw DimensionError(std::string(what) + " must be rank 4, got " +
                         (t.defined() ? to_string(t.shape()) : std::string("undefined")));
  }
}

template <typename T>
void check_bias(const Tensor<T>& bias, std::size_t channels) {
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != channels)) {
    throw DimensionError("bias shape " + to_string(bias.shape()) + " does not match " +
                         std::to_string(channels) + " output channels");
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, int stride,
                 int padding) {
  require_rank4(input, "conv2d input");
  require_rank4(kernel, "conv2d kernel");
  if (stride < 1) throw ConfigError("conv2d stride must be >= 1");
  if (padding < 0) throw ConfigError("conv2d padding must be >= 0");
  const auto n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const auto cout = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kernel.dim(1) != cin) {
    throw DimensionError("conv2d kernel expects " + std::to_string(kernel.dim(1)) +
                         " input channels, input has " + std::to_string(cin));
  }
  const auto pad = static_cast<std::size_t>(padding);
  if (kh > h + 2 * pad || kw > w + 2 * pad) {
    throw DimensionError("conv2d kernel " + to_string(kernel.shape()) + " larger than padded input " +
                         to_string(input.shape()));
  }
  check_bias(bias, cout);

  ConvGeometry g{cin,
                 h,
                 w,
                 kh,
                 kw,
                 (h + 2 * pad - kh) / static_cast<std::size_t>(stride) + 1,
                 (w + 2 * pad - kw) / static_cast<std::size_t>(stride) + 1,
                 static_cast<std::size_t>(stride),
                 pad};
  const auto k = g.col_rows(), hw = g.col_cols();
  std::vector<T> out(n * cout * hw);
  std::vector<T> cols(k * hw);
  Eigen::Map<const MatRM<T>> wmat(kernel.values().data(), cout, k);
  const T* x = input.values().data();
  for (std::size_t s = 0; s < n; ++s) {
    im2col(x + s * cin * h * w, g, cols.data());
    Eigen::Map<const MatRM<T>> cmat(cols.data(), k, hw);
    Eigen::Map<MatRM<T>> y(out.data() + s * cout * hw, cout, hw);
    y.noalias() = wmat * cmat;
    if (bias.defined()) {
      const T* b = bias.values().data();
      for (std::size_t co = 0; co < cout; ++co) y.row(co).array() += b[co];
    }
  }

  const bool has_bias = bias.defined();
  std::vector<Tensor<T>> inputs{input, kernel};
  if (has_bias) inputs.push_back(bias);
  return detail::make_result<T>(
      {n, cout, g.out_h, g.out_w}, std::move(out), inputs,
      [g, n, cout, has_bias](detail::Node<T>& self) {
        auto& xin = *self.inputs[0];
        auto& ker = *self.inputs[1];
        const auto k = g.col_rows(), hw = g.col_cols();
        const auto in_plane = g.channels * g.height * g.width;
        std::vector<T> cols(k * hw);
        std::vector<T> dcols(xin.requires_grad ? k * hw : 0);
        Eigen::Map<const MatRM<T>> wmat(ker.value.data(), cout, k);
        for (std::size_t s = 0; s < n; ++s) {
          Eigen::Map<const MatRM<T>> dy(self.grad.data() + s * cout * hw, cout, hw);
          if (ker.requires_grad) {
            im2col(xin.value.data() + s * in_plane, g, cols.data());
            Eigen::Map<const MatRM<T>> cmat(cols.data(), k, hw);
            Eigen::Map<MatRM<T>> dw(ker.grad.data(), cout, k);
            dw.noalias() += dy * cmat.transpose();
          }
          if (xin.requires_grad) {
            Eigen::Map<MatRM<T>> dc(dcols.data(), k, hw);
            dc.noalias() = wmat.transpose() * dy;
            col2im(dcols.data(), g, xin.grad.data() + s * in_plane);
          }
          if (has_bias && self.inputs[2]->requires_grad) {
            auto& db = self.inputs[2]->grad;
            // Plain loop: Eigen reductions start at the first aligned element, which
            // would make the summation order depend on the buffer address.
            for (std::size_t co = 0; co < cout; ++co) {
              const T* row = dy.data() + co * hw;
              T acc{0};
              for (std::size_t p = 0; p < hw; ++p) acc += row[p];
              db[co] += acc;
            }
          }
        }
      });
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                           int stride) {
  require_rank4(input, "conv_transpose2d input");
  require_rank4(kernel, "conv_transpose2d kernel");
  if (stride < 1) throw ConfigError("conv_transpose2d stride must be >= 1");
  const auto n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (kernel.dim(0) != cin) {
    throw DimensionError("conv_transpose2d kernel expects " + std::to_string(kernel.dim(0)) +
                         " input channels, input has " + std::to_string(cin));
  }
  const auto cout = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
  check_bias(bias, cout);
  const auto st = static_cast<std::size_t>(stride);
  const auto oh = (h - 1) * st + kh, ow = (w - 1) * st + kw;

  // Geometry of the conv2d this op is the adjoint of: image = output here.
  ConvGeometry g{cout, oh, ow, kh, kw, h, w, st, 0};
  const auto k = g.col_rows(), hw = g.col_cols();
  std::vector<T> out(n * cout * oh * ow, T{0});
  std::vector<T> cols(k * hw);
  Eigen::Map<const MatRM<T>> wmat(kernel.values().data(), cin, k);
  const T* x = input.values().data();
  for (std::size_t s = 0; s < n; ++s) {
    Eigen::Map<const MatRM<T>> xm(x + s * cin * hw, cin, hw);
    Eigen::Map<MatRM<T>> cm(cols.data(), k, hw);
    cm.noalias() = wmat.transpose() * xm;
    T* dst = out.data() + s * cout * oh * ow;
    col2im(cols.data(), g, dst);
    if (bias.defined()) {
      const T* b = bias.values().data();
      for (std::size_t co = 0; co < cout; ++co) {
        for (std::size_t p = 0; p < oh * ow; ++p) dst[co * oh * ow + p] += b[co];
      }
    }
  }

  const bool has_bias = bias.defined();
  std::vector<Tensor<T>> inputs{input, kernel};
  if (has_bias) inputs.push_back(bias);
  return detail::make_result<T>(
      {n, cout, oh, ow}, std::move(out), inputs, [g, n, cin, has_bias](detail::Node<T>& self) {
        auto& xin = *self.inputs[0];
        auto& ker = *self.inputs[1];
        const auto k = g.col_rows(), hw = g.col_cols();
        const auto out_plane = g.channels * g.height * g.width;
        std::vector<T> cols(k * hw);
        Eigen::Map<const MatRM<T>> wmat(ker.value.data(), cin, k);
        for (std::size_t s = 0; s < n; ++s) {
          im2col(self.grad.data() + s * out_plane, g, cols.data());
          Eigen::Map<const MatRM<T>> cm(cols.data(), k, hw);
          if (xin.requires_grad) {
            Eigen::Map<MatRM<T>> dx(xin.grad.data() + s * cin * hw, cin, hw);
            dx.noalias() += wmat * cm;
          }
          if (ker.requires_grad) {
            Eigen::Map<const MatRM<T>> xm(xin.value.data() + s * cin * hw, cin, hw);
            Eigen::Map<MatRM<T>> dw(ker.grad.data(), cin, k);
            dw.noalias() += xm * cm.transpose();
          }
          if (has_bias && self.inputs[2]->requires_grad) {
            auto& db = self.inputs[2]->grad;
            const T* dy = self.grad.data() + s * out_plane;
            const auto plane = g.height * g.width;
            for (std::size_t co = 0; co < g.channels; ++co) {
              T acc{0};
              for (std::size_t p = 0; p < plane; ++p) acc += dy[co * plane + p];
              db[co] += acc;
            }
          }
        }
      });
}

template Tensor<float> conv2d(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&, int, int);
template Tensor<double> conv2d(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&, int,
                               int);
template Tensor<float> conv_transpose2d(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                        int);
template Tensor<double> conv_transpose2d(const Tensor<double>&, const Tensor<double>&,
                                         const Tensor<double>&, int);

}  // namespace pyrofocus::nn
