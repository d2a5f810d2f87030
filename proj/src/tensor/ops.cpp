#include "cdg/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cdg/common/errors.hpp"
#include "cdg/common/log.hpp"
#include "cdg/tensor/tape.hpp"

namespace cdg::ops {
namespace {

bool tracks(const Tensor& t) { return grad_enabled() && t.requires_grad(); }

template <typename... Ts>
bool any_tracks(const Ts&... ts) {
  return (tracks(ts) || ...);
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                       shape_string(b.shape()));
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
  }
}

std::size_t last_dim(const Tensor& t) { return t.shape().back(); }

// C[m,n] += A[m,k] B[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[m,k] B[n,k]^T. B is transposed into scratch space first so the
// inner loop runs over contiguous rows like gemm_nn, which vectorizes where a
// dot-product loop cannot under strict floating point.
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  thread_local std::vector<double> bt;
  bt.resize(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  gemm_nn(a, bt.data(), c, m, k, n);
}

// C[m,n] += A[k,m]^T B[k,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

Tensor new_output(Shape shape, bool track) { return Tensor::zeros(std::move(shape), track); }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() < 2) shape_mismatch("matmul", a, b);
  const auto& as = a.shape();
  const auto& bs = b.shape();
  const std::size_t m = as[as.size() - 2];
  const std::size_t k = as.back();
  const std::size_t n = bs.back();
  if (bs[bs.size() - 2] != k) shape_mismatch("matmul", a, b);
  const bool shared_b = bs.size() == 2;
  if (!shared_b && (bs.size() != as.size() || !std::equal(as.begin(), as.end() - 2, bs.begin()))) {
    shape_mismatch("matmul", a, b);
  }
  const std::size_t batch = a.numel() / (m * k);
  Shape out_shape(as.begin(), as.end() - 2);
  out_shape.push_back(m);
  out_shape.push_back(n);

  const bool track = any_tracks(a, b);
  Tensor out = new_output(out_shape, track);
  {
    auto ad = a.data();
    auto bd = b.data();
    auto od = out.data();
    for (std::size_t s = 0; s < batch; ++s) {
      gemm_nn(ad.data() + s * m * k, bd.data() + (shared_b ? 0 : s * k * n), od.data() + s * m * n, m, k, n);
    }
  }
  if (track) {
    Tape::current().record(out, [a, b, out, m, k, n, batch, shared_b]() {
      auto go = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad();
        auto bd = std::as_const(b).data();
        for (std::size_t s = 0; s < batch; ++s) {
          gemm_nt(go.data() + s * m * n, bd.data() + (shared_b ? 0 : s * k * n), ga.data() + s * m * k, m, n, k);
        }
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        auto ad = std::as_const(a).data();
        for (std::size_t s = 0; s < batch; ++s) {
          gemm_tn(ad.data() + s * m * k, go.data() + s * m * n, gb.data() + (shared_b ? 0 : s * k * n), k, m, n);
        }
      }
    });
  }
  return out;
}

Tensor matmul_transposed(const Tensor& a, const Tensor& b) {
  require_rank("matmul_transposed", a, 2);
  require_rank("matmul_transposed", b, 2);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) shape_mismatch("matmul_transposed", a, b);
  const bool track = any_tracks(a, b);
  Tensor out = new_output({m, n}, track);
  gemm_nt(a.data().data(), b.data().data(), out.data().data(), m, k, n);
  if (track) {
    Tape::current().record(out, [a, b, out, m, k, n]() {
      auto go = out.grad();
      // dA[m,k] += dC[m,n] B[n,k]
      if (a.requires_grad()) gemm_nn(go.data(), std::as_const(b).data().data(), a.grad().data(), m, n, k);
      // dB[n,k] += dC[m,n]^T A[m,k]
      if (b.requires_grad()) gemm_tn(go.data(), std::as_const(a).data().data(), b.grad().data(), n, m, k);
    });
  }
  return out;
}

namespace {

template <typename Fwd, typename BwdA, typename BwdB>
Tensor elementwise_binary(const char* name, const Tensor& a, const Tensor& b, Fwd fwd, BwdA da, BwdB db) {
  if (a.shape() != b.shape()) shape_mismatch(name, a, b);
  const bool track = any_tracks(a, b);
  Tensor out = new_output(a.shape(), track);
  {
    auto ad = a.data();
    auto bd = b.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = fwd(ad[i], bd[i]);
  }
  if (track) {
    Tape::current().record(out, [a, b, out, da, db]() {
      auto go = out.grad();
      auto ad = std::as_const(a).data();
      auto bd = std::as_const(b).data();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += da(go[i], ad[i], bd[i]);
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] += db(go[i], ad[i], bd[i]);
      }
    });
  }
  return out;
}

template <typename Fwd, typename Bwd>
Tensor elementwise_unary(const Tensor& x, Fwd fwd, Bwd bwd) {
  const bool track = tracks(x);
  Tensor out = new_output(x.shape(), track);
  {
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = fwd(xd[i]);
  }
  if (track) {
    Tape::current().record(out, [x, out, bwd]() {
      auto go = out.grad();
      auto xd = std::as_const(x).data();
      auto yd = std::as_const(out).data();
      auto gx = x.grad();
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * bwd(xd[i], yd[i]);
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double g, double, double) { return g; },
      [](double g, double, double) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double g, double, double) { return g; },
      [](double g, double, double) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Tensor scale(const Tensor& x, double factor) {
  return elementwise_unary(
      x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double value) {
  return elementwise_unary(
      x, [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Tensor gelu(const Tensor& x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return elementwise_unary(
      x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
      [](double v, double) { return 0.5 * (1.0 + std::erf(v * inv_sqrt2)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v); });
}

Tensor sigmoid(const Tensor& x) {
  return elementwise_unary(
      x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const std::size_t d = last_dim(x);
  if (bias.numel() != d) shape_mismatch("add_bias", x, bias);
  const bool track = any_tracks(x, bias);
  Tensor out = new_output(x.shape(), track);
  const std::size_t rows = x.numel() / d;
  {
    auto xd = x.data();
    auto bd = bias.data();
    auto od = out.data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < d; ++j) od[r * d + j] = xd[r * d + j] + bd[j];
  }
  if (track) {
    Tape::current().record(out, [x, bias, out, rows, d]() {
      auto go = out.grad();
      if (x.requires_grad()) {
        auto gx = x.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < d; ++j) gb[j] += go[r * d + j];
      }
    });
  }
  return out;
}

Tensor scale_rows(const Tensor& x, const Tensor& weights) {
  require_rank("scale_rows", x, 2);
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (weights.numel() != n) shape_mismatch("scale_rows", x, weights);
  const bool track = any_tracks(x, weights);
  Tensor out = new_output(x.shape(), track);
  {
    auto xd = x.data();
    auto wd = weights.data();
    auto od = out.data();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) od[i * d + j] = xd[i * d + j] * wd[i];
  }
  if (track) {
    Tape::current().record(out, [x, weights, out, n, d]() {
      auto go = out.grad();
      auto xd = std::as_const(x).data();
      auto wd = std::as_const(weights).data();
      if (x.requires_grad()) {
        auto gx = x.grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += go[i * d + j] * wd[i];
      }
      if (weights.requires_grad()) {
        auto gw = weights.grad();
        for (std::size_t i = 0; i < n; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < d; ++j) acc += go[i * d + j] * xd[i * d + j];
          gw[i] += acc;
        }
      }
    });
  }
  return out;
}

Tensor softmax_lastdim(const Tensor& x) {
  const std::size_t d = last_dim(x);
  const std::size_t rows = x.numel() / d;
  const bool track = tracks(x);
  Tensor out = new_output(x.shape(), track);
  {
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* xr = xd.data() + r * d;
      double* yr = od.data() + r * d;
      const double mx = *std::max_element(xr, xr + d);
      if (mx == -std::numeric_limits<double>::infinity()) {
        log::warning("softmax over a fully blocked row; returning uniform weights");
        std::fill(yr, yr + d, 1.0 / static_cast<double>(d));
        continue;
      }
      double total = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        yr[j] = std::exp(xr[j] - mx);
        total += yr[j];
      }
      for (std::size_t j = 0; j < d; ++j) yr[j] /= total;
    }
  }
  if (track) {
    Tape::current().record(out, [x, out, rows, d]() {
      auto go = out.grad();
      auto yd = std::as_const(out).data();
      auto gx = x.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* g = go.data() + r * d;
        const double* y = yd.data() + r * d;
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += g[j] * y[j];
        for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += y[j] * (g[j] - dot);
      }
    });
  }
  return out;
}

Tensor log_softmax_lastdim(const Tensor& x) {
  const std::size_t d = last_dim(x);
  const std::size_t rows = x.numel() / d;
  const bool track = tracks(x);
  Tensor out = new_output(x.shape(), track);
  {
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* xr = xd.data() + r * d;
      double* yr = od.data() + r * d;
      const double mx = *std::max_element(xr, xr + d);
      if (mx == -std::numeric_limits<double>::infinity()) {
        log::warning("log-softmax over a fully blocked row; returning uniform weights");
        std::fill(yr, yr + d, -std::log(static_cast<double>(d)));
        continue;
      }
      double total = 0.0;
      for (std::size_t j = 0; j < d; ++j) total += std::exp(xr[j] - mx);
      const double lse = mx + std::log(total);
      for (std::size_t j = 0; j < d; ++j) yr[j] = xr[j] - lse;
    }
  }
  if (track) {
    Tape::current().record(out, [x, out, rows, d]() {
      auto go = out.grad();
      auto yd = std::as_const(out).data();
      auto gx = x.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* g = go.data() + r * d;
        const double* y = yd.data() + r * d;
        double gsum = 0.0;
        for (std::size_t j = 0; j < d; ++j) gsum += g[j];
        for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += g[j] - std::exp(y[j]) * gsum;
      }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t d = last_dim(x);
  if (gain.numel() != d) shape_mismatch("layer_norm", x, gain);
  if (bias.numel() != d) shape_mismatch("layer_norm", x, bias);
  const std::size_t rows = x.numel() / d;
  const bool track = any_tracks(x, gain, bias);
  Tensor out = new_output(x.shape(), track);
  std::vector<double> xhat(x.numel());
  std::vector<double> rstd(rows);
  {
    auto xd = x.data();
    auto gd = gain.data();
    auto bd = bias.data();
    auto od = out.data();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* xr = xd.data() + r * d;
      double mean = 0.0;
      for (std::size_t j = 0; j < d; ++j) mean += xr[j];
      mean /= static_cast<double>(d);
      double var = 0.0;
      for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
      var /= static_cast<double>(d);
      rstd[r] = 1.0 / std::sqrt(var + eps);
      for (std::size_t j = 0; j < d; ++j) {
        xhat[r * d + j] = (xr[j] - mean) * rstd[r];
        od[r * d + j] = xhat[r * d + j] * gd[j] + bd[j];
      }
    }
  }
  if (track) {
    Tape::current().record(out, [x, gain, bias, out, rows, d, xhat = std::move(xhat), rstd = std::move(rstd)]() {
      auto go = out.grad();
      auto gd = std::as_const(gain).data();
      if (gain.requires_grad()) {
        auto gg = gain.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < d; ++j) gg[j] += go[r * d + j] * xhat[r * d + j];
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < d; ++j) gb[j] += go[r * d + j];
      }
      if (x.requires_grad()) {
        auto gx = x.grad();
        const double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t r = 0; r < rows; ++r) {
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double dxh = go[r * d + j] * gd[j];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xhat[r * d + j];
          }
          for (std::size_t j = 0; j < d; ++j) {
            const double dxh = go[r * d + j] * gd[j];
            gx[r * d + j] += rstd[r] * inv_d *
                             (static_cast<double>(d) * dxh - sum_dxhat - xhat[r * d + j] * sum_dxhat_xhat);
          }
        }
      }
    });
  }
  return out;
}

Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
  if (!training || p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout probability must be < 1");
  const bool track = tracks(x);
  Tensor out = new_output(x.shape(), track);
  std::vector<double> keep(x.numel());
  const double scale_kept = 1.0 / (1.0 - p);
  {
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t i = 0; i < keep.size(); ++i) {
      keep[i] = uniform01(rng) >= p ? scale_kept : 0.0;
      od[i] = xd[i] * keep[i];
    }
  }
  if (track) {
    Tape::current().record(out, [x, out, keep = std::move(keep)]() {
      auto go = out.grad();
      auto gx = x.grad();
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * keep[i];
    });
  }
  return out;
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  require_rank("embedding", table, 2);
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  if (ids.empty()) throw DimensionError("embedding: empty id list");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw VocabularyError("embedding: id " + std::to_string(ids[i]) + " at index " + std::to_string(i) +
                            " outside table of size " + std::to_string(vocab));
    }
  }
  const bool track = tracks(table);
  Tensor out = new_output({ids.size(), d}, track);
  {
    auto td = table.data();
    auto od = out.data();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      std::copy_n(td.data() + static_cast<std::size_t>(ids[i]) * d, d, od.data() + i * d);
    }
  }
  if (track) {
    std::vector<int> idv(ids.begin(), ids.end());
    Tape::current().record(out, [table, out, d, idv = std::move(idv)]() {
      auto go = out.grad();
      auto gt = table.grad();
      for (std::size_t i = 0; i < idv.size(); ++i) {
        double* row = gt.data() + static_cast<std::size_t>(idv[i]) * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += go[i * d + j];
      }
    });
  }
  return out;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  require_rank("gather_rows", x, 2);
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (rows.empty()) throw DimensionError("gather_rows: empty row list");
  for (auto r : rows) {
    if (r >= n) throw DimensionError("gather_rows: row " + std::to_string(r) + " out of range for " + shape_string(x.shape()));
  }
  const bool track = tracks(x);
  Tensor out = new_output({rows.size(), d}, track);
  {
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(xd.data() + rows[i] * d, d, od.data() + i * d);
  }
  if (track) {
    std::vector<std::size_t> rv(rows.begin(), rows.end());
    Tape::current().record(out, [x, out, d, rv = std::move(rv)]() {
      auto go = out.grad();
      auto gx = x.grad();
      for (std::size_t i = 0; i < rv.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) gx[rv[i] * d + j] += go[i * d + j];
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count) {
  require_rank("slice_cols", x, 2);
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (count == 0 || start + count > d) {
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") out of range for " + shape_string(x.shape()));
  }
  const bool track = tracks(x);
  Tensor out = new_output({n, count}, track);
  {
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t i = 0; i < n; ++i) std::copy_n(xd.data() + i * d + start, count, od.data() + i * count);
  }
  if (track) {
    Tape::current().record(out, [x, out, n, d, start, count]() {
      auto go = out.grad();
      auto gx = x.grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < count; ++j) gx[i * d + start + j] += go[i * count + j];
    });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t n = parts.front().dim(0);
  std::size_t total = 0;
  bool track = false;
  for (const auto& p : parts) {
    require_rank("concat_cols", p, 2);
    if (p.dim(0) != n) shape_mismatch("concat_cols", parts.front(), p);
    total += p.dim(1);
    track = track || tracks(p);
  }
  Tensor out = new_output({n, total}, track);
  {
    auto od = out.data();
    std::size_t offset = 0;
    for (const auto& p : parts) {
      const std::size_t w = p.dim(1);
      auto pd = p.data();
      for (std::size_t i = 0; i < n; ++i) std::copy_n(pd.data() + i * w, w, od.data() + i * total + offset);
      offset += w;
    }
  }
  if (track) {
    Tape::current().record(out, [parts, out, n, total]() {
      auto go = out.grad();
      std::size_t offset = 0;
      for (auto& p : parts) {
        const std::size_t w = p.dim(1);
        if (p.requires_grad()) {
          auto gp = p.grad();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += go[i * total + offset + j];
        }
        offset += w;
      }
    });
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t d = parts.front().dim(1);
  std::size_t total = 0;
  bool track = false;
  for (const auto& p : parts) {
    require_rank("concat_rows", p, 2);
    if (p.dim(1) != d) shape_mismatch("concat_rows", parts.front(), p);
    total += p.dim(0);
    track = track || tracks(p);
  }
  Tensor out = new_output({total, d}, track);
  {
    auto od = out.data();
    std::size_t offset = 0;
    for (const auto& p : parts) {
      std::copy(p.data().begin(), p.data().end(), od.begin() + static_cast<std::ptrdiff_t>(offset));
      offset += p.numel();
    }
  }
  if (track) {
    Tape::current().record(out, [parts, out]() {
      auto go = out.grad();
      std::size_t offset = 0;
      for (auto& p : parts) {
        if (p.requires_grad()) {
          auto gp = p.grad();
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += go[offset + i];
        }
        offset += p.numel();
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  const bool track = tracks(x);
  Tensor out = new_output({1}, track);
  {
    auto xd = x.data();
    out.data()[0] = std::accumulate(xd.begin(), xd.end(), 0.0);
  }
  if (track) {
    Tape::current().record(out, [x, out]() {
      const double g = out.grad()[0];
      auto gx = x.grad();
      for (auto& v : gx) v += g;
    });
  }
  return out;
}

Tensor cross_entropy_masked(const Tensor& logits, std::span<const int> targets, const std::vector<bool>& active,
                            double label_smoothing) {
  require_rank("cross_entropy_masked", logits, 2);
  const std::size_t n = logits.dim(0), vocab = logits.dim(1);
  if (targets.size() != n || active.size() != n) {
    throw DimensionError("cross_entropy_masked: " + std::to_string(n) + " logit rows but " +
                         std::to_string(targets.size()) + " targets and " + std::to_string(active.size()) +
                         " active flags");
  }
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) throw ConfigError("label smoothing must lie in [0, 1)");
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    ++count;
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= vocab) {
      throw VocabularyError("cross_entropy_masked: target " + std::to_string(targets[i]) + " at row " +
                            std::to_string(i) + " outside vocabulary of size " + std::to_string(vocab));
    }
  }
  if (count == 0) throw DataError("no masked positions in batch");

  const bool track = tracks(logits);
  Tensor out = new_output({1}, track);
  std::vector<double> probs(n * vocab, 0.0);
  const double off = label_smoothing / static_cast<double>(vocab);
  double total = 0.0;
  {
    auto ld = logits.data();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      const double* row = ld.data() + i * vocab;
      const double mx = *std::max_element(row, row + vocab);
      double z = 0.0;
      for (std::size_t j = 0; j < vocab; ++j) z += std::exp(row[j] - mx);
      const double lse = mx + std::log(z);
      double nll = -(1.0 - label_smoothing) * (row[targets[i]] - lse);
      if (label_smoothing > 0.0) {
        double mean_logp = 0.0;
        for (std::size_t j = 0; j < vocab; ++j) mean_logp += row[j] - lse;
        nll -= off * mean_logp;
      }
      total += nll;
      for (std::size_t j = 0; j < vocab; ++j) probs[i * vocab + j] = std::exp(row[j] - lse);
    }
  }
  out.data()[0] = total / static_cast<double>(count);
  if (track) {
    std::vector<int> tv(targets.begin(), targets.end());
    Tape::current().record(out, [logits, out, n, vocab, count, off, label_smoothing, active,
                                 tv = std::move(tv), probs = std::move(probs)]() {
      const double g = out.grad()[0] / static_cast<double>(count);
      auto gl = logits.grad();
      for (std::size_t i = 0; i < n; ++i) {
        if (!active[i]) continue;
        for (std::size_t j = 0; j < vocab; ++j) {
          double q = off;
          if (static_cast<int>(j) == tv[i]) q += 1.0 - label_smoothing;
          gl[i * vocab + j] += g * (probs[i * vocab + j] - q);
        }
      }
    });
  }
  return out;
}

}  // namespace cdg::ops
