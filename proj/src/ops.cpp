#include "edp/ops.hpp"

#include <cmath>
#include <string>

namespace edp {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// y[m,n] += a[m,k] * b[k,n]
void matmul_acc(const double* a, const double* b, double* y, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* yrow = y + static_cast<size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const double al = arow[l];
      if (al == 0.0) continue;
      const double* brow = b + static_cast<size_t>(l) * n;
      for (int j = 0; j < n; ++j) yrow[j] += al * brow[j];
    }
  }
}

// y[m,s] += a[m,d] * b[s,d]^T
void matmul_nt_acc(const double* a, const double* b, double* y, int m, int d, int s) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * d;
    double* yrow = y + static_cast<size_t>(i) * s;
    for (int j = 0; j < s; ++j) {
      const double* brow = b + static_cast<size_t>(j) * d;
      double acc = 0.0;
      for (int l = 0; l < d; ++l) acc += arow[l] * brow[l];
      yrow[j] += acc;
    }
  }
}

// y[k,n] += a[m,k]^T * b[m,n]
void matmul_tn_acc(const double* a, const double* b, double* y, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    const double* brow = b + static_cast<size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const double al = arow[l];
      if (al == 0.0) continue;
      double* yrow = y + static_cast<size_t>(l) * n;
      for (int j = 0; j < n; ++j) yrow[j] += al * brow[j];
    }
  }
}

void record_if_taping(std::function<void()> fn) {
  if (Tape* t = Tape::active()) t->record(std::move(fn));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::check_shape(a.cols() == b.rows(), "matmul: inner extents differ (" +
                                                a.shape_str() + " vs " + b.shape_str() + ")");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = make_op_output(m, n);
  matmul_acc(a.values().data(), b.values().data(), out.values().data(), m, k, n);
  record_if_taping([a, b, out, m, k, n] {
    const std::vector<double>& gout = out.grad();
    if (a.wants_grad()) matmul_nt_acc(gout.data(), b.values().data(), a.grad().data(), m, n, k);
    if (b.wants_grad()) matmul_tn_acc(a.values().data(), gout.data(), b.grad().data(), m, k, n);
  });
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  detail::check_shape(a.cols() == b.cols(), "matmul_nt: trailing extents differ");
  const int m = a.rows(), d = a.cols(), s = b.rows();
  Tensor out = make_op_output(m, s);
  matmul_nt_acc(a.values().data(), b.values().data(), out.values().data(), m, d, s);
  record_if_taping([a, b, out, m, d, s] {
    const std::vector<double>& gout = out.grad();
    if (a.wants_grad()) matmul_acc(gout.data(), b.values().data(), a.grad().data(), m, s, d);
    if (b.wants_grad()) matmul_tn_acc(gout.data(), a.values().data(), b.grad().data(), m, s, d);
  });
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  detail::check_shape(a.same_shape(b), "add: shape mismatch");
  Tensor out = make_op_output(a.rows(), a.cols());
  const size_t n = out.values().size();
  for (size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] + b.values()[i];
  record_if_taping([a, b, out, n] {
    const std::vector<double>& gout = out.grad();
    if (a.wants_grad()) {
      std::vector<double>& ga = a.grad();
      for (size_t i = 0; i < n; ++i) ga[i] += gout[i];
    }
    if (b.wants_grad()) {
      std::vector<double>& gb = b.grad();
      for (size_t i = 0; i < n; ++i) gb[i] += gout[i];
    }
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  detail::check_shape(a.same_shape(b), "sub: shape mismatch");
  Tensor out = make_op_output(a.rows(), a.cols());
  const size_t n = out.values().size();
  for (size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] - b.values()[i];
  record_if_taping([a, b, out, n] {
    const std::vector<double>& gout = out.grad();
    if (a.wants_grad()) {
      std::vector<double>& ga = a.grad();
      for (size_t i = 0; i < n; ++i) ga[i] += gout[i];
    }
    if (b.wants_grad()) {
      std::vector<double>& gb = b.grad();
      for (size_t i = 0; i < n; ++i) gb[i] -= gout[i];
    }
  });
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  detail::check_shape(a.same_shape(b), "hadamard: shape mismatch");
  Tensor out = make_op_output(a.rows(), a.cols());
  const size_t n = out.values().size();
  for (size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * b.values()[i];
  record_if_taping([a, b, out, n] {
    const std::vector<double>& gout = out.grad();
    if (a.wants_grad()) {
      std::vector<double>& ga = a.grad();
      for (size_t i = 0; i < n; ++i) ga[i] += gout[i] * b.values()[i];
    }
    if (b.wants_grad()) {
      std::vector<double>& gb = b.grad();
      for (size_t i = 0; i < n; ++i) gb[i] += gout[i] * a.values()[i];
    }
  });
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = make_op_output(a.rows(), a.cols());
  const size_t n = out.values().size();
  for (size_t i = 0; i < n; ++i) out.values()[i] = c * a.values()[i];
  record_if_taping([a, out, c, n] {
    if (!a.wants_grad()) return;
    const std::vector<double>& gout = out.grad();
    std::vector<double>& ga = a.grad();
    for (size_t i = 0; i < n; ++i) ga[i] += c * gout[i];
  });
  return out;
}

Tensor add_row_broadcast(const Tensor& a, const Tensor& bias) {
  detail::check_shape(bias.rows() == 1 && bias.cols() == a.cols(),
                      "add_row_broadcast: bias must be 1x" + std::to_string(a.cols()));
  const int m = a.rows(), n = a.cols();
  Tensor out = make_op_output(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = a.at(i, j) + bias.at(0, j);
  record_if_taping([a, bias, out, m, n] {
    const std::vector<double>& gout = out.grad();
    if (a.wants_grad()) {
      std::vector<double>& ga = a.grad();
      for (size_t i = 0; i < gout.size(); ++i) ga[i] += gout[i];
    }
    if (bias.wants_grad()) {
      std::vector<double>& gb = bias.grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) gb[j] += gout[static_cast<size_t>(i) * n + j];
    }
  });
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = make_op_output(x.rows(), x.cols());
  const size_t n = out.values().size();
  for (size_t i = 0; i < n; ++i) out.values()[i] = x.values()[i] > 0.0 ? x.values()[i] : 0.0;
  record_if_taping([x, out, n] {
    if (!x.wants_grad()) return;
    const std::vector<double>& gout = out.grad();
    std::vector<double>& gx = x.grad();
    for (size_t i = 0; i < n; ++i)
      if (x.values()[i] > 0.0) gx[i] += gout[i];
  });
  return out;
}

Tensor gelu(const Tensor& x) {
  Tensor out = make_op_output(x.rows(), x.cols());
  const size_t n = out.values().size();
  for (size_t i = 0; i < n; ++i) {
    const double v = x.values()[i];
    out.values()[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  }
  record_if_taping([x, out, n] {
    if (!x.wants_grad()) return;
    const std::vector<double>& gout = out.grad();
    std::vector<double>& gx = x.grad();
    for (size_t i = 0; i < n; ++i) {
      const double v = x.values()[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      gx[i] += gout[i] * (cdf + v * pdf);
    }
  });
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  const int m = x.rows(), n = x.cols();
  Tensor out = make_op_output(m, n);
  for (int i = 0; i < m; ++i) {
    double mx = x.at(i, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, x.at(i, j));
    detail::check_shape(std::isfinite(mx), "softmax_rows: non-finite input");
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double e = std::exp(x.at(i, j) - mx);
      out.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < n; ++j) out.at(i, j) /= sum;
  }
  record_if_taping([x, out, m, n] {
    if (!x.wants_grad()) return;
    const std::vector<double>& gout = out.grad();
    std::vector<double>& gx = x.grad();
    for (int i = 0; i < m; ++i) {
      const size_t off = static_cast<size_t>(i) * n;
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += gout[off + j] * out.values()[off + j];
      for (int j = 0; j < n; ++j)
        gx[off + j] += out.values()[off + j] * (gout[off + j] - dot);
    }
  });
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const int m = x.rows(), n = x.cols();
  detail::check_shape(gain.rows() == 1 && gain.cols() == n && bias.rows() == 1 && bias.cols() == n,
                      "layer_norm: gain/bias must be 1x" + std::to_string(n));
  Tensor out = make_op_output(m, n);
  // Standardized rows and inverse stddevs are needed by the backward rule.
  auto xhat = std::make_shared<std::vector<double>>(static_cast<size_t>(m) * n);
  auto inv_std = std::make_shared<std::vector<double>>(m);
  for (int i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += x.at(i, j);
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d = x.at(i, j) - mean;
      var += d * d;
    }
    var /= n;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = is;
    for (int j = 0; j < n; ++j) {
      const double h = (x.at(i, j) - mean) * is;
      (*xhat)[static_cast<size_t>(i) * n + j] = h;
      out.at(i, j) = gain.at(0, j) * h + bias.at(0, j);
    }
  }
  record_if_taping([x, gain, bias, out, xhat, inv_std, m, n] {
    const std::vector<double>& gout = out.grad();
    if (gain.wants_grad()) {
      std::vector<double>& gg = gain.grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          gg[j] += gout[static_cast<size_t>(i) * n + j] * (*xhat)[static_cast<size_t>(i) * n + j];
    }
    if (bias.wants_grad()) {
      std::vector<double>& gb = bias.grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) gb[j] += gout[static_cast<size_t>(i) * n + j];
    }
    if (x.wants_grad()) {
      std::vector<double>& gx = x.grad();
      for (int i = 0; i < m; ++i) {
        const size_t off = static_cast<size_t>(i) * n;
        double mean_dh = 0.0, mean_dh_h = 0.0;
        for (int j = 0; j < n; ++j) {
          const double dh = gout[off + j] * gain.at(0, j);
          mean_dh += dh;
          mean_dh_h += dh * (*xhat)[off + j];
        }
        mean_dh /= n;
        mean_dh_h /= n;
        for (int j = 0; j < n; ++j) {
          const double dh = gout[off + j] * gain.at(0, j);
          gx[off + j] += ((dh - mean_dh - (*xhat)[off + j] * mean_dh_h) * (*inv_std)[i]);
        }
      }
    }
  });
  return out;
}

Tensor scaled_dot_attention(const Tensor& queries, const Tensor& keys, const Tensor& values) {
  detail::check_contract(keys.rows() >= 1, "attention requires at least one key");
  detail::check_shape(queries.cols() == keys.cols(), "attention: query/key width mismatch");
  detail::check_shape(keys.rows() == values.rows(), "attention: key/value count mismatch");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(queries.cols()));
  Tensor scores = scale(matmul_nt(queries, keys), inv_sqrt_d);
  Tensor weights = softmax_rows(scores);
  return matmul(weights, values);
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_row_broadcast(matmul(x, w), b);
}

Tensor mlp_forward(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                   const Tensor& b2, Activation act) {
  Tensor h = affine(x, w1, b1);
  h = act == Activation::relu ? relu(h) : gelu(h);
  return affine(h, w2, b2);
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  detail::check_shape(pred.same_shape(target), "mse_loss: shape mismatch");
  const size_t n = pred.values().size();
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = pred.values()[i] - target.values()[i];
    acc += d * d;
  }
  Tensor out = make_op_output(1, 1);
  out.values()[0] = acc / static_cast<double>(n);
  record_if_taping([pred, target, out, n] {
    const double seed = out.grad()[0];
    const double c = 2.0 / static_cast<double>(n);
    if (pred.wants_grad()) {
      std::vector<double>& gp = pred.grad();
      for (size_t i = 0; i < n; ++i)
        gp[i] += seed * c * (pred.values()[i] - target.values()[i]);
    }
    if (target.wants_grad()) {
      std::vector<double>& gt = target.grad();
      for (size_t i = 0; i < n; ++i)
        gt[i] -= seed * c * (pred.values()[i] - target.values()[i]);
    }
  });
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  detail::check_shape(!parts.empty(), "concat_rows: no parts");
  const int n = parts[0].cols();
  int m = 0;
  for (const Tensor& p : parts) {
    detail::check_shape(p.cols() == n, "concat_rows: column mismatch");
    m += p.rows();
  }
  Tensor out = make_op_output(m, n);
  int r = 0;
  for (const Tensor& p : parts) {
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < n; ++j) out.at(r + i, j) = p.at(i, j);
    r += p.rows();
  }
  record_if_taping([parts, out, n] {
    const std::vector<double>& gout = out.grad();
    size_t off = 0;
    for (const Tensor& p : parts) {
      const size_t sz = p.values().size();
      if (p.wants_grad()) {
        std::vector<double>& gp = p.grad();
        for (size_t i = 0; i < sz; ++i) gp[i] += gout[off + i];
      }
      off += sz;
    }
  });
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  detail::check_shape(!parts.empty(), "concat_cols: no parts");
  const int m = parts[0].rows();
  int n = 0;
  for (const Tensor& p : parts) {
    detail::check_shape(p.rows() == m, "concat_cols: row mismatch");
    n += p.cols();
  }
  Tensor out = make_op_output(m, n);
  int c0 = 0;
  for (const Tensor& p : parts) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < p.cols(); ++j) out.at(i, c0 + j) = p.at(i, j);
    c0 += p.cols();
  }
  record_if_taping([parts, out, m, n] {
    const std::vector<double>& gout = out.grad();
    int c0 = 0;
    for (const Tensor& p : parts) {
      if (p.wants_grad()) {
        std::vector<double>& gp = p.grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < p.cols(); ++j)
            gp[static_cast<size_t>(i) * p.cols() + j] += gout[static_cast<size_t>(i) * n + c0 + j];
      }
      c0 += p.cols();
    }
  });
  return out;
}

Tensor take_row(const Tensor& x, int row) {
  detail::check_shape(row >= 0 && row < x.rows(), "take_row: index out of range");
  const int n = x.cols();
  Tensor out = make_op_output(1, n);
  for (int j = 0; j < n; ++j) out.at(0, j) = x.at(row, j);
  record_if_taping([x, out, row, n] {
    if (!x.wants_grad()) return;
    const std::vector<double>& gout = out.grad();
    std::vector<double>& gx = x.grad();
    for (int j = 0; j < n; ++j) gx[static_cast<size_t>(row) * n + j] += gout[j];
  });
  return out;
}

Tensor row_scale(const Tensor& x, const std::vector<double>& factors) {
  detail::check_shape(static_cast<int>(factors.size()) == x.rows(),
                      "row_scale: one factor per row required");
  const int m = x.rows(), n = x.cols();
  Tensor out = make_op_output(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = x.at(i, j) * factors[static_cast<size_t>(i)];
  record_if_taping([x, out, factors, m, n] {
    if (!x.wants_grad()) return;
    const std::vector<double>& gout = out.grad();
    std::vector<double>& gx = x.grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        gx[static_cast<size_t>(i) * n + j] += gout[static_cast<size_t>(i) * n + j] * factors[static_cast<size_t>(i)];
  });
  return out;
}

Tensor mean_scalars(const std::vector<Tensor>& scalars) {
  detail::check_shape(!scalars.empty(), "mean_scalars: empty input");
  double acc = 0.0;
  for (const Tensor& s : scalars) {
    detail::check_shape(s.rows() == 1 && s.cols() == 1, "mean_scalars: non-scalar input");
    acc += s.values()[0];
  }
  const double inv = 1.0 / static_cast<double>(scalars.size());
  Tensor out = make_op_output(1, 1);
  out.values()[0] = acc * inv;
  record_if_taping([scalars, out, inv] {
    const double seed = out.grad()[0] * inv;
    for (const Tensor& s : scalars)
      if (s.wants_grad()) s.grad()[0] += seed;
  });
  return out;
}

}  // namespace edp
