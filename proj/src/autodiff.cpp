#include "neuronurbs/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace nnrb::ad {

namespace {
constexpr double kLnEps = 1e-5;
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

Tape::Id Tape::leaf(Tensor &param) {
  Id id = push(param.rows, param.cols);
  nodes_[id].val = param.value;
  Tensor *p = &param;
  nodes_[id].back = [this, id, p] {
    for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += nodes_[id].grad[i];
  };
  return id;
}

Tape::Id Tape::constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols) throw std::invalid_argument("ad: constant shape mismatch");
  Id id = push(rows, cols);
  nodes_[id].val = std::move(values);
  return id;
}

Tape::Id Tape::matmul(Id a, Id b) {
  if (nodes_[a].cols != nodes_[b].rows)
    throw std::invalid_argument("ad: matmul shape mismatch");
  const std::size_t r = nodes_[a].rows, k = nodes_[a].cols, c = nodes_[b].cols;
  Id id = push(r, c);  // push may reallocate: re-reference operands after it
  const Node &A = nodes_[a], &B = nodes_[b];
  Node &C = nodes_[id];
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      double av = A.val[i * k + l];
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < c; ++j) C.val[i * c + j] += av * B.val[l * c + j];
    }
  nodes_[id].back = [this, id, a, b, r, k, c] {
    const auto &g = nodes_[id].grad;
    auto &ga = nodes_[a].grad;
    auto &gb = nodes_[b].grad;
    const auto &av = nodes_[a].val;
    const auto &bv = nodes_[b].val;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        double gv = g[i * c + j];
        if (gv == 0.0) continue;
        for (std::size_t l = 0; l < k; ++l) {
          ga[i * k + l] += gv * bv[l * c + j];
          gb[l * c + j] += av[i * k + l] * gv;
        }
      }
  };
  return id;
}

Tape::Id Tape::add(Id a, Id b) {
  if (nodes_[a].rows != nodes_[b].rows || nodes_[a].cols != nodes_[b].cols)
    throw std::invalid_argument("ad: add shape mismatch");
  Id id = push(nodes_[a].rows, nodes_[a].cols);
  const Node &A = nodes_[a], &B = nodes_[b];
  for (std::size_t i = 0; i < A.val.size(); ++i) nodes_[id].val[i] = A.val[i] + B.val[i];
  nodes_[id].back = [this, id, a, b] {
    for (std::size_t i = 0; i < nodes_[id].grad.size(); ++i) {
      nodes_[a].grad[i] += nodes_[id].grad[i];
      nodes_[b].grad[i] += nodes_[id].grad[i];
    }
  };
  return id;
}

Tape::Id Tape::sub(Id a, Id b) { return add(a, scale(b, -1.0)); }

Tape::Id Tape::add_rowvec(Id a, Id row) {
  if (nodes_[row].rows != 1 || nodes_[row].cols != nodes_[a].cols)
    throw std::invalid_argument("ad: add_rowvec shape");
  Id id = push(nodes_[a].rows, nodes_[a].cols);
  const Node &A = nodes_[a], &R = nodes_[row];
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j)
      nodes_[id].val[i * A.cols + j] = A.val[i * A.cols + j] + R.val[j];
  nodes_[id].back = [this, id, a, row] {
    const std::size_t rr = nodes_[a].rows, cc = nodes_[a].cols;
    for (std::size_t i = 0; i < rr; ++i)
      for (std::size_t j = 0; j < cc; ++j) {
        nodes_[a].grad[i * cc + j] += nodes_[id].grad[i * cc + j];
        nodes_[row].grad[j] += nodes_[id].grad[i * cc + j];
      }
  };
  return id;
}

Tape::Id Tape::mul(Id a, Id b) {
  if (nodes_[a].rows != nodes_[b].rows || nodes_[a].cols != nodes_[b].cols)
    throw std::invalid_argument("ad: mul shape mismatch");
  Id id = push(nodes_[a].rows, nodes_[a].cols);
  const Node &A = nodes_[a], &B = nodes_[b];
  for (std::size_t i = 0; i < A.val.size(); ++i) nodes_[id].val[i] = A.val[i] * B.val[i];
  nodes_[id].back = [this, id, a, b] {
    for (std::size_t i = 0; i < nodes_[id].grad.size(); ++i) {
      nodes_[a].grad[i] += nodes_[id].grad[i] * nodes_[b].val[i];
      nodes_[b].grad[i] += nodes_[id].grad[i] * nodes_[a].val[i];
    }
  };
  return id;
}

Tape::Id Tape::mul_rowvec(Id a, Id row) {
  if (nodes_[row].rows != 1 || nodes_[row].cols != nodes_[a].cols)
    throw std::invalid_argument("ad: mul_rowvec shape");
  Id id = push(nodes_[a].rows, nodes_[a].cols);
  const Node &A = nodes_[a], &R = nodes_[row];
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j)
      nodes_[id].val[i * A.cols + j] = A.val[i * A.cols + j] * R.val[j];
  nodes_[id].back = [this, id, a, row] {
    const std::size_t rr = nodes_[a].rows, cc = nodes_[a].cols;
    for (std::size_t i = 0; i < rr; ++i)
      for (std::size_t j = 0; j < cc; ++j) {
        double g = nodes_[id].grad[i * cc + j];
        nodes_[a].grad[i * cc + j] += g * nodes_[row].val[j];
        nodes_[row].grad[j] += g * nodes_[a].val[i * cc + j];
      }
  };
  return id;
}

Tape::Id Tape::scale(Id a, double s) {
  Id id = push(nodes_[a].rows, nodes_[a].cols);
  for (std::size_t i = 0; i < nodes_[a].val.size(); ++i) nodes_[id].val[i] = nodes_[a].val[i] * s;
  nodes_[id].back = [this, id, a, s] {
    for (std::size_t i = 0; i < nodes_[id].grad.size(); ++i)
      nodes_[a].grad[i] += nodes_[id].grad[i] * s;
  };
  return id;
}

Tape::Id Tape::shift(Id a, double s) {
  Id id = push(nodes_[a].rows, nodes_[a].cols);
  for (std::size_t i = 0; i < nodes_[a].val.size(); ++i) nodes_[id].val[i] = nodes_[a].val[i] + s;
  nodes_[id].back = [this, id, a] {
    for (std::size_t i = 0; i < nodes_[id].grad.size(); ++i)
      nodes_[a].grad[i] += nodes_[id].grad[i];
  };
  return id;
}

Tape::Id Tape::gelu(Id a) {
  Id id = push(nodes_[a].rows, nodes_[a].cols);
  for (std::size_t i = 0; i < nodes_[a].val.size(); ++i) {
    double x = nodes_[a].val[i];
    nodes_[id].val[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
  nodes_[id].back = [this, id, a] {
    for (std::size_t i = 0; i < nodes_[id].grad.size(); ++i) {
      double x = nodes_[a].val[i];
      double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      nodes_[a].grad[i] += nodes_[id].grad[i] * (cdf + x * pdf);
    }
  };
  return id;
}

Tape::Id Tape::tanh_(Id a) {
  Id id = push(nodes_[a].rows, nodes_[a].cols);
  for (std::size_t i = 0; i < nodes_[a].val.size(); ++i)
    nodes_[id].val[i] = std::tanh(nodes_[a].val[i]);
  nodes_[id].back = [this, id, a] {
    for (std::size_t i = 0; i < nodes_[id].grad.size(); ++i) {
      double y = nodes_[id].val[i];
      nodes_[a].grad[i] += nodes_[id].grad[i] * (1.0 - y * y);
    }
  };
  return id;
}

Tape::Id Tape::exp_(Id a) {
  Id id = push(nodes_[a].rows, nodes_[a].cols);
  for (std::size_t i = 0; i < nodes_[a].val.size(); ++i)
    nodes_[id].val[i] = std::exp(nodes_[a].val[i]);
  nodes_[id].back = [this, id, a] {
    for (std::size_t i = 0; i < nodes_[id].grad.size(); ++i)
      nodes_[a].grad[i] += nodes_[id].grad[i] * nodes_[id].val[i];
  };
  return id;
}

Tape::Id Tape::transpose(Id a) {
  const std::size_t r = nodes_[a].rows, c = nodes_[a].cols;
  Id id = push(c, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) nodes_[id].val[j * r + i] = nodes_[a].val[i * c + j];
  nodes_[id].back = [this, id, a, r, c] {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        nodes_[a].grad[i * c + j] += nodes_[id].grad[j * r + i];
  };
  return id;
}

Tape::Id Tape::slice_cols(Id a, std::size_t start, std::size_t len) {
  const std::size_t r = nodes_[a].rows, c = nodes_[a].cols;
  if (start + len > c) throw std::invalid_argument("ad: slice_cols out of range");
  Id id = push(r, len);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < len; ++j)
      nodes_[id].val[i * len + j] = nodes_[a].val[i * c + start + j];
  nodes_[id].back = [this, id, a, start, len, r, c] {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < len; ++j)
        nodes_[a].grad[i * c + start + j] += nodes_[id].grad[i * len + j];
  };
  return id;
}

Tape::Id Tape::concat_cols(const std::vector<Id> &parts) {
  if (parts.empty()) throw std::invalid_argument("ad: concat of nothing");
  const std::size_t r = nodes_[parts[0]].rows;
  std::size_t c = 0;
  for (Id p : parts) {
    if (nodes_[p].rows != r) throw std::invalid_argument("ad: concat row mismatch");
    c += nodes_[p].cols;
  }
  Id id = push(r, c);
  std::size_t off = 0;
  for (Id p : parts) {
    const std::size_t pc = nodes_[p].cols;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < pc; ++j)
        nodes_[id].val[i * c + off + j] = nodes_[p].val[i * pc + j];
    off += pc;
  }
  std::vector<Id> ps = parts;
  nodes_[id].back = [this, id, ps, r, c] {
    std::size_t off2 = 0;
    for (Id p : ps) {
      const std::size_t pc = nodes_[p].cols;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < pc; ++j)
          nodes_[p].grad[i * pc + j] += nodes_[id].grad[i * c + off2 + j];
      off2 += pc;
    }
  };
  return id;
}

Tape::Id Tape::layer_norm_rows(Id a) {
  const std::size_t r = nodes_[a].rows, c = nodes_[a].cols;
  Id id = push(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += nodes_[a].val[i * c + j];
    mean /= double(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      double d = nodes_[a].val[i * c + j] - mean;
      var += d * d;
    }
    var /= double(c);
    double inv = 1.0 / std::sqrt(var + kLnEps);
    for (std::size_t j = 0; j < c; ++j)
      nodes_[id].val[i * c + j] = (nodes_[a].val[i * c + j] - mean) * inv;
  }
  nodes_[id].back = [this, id, a, r, c] {
    for (std::size_t i = 0; i < r; ++i) {
      double mean = 0.0;
      for (std::size_t j = 0; j < c; ++j) mean += nodes_[a].val[i * c + j];
      mean /= double(c);
      double var = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        double d = nodes_[a].val[i * c + j] - mean;
        var += d * d;
      }
      var /= double(c);
      double inv = 1.0 / std::sqrt(var + kLnEps);
      double gsum = 0.0, gysum = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        gsum += nodes_[id].grad[i * c + j];
        gysum += nodes_[id].grad[i * c + j] * nodes_[id].val[i * c + j];
      }
      for (std::size_t j = 0; j < c; ++j) {
        double y = nodes_[id].val[i * c + j];
        nodes_[a].grad[i * c + j] +=
            inv * (nodes_[id].grad[i * c + j] - gsum / double(c) - y * gysum / double(c));
      }
    }
  };
  return id;
}

Tape::Id Tape::softmax_rows(Id a, const std::vector<char> &key_mask) {
  const std::size_t r = nodes_[a].rows, c = nodes_[a].cols;
  if (key_mask.size() != c) throw std::invalid_argument("ad: softmax mask size");
  Id id = push(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -1e300;
    for (std::size_t j = 0; j < c; ++j)
      if (key_mask[j] && nodes_[a].val[i * c + j] > mx) mx = nodes_[a].val[i * c + j];
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      if (key_mask[j]) denom += std::exp(nodes_[a].val[i * c + j] - mx);
    for (std::size_t j = 0; j < c; ++j)
      nodes_[id].val[i * c + j] =
          key_mask[j] ? std::exp(nodes_[a].val[i * c + j] - mx) / denom : 0.0;
  }
  std::vector<char> km = key_mask;
  nodes_[id].back = [this, id, a, km, r, c] {
    for (std::size_t i = 0; i < r; ++i) {
      double dotp = 0.0;
      for (std::size_t j = 0; j < c; ++j)
        dotp += nodes_[id].grad[i * c + j] * nodes_[id].val[i * c + j];
      for (std::size_t j = 0; j < c; ++j)
        if (km[j])
          nodes_[a].grad[i * c + j] +=
              nodes_[id].val[i * c + j] * (nodes_[id].grad[i * c + j] - dotp);
    }
  };
  return id;
}

Tape::Id Tape::mean_rows(Id a, const std::vector<char> &row_mask) {
  const std::size_t r = nodes_[a].rows, c = nodes_[a].cols;
  if (row_mask.size() != r) throw std::invalid_argument("ad: mean_rows mask size");
  std::size_t count = 0;
  for (char m : row_mask) count += m ? 1 : 0;
  if (count == 0) throw std::invalid_argument("ad: all rows masked out");
  Id id = push(1, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (!row_mask[i]) continue;
    for (std::size_t j = 0; j < c; ++j) nodes_[id].val[j] += nodes_[a].val[i * c + j];
  }
  for (std::size_t j = 0; j < c; ++j) nodes_[id].val[j] /= double(count);
  std::vector<char> rm = row_mask;
  nodes_[id].back = [this, id, a, rm, r, c, count] {
    for (std::size_t i = 0; i < r; ++i) {
      if (!rm[i]) continue;
      for (std::size_t j = 0; j < c; ++j)
        nodes_[a].grad[i * c + j] += nodes_[id].grad[j] / double(count);
    }
  };
  return id;
}

Tape::Id Tape::sum(Id a) {
  Id id = push(1, 1);
  double s = 0.0;
  for (double v : nodes_[a].val) s += v;
  nodes_[id].val[0] = s;
  nodes_[id].back = [this, id, a] {
    for (std::size_t i = 0; i < nodes_[a].grad.size(); ++i)
      nodes_[a].grad[i] += nodes_[id].grad[0];
  };
  return id;
}

Tape::Id Tape::weighted_sse(Id a, const std::vector<double> &target,
                            const std::vector<double> &weight) {
  if (target.size() != nodes_[a].val.size() || weight.size() != nodes_[a].val.size())
    throw std::invalid_argument("ad: sse size mismatch");
  Id id = push(1, 1);
  const Node &A = nodes_[a];
  double s = 0.0;
  for (std::size_t i = 0; i < A.val.size(); ++i) {
    double d = A.val[i] - target[i];
    s += weight[i] * d * d;
  }
  nodes_[id].val[0] = s;
  std::vector<double> t = target, w = weight;
  nodes_[id].back = [this, id, a, t, w] {
    double g = nodes_[id].grad[0];
    for (std::size_t i = 0; i < nodes_[a].val.size(); ++i)
      nodes_[a].grad[i] += g * 2.0 * w[i] * (nodes_[a].val[i] - t[i]);
  };
  return id;
}

void Tape::backward(Id root) {
  if (nodes_[root].val.size() != 1) throw std::invalid_argument("ad: backward needs scalar root");
  nodes_[root].grad[0] = 1.0;
  for (Id i = root; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back();
}

}  // namespace nnrb::ad
