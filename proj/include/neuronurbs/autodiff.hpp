#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace nnrb::ad {

// Trainable parameter: a dense matrix with an accumulated gradient.
struct Tensor {
  std::size_t rows = 0, cols = 0;
  std::vector<double> value;
  std::vector<double> grad;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), value(r * c, 0.0), grad(r * c, 0.0) {}
  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

// Reverse-mode tape over dense row-major matrices. Every op appends a
// node with a backward closure; backward() replays them in reverse.
class Tape {
 public:
  using Id = int;

  Id leaf(Tensor &param);
  Id constant(std::size_t rows, std::size_t cols, std::vector<double> values);

  Id matmul(Id a, Id b);
  Id add(Id a, Id b);                 // same shape
  Id sub(Id a, Id b);
  Id add_rowvec(Id a, Id row);        // row is (1, cols), broadcast over rows
  Id mul(Id a, Id b);                 // elementwise
  Id mul_rowvec(Id a, Id row);
  Id scale(Id a, double s);
  Id shift(Id a, double s);           // elementwise + s
  Id gelu(Id a);
  Id tanh_(Id a);
  Id exp_(Id a);
  Id transpose(Id a);
  Id slice_cols(Id a, std::size_t start, std::size_t len);
  Id concat_cols(const std::vector<Id> &parts);
  Id layer_norm_rows(Id a);           // per-row (x - mean) / sqrt(var + eps)
  Id softmax_rows(Id a, const std::vector<char> &key_mask);  // masked cols get 0
  Id mean_rows(Id a, const std::vector<char> &row_mask);     // (1, cols)
  Id sum(Id a);                       // scalar (1,1)
  // scalar sum of weight[i] * (a[i] - target[i])^2
  Id weighted_sse(Id a, const std::vector<double> &target,
                  const std::vector<double> &weight);

  void backward(Id root);

  const std::vector<double> &val(Id id) const { return nodes_[id].val; }
  std::size_t rows(Id id) const { return nodes_[id].rows; }
  std::size_t cols(Id id) const { return nodes_[id].cols; }
  double scalar(Id id) const { return nodes_[id].val[0]; }

 private:
  struct Node {
    std::size_t rows, cols;
    std::vector<double> val;
    std::vector<double> grad;
    std::function<void()> back;
  };

  Id push(std::size_t rows, std::size_t cols) {
    nodes_.push_back(Node{rows, cols, std::vector<double>(rows * cols, 0.0),
                          std::vector<double>(rows * cols, 0.0), nullptr});
    return static_cast<Id>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

}  // namespace nnrb::ad
