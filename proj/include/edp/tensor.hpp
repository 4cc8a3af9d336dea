#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace edp {

class Rng;

// 2-D row-major array of doubles paired with a same-shape gradient
// accumulator. Scalars are 1x1 and row vectors 1xN; nothing in this
// project needs more than two axes.
//
// Tensor is a cheap shared handle: copies alias the same storage. Ops in
// ops.hpp never mutate their inputs; only the optimizer writes parameter
// values in place, between tape lifetimes.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, bool requires_grad = false);

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor full(int rows, int cols, double value);
  static Tensor scalar(double value);
  static Tensor row(const std::vector<double>& values, bool requires_grad = false);
  static Tensor from_rows(const std::vector<std::vector<double>>& rows,
                          bool requires_grad = false);
  static Tensor uniform_init(int rows, int cols, double bound, Rng& rng,
                             bool requires_grad = true);

  bool defined() const { return d_ != nullptr; }
  int rows() const { return d_->rows; }
  int cols() const { return d_->cols; }
  int size() const { return d_->rows * d_->cols; }
  bool same_shape(const Tensor& other) const {
    return rows() == other.rows() && cols() == other.cols();
  }

  double at(int r, int c) const { return d_->val[static_cast<size_t>(r) * d_->cols + c]; }
  double& at(int r, int c) { return d_->val[static_cast<size_t>(r) * d_->cols + c]; }
  double item() const;  // requires 1x1

  std::vector<double>& values() { return d_->val; }
  const std::vector<double>& values() const { return d_->val; }

  // Gradient accumulator, allocated (zeroed) on first access.
  std::vector<double>& grad() const;
  void zero_grad() const;

  bool requires_grad() const { return d_->requires_grad; }
  // Leaf = created directly rather than produced by an op. Backward only
  // accumulates into non-leaves (chain) and into leaves that require grad.
  bool is_leaf() const { return d_->is_leaf; }
  bool wants_grad() const { return d_->requires_grad || !d_->is_leaf; }

  // Value copy with no graph history and no gradient demand.
  Tensor detach() const;

  std::string shape_str() const;

 private:
  struct Data {
    int rows = 0;
    int cols = 0;
    std::vector<double> val;
    mutable std::vector<double> grad;
    bool requires_grad = false;
    bool is_leaf = true;
  };
  std::shared_ptr<Data> d_;

  friend class Tape;
  friend Tensor make_op_output(int rows, int cols);
};

// Marks a tensor as op output (participates in backward chaining).
Tensor make_op_output(int rows, int cols);

// Reverse-mode tape. Constructing a Tape makes it the active recorder for
// the current thread; ops append backward rules while one is active and
// compute plain forward values otherwise. Destruction restores the
// previously active tape, so scopes nest.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  void record(std::function<void()> backward);
  size_t num_records() const { return records_.size(); }

  // Seeds d(root)/d(root) = 1 and replays recorded rules in exact reverse
  // execution order, accumulating into gradients. root must be scalar.
  void backward(const Tensor& root);

 private:
  std::vector<std::function<void()>> records_;
  Tape* prev_ = nullptr;
};

// Temporarily disables recording within a scope (forward-only region).
class NoTapeGuard {
 public:
  NoTapeGuard();
  ~NoTapeGuard();
  NoTapeGuard(const NoTapeGuard&) = delete;
  NoTapeGuard& operator=(const NoTapeGuard&) = delete;

 private:
  Tape* saved_;
};

namespace detail {
[[noreturn]] void fail_shape(const std::string& what);
void check_shape(bool ok, const std::string& what);
void check_contract(bool ok, const std::string& what);
}  // namespace detail

}  // namespace edp
