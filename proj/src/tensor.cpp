#include "edp/tensor.hpp"

#include <sstream>
#include <stdexcept>

#include "edp/rng.hpp"

namespace edp {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tensor::Tensor(int rows, int cols, bool requires_grad) {
  detail::check_shape(rows > 0 && cols > 0, "tensor extents must be positive");
  d_ = std::make_shared<Data>();
  d_->rows = rows;
  d_->cols = cols;
  d_->val.assign(static_cast<size_t>(rows) * cols, 0.0);
  d_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
  return Tensor(rows, cols, requires_grad);
}

Tensor Tensor::full(int rows, int cols, double value) {
  Tensor t(rows, cols);
  for (double& v : t.d_->val) v = value;
  return t;
}

Tensor Tensor::scalar(double value) {
  Tensor t(1, 1);
  t.d_->val[0] = value;
  return t;
}

Tensor Tensor::row(const std::vector<double>& values, bool requires_grad) {
  detail::check_shape(!values.empty(), "row tensor needs at least one entry");
  Tensor t(1, static_cast<int>(values.size()), requires_grad);
  t.d_->val = values;
  return t;
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows, bool requires_grad) {
  detail::check_shape(!rows.empty() && !rows[0].empty(), "from_rows needs a non-empty matrix");
  const size_t cols = rows[0].size();
  Tensor t(static_cast<int>(rows.size()), static_cast<int>(cols), requires_grad);
  for (size_t r = 0; r < rows.size(); ++r) {
    detail::check_shape(rows[r].size() == cols, "from_rows: ragged rows");
    for (size_t c = 0; c < cols; ++c) t.d_->val[r * cols + c] = rows[r][c];
  }
  return t;
}

Tensor Tensor::uniform_init(int rows, int cols, double bound, Rng& rng, bool requires_grad) {
  Tensor t(rows, cols, requires_grad);
  for (double& v : t.d_->val) v = rng.uniform(-bound, bound);
  return t;
}

double Tensor::item() const {
  detail::check_shape(rows() == 1 && cols() == 1, "item() requires a 1x1 tensor");
  return d_->val[0];
}

std::vector<double>& Tensor::grad() const {
  if (d_->grad.size() != d_->val.size()) d_->grad.assign(d_->val.size(), 0.0);
  return d_->grad;
}

void Tensor::zero_grad() const {
  d_->grad.assign(d_->val.size(), 0.0);
}

Tensor Tensor::detach() const {
  Tensor t(rows(), cols());
  t.d_->val = d_->val;
  return t;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  if (!defined()) {
    os << "(undefined)";
  } else {
    os << rows() << "x" << cols();
  }
  return os.str();
}

Tensor make_op_output(int rows, int cols) {
  Tensor t(rows, cols);
  t.d_->is_leaf = false;
  return t;
}

Tape::Tape() : prev_(g_active_tape) {
  g_active_tape = this;
}

Tape::~Tape() {
  g_active_tape = prev_;
}

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::function<void()> backward) {
  records_.push_back(std::move(backward));
}

void Tape::backward(const Tensor& root) {
  detail::check_shape(root.rows() == 1 && root.cols() == 1,
                      "backward root must be a scalar");
  root.grad()[0] += 1.0;
  for (size_t i = records_.size(); i-- > 0;) records_[i]();
}

NoTapeGuard::NoTapeGuard() : saved_(g_active_tape) { g_active_tape = nullptr; }
NoTapeGuard::~NoTapeGuard() { g_active_tape = saved_; }

namespace detail {

void fail_shape(const std::string& what) {
  throw std::invalid_argument("edp: " + what);
}

void check_shape(bool ok, const std::string& what) {
  if (!ok) fail_shape(what);
}

void check_contract(bool ok, const std::string& what) {
  if (!ok) throw std::logic_error("edp: contract violation: " + what);
}

}  // namespace detail

}  // namespace edp
