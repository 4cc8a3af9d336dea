#include "edp/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace edp {

void ParamSet::add(const std::string& name, const Tensor& t) {
  if (find(name) != nullptr)
    throw std::invalid_argument("edp: duplicate parameter name: " + name);
  entries_.push_back({name, t});
}

void ParamSet::merge(const std::string& prefix, const ParamSet& other) {
  for (const Entry& e : other.entries_) add(prefix + "." + e.name, e.tensor);
}

std::vector<Tensor> ParamSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(e.tensor);
  return out;
}

const Tensor* ParamSet::find(const std::string& name) const {
  for (const Entry& e : entries_)
    if (e.name == name) return &e.tensor;
  return nullptr;
}

size_t ParamSet::num_scalars() const {
  size_t n = 0;
  for (const Entry& e : entries_) n += e.tensor.values().size();
  return n;
}

double ParamSet::grad_norm() const {
  double acc = 0.0;
  for (const Entry& e : entries_)
    for (double g : e.tensor.grad()) acc += g * g;
  return std::sqrt(acc);
}

void ParamSet::zero_grads() const {
  for (const Entry& e : entries_) e.tensor.zero_grad();
}

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    m_.emplace_back(p.values().size(), 0.0);
    v_.emplace_back(p.values().size(), 0.0);
  }
}

void AdamW::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    std::vector<double>& val = params_[pi].values();
    const std::vector<double>& grad = params_[pi].grad();
    std::vector<double>& m = m_[pi];
    std::vector<double>& v = v_[pi];
    for (size_t i = 0; i < val.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * grad[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      val[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * val[i]);
    }
  }
}

void AdamW::zero_grads() const {
  for (const Tensor& p : params_) p.zero_grad();
}

Ema::Ema(std::vector<Tensor> params, double rate) : params_(std::move(params)), rate_(rate) {
  if (!(rate > 0.0 && rate < 1.0))
    throw std::invalid_argument("edp: EMA rate must lie in (0, 1)");
  shadow_.reserve(params_.size());
  for (const Tensor& p : params_) shadow_.push_back(p.values());
}

void Ema::update() {
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    const std::vector<double>& val = params_[pi].values();
    std::vector<double>& s = shadow_[pi];
    for (size_t i = 0; i < s.size(); ++i) s[i] = rate_ * s[i] + (1.0 - rate_) * val[i];
  }
}

void Ema::copy_to_params() {
  for (size_t pi = 0; pi < params_.size(); ++pi) params_[pi].values() = shadow_[pi];
}

}  // namespace edp
