#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edp/tensor.hpp"

namespace edp {

// Ordered registry of named parameter tensors. Modules register their
// tensors once; the optimizer, EMA, gradient checker, and checkpoint code
// all walk the same list.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
  };

  void add(const std::string& name, const Tensor& t);
  void merge(const std::string& prefix, const ParamSet& other);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;
  const Tensor* find(const std::string& name) const;

  size_t num_scalars() const;
  double grad_norm() const;
  void zero_grads() const;

 private:
  std::vector<Entry> entries_;
};

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// Decoupled weight decay Adam with bias correction.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWConfig cfg);

  void step();
  void zero_grads() const;
  int64_t step_count() const { return step_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamWConfig cfg_;
  int64_t step_ = 0;
};

// Exponential moving average of parameter values:
//   shadow <- rate * shadow + (1 - rate) * params
class Ema {
 public:
  Ema(std::vector<Tensor> params, double rate);

  void update();
  double rate() const { return rate_; }
  const std::vector<std::vector<double>>& shadow() const { return shadow_; }
  std::vector<std::vector<double>>& shadow() { return shadow_; }
  // Overwrites live parameter values with the shadow (for evaluation).
  void copy_to_params();

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> shadow_;
  double rate_;
};

}  // namespace edp
