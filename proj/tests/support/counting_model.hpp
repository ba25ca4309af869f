#pragma once

#include <atomic>

#include "dpminv/models.hpp"

namespace testsupport {

// Wraps a model and counts evaluate() calls; used to assert the multistep
// solver's cache discipline.
class CountingModel final : public dpminv::DataPredictionModel {
 public:
  explicit CountingModel(const dpminv::DataPredictionModel& inner) : inner_(&inner) {}

  dpminv::Vec evaluate(const dpminv::Vec& x, double t) const override {
    ++evaluations_;
    return inner_->evaluate(x, t);
  }
  bool has_vjp() const override { return inner_->has_vjp(); }
  dpminv::Vec vjp(const dpminv::Vec& x, double t, const dpminv::Vec& u) const override {
    return inner_->vjp(x, t, u);
  }
  std::optional<double> lipschitz_bound(double t) const override {
    return inner_->lipschitz_bound(t);
  }

  int evaluations() const { return evaluations_.load(); }
  void reset() { evaluations_.store(0); }

 private:
  const dpminv::DataPredictionModel* inner_;
  mutable std::atomic<int> evaluations_{0};
};

}  // namespace testsupport
