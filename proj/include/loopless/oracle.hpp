#ifndef LOOPLESS_ORACLE_HPP
#define LOOPLESS_ORACLE_HPP

#include <cstddef>
#include <memory>
#include <string_view>

#include "loopless/dataset.hpp"

namespace loopless {

enum class LossKind { logistic, ridge };

std::string_view to_string(LossKind kind) noexcept;
LossKind loss_kind_from_string(std::string_view name);

/// Finite-sum objective f(x) = (1/n) sum_i f_i(x) where every f_i carries the
/// regulariser (mu/2)||x||^2:
///
///   logistic  f_i(x) = log(1 + exp(-b_i a_i^T x)) + (mu/2)||x||^2
///   ridge     f_i(x) = (1/2)(a_i^T x - b_i)^2     + (mu/2)||x||^2
///
/// The oracle is immutable; every member is a pure function of its inputs.
class Oracle {
 public:
  Oracle(std::shared_ptr<const Dataset> data, LossKind kind, double mu);
  Oracle(Dataset data, LossKind kind, double mu);

  const Dataset& dataset() const noexcept { return *data_; }
  LossKind kind() const noexcept { return kind_; }
  std::size_t n() const noexcept { return data_->n(); }
  std::size_t dim() const noexcept { return data_->dim(); }
  double mu() const noexcept { return mu_; }

  /// Upper bound on the smoothness constant of every f_i:
  /// (1/4) max ||a_i||^2 + mu for logistic, max ||a_i||^2 + mu for ridge.
  double smoothness() const noexcept { return smoothness_; }
  double condition_number() const noexcept { return smoothness_ / mu_; }

  double loss_i(std::size_t i, const Vector& x) const;
  double value(const Vector& x) const;

  Vector grad_i(std::size_t i, const Vector& x) const;
  /// out = grad f_i(x); `out` is resized as needed.
  void grad_i(std::size_t i, const Vector& x, Vector& out) const;
  /// Mean of the per-sample gradients. Counts as n oracle calls.
  Vector full_grad(const Vector& x) const;

  /// d/dt of the data term of f_i at margin t = a_i^T x.
  double margin_derivative(std::size_t i, double margin) const;

 private:
  void check_index(std::size_t i) const;
  void check_point(const Vector& x) const;

  std::shared_ptr<const Dataset> data_;
  LossKind kind_;
  double mu_;
  double smoothness_;
};

/// log(1 + e^t) without overflow.
double softplus(double t) noexcept;
/// 1 / (1 + e^-t) without overflow.
double sigmoid(double t) noexcept;

}  // namespace loopless

#endif
