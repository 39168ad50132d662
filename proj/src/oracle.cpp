#include "loopless/oracle.hpp"

#include <cmath>
#include <string>

#include "loopless/errors.hpp"

namespace loopless {

std::string_view to_string(LossKind kind) noexcept {
  return kind == LossKind::logistic ? "logistic" : "ridge";
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "logistic") return LossKind::logistic;
  if (name == "ridge") return LossKind::ridge;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

double softplus(double t) noexcept { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double sigmoid(double t) noexcept {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

Oracle::Oracle(std::shared_ptr<const Dataset> data, LossKind kind, double mu)
    : data_(std::move(data)), kind_(kind), mu_(mu) {
  if (!data_) throw ConfigError("oracle: null dataset");
  if (!(mu_ > 0.0) || !std::isfinite(mu_)) throw ConfigError("oracle: mu must be positive and finite");
  const double curvature = kind_ == LossKind::logistic ? 0.25 : 1.0;
  smoothness_ = curvature * data_->max_row_squared_norm() + mu_;
}

Oracle::Oracle(Dataset data, LossKind kind, double mu)
    : Oracle(std::make_shared<const Dataset>(std::move(data)), kind, mu) {}

void Oracle::check_index(std::size_t i) const {
  if (i >= n()) throw std::out_of_range("oracle: sample index " + std::to_string(i) + " out of range");
}

void Oracle::check_point(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim())
    throw DimensionError("oracle: point has dimension " + std::to_string(x.size()) + ", expected " +
                         std::to_string(dim()));
}

double Oracle::margin_derivative(std::size_t i, double margin) const {
  const double b = data_->label(i);
  if (kind_ == LossKind::logistic) return -b * sigmoid(-b * margin);
  return margin - b;
}

double Oracle::loss_i(std::size_t i, const Vector& x) const {
  check_index(i);
  check_point(x);
  const double margin = data_->row(i).dot(x);
  const double b = data_->label(i);
  const double data_term = kind_ == LossKind::logistic ? softplus(-b * margin) : 0.5 * (margin - b) * (margin - b);
  return data_term + 0.5 * mu_ * x.squaredNorm();
}

double Oracle::value(const Vector& x) const {
  check_point(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < n(); ++i) {
    const double margin = data_->row(i).dot(x);
    const double b = data_->label(i);
    acc += kind_ == LossKind::logistic ? softplus(-b * margin) : 0.5 * (margin - b) * (margin - b);
  }
  return acc / static_cast<double>(n()) + 0.5 * mu_ * x.squaredNorm();
}

void Oracle::grad_i(std::size_t i, const Vector& x, Vector& out) const {
  check_index(i);
  check_point(x);
  const auto& row = data_->row(i);
  const double scale = margin_derivative(i, row.dot(x));
  out = mu_ * x;
  row.axpy(scale, out);
}

Vector Oracle::grad_i(std::size_t i, const Vector& x) const {
  Vector out;
  grad_i(i, x, out);
  return out;
}

Vector Oracle::full_grad(const Vector& x) const {
  check_point(x);
  Vector acc = Vector::Zero(x.size());
  for (std::size_t i = 0; i < n(); ++i) {
    const auto& row = data_->row(i);
    row.axpy(margin_derivative(i, row.dot(x)), acc);
  }
  // (1/n) * sum + mu x; with n == 1 this is bitwise grad_i(0, x).
  acc *= 1.0 / static_cast<double>(n());
  acc += mu_ * x;
  return acc;
}

}  // namespace loopless
