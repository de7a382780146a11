#pragma once

// Functional models of the analog softmax chain (exponential, summation and
// division blocks) and the ReLU stage.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "tms/config.hpp"
#include "tms/errors.hpp"

namespace tms {

struct SoftmaxParams {
  double r_f = 1e5;     // ohm
  double i_s = 1e-9;    // A
  double v_t = 0.026;   // V, room-temperature thermal voltage
  double r_sum = 1e5;   // ohm, summing-amp input resistor

  double unit() const { return r_f * i_s; }

  void validate() const {
    if (!(r_f > 0.0 && i_s > 0.0 && v_t > 0.0 && r_sum > 0.0)) {
      throw DomainError("softmax parameters must all be > 0");
    }
  }

  static SoftmaxParams from_config(const FlatConfig& cfg) {
    SoftmaxParams p;
    p.r_f = cfg.get("softmax.r_f", p.r_f);
    p.i_s = cfg.get("softmax.i_s", p.i_s);
    p.v_t = cfg.get("softmax.v_t", p.v_t);
    p.r_sum = cfg.get("softmax.r_sum", p.r_sum);
    p.validate();
    return p;
  }

  void write_to(FlatConfig& cfg) const {
    cfg.set("softmax.r_f", r_f);
    cfg.set("softmax.i_s", i_s);
    cfg.set("softmax.v_t", v_t);
    cfg.set("softmax.r_sum", r_sum);
  }
};

inline constexpr double kMaxExpArgument = 700.0;

/// x = r_f i_s exp(a / v_t)
inline double exp_block(double a, const SoftmaxParams& p) {
  p.validate();
  if (!std::isfinite(a)) throw DomainError("exp_block input must be finite");
  const double arg = a / p.v_t;
  if (arg > kMaxExpArgument) {
    throw RangeError("exp_block input " + format_double(a) + " V overflows (a/v_t = " + format_double(arg) + ")");
  }
  return p.unit() * std::exp(arg);
}

/// x_tot = (r_f / r_sum) sum x_z
inline double summation_block(const Eigen::VectorXd& x, const SoftmaxParams& p) {
  p.validate();
  if (x.size() == 0) throw DomainError("summation_block needs at least one input");
  return (p.r_f / p.r_sum) * x.sum();
}

/// y = r_f i_s (v1 / v2)
inline double division_block(double v1, double v2, const SoftmaxParams& p) {
  p.validate();
  if (!(v2 > 0.0)) throw DomainError("division_block denominator must be > 0, got " + format_double(v2));
  return p.unit() * (v1 / v2);
}

/// Per-channel r_f i_s exp(a_z/v_t) / sum exp(a_i/v_t) through the three
/// blocks. The common maximum is subtracted first; the ratio is unchanged.
/// The summing stage is taken at unity gain here so the divider sees the
/// plain sum; r_sum only scales the standalone summation block.
inline Eigen::VectorXd softmax_circuit(const Eigen::VectorXd& a, const SoftmaxParams& p) {
  p.validate();
  if (a.size() < 2) throw DimensionError("softmax_circuit needs at least two channels");
  if (!a.allFinite()) throw DomainError("softmax_circuit inputs must be finite");
  const double shift = a.maxCoeff();
  Eigen::VectorXd x(a.size());
  for (Eigen::Index z = 0; z < a.size(); ++z) x(z) = exp_block(a(z) - shift, p);
  SoftmaxParams unity = p;
  unity.r_sum = p.r_f;
  const double total = summation_block(x, unity);
  Eigen::VectorXd y(a.size());
  for (Eigen::Index z = 0; z < a.size(); ++z) y(z) = division_block(x(z), total, p);
  return y;
}

inline double relu(double x) { return std::max(0.0, x); }

inline Eigen::VectorXd relu(const Eigen::VectorXd& x) { return x.cwiseMax(0.0); }

}  // namespace tms
