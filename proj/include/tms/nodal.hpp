#pragma once

// Dense nodal analysis for linear resistive networks.
//
// Elements are two-terminal conductances. Infinite conductances are ideal
// shorts and are collapsed into supernodes before the solve; fixed-voltage
// nodes (ground, sources) are eliminated as Dirichlet conditions. Free
// supernodes with no conductive path to any fixed node are floating: they
// carry no current and are reported at 0 V.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "tms/config.hpp"
#include "tms/errors.hpp"

namespace tms {

namespace detail {

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

struct NodalElement {
  std::size_t a;
  std::size_t b;
  double g;
};

class NodalSolution {
 public:
  NodalSolution(std::vector<double> voltages, std::vector<std::size_t> supernode,
                std::vector<bool> floating, std::vector<NodalElement> elements,
                std::vector<bool> fixed_super)
      : voltages_(std::move(voltages)),
        supernode_(std::move(supernode)),
        floating_(std::move(floating)),
        elements_(std::move(elements)),
        fixed_super_(std::move(fixed_super)) {}

  double voltage(std::size_t node) const { return voltages_.at(node); }
  bool floating(std::size_t node) const { return floating_.at(node); }
  bool same_supernode(std::size_t a, std::size_t b) const { return supernode_.at(a) == supernode_.at(b); }

  /// Current through a finite element, flowing from terminal a to terminal b.
  double element_current(std::size_t id) const {
    const auto& e = elements_.at(id);
    if (std::isinf(e.g)) throw DomainError("current through an ideal short is not determined");
    return e.g * (voltages_[e.a] - voltages_[e.b]);
  }

  /// Net current entering the supernode containing `node` through finite
  /// elements from outside it.
  double inflow(std::size_t node) const {
    const std::size_t s = supernode_.at(node);
    double total = 0.0;
    for (const auto& e : elements_) {
      if (std::isinf(e.g) || e.g == 0.0) continue;
      const bool in_a = supernode_[e.a] == s;
      const bool in_b = supernode_[e.b] == s;
      if (in_a == in_b) continue;
      const double i_ab = e.g * (voltages_[e.a] - voltages_[e.b]);
      total += in_b ? i_ab : -i_ab;
    }
    return total;
  }

  /// Sum of inflow over all fixed-voltage supernodes; zero by KCL.
  double fixed_inflow_balance() const {
    double total = 0.0, scale = 0.0;
    std::vector<bool> seen(supernode_.size(), false);
    for (std::size_t n = 0; n < supernode_.size(); ++n) {
      const std::size_t s = supernode_[n];
      if (!fixed_super_[s] || seen[s]) continue;
      seen[s] = true;
      const double f = inflow(n);
      total += f;
      scale += std::abs(f);
    }
    return scale == 0.0 ? 0.0 : total / scale;
  }

 private:
  std::vector<double> voltages_;
  std::vector<std::size_t> supernode_;
  std::vector<bool> floating_;
  std::vector<NodalElement> elements_;
  std::vector<bool> fixed_super_;
};

class ResistiveNetwork {
 public:
  ResistiveNetwork() {
    fixed_.push_back(0.0);  // node 0: ground
  }

  static constexpr std::size_t ground() { return 0; }

  std::size_t add_node() {
    fixed_.push_back(std::nullopt);
    return fixed_.size() - 1;
  }

  std::size_t add_fixed_node(double volts) {
    fixed_.push_back(volts);
    return fixed_.size() - 1;
  }

  std::size_t node_count() const { return fixed_.size(); }

  /// Adds a conductance between two nodes and returns its element id.
  std::size_t add_conductance(std::size_t a, std::size_t b, double g) {
    if (a >= fixed_.size() || b >= fixed_.size()) throw DimensionError("node index out of range");
    if (!(g >= 0.0) || std::isnan(g)) throw DomainError("conductance must be >= 0");
    elements_.push_back({a, b, g});
    return elements_.size() - 1;
  }

  /// Convenience: a resistance of 0 ohm is an ideal short.
  std::size_t add_resistance(std::size_t a, std::size_t b, double r) {
    if (!(r >= 0.0)) throw DomainError("resistance must be >= 0");
    return add_conductance(a, b, r == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / r);
  }

  NodalSolution solve(double residual_tol = 1e-12) const {
    const std::size_t n = fixed_.size();
    detail::DisjointSet shorts(n);
    for (const auto& e : elements_) {
      if (std::isinf(e.g)) shorts.unite(e.a, e.b);
    }

    std::vector<std::size_t> super(n);
    for (std::size_t i = 0; i < n; ++i) super[i] = shorts.find(i);

    std::vector<std::optional<double>> super_fixed(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!fixed_[i]) continue;
      auto& sv = super_fixed[super[i]];
      if (sv && *sv != *fixed_[i]) {
        throw SingularNetworkError("fixed-voltage nodes at " + format_double(*sv) + " V and " +
                                   format_double(*fixed_[i]) + " V are shorted together");
      }
      sv = *fixed_[i];
    }

    // Connectivity through finite, non-zero conductances.
    detail::DisjointSet comp(n);
    bool any_fixed_contact = false;
    for (const auto& e : elements_) {
      if (e.g == 0.0 || std::isinf(e.g)) continue;
      const auto sa = super[e.a], sb = super[e.b];
      if (sa == sb) continue;
      comp.unite(sa, sb);
      if (super_fixed[sa] || super_fixed[sb]) any_fixed_contact = true;
    }
    std::vector<bool> comp_grounded(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      if (super[i] == i && super_fixed[i]) comp_grounded[comp.find(i)] = true;
    }

    std::vector<long> index(n, -1);
    std::size_t unknowns = 0;
    std::size_t free_supers = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (super[i] != i || super_fixed[i]) continue;
      ++free_supers;
      if (comp_grounded[comp.find(i)]) index[i] = static_cast<long>(unknowns++);
    }
    if (free_supers > 0 && !any_fixed_contact) {
      throw SingularNetworkError("network has no conductive path to any fixed-voltage node");
    }

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(unknowns, unknowns);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
    for (const auto& e : elements_) {
      if (e.g == 0.0 || std::isinf(e.g)) continue;
      const auto sa = super[e.a], sb = super[e.b];
      if (sa == sb) continue;
      const long ia = index[sa], ib = index[sb];
      if (ia >= 0) G(ia, ia) += e.g;
      if (ib >= 0) G(ib, ib) += e.g;
      if (ia >= 0 && ib >= 0) {
        G(ia, ib) -= e.g;
        G(ib, ia) -= e.g;
      } else if (ia >= 0 && super_fixed[sb]) {
        rhs(ia) += e.g * *super_fixed[sb];
      } else if (ib >= 0 && super_fixed[sa]) {
        rhs(ib) += e.g * *super_fixed[sa];
      }
    }

    Eigen::VectorXd x = Eigen::VectorXd::Zero(unknowns);
    if (unknowns > 0) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
      if (!lu.isInvertible()) throw SingularNetworkError("nodal matrix is singular");
      x = lu.solve(rhs);
      const double res = (G * x - rhs).cwiseAbs().maxCoeff();
      const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
      if (!x.allFinite() || res > residual_tol * scale) {
        throw SingularNetworkError("nodal solve residual " + format_double(res) +
                                   " exceeds tolerance");
      }
    }

    std::vector<double> volts(n, 0.0);
    std::vector<bool> floating(n, false);
    std::vector<bool> fixed_super(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = super[i];
      if (super_fixed[s]) {
        volts[i] = *super_fixed[s];
        fixed_super[s] = true;
      } else if (index[s] >= 0) {
        volts[i] = x(index[s]);
      } else {
        floating[i] = true;
      }
    }
    return NodalSolution(std::move(volts), std::move(super), std::move(floating), elements_,
                         std::move(fixed_super));
  }

 private:
  std::vector<std::optional<double>> fixed_;
  std::vector<NodalElement> elements_;
};

}  // namespace tms
