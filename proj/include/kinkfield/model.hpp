#pragma once

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "kinkfield/tensor.hpp"

namespace kinkfield {

enum class Boundary { OBC, PBC, TPBC };

inline std::string to_string(Boundary b) {
  switch (b) {
    case Boundary::OBC: return "OBC";
    case Boundary::PBC: return "PBC";
    case Boundary::TPBC: return "TPBC";
  }
  return "?";
}

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "OBC" || s == "obc") return Boundary::OBC;
  if (s == "PBC" || s == "pbc") return Boundary::PBC;
  if (s == "TPBC" || s == "tpbc") return Boundary::TPBC;
  throw ArgumentError("unknown boundary condition: " + s);
}

/// Lattice phi^4 theory in lattice units: couplings, chain length, local
/// oscillator truncation d = n_max + 1 and boundary condition. Twisted
/// periodic boundaries select the one-kink (Q = 1) sector.
struct ModelSpec {
  double mu0_sq = 1.0;   // bare mass squared, may be negative
  double lambda0 = 0.0;  // bare quartic coupling, >= 0
  int L = 2;
  int d = 2;
  Boundary boundary = Boundary::PBC;

  int topological_charge() const { return boundary == Boundary::TPBC ? 1 : 0; }

  /// Classical vacuum expectation value sqrt(-6 mu0^2 / lambda0); zero in the
  /// symmetric phase or for the free theory.
  double classical_vev() const {
    if (mu0_sq >= 0.0 || lambda0 <= 0.0) return 0.0;
    return std::sqrt(-6.0 * mu0_sq / lambda0);
  }
};

/// Non-fatal truncation diagnostics: a large expected |<phi>| needs a large
/// oscillator basis to hold the displaced state.
inline std::vector<std::string> truncation_warnings(const ModelSpec& spec) {
  std::vector<std::string> warnings;
  const double v = spec.classical_vev();
  if (v > 0.0) {
    // coherent state at <phi> = v occupies <n> = v^2/2; keep a few sigma of headroom
    const double occ = 0.5 * v * v;
    const double needed = occ + 3.0 * std::sqrt(occ + 1.0) + 2.0;
    if (static_cast<double>(spec.d) < needed) {
      warnings.push_back("local dimension d=" + std::to_string(spec.d) +
                         " is small for classical vev v=" + std::to_string(v) +
                         " (want d >~ " + std::to_string(needed) + ")");
    }
  }
  return warnings;
}

/// Checks the spec invariants; prints truncation warnings to stderr.
inline ModelSpec validate(const ModelSpec& spec) {
  if (spec.d < 2) throw ValidationError("ModelSpec: d must be >= 2");
  if (spec.L < 2) throw ValidationError("ModelSpec: L must be >= 2");
  if (spec.lambda0 < 0.0) throw ValidationError("ModelSpec: lambda0 must be >= 0");
  if (!std::isfinite(spec.mu0_sq) || !std::isfinite(spec.lambda0))
    throw ValidationError("ModelSpec: non-finite couplings");
  for (const auto& w : truncation_warnings(spec))
    std::cerr << "[kinkfield] warning: " << w << "\n";
  return spec;
}

enum class OpKind { a, a_dag, number, phi, phi_sq, phi_4, pi_sq, h_onsite, identity };

inline std::string to_string(OpKind k) {
  switch (k) {
    case OpKind::a: return "a";
    case OpKind::a_dag: return "a_dag";
    case OpKind::number: return "number";
    case OpKind::phi: return "phi";
    case OpKind::phi_sq: return "phi_sq";
    case OpKind::phi_4: return "phi_4";
    case OpKind::pi_sq: return "pi_sq";
    case OpKind::h_onsite: return "h_onsite";
    case OpKind::identity: return "identity";
  }
  return "?";
}

/// A local operator in the truncated number basis.
struct LocalOperator {
  OpKind kind = OpKind::identity;
  MatrixXd matrix;  // d x d, symmetric for all observable kinds
};

namespace detail {

inline MatrixXd symmetrized(const MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

inline MatrixXd annihilator(int d) {
  MatrixXd a = MatrixXd::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

}  // namespace detail

/// Truncated d x d matrix for the requested operator. Composite operators are
/// products of the truncated primitives, so the Hamiltonian acts within the
/// truncated space exactly as represented. h_onsite needs couplings; use the
/// ModelSpec overload.
inline LocalOperator local_operator(OpKind kind, int d) {
  if (d < 2) throw ArgumentError("local_operator: d must be >= 2");
  const MatrixXd a = detail::annihilator(d);
  const MatrixXd ad = a.transpose();
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  LocalOperator op;
  op.kind = kind;
  switch (kind) {
    case OpKind::a:
      op.matrix = a;
      break;
    case OpKind::a_dag:
      op.matrix = ad;
      break;
    case OpKind::number:
      op.matrix = detail::symmetrized(ad * a);
      break;
    case OpKind::phi:
      op.matrix = detail::symmetrized(inv_sqrt2 * (a + ad));
      break;
    case OpKind::phi_sq: {
      MatrixXd phi = inv_sqrt2 * (a + ad);
      op.matrix = detail::symmetrized(phi * phi);
      break;
    }
    case OpKind::phi_4: {
      MatrixXd phi = inv_sqrt2 * (a + ad);
      MatrixXd phi2 = phi * phi;
      op.matrix = detail::symmetrized(phi2 * phi2);
      break;
    }
    case OpKind::pi_sq: {
      // pi = i (a_dag - a)/sqrt(2), so pi^2 = -(a_dag - a)^2 / 2 is real
      MatrixXd dop = ad - a;
      op.matrix = detail::symmetrized(-0.5 * (dop * dop));
      break;
    }
    case OpKind::identity:
      op.matrix = MatrixXd::Identity(d, d);
      break;
    case OpKind::h_onsite:
      throw ArgumentError("local_operator: h_onsite needs a ModelSpec (couplings)");
  }
  return op;
}

/// On-site Hamiltonian term h_x = pi^2/2 + (2 + mu0^2)/2 phi^2 + lambda0/4! phi^4.
/// The phi^2 prefactor absorbs the on-site part of the gradient bond.
inline LocalOperator local_operator(OpKind kind, const ModelSpec& spec) {
  if (kind != OpKind::h_onsite) return local_operator(kind, spec.d);
  LocalOperator op;
  op.kind = OpKind::h_onsite;
  op.matrix = detail::symmetrized(
      0.5 * local_operator(OpKind::pi_sq, spec.d).matrix +
      0.5 * (2.0 + spec.mu0_sq) * local_operator(OpKind::phi_sq, spec.d).matrix +
      (spec.lambda0 / 24.0) * local_operator(OpKind::phi_4, spec.d).matrix);
  return op;
}

}  // namespace kinkfield
