#pragma once

#include <span>
#include <vector>

#include "wiggle/heterostructure.hpp"

namespace wiggle {

/// A bound state of the single-valley effective-mass equation.
/// psi is in nm^-1/2 with sum(psi^2) * spacing = 1 and psi > 0 at its largest magnitude.
struct EnvelopeSolution {
  std::vector<double> z;
  std::vector<double> psi;
  double energy = 0.0;  // eV
  int state_index = 0;
  double spacing = 0.0;

  std::vector<double> density() const;
};

/// Lowest `n_states` eigenpairs of -(hbar^2 / 2 m) d^2/dz^2 + V(z) with Dirichlet
/// walls just outside the grid. `mass` is in units of m0.
///
/// Throws DegenerateGrid for non-uniform grids and NotConfined when a requested
/// energy is not below the smaller of the two boundary potentials.
std::vector<EnvelopeSolution> solve_envelope(std::span<const double> z, std::span<const double> V,
                                             double mass, int n_states = 2,
                                             double hbar2_over_2m0 = kHbar2Over2M0);

std::vector<EnvelopeSolution> solve_envelope(const PotentialProfile& potential, double mass,
                                             int n_states = 2, double hbar2_over_2m0 = kHbar2Over2M0);

/// Uniform spacing of `z`, or DegenerateGrid.
double uniform_spacing(std::span<const double> z);

namespace tridiag {

/// Number of eigenvalues of the symmetric tridiagonal matrix (diag, constant
/// off-diagonal `off`) that are strictly below `shift`.
std::size_t sturm_count(std::span<const double> diag, double off, double shift);

/// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
double eigenvalue(std::span<const double> diag, double off, std::size_t k);

/// Unit eigenvector for an (accurate) eigenvalue by inverse iteration.
std::vector<double> eigenvector(std::span<const double> diag, double off, double eigenvalue);

}  // namespace tridiag

}  // namespace wiggle
