#pragma once

#include "steklov/geometry.hpp"
#include "steklov/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace steklov {

using SparseMatrix = Eigen::SparseMatrix<double>;

Eigen::Matrix3d element_stiffness(const Vec2& a, const Vec2& b, const Vec2& c);
Eigen::Matrix3d element_mass(const Vec2& a, const Vec2& b, const Vec2& c);
Eigen::Matrix2d edge_mass(double length);

struct AssembledForms {
  // Node-indexed matrices of the whole mesh.
  SparseMatrix stiffness;
  SparseMatrix domain_mass;
  SparseMatrix boundary_mass;
  bool include_domain_mass = false;
  // Steklov dofs (b), remaining free dofs (i) and eliminated Dirichlet nodes.
  std::vector<int> boundary_dofs;
  std::vector<int> interior_dofs;
  std::vector<int> dirichlet_nodes;
  std::vector<Vec2> boundary_points;
  std::size_t node_count = 0;

  // Bilinear form of the interior problem: A, or A + M_X.
  SparseMatrix operator_matrix() const;
};

AssembledForms assemble(const Mesh& mesh, bool include_domain_mass);

struct SchurFactor;

struct DtnMatrix {
  Eigen::MatrixXd S;
  Eigen::MatrixXd Mb;
  std::vector<int> nodes;
  std::vector<Vec2> points;
  std::shared_ptr<const SchurFactor> factor;

  /// Extension of boundary data (columns) to full nodal vectors solving the
  /// interior equations, zero on Dirichlet nodes.
  Eigen::MatrixXd extend(const Eigen::MatrixXd& boundary_values) const;
};

DtnMatrix schur_dtn(const AssembledForms& forms);

struct Spectrum {
  Eigen::VectorXd eigenvalues;
  // Boundary traces, one per column, Mb-orthonormal.
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd residuals;
  std::vector<int> nodes;
  std::vector<double> positions;
  std::string domain;
  double h_max = 0.0;
  std::optional<double> truncation_radius;
  double s_norm = 0.0;

  Eigen::Index size() const { return eigenvalues.size(); }
};

/// The `count` smallest eigenpairs of S v = lambda Mb v.
Spectrum solve_gevp(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Mb, Eigen::Index count);

struct SpectrumOptions {
  double grading = 0.3;
  // Interior size cap relative to h_max; the cap is also limited by a quarter
  // of the domain diameter.
  double far_factor = 20.0;
  std::size_t max_nodes = 2'000'000;
};

Spectrum steklov_spectrum(const PolygonalDomain& domain, double h_max, Eigen::Index count,
                          const SpectrumOptions& options = {});

/// Number of eigenvalues of (S, Mb) below sigma by the inertia of S - sigma Mb.
Eigen::Index count_below(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Mb, double sigma);

/// Richardson extrapolation of values at h and h/2 with convergence order p.
double richardson(double coarse, double fine, double order);

void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum);

}  // namespace steklov
