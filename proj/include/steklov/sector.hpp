#pragma once

#include "steklov/fem.hpp"
#include "steklov/geometry.hpp"
#include "steklov/mesh.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace steklov {

constexpr double kEssentialThreshold = 1.0;

struct SectorMeshParams {
  double h_near = 0.05;
  double grading = 0.25;
  // Interior size cap; nonpositive means radius / 4.
  double h_far = 0.0;
  // Growth of the ray size with distance from the apex. Zero keeps the ray
  // uniform, which the kernel computations need.
  double ray_grading = 0.02;
  std::size_t max_nodes = 2'000'000;
};

struct SectorSystem {
  Mesh mesh;
  AssembledForms forms;
  DtnMatrix dtn;
  // Chart coordinate of each DtN dof, and the dof order sorted by it.
  std::vector<double> s;
  std::vector<int> order;
};

std::shared_ptr<SectorSystem> sector_system(double alpha, Symmetry symmetry, double radius,
                                            const SectorMeshParams& params = {});

/// One truncated solve of the (Delta + 1) DtN problem on a sector or one of
/// its symmetry halves. Traces are sorted by chart coordinate s.
struct SectorSolve {
  double alpha = 0.0;
  Symmetry symmetry = Symmetry::symmetric;
  double radius = 0.0;
  SectorMeshParams params;
  Eigen::VectorXd tau;
  Eigen::MatrixXd traces;
  std::vector<double> s;
  Eigen::MatrixXd Mb;
  std::shared_ptr<const SectorSystem> system;

  /// Trace of eigenvector k at chart coordinate x (linear interpolation, zero
  /// outside the computed range).
  double trace_at(Eigen::Index k, double x) const;
  /// Integral of the squared trace over chart coordinates [a, b].
  double trace_mass(Eigen::Index k, double a, double b) const;
  /// Full nodal vector of the extension of eigenvector k into the sector.
  Eigen::VectorXd extension(Eigen::Index k) const;
};

SectorSolve solve_sector(double alpha, Symmetry symmetry, double radius, const SectorMeshParams& params = {});

enum class SectorLabel { discrete, continuum, unverified_embedded };
std::string to_string(SectorLabel l);

struct SectorEigen {
  Eigen::Index k = 0;
  Symmetry cls = Symmetry::symmetric;
  double tau = 0.0;
  SectorLabel label = SectorLabel::continuum;
  double radius = 0.0;
  bool stable = false;
};

struct SectorSpectrumResult {
  double alpha = 0.0;
  Symmetry symmetry = Symmetry::symmetric;
  double tol = 0.0;
  double threshold = kEssentialThreshold;
  double radius_final = 0.0;
  std::vector<double> radii_tried;
  std::vector<SectorEigen> eigen;
  // Converged solves per class (one for a symmetry class, two for full).
  std::vector<SectorSolve> solves;

  std::vector<double> discrete() const;
};

struct SectorSpectrumOptions {
  SectorMeshParams mesh;
  // Continuum-range eigenvalues are exported up to this value.
  double export_max = 3.0;
  double radius_cap = 1e4;
  // Optional starting radius; otherwise the default policy.
  std::optional<double> initial_radius;
};

double initial_truncation_radius(double alpha);

SectorSpectrumResult sector_spectrum(double alpha, Symmetry symmetry, double tol,
                                     const SectorSpectrumOptions& options = {});

double bottom_eigenvalue(double alpha, double tol = 1e-4, const SectorSpectrumOptions& options = {});

int count_discrete(double alpha, double tol, const SectorSpectrumOptions& options = {});

struct MonotonicityPoint {
  double alpha = 0.0;
  std::optional<double> bottom;
};

std::vector<MonotonicityPoint> eigenvalue_monotonicity_profile(const std::vector<double>& alpha_grid,
                                                               Symmetry symmetry, double tol = 1e-4,
                                                               const SectorSpectrumOptions& options = {});

/// Robin wedge eigenvalue corresponding to a DtN eigenvalue tau.
double robin_map(double tau, double gamma);

enum class KernelMode { raw, relative };

/// Both symmetry-class solves of one sector at fixed truncation, the data
/// the diagonal spectral kernel is built from.
struct KernelBasis {
  double alpha = 0.0;
  double radius = 0.0;
  double h_near = 0.0;
  SectorSolve sym;
  SectorSolve asym;
};

KernelBasis kernel_basis(double alpha, double radius, double h_near);

/// Diagonal kernel e(s, s, lambda) on the full sector chart, rows indexed by
/// lambda, columns by s.
Eigen::MatrixXd spectral_kernel(const KernelBasis& basis, const std::vector<double>& lambda_grid,
                                const std::vector<double>& s_grid);
Eigen::MatrixXd spectral_kernel(const KernelBasis& basis, const KernelBasis& reference,
                                const std::vector<double>& lambda_grid, const std::vector<double>& s_grid,
                                KernelMode mode);
Eigen::MatrixXd spectral_kernel(double alpha, const std::vector<double>& lambda_grid,
                                const std::vector<double>& s_grid, KernelMode mode, double radius = 40.0,
                                double h_near = 0.05);

void write_sector_csv(std::ostream& os, const SectorSpectrumResult& result);

}  // namespace steklov
