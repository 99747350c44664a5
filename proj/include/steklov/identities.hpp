#pragma once

#include "steklov/geometry.hpp"
#include "steklov/io.hpp"
#include "steklov/sector.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace steklov {

struct FieldSample {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
};

using Field = std::function<FieldSample(const Vec2&)>;

enum class SolutionSymmetry { symmetric, antisymmetric, none };
std::string to_string(SolutionSymmetry s);

// c * exp(-<a, x>) with |a| = 1.
struct ExpTerm {
  double amplitude = 1.0;
  Vec2 direction = Vec2(1.0, 0.0);
};

// c * K0(|x - x0|) with the source x0 outside the closed sector.
struct SourceTerm {
  double amplitude = 1.0;
  Vec2 source = Vec2::Zero();
};

/// Closed-form decaying solution of (Delta + 1) w = 0 on the infinite sector
/// of opening alpha.
struct ManufacturedSolution {
  std::string id;
  double alpha = 0.0;
  SolutionSymmetry symmetry = SolutionSymmetry::none;
  std::vector<ExpTerm> exp_terms;
  std::vector<SourceTerm> sources;
  // Exponential decay rate of w along every ray of the sector.
  double decay = 1.0;
  // Largest source distance from the vertex.
  double reach = 0.0;

  double value(const Vec2& x) const;
  Vec2 gradient(const Vec2& x) const;
  Eigen::Matrix2d hessian(const Vec2& x) const;
  FieldSample sample(const Vec2& x) const;
  /// Angular derivative w_theta = x1 w_x2 - x2 w_x1, itself a solution.
  FieldSample theta_sample(const Vec2& x) const;
  /// (Delta + 1) w with the positive Laplacian.
  double operator_residual(const Vec2& x) const;

  Field field() const;
  Field theta_field() const;
};

ManufacturedSolution manufactured_solution(std::vector<ExpTerm> terms, double alpha, SolutionSymmetry tag,
                                           std::string id = "");
ManufacturedSolution source_solution(std::vector<SourceTerm> sources, double alpha, SolutionSymmetry tag,
                                     std::string id = "");

/// exp(-<a, x>) +- exp(-<a', x>) with a at angle phi and a' its mirror image.
ManufacturedSolution exponential_pair(double alpha, double phi, SolutionSymmetry tag, std::string id = "");
/// K0 sources at polar (radius, +-angle) with equal or opposite amplitudes.
ManufacturedSolution source_pair(double alpha, double radius, double angle, SolutionSymmetry tag,
                                 std::string id = "");

struct QuadratureSpec {
  // Radial truncation; nonpositive picks it from the decay rate.
  double radius = 0.0;
  int points = 20;
  int theta_panels = 8;
  double tail_target = 1e-16;
};

double quadrature_radius(const ManufacturedSolution& w, const QuadratureSpec& spec);

enum class IdentityId {
  multiplier_x1,
  multiplier_normal,
  bisector_antisymmetric,
  bisector_symmetric,
  rotation_antisymmetric,
  rotation_symmetric,
};
std::string to_string(IdentityId id);
IdentityId identity_from_string(const std::string& s);

struct IdentityResidual {
  IdentityId id = IdentityId::multiplier_x1;
  double residual = 0.0;
  double scale = 0.0;
  std::vector<double> terms;
};

/// Boundary identity arranged as a sum of terms equal to zero; the residual
/// is |sum| / max |term|. The multiplier identities use the constant field
/// `ell` (default e1, or the inner normal of the upper ray for
/// multiplier_normal) on the full sector; the others live on the upper half.
IdentityResidual rellich_residual(const ManufacturedSolution& w, IdentityId id, const QuadratureSpec& spec = {},
                                  std::optional<Vec2> ell = std::nullopt);

struct FluxProfile {
  std::vector<double> beta;
  std::vector<double> values;
  double scale = 0.0;
  // max |I(beta) - I(0)| / scale.
  double deviation = 0.0;
  // Slab integrals over [b1, b2] divided by b2 - b1, against I(0).
  std::vector<std::pair<double, double>> slabs;
  std::vector<double> slab_ratios;
  double slab_deviation = 0.0;
};

FluxProfile theta_flux_profile(const ManufacturedSolution& w, const std::vector<double>& beta_grid,
                               const QuadratureSpec& spec = {});

struct EnergyDefect {
  double defect = 0.0;
  double norm = 0.0;
  double error_bar = 0.0;
};

/// ||grad w||^2 - ||w||^2 over the infinite sector.
EnergyDefect energy_defect(const ManufacturedSolution& w, const QuadratureSpec& spec = {});

/// Same quantity for the finite element extension of boundary data g(s) on a
/// symmetry class of the truncated sector; the error bar compares two mesh
/// levels.
EnergyDefect energy_defect_fe(double alpha, Symmetry cls, const std::function<double(double)>& data,
                              double radius = 20.0, double h_near = 0.05);

struct ConvexityProfile {
  std::vector<double> beta;
  std::vector<double> values;
  std::vector<double> second_differences;
  double min_second_difference = 0.0;
  double scale = 0.0;
  bool convex = false;
  std::size_t argmin = 0;
  bool minimum_at_zero = false;
};

/// Integral of f^2 / r over the slab beta - sigma <= theta <= beta + sigma,
/// with f = w or f = w_theta. When f does not vanish at the vertex the
/// integral is taken up to a beta-independent constant (f(0)^2 e^-r / r is
/// subtracted).
ConvexityProfile beta_convexity_profile(const ManufacturedSolution& w, double sigma,
                                        const std::vector<double>& beta_grid, bool use_theta_derivative = false,
                                        const QuadratureSpec& spec = {});

struct EigenEquality {
  double alpha = 0.0;
  bool applicable = false;
  std::vector<double> tau;
  // |(||grad w||^2 - ||w||^2)| / ||w||^2 per discrete eigenpair.
  std::vector<double> ratios;
  // Cross form for pairs with equal eigenvalues.
  std::vector<double> cross_ratios;
  double ratio = 0.0;
};

EigenEquality check_eigen_equality(double alpha, double tol = 1e-4, const SectorSpectrumOptions& options = {});

/// Defect ratios of the lowest antisymmetric states of the truncated sector.
std::vector<std::pair<double, double>> antisymmetric_defects(double alpha, double radius = 20.0,
                                                             Eigen::Index count = 5);

std::vector<ManufacturedSolution> identity_battery();

struct SuiteEntry {
  std::string identity_id;
  double alpha = 0.0;
  std::string solution_id;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

std::vector<SuiteEntry> verify_identities(const QuadratureSpec& spec = {}, double tolerance = 1e-8);

struct EnergyCase {
  double alpha = 0.0;
  std::string solution_id;
  SolutionSymmetry symmetry = SolutionSymmetry::none;
  EnergyDefect defect;
  // Whether the sign of the defect is a proven claim for this case.
  bool sign_asserted = false;
};

std::vector<EnergyCase> energy_battery(const std::vector<double>& alphas, const QuadratureSpec& spec = {});

Json suite_to_json(const std::vector<SuiteEntry>& entries);

}  // namespace steklov
