#pragma once

#include "steklov/fem.hpp"
#include "steklov/geometry.hpp"
#include "steklov/sector.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace steklov {

struct FitWindow {
  double lo = 0.0;
  double hi = 0.0;
};

struct CountingData {
  std::vector<double> eigenvalues;
  std::string domain;
  // Trust window [lambda_lo, lambda_hi].
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  std::size_t boundary_dofs = 0;
};

/// Counting data of a computed spectrum. The trust window ends at the
/// eigenvalue of index (boundary dofs) / 5.
CountingData counting_data(const Spectrum& spectrum);
CountingData counting_data(std::vector<double> eigenvalues, double lambda_lo, double lambda_hi,
                           std::string domain = "");

/// #{k : lambda_k < lambda}.
long counting_function(const CountingData& data, double lambda);

/// (1/r) sum_k (lambda - lambda_k)_+^r.
double riesz_mean(const CountingData& data, double lambda, double r);

double unit_ball_volume(int d);
double kappa0(double boundary_measure, int d);
double kappa0(const PolygonalDomain& domain, int d = 1);

/// Window [lambda_0, lambda_k] with k = floor(boundary_dofs * fraction);
/// fraction may not exceed the trust fraction 1/5.
FitWindow resolution_window(const CountingData& data, double fraction);

struct WeylFit {
  int d = 1;
  double kappa0 = 0.0;
  // Two-term coefficient; `kappa1` is set only when the one-term residual
  // exceeds three times the two-term residual.
  double kappa1_raw = 0.0;
  std::optional<double> kappa1;
  double residual_one = 0.0;
  double residual_two = 0.0;
  FitWindow window;
  std::size_t samples = 0;
  double condition = 0.0;
};

/// Least squares fit of N at midpoints between consecutive eigenvalues in the
/// window against lambda^d and lambda^(d-1). Without a window the trust
/// window of the data is used.
WeylFit fit_weyl(const CountingData& data, int d, std::optional<FitWindow> window = std::nullopt);

enum class EdgeMode { relative, literal };
std::string to_string(EdgeMode m);
EdgeMode edge_mode_from_string(const std::string& s);

struct EdgeParams {
  double lambda_max = 5.0;
  double s_max = 5.0;
  double radius = 20.0;
  double h_near = 0.04;
  int d = 1;
};

struct EdgeVariant {
  std::string name;
  EdgeParams params;
  double value = 0.0;
  double change = 0.0;
  bool resolved = true;
};

struct EdgeDiagnostics {
  // Base value followed by the value with lambda_max, s_max, R doubled one at
  // a time and all together.
  std::vector<EdgeVariant> variants;
  double max_change = 0.0;
  bool converged = false;
  bool resolved = true;
  // Literal mode: growth of the s-integral between s_max and 2 s_max
  // relative to the integral up to s_max.
  double s_growth = 0.0;
  bool s_integrand_nondecaying = false;
};

struct EdgeCoefficientResult {
  double alpha = 0.0;
  double value = 0.0;
  EdgeMode mode = EdgeMode::relative;
  EdgeParams params;
  EdgeDiagnostics diagnostics;
  bool converged = false;
};

/// Edge coefficient integral over lambda in (1, lambda_max] and |s| <= s_max
/// of lambda^-d times the kernel difference, evaluated exactly on the
/// truncated spectra. Relative mode subtracts the alpha = pi kernel, literal
/// mode subtracts (lambda - 1) / pi.
double edge_integral(const KernelBasis& basis, const KernelBasis* reference, double lambda_max, double s_max,
                     int d, EdgeMode mode);

EdgeCoefficientResult edge_coefficient(double alpha, const EdgeParams& params = {},
                                       EdgeMode mode = EdgeMode::relative);

using EdgeTable = std::vector<std::pair<double, double>>;

/// Corner sum of the edge coefficient; straight edges contribute nothing.
double kappa1_from_corners(const PolygonalDomain& domain, const EdgeTable& table);

void write_counting_csv(std::ostream& os, const CountingData& data, const std::vector<double>& lambda_grid);

}  // namespace steklov
