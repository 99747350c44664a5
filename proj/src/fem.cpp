#include "steklov/fem.hpp"

#include "steklov/errors.hpp"
#include "steklov/io.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace steklov {

Eigen::Matrix3d element_stiffness(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double area2 = cross2(b - a, c - a);
  if (!(std::abs(area2) > 0.0)) throw AssemblyError("degenerate triangle");
  // Rotated edge vectors opposite each vertex give the gradients.
  Eigen::Matrix<double, 3, 2> g;
  const Vec2 e0 = c - b, e1 = a - c, e2 = b - a;
  g.row(0) << -e0.y(), e0.x();
  g.row(1) << -e1.y(), e1.x();
  g.row(2) << -e2.y(), e2.x();
  return g * g.transpose() / (2.0 * std::abs(area2));
}

Eigen::Matrix3d element_mass(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double area = 0.5 * std::abs(cross2(b - a, c - a));
  if (!(area > 0.0)) throw AssemblyError("degenerate triangle");
  Eigen::Matrix3d m;
  m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  return m * (area / 12.0);
}

Eigen::Matrix2d edge_mass(double length) {
  Eigen::Matrix2d m;
  m << 2, 1, 1, 2;
  return m * (length / 6.0);
}

SparseMatrix AssembledForms::operator_matrix() const {
  if (include_domain_mass) return stiffness + domain_mass;
  return stiffness;
}

AssembledForms assemble(const Mesh& mesh, bool include_domain_mass) {
  AssembledForms f;
  const auto n = static_cast<Eigen::Index>(mesh.nodes.size());
  f.node_count = mesh.nodes.size();
  f.include_domain_mass = include_domain_mass;
  std::vector<Eigen::Triplet<double>> ta, tm, tb;
  ta.reserve(9 * mesh.triangles.size());
  if (include_domain_mass) tm.reserve(9 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& v = mesh.triangles[t];
    const Vec2 &a = mesh.nodes[v[0]], &b = mesh.nodes[v[1]], &c = mesh.nodes[v[2]];
    const double area2 = cross2(b - a, c - a);
    const double scale = std::max({(b - a).squaredNorm(), (c - a).squaredNorm(), (c - b).squaredNorm()});
    if (!(area2 > 1e-14 * scale)) {
      std::ostringstream os;
      os << "degenerate or inverted triangle " << t;
      throw AssemblyError(os.str());
    }
    const Eigen::Matrix3d k = element_stiffness(a, b, c);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) ta.emplace_back(v[i], v[j], k(i, j));
    if (include_domain_mass) {
      const Eigen::Matrix3d m = element_mass(a, b, c);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) tm.emplace_back(v[i], v[j], m(i, j));
    }
  }
  std::vector<char> dirichlet(mesh.nodes.size(), 0), steklov(mesh.nodes.size(), 0);
  for (const auto& e : mesh.boundary_edges) {
    if (e.marker == EdgeMarker::bisector_dirichlet || e.marker == EdgeMarker::artificial_dirichlet) {
      dirichlet[e.nodes[0]] = dirichlet[e.nodes[1]] = 1;
    } else if (e.marker == EdgeMarker::steklov) {
      steklov[e.nodes[0]] = steklov[e.nodes[1]] = 1;
      const Eigen::Matrix2d m = edge_mass((mesh.nodes[e.nodes[1]] - mesh.nodes[e.nodes[0]]).norm());
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) tb.emplace_back(e.nodes[i], e.nodes[j], m(i, j));
    }
  }
  f.stiffness.resize(n, n);
  f.stiffness.setFromTriplets(ta.begin(), ta.end());
  f.domain_mass.resize(n, n);
  f.domain_mass.setFromTriplets(tm.begin(), tm.end());
  f.boundary_mass.resize(n, n);
  f.boundary_mass.setFromTriplets(tb.begin(), tb.end());
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    if (dirichlet[i])
      f.dirichlet_nodes.push_back(static_cast<int>(i));
    else if (steklov[i])
      f.boundary_dofs.push_back(static_cast<int>(i));
    else
      f.interior_dofs.push_back(static_cast<int>(i));
  }
  if (f.boundary_dofs.empty()) throw AssemblyError("mesh has no steklov boundary dofs");
  for (int b : f.boundary_dofs) f.boundary_points.push_back(mesh.nodes[b]);
  return f;
}

struct SchurFactor {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  SparseMatrix Kib;
  std::vector<int> interior;
  std::vector<int> boundary;
  std::size_t node_count = 0;
};

namespace {

SparseMatrix block(const SparseMatrix& K, const std::vector<int>& rmap, const std::vector<int>& cmap,
                   Eigen::Index rows, Eigen::Index cols) {
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index j = 0; j < K.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(K, j); it; ++it) {
      const int r = rmap[it.row()], c = cmap[it.col()];
      if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
    }
  SparseMatrix B(rows, cols);
  B.setFromTriplets(t.begin(), t.end());
  return B;
}

}  // namespace

DtnMatrix schur_dtn(const AssembledForms& forms) {
  const SparseMatrix K = forms.operator_matrix();
  const auto nb = static_cast<Eigen::Index>(forms.boundary_dofs.size());
  const auto ni = static_cast<Eigen::Index>(forms.interior_dofs.size());
  std::vector<int> bmap(forms.node_count, -1), imap(forms.node_count, -1);
  for (Eigen::Index k = 0; k < nb; ++k) bmap[forms.boundary_dofs[k]] = static_cast<int>(k);
  for (Eigen::Index k = 0; k < ni; ++k) imap[forms.interior_dofs[k]] = static_cast<int>(k);

  auto factor = std::make_shared<SchurFactor>();
  factor->interior = forms.interior_dofs;
  factor->boundary = forms.boundary_dofs;
  factor->node_count = forms.node_count;

  DtnMatrix d;
  d.nodes = forms.boundary_dofs;
  d.points = forms.boundary_points;
  d.S = Eigen::MatrixXd(block(K, bmap, bmap, nb, nb));
  d.Mb = Eigen::MatrixXd(block(forms.boundary_mass, bmap, bmap, nb, nb));
  if (ni > 0) {
    const SparseMatrix Kii = block(K, imap, imap, ni, ni);
    factor->Kib = block(K, imap, bmap, ni, nb);
    factor->ldlt.compute(Kii);
    if (factor->ldlt.info() != Eigen::Success || factor->ldlt.vectorD().minCoeff() <= 0.0)
      throw FactorizationError("interior block is singular or indefinite");
    const Eigen::Index bs = 64;
    for (Eigen::Index c0 = 0; c0 < nb; c0 += bs) {
      const Eigen::Index w = std::min(bs, nb - c0);
      const Eigen::MatrixXd rhs = Eigen::MatrixXd(factor->Kib.middleCols(c0, w));
      const Eigen::MatrixXd X = factor->ldlt.solve(rhs);
      d.S.middleCols(c0, w) -= factor->Kib.transpose() * X;
    }
  }
  d.S = 0.5 * (d.S + d.S.transpose()).eval();
  d.factor = factor;
  return d;
}

Eigen::MatrixXd DtnMatrix::extend(const Eigen::MatrixXd& bv) const {
  if (!factor) throw ContractError("fem", "DtN matrix has no interior factorization attached");
  if (bv.rows() != static_cast<Eigen::Index>(nodes.size()))
    throw ContractError("fem", "boundary data size does not match the DtN dofs");
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(factor->node_count), bv.cols());
  for (std::size_t k = 0; k < factor->boundary.size(); ++k)
    full.row(factor->boundary[k]) = bv.row(static_cast<Eigen::Index>(k));
  if (!factor->interior.empty()) {
    const Eigen::MatrixXd rhs = factor->Kib * bv;
    const Eigen::MatrixXd xi = -factor->ldlt.solve(rhs);
    for (std::size_t k = 0; k < factor->interior.size(); ++k)
      full.row(factor->interior[k]) = xi.row(static_cast<Eigen::Index>(k));
  }
  return full;
}

Spectrum solve_gevp(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Mb, Eigen::Index count) {
  const Eigen::Index n = S.rows();
  if (S.cols() != n || Mb.rows() != n || Mb.cols() != n)
    throw ContractError("fem", "S and Mb must be square of equal size");
  if (count < 0 || count > n) throw DomainError("fem", "requested eigenpair count exceeds the dimension");
  Eigen::LLT<Eigen::MatrixXd> llt(Mb);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(Mb, Eigen::EigenvaluesOnly);
    const double lo = em.eigenvalues().minCoeff(), hi = em.eigenvalues().maxCoeff();
    const double cond = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
    throw NumericalError("boundary mass matrix is not positive definite", cond);
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Mb, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) {
    const Eigen::VectorXd dl = llt.matrixL().toDenseMatrix().diagonal();
    const double r = dl.maxCoeff() / dl.minCoeff();
    throw NumericalError("generalized eigensolver did not converge", r * r);
  }
  Spectrum sp;
  sp.eigenvalues = es.eigenvalues().head(count);
  sp.eigenvectors = es.eigenvectors().leftCols(count);
  for (Eigen::Index k = 0; k < count; ++k) {
    Eigen::Index imax;
    sp.eigenvectors.col(k).cwiseAbs().maxCoeff(&imax);
    if (sp.eigenvectors(imax, k) < 0) sp.eigenvectors.col(k) *= -1.0;
  }
  sp.residuals.resize(count);
  for (Eigen::Index k = 0; k < count; ++k) {
    const Eigen::VectorXd v = sp.eigenvectors.col(k);
    sp.residuals(k) = (S * v - sp.eigenvalues(k) * (Mb * v)).norm();
  }
  sp.s_norm = S.norm();
  return sp;
}

Spectrum steklov_spectrum(const PolygonalDomain& domain, double h_max, Eigen::Index count,
                          const SpectrumOptions& options) {
  double diam = 0.0;
  for (const auto& a : domain.vertices)
    for (const auto& b : domain.vertices) diam = std::max(diam, (a - b).norm());
  GradedSizing g;
  g.h_near = h_max;
  g.grading = options.grading;
  g.h_far = std::max(h_max, std::min(0.25 * diam, options.far_factor * h_max));
  const Mesh mesh = triangulate_graded(domain, g, options.max_nodes);
  const AssembledForms forms = assemble(mesh, false);
  const DtnMatrix dtn = schur_dtn(forms);
  const Eigen::Index n = dtn.S.rows();
  Spectrum sp = solve_gevp(dtn.S, dtn.Mb, std::min(count, n));
  sp.nodes = dtn.nodes;
  const BoundaryChart chart = boundary_chart(domain);
  for (const auto& p : dtn.points) sp.positions.push_back(chart.coordinate(p));
  sp.domain = describe(domain);
  sp.h_max = h_max;
  return sp;
}

Eigen::Index count_below(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Mb, double sigma) {
  // Unpivoted symmetric elimination; Sylvester's law of inertia gives the count.
  Eigen::MatrixXd T = S - sigma * Mb;
  const Eigen::Index n = T.rows();
  Eigen::Index neg = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    double d = T(k, k);
    if (d == 0.0) d = -1e-300;
    if (d < 0) ++neg;
    const Eigen::Index m = n - k - 1;
    if (m == 0) break;
    const Eigen::VectorXd l = T.col(k).tail(m) / d;
    T.bottomRightCorner(m, m).noalias() -= d * l * l.transpose();
  }
  return neg;
}

double richardson(double coarse, double fine, double order) {
  const double f = std::pow(2.0, order);
  return (f * fine - coarse) / (f - 1.0);
}

void write_spectrum_csv(std::ostream& os, const Spectrum& sp) {
  os << "index,eigenvalue,residual\n";
  for (Eigen::Index k = 0; k < sp.size(); ++k)
    os << k << "," << format_double(sp.eigenvalues(k)) << "," << format_double(sp.residuals(k)) << "\n";
}

}  // namespace steklov
