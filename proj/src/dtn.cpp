#include "calderon/dtn.hpp"

#include <map>

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include "calderon/errors.hpp"
#include "calderon/io.hpp"
#include "calderon/parallel.hpp"

namespace calderon {

namespace {

ComplexVector apply_system(const BlockSystem& s, const ComplexVector& u) {
  const Eigen::VectorXd ur = u.real(), ui = u.imag();
  ComplexVector ku(u.size());
  ku.real() = s.kr * ur - s.ki * ui;
  ku.imag() = s.kr * ui + s.ki * ur;
  return ku;
}

}  // namespace

ComplexVector SigmaBasis::nodal(const ComplexVector& coeffs, int num_vertices) const {
  if (coeffs.size() != count()) throw UsageError("coefficient vector does not match the basis");
  ComplexVector g = ComplexVector::Zero(num_vertices);
  for (int i = 0; i < count(); ++i) g[vertices[i]] = coeffs[i];
  return g;
}

SigmaBasis SigmaBasis::subset(const std::vector<int>& keep) const {
  SigmaBasis b;
  b.mesh_id = mesh_id;
  for (int i : keep) {
    if (i < 0 || i >= count()) throw UsageError("basis subset index out of range");
    b.vertices.push_back(vertices[i]);
  }
  return b;
}

SigmaBasis sigma_basis(const Mesh& mesh) {
  if (!mesh.sigma) throw UsageError("mesh carries no boundary patch");
  std::vector<int> state(mesh.num_vertices(), 0);  // 0 none, 1 only Sigma triangles, 2 touches others
  for (const auto& bt : mesh.boundary)
    for (int v : bt.v) {
      if (!bt.in_sigma) state[v] = 2;
      else if (state[v] == 0) state[v] = 1;
    }
  SigmaBasis b;
  b.mesh_id = mesh.id();
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (state[v] == 1) b.vertices.push_back(v);
  if (b.vertices.empty()) throw GeometryError("no boundary vertex has its support inside Sigma; refine the mesh");
  return b;
}

RealMatrix h_half_gram(const Mesh& mesh, const SigmaBasis& basis) {
  if (basis.mesh_id != mesh.id()) throw UsageError("basis belongs to a different mesh");
  const int nv = mesh.num_vertices();
  const int d = basis.count();
  const SparseReal L = assemble_laplacian(mesh);
  std::vector<int> interior_index(nv, -1), interior;
  for (int v = 0; v < nv; ++v)
    if (!mesh.on_boundary[v]) {
      interior_index[v] = static_cast<int>(interior.size());
      interior.push_back(v);
    }
  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 0; j < nv; ++j) {
    if (interior_index[j] < 0) continue;
    for (SparseReal::InnerIterator it(L, j); it; ++it)
      if (interior_index[it.row()] >= 0) trip.emplace_back(interior_index[it.row()], interior_index[j], it.value());
  }
  const int ni = static_cast<int>(interior.size());
  SparseReal Lii(ni, ni);
  Lii.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<SparseReal> ldlt;
  if (ni > 0) {
    ldlt.compute(Lii);
    if (ldlt.info() != Eigen::Success) throw NumericError("Laplace factorisation failed in gram assembly");
  }
  RealMatrix G(d, d);
  for (int i = 0; i < d; ++i) {
    const int vi = basis.vertices[i];
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ni);
    for (SparseReal::InnerIterator it(L, vi); it; ++it)
      if (interior_index[it.row()] >= 0) rhs[interior_index[it.row()]] = -it.value();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(nv);
    x[vi] = 1.0;
    if (ni > 0) {
      const Eigen::VectorXd w = ldlt.solve(rhs);
      for (int q = 0; q < ni; ++q) x[interior[q]] = w[q];
    }
    const Eigen::VectorXd Lx = L * x;
    for (int j = 0; j < d; ++j) G(j, i) = Lx[basis.vertices[j]];
  }
  std::map<int, int> index;
  for (int i = 0; i < d; ++i) index[basis.vertices[i]] = i;
  for (const auto& bt : mesh.boundary) {
    if (!bt.in_sigma) continue;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const auto ia = index.find(bt.v[a]);
        const auto ib = index.find(bt.v[b]);
        if (ia == index.end() || ib == index.end()) continue;
        G(ia->second, ib->second) += bt.area / 12.0 * (a == b ? 2.0 : 1.0);
      }
  }
  return 0.5 * (G + G.transpose());
}

ComplexMatrix dtn_pairing(const ForwardModel& model, const SigmaBasis& basis, int threads) {
  if (basis.mesh_id != model.mesh().id()) throw UsageError("basis belongs to a different mesh");
  const int d = basis.count();
  const int nv = model.mesh().num_vertices();
  ComplexMatrix P(d, d);
  parallel_for(d, threads, [&](int i) {
    ComplexVector g = ComplexVector::Zero(nv);
    g[basis.vertices[i]] = 1.0;
    const ComplexField u = model.solve(g);
    const ComplexVector ku = apply_system(model.system(), u.values);
    for (int j = 0; j < d; ++j) P(i, j) = ku[basis.vertices[j]];
  });
  return P;
}

LocalDtnMatrix assemble_dtn(const ForwardModel& model, const SigmaBasis& basis, const RealMatrix& gram,
                            int threads) {
  if (gram.rows() != basis.count() || gram.cols() != basis.count())
    throw UsageError("gram size does not match the basis");
  return LocalDtnMatrix{basis, dtn_pairing(model, basis, threads), gram};
}

LocalDtnMatrix assemble_dtn(const ForwardModel& model, int threads) {
  const SigmaBasis basis = sigma_basis(model.mesh());
  return assemble_dtn(model, basis, h_half_gram(model.mesh(), basis), threads);
}

double star_norm(const ComplexMatrix& difference, const RealMatrix& gram) {
  if (gram.rows() != gram.cols() || gram.rows() != difference.rows() || difference.rows() != difference.cols())
    throw UsageError("star_norm: size mismatch");
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, gram.cwiseAbs().maxCoeff()))
    throw NumericError("gram matrix is not symmetric");
  Eigen::LLT<RealMatrix> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericError("gram matrix is not positive definite");
  const ComplexMatrix Lc = RealMatrix(llt.matrixL()).cast<cdouble>();
  const ComplexMatrix X = Lc.triangularView<Eigen::Lower>().solve(difference);
  const ComplexMatrix B = Lc.triangularView<Eigen::Lower>().solve(ComplexMatrix(X.transpose())).transpose();
  Eigen::JacobiSVD<ComplexMatrix> svd(B);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

double dtn_star_norm(const LocalDtnMatrix& l1, const LocalDtnMatrix& l2) {
  if (l1.basis.vertices != l2.basis.vertices || l1.basis.mesh_id != l2.basis.mesh_id)
    throw UsageError("DtN matrices use different bases");
  if ((l1.gram - l2.gram).cwiseAbs().maxCoeff() > 0.0) throw UsageError("DtN matrices use different gram matrices");
  return star_norm(l1.pairing - l2.pairing, l1.gram);
}

double gram_norm(const ComplexVector& c, const RealMatrix& gram) {
  return (c.adjoint() * gram.cast<cdouble>() * c)(0, 0).real();
}

AlessandriniCheck alessandrini_gap(const ForwardModel& m1, const ForwardModel& m2, const ComplexVector& f1,
                                   const ComplexVector& f2) {
  if (m1.mesh().id() != m2.mesh().id()) throw UsageError("forward models live on different meshes");
  const ComplexField u1 = m1.solve(f1);
  const ComplexField w1 = m2.solve(f1);
  const ComplexField u2 = m2.solve(f2);
  const cdouble p1 = m1.pairing(u1, f2);
  const cdouble p2 = m2.pairing(w1, f2);
  AlessandriniCheck c;
  c.lhs = p1 - p2;
  const Mesh& mesh = m1.mesh();
  cdouble rhs = 0.0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& T = mesh.tets[t];
    const auto& g = mesh.gradients(t);
    Eigen::Vector3cd g1 = Eigen::Vector3cd::Zero(), g2 = Eigen::Vector3cd::Zero();
    for (int q = 0; q < 4; ++q) {
      g1 += u1.values[T[q]] * g[q].cast<cdouble>();
      g2 += u2.values[T[q]] * g[q].cast<cdouble>();
    }
    const Point x(mesh.barycenter(t));
    const Eigen::Matrix3cd dA = m1.family().evaluate(x, m1.field()(x)) - m2.family().evaluate(x, m2.field()(x));
    rhs += mesh.volume(t) * (dA * g1).cwiseProduct(g2).sum();
  }
  c.rhs = rhs;
  c.residual = c.lhs - c.rhs;
  c.scale = std::max({1.0, std::abs(p1), std::abs(p2)});
  return c;
}

void write_dtn_csv(const LocalDtnMatrix& dtn, const std::string& pairing_path, const std::string& gram_path) {
  CsvWriter p({"i", "j", "vertex_i", "vertex_j", "re", "im"});
  CsvWriter g({"i", "j", "vertex_i", "vertex_j", "value"});
  const int d = dtn.basis.count();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const std::string si = std::to_string(i), sj = std::to_string(j);
      const std::string vi = std::to_string(dtn.basis.vertices[i]), vj = std::to_string(dtn.basis.vertices[j]);
      p.add_row({si, sj, vi, vj, format_number(dtn.pairing(i, j).real()), format_number(dtn.pairing(i, j).imag())});
      g.add_row({si, sj, vi, vj, format_number(dtn.gram(i, j))});
    }
  p.write(pairing_path);
  g.write(gram_path);
}

}  // namespace calderon
