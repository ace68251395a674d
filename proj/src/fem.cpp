#include "calderon/fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/CholmodSupport>
#include <Eigen/SparseLU>

#include "calderon/errors.hpp"

namespace calderon {

namespace {

// Symmetric P1 pattern of the mesh, compressed column storage with zero values.
SparseReal p1_pattern(const Mesh& mesh) {
  const int nv = mesh.num_vertices();
  std::vector<std::vector<int>> adj(nv);
  for (const auto& T : mesh.tets)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) adj[T[a]].push_back(T[b]);
  SparseReal K(nv, nv);
  std::size_t nnz = 0;
  for (auto& col : adj) {
    std::sort(col.begin(), col.end());
    col.erase(std::unique(col.begin(), col.end()), col.end());
    nnz += col.size();
  }
  K.resizeNonZeros(static_cast<Eigen::Index>(nnz));
  int* outer = K.outerIndexPtr();
  int* inner = K.innerIndexPtr();
  double* val = K.valuePtr();
  std::size_t p = 0;
  for (int j = 0; j < nv; ++j) {
    outer[j] = static_cast<int>(p);
    for (int i : adj[j]) {
      inner[p] = i;
      val[p] = 0.0;
      ++p;
    }
  }
  outer[nv] = static_cast<int>(p);
  return K;
}

int position(const SparseReal& K, int row, int col) {
  const int* inner = K.innerIndexPtr();
  const int* b = inner + K.outerIndexPtr()[col];
  const int* e = inner + K.outerIndexPtr()[col + 1];
  const int* it = std::lower_bound(b, e, row);
  return static_cast<int>(it - inner);
}

template <class CoefFn>
void accumulate(const Mesh& mesh, SparseReal& K, CoefFn&& coef) {
  double* val = K.valuePtr();
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& T = mesh.tets[t];
    const auto& g = mesh.gradients(t);
    const Eigen::Matrix3d A = coef(t);
    const double vol = mesh.volume(t);
    const Eigen::Matrix3d As = 0.5 * (A + A.transpose());
    for (int b = 0; b < 4; ++b) {
      const Vec3 Ag = As * g[b];
      for (int a = 0; a <= b; ++a) {
        const double v = vol * g[a].dot(Ag);
        val[position(K, T[a], T[b])] += v;
        if (a != b) val[position(K, T[b], T[a])] += v;
      }
    }
  }
}

Point as_point(const Vec3& x) { return Point(x); }

}  // namespace

SparseReal BlockSystem::block() const {
  const int n = size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * (kr.nonZeros() + ki.nonZeros()));
  for (int j = 0; j < n; ++j) {
    for (SparseReal::InnerIterator it(kr, j); it; ++it) {
      trip.emplace_back(it.row(), j, it.value());
      trip.emplace_back(n + it.row(), n + j, it.value());
    }
    for (SparseReal::InnerIterator it(ki, j); it; ++it) {
      trip.emplace_back(it.row(), n + j, -it.value());
      trip.emplace_back(n + it.row(), j, it.value());
    }
  }
  SparseReal B(2 * n, 2 * n);
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

SparseComplex BlockSystem::complex_matrix() const {
  SparseComplex K = kr.cast<cdouble>();
  // Same pattern, so the imaginary parts can be written in place.
  cdouble* v = K.valuePtr();
  const double* vi = ki.valuePtr();
  for (Eigen::Index p = 0; p < K.nonZeros(); ++p) v[p] = cdouble(v[p].real(), vi[p]);
  return K;
}

BlockSystem assemble(const Mesh& mesh, const AdmittivityFamily& family, const ParameterField& a, double k) {
  BlockSystem s;
  s.mesh_id = mesh.id();
  s.k = k;
  s.kr = p1_pattern(mesh);
  s.ki = s.kr;
  std::vector<Eigen::Matrix3d> imag(mesh.num_tets());
  accumulate(mesh, s.kr, [&](int t) -> Eigen::Matrix3d {
    const Point x = as_point(mesh.barycenter(t));
    const double at = a(x);
    imag[t] = k * family.imag_part(x, at);
    return family.real_part(x, at);
  });
  accumulate(mesh, s.ki, [&](int t) -> Eigen::Matrix3d { return imag[t]; });
  s.dirichlet_mask = mesh.on_boundary;
  return s;
}

SparseReal assemble_laplacian(const Mesh& mesh) {
  SparseReal K = p1_pattern(mesh);
  accumulate(mesh, K, [](int) -> Eigen::Matrix3d { return Eigen::Matrix3d::Identity(); });
  return K;
}

struct DirichletSolver::Impl {
  SolverOptions options;
  std::uint64_t mesh_id = 0;
  int n = 0;
  std::vector<int> free_index;  // vertex -> free index or -1
  std::vector<int> free_vertices, fixed_vertices;
  SparseComplex kff, kfb;
  bool iterative = false;
  Eigen::SparseLU<SparseComplex, Eigen::COLAMDOrdering<int>> lu;
  SparseReal krff;
  Eigen::CholmodSupernodalLLT<SparseReal, Eigen::Lower> chol;

  ComplexVector precondition(const ComplexVector& r) const {
    const Eigen::VectorXd re = chol.solve(r.real());
    const Eigen::VectorXd im = chol.solve(r.imag());
    ComplexVector z(r.size());
    z.real() = re;
    z.imag() = im;
    return z;
  }

  ComplexVector gmres(const ComplexVector& b, SolveStats& st) const {
    const double bnorm = b.norm();
    const int m = options.restart;
    ComplexVector x = precondition(b);
    ComplexVector r = b - kff * x;
    double rnorm = r.norm();
    int total = 0;
    const double target = options.tolerance * 0.1 * bnorm;
    while (rnorm > target && total < options.max_iterations) {
      std::vector<ComplexVector> V;
      V.reserve(m + 1);
      V.push_back(r / rnorm);
      ComplexMatrix H = ComplexMatrix::Zero(m + 1, m);
      std::vector<cdouble> cs(m), sn(m);
      ComplexVector gvec = ComplexVector::Zero(m + 1);
      gvec[0] = rnorm;
      int j = 0;
      for (; j < m && total < options.max_iterations; ++j, ++total) {
        ComplexVector w = kff * precondition(V[j]);
        for (int i = 0; i <= j; ++i) {
          H(i, j) = V[i].dot(w);
          w -= H(i, j) * V[i];
        }
        H(j + 1, j) = w.norm();
        if (std::abs(H(j + 1, j)) > 0.0) V.push_back(w / H(j + 1, j));
        else V.push_back(ComplexVector::Zero(w.size()));
        for (int i = 0; i < j; ++i) {
          const cdouble t0 = std::conj(cs[i]) * H(i, j) + std::conj(sn[i]) * H(i + 1, j);
          H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
          H(i, j) = t0;
        }
        const double den = std::hypot(std::abs(H(j, j)), std::abs(H(j + 1, j)));
        if (den == 0.0) {
          cs[j] = 1.0;
          sn[j] = 0.0;
        } else {
          cs[j] = H(j, j) / den;
          sn[j] = H(j + 1, j) / den;
        }
        H(j, j) = den;
        H(j + 1, j) = 0.0;
        gvec[j + 1] = -sn[j] * gvec[j];
        gvec[j] = std::conj(cs[j]) * gvec[j];
        if (std::abs(gvec[j + 1]) <= target) {
          ++j;
          ++total;
          break;
        }
      }
      ComplexVector y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(gvec.head(j));
      ComplexVector dx = ComplexVector::Zero(b.size());
      for (int i = 0; i < j; ++i) dx += y[i] * V[i];
      x += precondition(dx);
      r = b - kff * x;
      rnorm = r.norm();
    }
    st.iterations = total;
    st.relative_residual = bnorm > 0 ? rnorm / bnorm : 0.0;
    return x;
  }
};

DirichletSolver::DirichletSolver(const BlockSystem& system, SolverOptions options)
    : impl_(std::make_unique<Impl>()) {
  Impl& s = *impl_;
  s.options = options;
  s.mesh_id = system.mesh_id;
  s.n = system.size();
  s.free_index.assign(s.n, -1);
  for (int v = 0; v < s.n; ++v) {
    if (system.dirichlet_mask[v]) {
      s.fixed_vertices.push_back(v);
    } else {
      s.free_index[v] = static_cast<int>(s.free_vertices.size());
      s.free_vertices.push_back(v);
    }
  }
  std::vector<int> fixed_index(s.n, -1);
  for (std::size_t i = 0; i < s.fixed_vertices.size(); ++i) fixed_index[s.fixed_vertices[i]] = static_cast<int>(i);
  const int nf = static_cast<int>(s.free_vertices.size());
  const int nb = static_cast<int>(s.fixed_vertices.size());
  std::vector<Eigen::Triplet<cdouble>> tff, tfb;
  std::vector<Eigen::Triplet<double>> trff;
  const SparseComplex K = system.complex_matrix();
  for (int j = 0; j < s.n; ++j)
    for (SparseComplex::InnerIterator it(K, j); it; ++it) {
      const int fi = s.free_index[it.row()];
      if (fi < 0) continue;
      const int fj = s.free_index[j];
      if (fj >= 0) {
        tff.emplace_back(fi, fj, it.value());
        trff.emplace_back(fi, fj, it.value().real());
      } else {
        tfb.emplace_back(fi, fixed_index[j], it.value());
      }
    }
  s.kff.resize(nf, nf);
  s.kff.setFromTriplets(tff.begin(), tff.end());
  s.kfb.resize(nf, nb);
  s.kfb.setFromTriplets(tfb.begin(), tfb.end());
  if (nf == 0) return;

  s.iterative = options.kind == SolverKind::CholmodGmres ||
                (options.kind == SolverKind::Auto && 2 * nf > options.direct_limit);
  if (!s.iterative) {
    s.kff.makeCompressed();
    s.lu.analyzePattern(s.kff);
    s.lu.factorize(s.kff);
    if (s.lu.info() != Eigen::Success) throw SolverError("sparse LU factorisation failed: " + s.lu.lastErrorMessage());
  } else {
    s.krff.resize(nf, nf);
    s.krff.setFromTriplets(trff.begin(), trff.end());
    s.chol.compute(s.krff);
    if (s.chol.info() != Eigen::Success) throw SolverError("Cholesky factorisation of the real block failed");
  }
}

DirichletSolver::~DirichletSolver() = default;

bool DirichletSolver::iterative() const { return impl_->iterative; }

ComplexField DirichletSolver::solve(const ComplexVector& g, SolveStats* stats) const {
  const Impl& s = *impl_;
  if (g.size() != s.n) throw UsageError("boundary data length does not match the system");
  if (!g.allFinite()) throw NumericError("boundary data contains non-finite values");
  ComplexVector gb(s.fixed_vertices.size());
  for (std::size_t i = 0; i < s.fixed_vertices.size(); ++i) gb[i] = g[s.fixed_vertices[i]];
  ComplexField out;
  out.mesh_id = s.mesh_id;
  out.values = ComplexVector::Zero(s.n);
  for (std::size_t i = 0; i < s.fixed_vertices.size(); ++i) out.values[s.fixed_vertices[i]] = gb[i];
  SolveStats st;
  if (!s.free_vertices.empty()) {
    const ComplexVector rhs = -(s.kfb * gb);
    const double rn = rhs.norm();
    ComplexVector uf = ComplexVector::Zero(rhs.size());
    if (rn > 0.0) {
      if (!s.iterative) {
        uf = s.lu.solve(rhs);
        ComplexVector r = rhs - s.kff * uf;
        if (r.norm() > 1e-13 * rn) {
          uf += s.lu.solve(r);
          r = rhs - s.kff * uf;
        }
        st.iterations = 1;
        st.relative_residual = r.norm() / rn;
      } else {
        uf = s.gmres(rhs, st);
      }
      if (!(st.relative_residual <= s.options.tolerance)) {
        std::ostringstream os;
        os << "Dirichlet solve did not converge: relative residual " << st.relative_residual << " after "
           << st.iterations << " iterations (tolerance " << s.options.tolerance << ", "
           << (s.iterative ? "Cholesky-preconditioned GMRES" : "sparse LU") << ", " << s.free_vertices.size()
           << " free vertices)";
        throw SolverError(os.str());
      }
    }
    for (std::size_t i = 0; i < s.free_vertices.size(); ++i) out.values[s.free_vertices[i]] = uf[i];
  }
  if (stats) *stats = st;
  return out;
}

ComplexField solve_dirichlet(const BlockSystem& system, const ComplexVector& g, SolverOptions options) {
  DirichletSolver solver(system, options);
  return solver.solve(g);
}

cdouble energy_pairing(const AdmittivityFamily& family, const ParameterField& a, const Mesh& mesh,
                       const ComplexField& u, const ComplexField& v) {
  if (u.mesh_id != mesh.id() || v.mesh_id != mesh.id())
    throw UsageError("energy_pairing: fields live on a different mesh");
  cdouble sum = 0.0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& T = mesh.tets[t];
    const auto& g = mesh.gradients(t);
    Eigen::Vector3cd gu = Eigen::Vector3cd::Zero(), gv = Eigen::Vector3cd::Zero();
    for (int q = 0; q < 4; ++q) {
      gu += u.values[T[q]] * g[q].cast<cdouble>();
      gv += v.values[T[q]] * g[q].cast<cdouble>();
    }
    const Point x = as_point(mesh.barycenter(t));
    const Eigen::Matrix3cd A = family.evaluate(x, a(x));
    sum += mesh.volume(t) * (A * gu).cwiseProduct(gv).sum();
  }
  return sum;
}

ComplexVector zero_lifting(const Mesh& mesh, const ComplexVector& g) {
  if (g.size() != mesh.num_vertices()) throw UsageError("boundary data length does not match the mesh");
  ComplexVector psi = ComplexVector::Zero(g.size());
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.on_boundary[v]) psi[v] = g[v];
  return psi;
}

ForwardModel::ForwardModel(std::shared_ptr<const Mesh> mesh, AdmittivityFamily family, ParameterField a,
                           SolverOptions options)
    : mesh_(std::move(mesh)), family_(std::move(family)), a_(std::move(a)) {
  system_ = assemble(*mesh_, family_, a_, family_.k);
  solver_ = std::make_unique<DirichletSolver>(system_, options);
}

ComplexField ForwardModel::solve(const ComplexVector& g, SolveStats* stats) const { return solver_->solve(g, stats); }

cdouble ForwardModel::pairing(const ComplexField& u_f, const ComplexVector& g) const {
  if (u_f.mesh_id != mesh_->id()) throw UsageError("pairing: field lives on a different mesh");
  const ComplexVector psi = zero_lifting(*mesh_, g);
  const Eigen::VectorXd ur = u_f.values.real(), ui = u_f.values.imag();
  ComplexVector ku(ur.size());
  ku.real() = system_.kr * ur - system_.ki * ui;
  ku.imag() = system_.kr * ui + system_.ki * ur;
  return ku.cwiseProduct(psi).sum();
}

}  // namespace calderon
