#include "nsdpcq/symcore.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nsdpcq/detail/jacobi.hpp"
#include "nsdpcq/errors.hpp"

namespace nsdpcq {

SymMat::SymMat(int dim) {
  if (dim < 1) throw DimensionError("SymMat dimension must be >= 1");
  a_ = Matrix::Zero(dim, dim);
}

SymMat::SymMat(const Matrix& entries) {
  if (entries.rows() < 1 || entries.rows() != entries.cols())
    throw DimensionError("SymMat requires a non-empty square matrix");
  a_ = entries;
  for (Eigen::Index i = 0; i < a_.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a_.cols(); ++j) a_(j, i) = a_(i, j);
}

SymMat SymMat::identity(int dim) { return SymMat(Matrix::Identity(dim, dim)); }

SymMat SymMat::diagonal(const Vector& d) { return SymMat(Matrix(d.asDiagonal())); }

SymMat SymMat::outer(const Vector& u) { return SymMat(Matrix(u * u.transpose())); }

SymMat SymMat::sym_outer(const Vector& u, const Vector& v) {
  return SymMat(Matrix(0.5 * (u * v.transpose() + v * u.transpose())));
}

void SymMat::set(int i, int j, double value) {
  a_(i, j) = value;
  a_(j, i) = value;
}

double SymMat::norm_inf() const { return a_.cwiseAbs().maxCoeff(); }

SymMat SymMat::operator+(const SymMat& o) const {
  if (o.dim() != dim()) throw DimensionError("SymMat dimension mismatch in +");
  return SymMat(Matrix(a_ + o.a_));
}

SymMat SymMat::operator-(const SymMat& o) const {
  if (o.dim() != dim()) throw DimensionError("SymMat dimension mismatch in -");
  return SymMat(Matrix(a_ - o.a_));
}

SymMat SymMat::operator-() const { return SymMat(Matrix(-a_)); }

SymMat SymMat::operator*(double s) const { return SymMat(Matrix(s * a_)); }

SymMat SymMat::congruence(const Matrix& b) const {
  if (b.rows() != a_.rows()) throw DimensionError("congruence: row count mismatch");
  return SymMat(Matrix(b.transpose() * a_ * b));
}

double inner(const SymMat& a, const SymMat& b) {
  if (a.dim() != b.dim()) throw DimensionError("inner: dimension mismatch");
  return a.dense().cwiseProduct(b.dense()).sum();
}

Spectral eigh(const SymMat& m) {
  auto r = detail::jacobi_eigen<double>(m.dense(), kMaxJacobiSweeps);
  if (!r.converged && r.off_norm > kEigTol * (1.0 + r.scale)) {
    std::ostringstream os;
    os << "Jacobi eigensolver did not converge after " << r.sweeps
       << " sweeps (off-diagonal norm " << r.off_norm << ")";
    throw EighError(os.str(), r.off_norm);
  }
  return {std::move(r.values), std::move(r.vectors)};
}

SymMat proj_psd(const SymMat& m) {
  const Spectral s = eigh(m);
  Matrix out = Matrix::Zero(m.dim(), m.dim());
  for (int i = 0; i < m.dim(); ++i) {
    const double l = std::max(0.0, s.values(i));
    if (l > 0) out.noalias() += l * s.vectors.col(i) * s.vectors.col(i).transpose();
  }
  return SymMat(out);
}

int numerical_rank(const SymMat& m, double tol) {
  const Spectral s = eigh(m);
  const double scale = std::max(1.0, s.values.cwiseAbs().maxCoeff());
  int rank = 0;
  for (int i = 0; i < m.dim(); ++i)
    if (std::abs(s.values(i)) > tol * scale) ++rank;
  return rank;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Fixed: return "Fixed";
    case Provenance::Sampled: return "Sampled";
    case Provenance::SequenceLimit: return "SequenceLimit";
  }
  return "?";
}

double kernel_tolerance(const SymMat& m) { return 1e-8 * (1.0 + m.norm_inf()); }

void modified_gram_schmidt(Matrix& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) a.col(j) -= a.col(i).dot(a.col(j)) * a.col(i);
    const double nrm = a.col(j).norm();
    if (nrm == 0.0) throw NumericError("modified Gram-Schmidt: dependent columns");
    a.col(j) /= nrm;
  }
}

KernelBasis kernel_basis(const SymMat& m, double tol) {
  if (!(tol > 0)) throw DimensionError("kernel_basis: tolerance must be positive");
  const Spectral s = eigh(m);
  const int dim = m.dim();
  const double scale = std::max(1.0, s.values(0));
  const double lmin = s.values(dim - 1);
  if (lmin < -tol * scale) {
    std::ostringstream os;
    os << "matrix is not PSD: smallest eigenvalue " << lmin;
    throw NotFeasibleError(os.str(), lmin);
  }
  int r = 0;
  while (r < dim && std::abs(s.values(r)) > tol * scale) ++r;

  KernelBasis kb;
  kb.rank_r = r;
  kb.complement = s.vectors.leftCols(r);
  kb.cols = s.vectors.rightCols(dim - r);
  if (kb.cols.cols() > 1) modified_gram_schmidt(kb.cols);
  kb.provenance = Provenance::Fixed;
  return kb;
}

double orthogonality_defect(const Matrix& q) {
  if (q.cols() == 0) return 0.0;
  return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

KernelBasis rotate_basis(const KernelBasis& e, const Matrix& c, std::uint64_t tag) {
  if (c.rows() != e.cols.cols() || c.cols() != e.cols.cols())
    throw DimensionError("rotate_basis: rotation size does not match kernel dimension");
  if (orthogonality_defect(c) > 1e-10)
    throw NumericError("rotate_basis: rotation matrix is not orthogonal");
  KernelBasis out = e;
  out.cols = e.cols * c;
  out.provenance = Provenance::Sampled;
  out.tag = tag;
  return out;
}

Matrix haar_orthogonal(int k, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix q(k, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) q(i, j) = gauss(rng);
  modified_gram_schmidt(q);
  // Re-orthogonalize once; MGS on a random Gaussian matrix is well conditioned
  // but the second pass brings the defect to machine precision.
  modified_gram_schmidt(q);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < k; ++i) {
      if (q(i, j) != 0.0) {
        if (q(i, j) < 0) q.col(j) = -q.col(j);
        break;
      }
    }
  }
  return q;
}

Matrix orthonormal_complement(const Matrix& cols, int m) {
  if (cols.cols() == 0) return Matrix::Identity(m, m);
  Matrix proj = Matrix::Identity(m, m) - cols * cols.transpose();
  const Spectral s = eigh(SymMat(proj));
  const int want = m - static_cast<int>(cols.cols());
  Matrix out = s.vectors.leftCols(want);
  if (want > 1) modified_gram_schmidt(out);
  return out;
}

Vector svec(const Matrix& s) {
  const Eigen::Index k = s.rows();
  Vector v(k * (k + 1) / 2);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j)
      v(idx++) = (i == j) ? s(i, j) : std::sqrt(2.0) * s(i, j);
  return v;
}

Matrix smat(const Vector& v, int k) {
  if (v.size() != k * (k + 1) / 2) throw DimensionError("smat: length mismatch");
  Matrix s(k, k);
  Eigen::Index idx = 0;
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) {
      const double x = (i == j) ? v(idx) : v(idx) / std::sqrt(2.0);
      s(i, j) = s(j, i) = x;
      ++idx;
    }
  return s;
}

}  // namespace nsdpcq
