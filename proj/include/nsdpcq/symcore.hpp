#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace nsdpcq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Off-diagonal convergence target of the Jacobi eigensolver.
inline constexpr double kEigTol = 1e-10;
/// Default relative tolerance for numerical rank decisions.
inline constexpr double kRankTol = 1e-8;
inline constexpr int kMaxJacobiSweeps = 100;

/// Dense symmetric matrix. The upper triangle given at construction is
/// authoritative and mirrored into the lower triangle.
class SymMat {
 public:
  SymMat() : SymMat(1) {}
  explicit SymMat(int dim);
  explicit SymMat(const Matrix& entries);

  static SymMat identity(int dim);
  static SymMat diagonal(const Vector& d);
  /// u u^T
  static SymMat outer(const Vector& u);
  /// (u v^T + v u^T) / 2
  static SymMat sym_outer(const Vector& u, const Vector& v);

  int dim() const { return static_cast<int>(a_.rows()); }
  double operator()(int i, int j) const { return a_(i, j); }
  void set(int i, int j, double value);
  const Matrix& dense() const { return a_; }

  /// Largest absolute entry.
  double norm_inf() const;
  double norm_fro() const { return a_.norm(); }

  SymMat operator+(const SymMat& o) const;
  SymMat operator-(const SymMat& o) const;
  SymMat operator-() const;
  SymMat operator*(double s) const;
  friend SymMat operator*(double s, const SymMat& m) { return m * s; }

  /// B^T M B, again symmetric.
  SymMat congruence(const Matrix& b) const;

 private:
  Matrix a_;
};

/// Frobenius inner product <M, N> = tr(MN).
double inner(const SymMat& a, const SymMat& b);

struct Spectral {
  Vector values;   // lambda_1 >= ... >= lambda_m
  Matrix vectors;  // orthonormal, column i pairs with values[i]
};

Spectral eigh(const SymMat& m);

/// Projection onto the PSD cone: sum_i max(lambda_i, 0) u_i u_i^T.
SymMat proj_psd(const SymMat& m);

/// Number of eigenvalues with |lambda| > tol * max(1, max_i |lambda_i|).
int numerical_rank(const SymMat& m, double tol = kRankTol);

enum class Provenance { Fixed, Sampled, SequenceLimit };
std::string to_string(Provenance p);

/// Column-orthonormal basis of Ker G(x) together with the complementary
/// eigenvectors (the range part P in U = [P, E]).
struct KernelBasis {
  Matrix cols;        // m x (m - r)
  Matrix complement;  // m x r, may be empty for sampled bases
  int rank_r = 0;
  Provenance provenance = Provenance::Fixed;
  std::uint64_t tag = 0;  // seed or trace id, depending on provenance

  int dim() const { return static_cast<int>(cols.rows()); }
  int kernel_dim() const { return static_cast<int>(cols.cols()); }
};

/// Kernel tolerance used for feasibility and membership checks:
/// 1e-8 * (1 + ||M||_inf).
double kernel_tolerance(const SymMat& m);

/// Eigenvectors of eigenvalues with |lambda| <= tol * max(1, lambda_1).
/// Throws NotFeasibleError when some eigenvalue is below -tol * max(1, lambda_1).
KernelBasis kernel_basis(const SymMat& m, double tol = kRankTol);

/// E.cols * C for an orthogonal C.
KernelBasis rotate_basis(const KernelBasis& e, const Matrix& c, std::uint64_t tag = 0);

/// Orthonormalizes the columns of `a` in place by modified Gram-Schmidt,
/// ascending column order.
void modified_gram_schmidt(Matrix& a);

/// Haar-distributed orthogonal k x k matrix from Gaussian columns; the first
/// nonzero component of each column is made positive.
Matrix haar_orthogonal(int k, std::mt19937_64& rng);

/// Largest absolute entry of Q^T Q - I.
double orthogonality_defect(const Matrix& q);

/// Orthonormal basis of the orthogonal complement of span(cols) in R^m.
Matrix orthonormal_complement(const Matrix& cols, int m);

/// svec: upper triangle stacked row-major with off-diagonals scaled by sqrt(2),
/// an isometry from (S^k, Frobenius) to R^{k(k+1)/2}.
Vector svec(const Matrix& s);
Matrix smat(const Vector& v, int k);

}  // namespace nsdpcq
