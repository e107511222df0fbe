#include "nsdpcq/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "nsdpcq/errors.hpp"

namespace nsdpcq {

Poly::Poly(int n_vars, std::vector<Term> terms) : n_(n_vars), terms_(std::move(terms)) {
  for (const Term& t : terms_) {
    if (static_cast<int>(t.exps.size()) != n_)
      throw DimensionError("Poly: exponent vector length does not match n_vars");
    for (int e : t.exps)
      if (e < 0) throw DimensionError("Poly: negative exponent");
  }
  canonicalize();
}

Poly Poly::constant(int n_vars, double c) {
  return Poly(n_vars, {Term{c, Exponents(static_cast<std::size_t>(n_vars), 0)}});
}

Poly Poly::variable(int n_vars, int index, double coef) {
  if (index < 0 || index >= n_vars) throw DimensionError("Poly::variable: index out of range");
  Exponents e(static_cast<std::size_t>(n_vars), 0);
  e[static_cast<std::size_t>(index)] = 1;
  return Poly(n_vars, {Term{coef, std::move(e)}});
}

void Poly::canonicalize() {
  std::sort(terms_.begin(), terms_.end(),
            [](const Term& a, const Term& b) { return a.exps < b.exps; });
  std::vector<Term> merged;
  merged.reserve(terms_.size());
  for (Term& t : terms_) {
    if (!merged.empty() && merged.back().exps == t.exps)
      merged.back().coef += t.coef;
    else
      merged.push_back(std::move(t));
  }
  std::erase_if(merged, [](const Term& t) { return !(std::abs(t.coef) >= kCoefDrop); });
  terms_ = std::move(merged);
}

int Poly::degree() const {
  int d = 0;
  for (const Term& t : terms_) d = std::max(d, std::accumulate(t.exps.begin(), t.exps.end(), 0));
  return d;
}

double Poly::max_abs_coef() const {
  double m = 0.0;
  for (const Term& t : terms_) m = std::max(m, std::abs(t.coef));
  return m;
}

double Poly::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) throw DimensionError("poly_eval: point length mismatch");
  return eval_as(x.data());
}

Poly Poly::derivative(int var) const {
  if (var < 0 || var >= n_) throw DimensionError("Poly::derivative: index out of range");
  std::vector<Term> out;
  for (const Term& t : terms_) {
    const int e = t.exps[static_cast<std::size_t>(var)];
    if (e == 0) continue;
    Term d{t.coef * e, t.exps};
    d.exps[static_cast<std::size_t>(var)] = e - 1;
    out.push_back(std::move(d));
  }
  return Poly(n_, std::move(out));
}

std::vector<Poly> Poly::gradient() const {
  std::vector<Poly> g;
  g.reserve(static_cast<std::size_t>(n_));
  for (int l = 0; l < n_; ++l) g.push_back(derivative(l));
  return g;
}

Vector Poly::eval_gradient(const Vector& x) const {
  if (x.size() != n_) throw DimensionError("gradient: point length mismatch");
  Vector g = Vector::Zero(n_);
  accumulate_gradient(x.data(), 1.0, g.data());
  return g;
}

Poly Poly::pruned(double threshold) const {
  Poly out(n_);
  for (const Term& t : terms_)
    if (std::abs(t.coef) > threshold) out.terms_.push_back(t);
  return out;
}

Poly Poly::operator+(const Poly& o) const {
  if (o.n_ != n_) throw DimensionError("Poly: n_vars mismatch");
  std::vector<Term> t = terms_;
  t.insert(t.end(), o.terms_.begin(), o.terms_.end());
  return Poly(n_, std::move(t));
}

Poly Poly::operator-() const { return *this * -1.0; }

Poly Poly::operator-(const Poly& o) const { return *this + (-o); }

Poly Poly::operator*(double s) const {
  std::vector<Term> t = terms_;
  for (Term& x : t) x.coef *= s;
  return Poly(n_, std::move(t));
}

Poly Poly::operator*(const Poly& o) const {
  if (o.n_ != n_) throw DimensionError("Poly: n_vars mismatch");
  std::vector<Term> t;
  t.reserve(terms_.size() * o.terms_.size());
  for (const Term& a : terms_)
    for (const Term& b : o.terms_) {
      Term c{a.coef * b.coef, a.exps};
      for (std::size_t i = 0; i < c.exps.size(); ++i) c.exps[i] += b.exps[i];
      t.push_back(std::move(c));
    }
  return Poly(n_, std::move(t));
}

bool Poly::operator==(const Poly& o) const {
  if (n_ != o.n_ || terms_.size() != o.terms_.size()) return false;
  for (std::size_t k = 0; k < terms_.size(); ++k)
    if (terms_[k].coef != o.terms_[k].coef || terms_[k].exps != o.terms_[k].exps) return false;
  return true;
}

double poly_eval(const Poly& p, const Vector& x) { return p.eval(x); }

std::vector<Poly> poly_grad(const Poly& p) { return p.gradient(); }

bool structural_zero(const Poly& p) { return p.is_zero(); }

MatrixPoly::MatrixPoly(int dim, int n_vars) : dim_(dim), n_(n_vars), zero_(n_vars) {
  if (dim < 1) throw DimensionError("MatrixPoly: dimension must be >= 1");
}

void MatrixPoly::set(int i, int j, Poly p) {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= dim_) throw DimensionError("MatrixPoly: entry index out of range");
  if (p.n_vars() != n_) throw DimensionError("MatrixPoly: entry n_vars mismatch");
  if (blocks_) {
    int start = 0;
    for (int sz : *blocks_) {
      if (i < start + sz) {
        if (j >= start + sz)
          throw DimensionError("MatrixPoly: entry spans two declared blocks");
        break;
      }
      start += sz;
    }
  }
  if (p.is_zero())
    entries_.erase({i, j});
  else
    entries_[{i, j}] = std::move(p);
}

const Poly& MatrixPoly::entry(int i, int j) const {
  if (i > j) std::swap(i, j);
  auto it = entries_.find({i, j});
  return it == entries_.end() ? zero_ : it->second;
}

bool MatrixPoly::has_entry(int i, int j) const {
  if (i > j) std::swap(i, j);
  return entries_.count({i, j}) > 0;
}

void MatrixPoly::set_blocks(std::vector<int> sizes) {
  int total = 0;
  for (int s : sizes) {
    if (s < 1) throw DimensionError("MatrixPoly: block sizes must be positive");
    total += s;
  }
  if (total != dim_) throw DimensionError("MatrixPoly: block sizes do not sum to the dimension");
  std::vector<int> block_of(static_cast<std::size_t>(dim_));
  int start = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    for (int k = 0; k < sizes[b]; ++k) block_of[static_cast<std::size_t>(start + k)] = static_cast<int>(b);
    start += sizes[b];
  }
  for (const auto& [ij, p] : entries_)
    if (block_of[static_cast<std::size_t>(ij.first)] != block_of[static_cast<std::size_t>(ij.second)])
      throw DimensionError("MatrixPoly: entry spans two declared blocks");
  blocks_ = std::move(sizes);
}

int MatrixPoly::degree() const {
  int d = 0;
  for (const auto& [ij, p] : entries_) d = std::max(d, p.degree());
  return d;
}

void NsdpProblem::validate() const {
  if (n < 1 || n > kMaxVars) throw DimensionError("problem: n must lie in [1, 64]");
  if (m() < 1 || m() > kMaxDim) throw DimensionError("problem: m must lie in [1, 50]");
  if (constraint.n_vars() != n) throw DimensionError("problem: constraint n_vars mismatch");
  if (objective.n_vars() != n) throw DimensionError("problem: objective n_vars mismatch");
  for (const Poly& h : equalities)
    if (h.n_vars() != n) throw DimensionError("problem: equality n_vars mismatch");
  int deg = std::max(objective.degree(), constraint.degree());
  for (const Poly& h : equalities) deg = std::max(deg, h.degree());
  if (deg > kMaxDegree) throw DimensionError("problem: polynomial degree exceeds 8");
}

namespace {

void check_point(const NsdpProblem& p, const Vector& x) {
  if (x.size() != p.n) {
    std::ostringstream os;
    os << "point has length " << x.size() << " but the problem has n = " << p.n;
    throw DimensionError(os.str());
  }
}

}  // namespace

SymMat eval_G(const NsdpProblem& p, const Vector& x) {
  check_point(p, x);
  return SymMat(p.constraint.evaluate(x.data()));
}

std::vector<SymMat> eval_partials(const NsdpProblem& p, const Vector& x) {
  check_point(p, x);
  const int m = p.m();
  std::vector<Matrix> d(static_cast<std::size_t>(p.n), Matrix::Zero(m, m));
  Vector g(p.n);
  for (const auto& [ij, poly] : p.constraint.entries()) {
    g.setZero();
    poly.accumulate_gradient(x.data(), 1.0, g.data());
    for (int l = 0; l < p.n; ++l) {
      d[static_cast<std::size_t>(l)](ij.first, ij.second) = g(l);
      d[static_cast<std::size_t>(l)](ij.second, ij.first) = g(l);
    }
  }
  std::vector<SymMat> out;
  out.reserve(d.size());
  for (Matrix& a : d) out.emplace_back(a);
  return out;
}

Vector adjoint_apply(const NsdpProblem& p, const Vector& x, const SymMat& m) {
  check_point(p, x);
  if (m.dim() != p.m()) throw DimensionError("adjoint_apply: matrix dimension mismatch");
  Vector out = Vector::Zero(p.n);
  for (const auto& [ij, poly] : p.constraint.entries()) {
    const double w = (ij.first == ij.second ? 1.0 : 2.0) * m(ij.first, ij.second);
    if (w != 0.0) poly.accumulate_gradient(x.data(), w, out.data());
  }
  return out;
}

Matrix equality_jacobian_t(const NsdpProblem& p, const Vector& x) {
  check_point(p, x);
  Matrix w(p.n, static_cast<Eigen::Index>(p.equalities.size()));
  for (std::size_t k = 0; k < p.equalities.size(); ++k)
    w.col(static_cast<Eigen::Index>(k)) = p.equalities[k].eval_gradient(x);
  return w;
}

Vector equality_values(const NsdpProblem& p, const Vector& x) {
  check_point(p, x);
  Vector h(static_cast<Eigen::Index>(p.equalities.size()));
  for (std::size_t k = 0; k < p.equalities.size(); ++k)
    h(static_cast<Eigen::Index>(k)) = p.equalities[k].eval(x);
  return h;
}

std::optional<Partition> detect_blocks(const NsdpProblem& p) {
  const int m = p.m();
  std::vector<int> parent(static_cast<std::size_t>(m));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  };
  for (const auto& [ij, poly] : p.constraint.entries()) {
    const int a = find(ij.first), b = find(ij.second);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < m; ++i) groups[find(i)].push_back(i);
  if (groups.size() == 1) return std::nullopt;
  Partition out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

bool is_structurally_diagonal(const MatrixPoly& g) {
  for (const auto& [ij, poly] : g.entries())
    if (ij.first != ij.second) return false;
  return true;
}

MonomialMatrices monomial_matrices(const MatrixPoly& g) {
  std::map<Exponents, Matrix> acc;
  const int m = g.dim();
  for (const auto& [ij, poly] : g.entries()) {
    for (const Term& t : poly.terms()) {
      auto it = acc.find(t.exps);
      if (it == acc.end()) it = acc.emplace(t.exps, Matrix::Zero(m, m)).first;
      it->second(ij.first, ij.second) = t.coef;
      it->second(ij.second, ij.first) = t.coef;
    }
  }
  MonomialMatrices out;
  for (auto& [e, a] : acc) {
    out.exps.push_back(e);
    out.coefs.push_back(std::move(a));
  }
  return out;
}

MatrixPoly congruence(const MatrixPoly& g, const Matrix& v, double prune) {
  if (v.rows() != g.dim() || v.cols() < 1) throw DimensionError("congruence: basis shape mismatch");
  const int k = static_cast<int>(v.cols());
  const MonomialMatrices mm = monomial_matrices(g);
  std::vector<std::vector<Term>> terms(static_cast<std::size_t>(k * k));
  for (std::size_t t = 0; t < mm.exps.size(); ++t) {
    const Matrix c = v.transpose() * mm.coefs[t] * v;
    for (int a = 0; a < k; ++a)
      for (int b = a; b < k; ++b)
        if (std::abs(c(a, b)) > prune)
          terms[static_cast<std::size_t>(a * k + b)].push_back(Term{c(a, b), mm.exps[t]});
  }
  MatrixPoly out(k, g.n_vars());
  for (int a = 0; a < k; ++a)
    for (int b = a; b < k; ++b)
      out.set(a, b, Poly(g.n_vars(), std::move(terms[static_cast<std::size_t>(a * k + b)])));
  return out;
}

MatrixPoly principal_submatrix(const MatrixPoly& g, const std::vector<int>& idx) {
  MatrixPoly out(static_cast<int>(idx.size()), g.n_vars());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a; b < idx.size(); ++b) {
      const Poly& p = g.entry(idx[a], idx[b]);
      if (!p.is_zero()) out.set(static_cast<int>(a), static_cast<int>(b), p);
    }
  return out;
}

}  // namespace nsdpcq
