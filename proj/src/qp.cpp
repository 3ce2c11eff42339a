#include "ghostsa/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace ghostsa {

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

double KktResiduals::max() const { return std::max({stationarity, primal, complementarity, dual_sign}); }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// min 1/2 x' diag(p) x + q'x  s.t.  row_lo <= A x <= row_hi,  lb <= x <= ub.
// Rows of A are pre-scaled to unit norm; row_scale holds the factors applied.
struct SplitProblem {
  Vector p;
  Vector q;
  Matrix A;
  Vector row_lo, row_hi;
  Vector lb, ub;
  Vector row_scale;

  int n() const { return static_cast<int>(q.size()); }
  int k() const { return static_cast<int>(A.rows()); }
};

void equilibrate_rows(SplitProblem& sp) {
  sp.row_scale = Vector::Ones(sp.k());
  for (int i = 0; i < sp.k(); ++i) {
    const double norm = sp.A.row(i).norm();
    if (norm > 0.0) {
      const double s = 1.0 / norm;
      sp.row_scale(i) = s;
      sp.A.row(i) *= s;
      sp.row_lo(i) *= s;
      sp.row_hi(i) *= s;
    }
  }
}

// Solves (diag(D) + A' diag(r) A) x = rhs. When A has no more rows than
// columns the Woodbury identity reduces the work to a k x k factorization.
class KktSolver {
 public:
  void factor(const Vector& D, const Matrix& A, const Vector& r) {
    A_ = &A;
    woodbury_ = A.rows() <= A.cols();
    if (woodbury_) {
      dinv_ = D.cwiseInverse();
      Matrix S = A * dinv_.asDiagonal() * A.transpose();
      S.diagonal() += r.cwiseInverse();
      llt_.compute(S);
    } else {
      Matrix M = A.transpose() * r.asDiagonal() * A;
      M.diagonal() += D;
      llt_.compute(M);
    }
  }

  Vector solve(const Vector& rhs) const {
    if (!woodbury_) return llt_.solve(rhs);
    Vector u = dinv_.cwiseProduct(rhs);
    if (A_->rows() == 0) return u;
    const Vector w = llt_.solve(*A_ * u);
    u -= dinv_.cwiseProduct(A_->transpose() * w);
    return u;
  }

 private:
  const Matrix* A_ = nullptr;
  bool woodbury_ = true;
  Vector dinv_;
  Eigen::LLT<Matrix> llt_;
};

class Admm {
 public:
  Admm(const SplitProblem& sp, const KernelSettings& s) : sp_(sp), s_(s) {
    const int n = sp.n(), k = sp.k();
    x_ = Vector::Zero(n);
    z_rows_ = Vector::Zero(k).cwiseMax(sp.row_lo).cwiseMin(sp.row_hi);
    z_box_ = Vector::Zero(n).cwiseMax(sp.lb).cwiseMin(sp.ub);
    y_rows_ = Vector::Zero(k);
    y_box_ = Vector::Zero(n);
    y_rows_prev_ = y_rows_;
    y_box_prev_ = y_box_;
    rho_scale_ = s.rho;
    set_rho();
  }

  void step() {
    y_rows_prev_ = y_rows_;
    y_box_prev_ = y_box_;
    const Vector rhs = s_.sigma * x_ - sp_.q + sp_.A.transpose() * (rho_rows_.cwiseProduct(z_rows_) - y_rows_) +
                       (rho_box_.cwiseProduct(z_box_) - y_box_);
    const Vector xt = kkt_.solve(rhs);
    const Vector zt_rows = sp_.A * xt;
    const double a = s_.alpha;
    x_ = a * xt + (1.0 - a) * x_;
    const Vector zr = a * zt_rows + (1.0 - a) * z_rows_;
    const Vector zb = a * xt + (1.0 - a) * z_box_;
    Vector zr_new = (zr + y_rows_.cwiseQuotient(rho_rows_)).cwiseMax(sp_.row_lo).cwiseMin(sp_.row_hi);
    Vector zb_new = (zb + y_box_.cwiseQuotient(rho_box_)).cwiseMax(sp_.lb).cwiseMin(sp_.ub);
    y_rows_ += rho_rows_.cwiseProduct(zr - zr_new);
    y_box_ += rho_box_.cwiseProduct(zb - zb_new);
    z_rows_ = std::move(zr_new);
    z_box_ = std::move(zb_new);
    ++iter_;
  }

  struct Residuals {
    double prim, dual, prim_scale, dual_scale;
  };

  Residuals residuals() const {
    const Vector Ax = sp_.A * x_;
    const double prim = std::max(inf_norm(Ax - z_rows_), inf_norm(x_ - z_box_));
    const Vector Aty = sp_.A.transpose() * y_rows_ + y_box_;
    const Vector Px = sp_.p.cwiseProduct(x_);
    const double dual = inf_norm(Px + sp_.q + Aty);
    const double ps = std::max({inf_norm(Ax), inf_norm(x_), inf_norm(z_rows_), inf_norm(z_box_)});
    const double ds = std::max({inf_norm(Px), inf_norm(Aty), inf_norm(sp_.q)});
    return {prim, dual, ps, ds};
  }

  void adapt_rho(const Residuals& r) {
    const double pn = r.prim / std::max(r.prim_scale, 1e-30);
    const double dn = r.dual / std::max(r.dual_scale, 1e-30);
    if (dn <= 0.0 || pn <= 0.0) return;
    const double ratio = std::sqrt(pn / dn);
    if (ratio > 5.0 || ratio < 0.2) {
      rho_scale_ = std::clamp(rho_scale_ * ratio, kRhoMin, kRhoMax);
      set_rho();
    }
  }

  // Farkas-type test on the last dual increment.
  std::optional<Vector> primal_infeasibility_certificate() const {
    const Vector dr = y_rows_ - y_rows_prev_;
    const Vector db = y_box_ - y_box_prev_;
    const double norm = std::max(inf_norm(dr), inf_norm(db));
    if (norm < 1e-10) return std::nullopt;
    const double eps = 1e-6 * norm;
    if (inf_norm(sp_.A.transpose() * dr + db) > eps) return std::nullopt;
    double support = 0.0;
    auto accumulate = [&](const Vector& dy, const Vector& lo, const Vector& hi) {
      for (int i = 0; i < dy.size(); ++i) {
        if (dy(i) > eps) {
          if (!std::isfinite(hi(i))) return false;
          support += hi(i) * dy(i);
        } else if (dy(i) < -eps) {
          if (!std::isfinite(lo(i))) return false;
          support += lo(i) * dy(i);
        }
      }
      return true;
    };
    if (!accumulate(dr, sp_.row_lo, sp_.row_hi) || !accumulate(db, sp_.lb, sp_.ub)) return std::nullopt;
    if (support >= -eps) return std::nullopt;
    Vector cert(dr.size() + db.size());
    cert << dr.cwiseProduct(sp_.row_scale), db;
    return cert;
  }

  const Vector& x() const { return x_; }
  const Vector& z_rows() const { return z_rows_; }
  const Vector& z_box() const { return z_box_; }
  const Vector& y_rows() const { return y_rows_; }
  const Vector& y_box() const { return y_box_; }
  int iter() const { return iter_; }

 private:
  void set_rho() {
    auto pick = [&](double lo, double hi) {
      if (!std::isfinite(lo) && !std::isfinite(hi)) return kRhoMin;
      if (lo == hi) return 1e3 * rho_scale_;
      return rho_scale_;
    };
    rho_rows_.resize(sp_.k());
    for (int i = 0; i < sp_.k(); ++i) rho_rows_(i) = pick(sp_.row_lo(i), sp_.row_hi(i));
    rho_box_.resize(sp_.n());
    for (int j = 0; j < sp_.n(); ++j) rho_box_(j) = pick(sp_.lb(j), sp_.ub(j));
    const Vector D = sp_.p.array() + s_.sigma + rho_box_.array();
    kkt_.factor(D, sp_.A, rho_rows_);
  }

  const SplitProblem& sp_;
  const KernelSettings& s_;
  Vector x_, z_rows_, z_box_, y_rows_, y_box_, y_rows_prev_, y_box_prev_;
  Vector rho_rows_, rho_box_;
  double rho_scale_;
  KktSolver kkt_;
  int iter_ = 0;
};

struct Candidate {
  Vector x, y_rows, y_box;  // y in the scaled row space, OSQP sign convention
};

// With a zero quadratic term the reduced KKT system decouples: the free
// primal coordinates solve the active rows in the minimum-norm sense and the
// active multipliers solve the free stationarity rows in least squares.
std::optional<Candidate> polish_linear(const SplitProblem& sp, Vector x, const std::vector<char>& fixed,
                                       const std::vector<int>& free_idx, const std::vector<int>& act,
                                       const std::vector<double>& target) {
  const int n = sp.n(), k = sp.k();
  const int nf = static_cast<int>(free_idx.size());
  const int na = static_cast<int>(act.size());
  Matrix A_F(na, nf);
  Vector r(na);
  for (int a = 0; a < na; ++a) {
    double fixed_part = 0.0;
    for (int j = 0; j < n; ++j) {
      if (fixed[j]) fixed_part += sp.A(act[a], j) * x(j);
    }
    r(a) = target[a] - fixed_part;
    for (int f = 0; f < nf; ++f) A_F(a, f) = sp.A(act[a], free_idx[f]);
  }
  Vector qF(nf);
  for (int f = 0; f < nf; ++f) qF(f) = sp.q(free_idx[f]);

  Vector xF = Vector::Zero(nf), mu = Vector::Zero(na);
  if (na > 0 && nf > 0) {
    xF = Eigen::CompleteOrthogonalDecomposition<Matrix>(A_F).solve(r);
    mu = Eigen::CompleteOrthogonalDecomposition<Matrix>(A_F.transpose()).solve(-qF);
  }
  if (!xF.allFinite() || !mu.allFinite()) return std::nullopt;
  for (int f = 0; f < nf; ++f) x(free_idx[f]) = xF(f);

  Vector Atmu = Vector::Zero(n);
  for (int a = 0; a < na; ++a) Atmu += mu(a) * sp.A.row(act[a]).transpose();
  Candidate c{x, Vector::Zero(k), Vector::Zero(n)};
  for (int a = 0; a < na; ++a) c.y_rows(act[a]) = mu(a);
  for (int j = 0; j < n; ++j) {
    if (fixed[j]) c.y_box(j) = -(sp.q(j) + Atmu(j));
  }
  return c;
}

// Guesses the active set from the ADMM iterate and solves the reduced
// equality-constrained problem.
std::optional<Candidate> polish(const SplitProblem& sp, const Admm& admm) {
  const int n = sp.n(), k = sp.k();
  const Vector& z_r = admm.z_rows();
  const Vector& z_b = admm.z_box();
  const Vector& y_r = admm.y_rows();
  const Vector& y_b = admm.y_box();

  Vector x(n);
  std::vector<int> free_idx;
  std::vector<char> fixed(n, 0);
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(sp.ub(j)) && sp.ub(j) - z_b(j) < y_b(j)) {
      x(j) = sp.ub(j);
      fixed[j] = 1;
    } else if (std::isfinite(sp.lb(j)) && z_b(j) - sp.lb(j) < -y_b(j)) {
      x(j) = sp.lb(j);
      fixed[j] = 1;
    } else {
      free_idx.push_back(j);
    }
  }
  std::vector<int> act;
  std::vector<double> target;
  for (int i = 0; i < k; ++i) {
    if (std::isfinite(sp.row_hi(i)) && sp.row_hi(i) - z_r(i) < y_r(i)) {
      act.push_back(i);
      target.push_back(sp.row_hi(i));
    } else if (std::isfinite(sp.row_lo(i)) && z_r(i) - sp.row_lo(i) < -y_r(i)) {
      act.push_back(i);
      target.push_back(sp.row_lo(i));
    }
  }

  const int nf = static_cast<int>(free_idx.size());
  const int na = static_cast<int>(act.size());
  Vector mu = Vector::Zero(na);
  const bool linear = (sp.p.array() == 0.0).any();
  if (linear) return polish_linear(sp, x, fixed, free_idx, act, target);
  if (na > 0) {
    Matrix A_F(na, nf);
    Vector r(na);
    for (int a = 0; a < na; ++a) {
      double fixed_part = 0.0;
      for (int j = 0; j < n; ++j) {
        if (fixed[j]) fixed_part += sp.A(act[a], j) * x(j);
      }
      r(a) = target[a] - fixed_part;
      for (int f = 0; f < nf; ++f) A_F(a, f) = sp.A(act[a], free_idx[f]);
    }
    Vector pinv(nf), qF(nf);
    for (int f = 0; f < nf; ++f) {
      pinv(f) = 1.0 / sp.p(free_idx[f]);
      qF(f) = sp.q(free_idx[f]);
    }
    const Matrix G = A_F * pinv.asDiagonal() * A_F.transpose();
    const Vector rhs = -A_F * pinv.cwiseProduct(qF) - r;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(G);
    mu = cod.solve(rhs);
    if (!mu.allFinite()) return std::nullopt;
  }

  Vector Atmu = Vector::Zero(n);
  for (int a = 0; a < na; ++a) Atmu += mu(a) * sp.A.row(act[a]).transpose();
  for (int f : free_idx) x(f) = -(sp.q(f) + Atmu(f)) / sp.p(f);

  Candidate c{x, Vector::Zero(k), Vector::Zero(n)};
  for (int a = 0; a < na; ++a) c.y_rows(act[a]) = mu(a);
  for (int j = 0; j < n; ++j) {
    if (fixed[j]) c.y_box(j) = -(sp.p(j) * x(j) + sp.q(j) + Atmu(j));
  }
  return c;
}

QpSolution to_solution(const SplitProblem& sp, const Vector& x, const Vector& y_rows, const Vector& y_box) {
  QpSolution sol;
  sol.d = x;
  sol.mu = y_rows.cwiseProduct(sp.row_scale);
  sol.box_mult = -y_box;
  return sol;
}

}  // namespace

void validate(const QpSpec& spec) {
  const int n = spec.dim();
  if (spec.A.cols() != n && spec.A.rows() > 0) throw InvalidArgument("QpSpec: A has wrong column count");
  if (spec.b.size() != spec.A.rows()) throw InvalidArgument("QpSpec: b size does not match A rows");
  if (spec.lower.size() != n || spec.upper.size() != n) throw InvalidArgument("QpSpec: box size mismatch");
  if (!(spec.tau >= 0.0)) throw InvalidArgument("QpSpec: tau must be nonnegative");
  if ((spec.lower.array() > spec.upper.array()).any()) throw InvalidArgument("QpSpec: lower > upper");
  if (!spec.q.allFinite() || !spec.A.allFinite() || !spec.b.allFinite()) {
    throw InvalidArgument("QpSpec: non-finite data");
  }
}

KktResiduals kkt_residuals(const QpSpec& spec, const Vector& d, const Vector& mu, const Vector& box_mult) {
  KktResiduals r;
  const int k = spec.rows();
  Vector grad = spec.q + spec.tau * d - box_mult;
  if (k > 0) grad += spec.A.transpose() * mu;
  r.stationarity = inf_norm(grad);

  const Vector slack = k > 0 ? Vector(spec.A * d - spec.b) : Vector();
  for (int i = 0; i < k; ++i) {
    r.primal = std::max(r.primal, slack(i));
    r.dual_sign = std::max(r.dual_sign, -mu(i));
    r.complementarity = std::max(r.complementarity, std::abs(mu(i) * slack(i)));
  }
  for (int j = 0; j < d.size(); ++j) {
    r.primal = std::max({r.primal, spec.lower(j) - d(j), d(j) - spec.upper(j)});
    const double m = box_mult(j);
    // Positive part pairs with the lower bound, negative part with the upper.
    const double lo_gap = std::isfinite(spec.lower(j)) ? d(j) - spec.lower(j) : kInf;
    const double hi_gap = std::isfinite(spec.upper(j)) ? spec.upper(j) - d(j) : kInf;
    if (m > 0.0) {
      r.complementarity = std::max(r.complementarity, std::isfinite(lo_gap) ? std::abs(m * lo_gap) : m);
    } else if (m < 0.0) {
      r.complementarity = std::max(r.complementarity, std::isfinite(hi_gap) ? std::abs(m * hi_gap) : -m);
    }
  }
  return r;
}

QpSolution solve_qp(const QpSpec& spec, const KernelSettings& settings) {
  validate(spec);
  if (!(spec.tau > 0.0)) throw InvalidArgument("solve_qp: tau must be positive");
  const int n = spec.dim(), k = spec.rows();

  SplitProblem sp;
  sp.p = Vector::Constant(n, spec.tau);
  sp.q = spec.q;
  sp.A = k > 0 ? spec.A : Matrix(0, n);
  sp.row_lo = Vector::Constant(k, -kInf);
  sp.row_hi = spec.b;
  sp.lb = spec.lower;
  sp.ub = spec.upper;
  equilibrate_rows(sp);

  Admm admm(sp, settings);
  auto finish = [&](QpSolution sol, SolveStatus status, bool polished) {
    const KktResiduals r = kkt_residuals(spec, sol.d, sol.mu, sol.box_mult);
    sol.status = status;
    sol.primal_res = r.primal;
    sol.dual_res = std::max({r.stationarity, r.complementarity, r.dual_sign});
    sol.iterations = admm.iter();
    sol.polished = polished;
    return sol;
  };

  double polish_at = 1e-3 * std::max(1.0, inf_norm(spec.q));
  QpSolution best;
  double best_res = kInf;
  bool best_polished = false;
  while (admm.iter() < settings.max_iter) {
    admm.step();
    if (admm.iter() % settings.check_every != 0) continue;

    const auto res = admm.residuals();
    if (auto cert = admm.primal_infeasibility_certificate(); cert && admm.iter() > 50) {
      QpSolution sol = to_solution(sp, admm.x(), admm.y_rows(), admm.y_box());
      sol.certificate = *cert;
      return finish(std::move(sol), SolveStatus::infeasible, false);
    }

    QpSolution raw = to_solution(sp, admm.x(), admm.y_rows(), admm.y_box());
    const double raw_res = kkt_residuals(spec, raw.d, raw.mu, raw.box_mult).max();
    if (raw_res < best_res) {
      best = raw;
      best_res = raw_res;
      best_polished = false;
    }

    if (settings.polish && std::max(res.prim, res.dual) <= polish_at) {
      if (auto cand = polish(sp, admm)) {
        QpSolution pol = to_solution(sp, cand->x, cand->y_rows, cand->y_box);
        const double pol_res = kkt_residuals(spec, pol.d, pol.mu, pol.box_mult).max();
        if (pol_res < best_res) {
          best = std::move(pol);
          best_res = pol_res;
          best_polished = true;
        }
      }
      polish_at = std::max(res.prim, res.dual) * 0.1;
    }
    if (best_res <= settings.tol) return finish(std::move(best), SolveStatus::optimal, best_polished);

    if (admm.iter() % settings.adapt_every == 0) admm.adapt_rho(res);
  }
  if (best_res == kInf) best = to_solution(sp, admm.x(), admm.y_rows(), admm.y_box());
  return finish(std::move(best), SolveStatus::max_iter, best_polished);
}

MinMaxResult solve_minmax(const Vector& c, const Matrix& J, double rho, const KernelSettings& settings) {
  if (!(rho > 0.0)) throw InvalidArgument("solve_minmax: rho must be positive");
  const int m = static_cast<int>(c.size());
  if (J.rows() != m) throw InvalidArgument("solve_minmax: J rows must match c");
  const int n = static_cast<int>(J.cols());

  MinMaxResult out;
  out.witness = Vector::Zero(n);
  if (m == 0) {
    out.status = SolveStatus::optimal;
    return out;
  }

  auto upper_value = [&](const Vector& w) { return std::max(0.0, (c + J * w).maxCoeff()); };
  // Any mu >= 0 with sum(mu) <= 1 gives the lower bound mu'c - rho |J'mu|_1.
  auto lower_value = [&](Vector mu) {
    mu = mu.cwiseMax(0.0);
    const double s = mu.sum();
    if (s > 1.0) mu /= s;
    return std::max(0.0, mu.dot(c) - rho * (J.transpose() * mu).lpNorm<1>());
  };

  out.value = upper_value(out.witness);
  out.lower_bound = lower_value(Vector::Zero(m));
  if (out.value - out.lower_bound <= settings.tol) {
    out.status = SolveStatus::optimal;
    return out;
  }

  // Epigraph LP on (d, t): min t  s.t.  J d - t <= -c,  |d| <= rho,  t >= 0.
  SplitProblem sp;
  sp.p = Vector::Zero(n + 1);
  sp.q = Vector::Zero(n + 1);
  sp.q(n) = 1.0;
  sp.A.resize(m, n + 1);
  sp.A.leftCols(n) = J;
  sp.A.col(n).setConstant(-1.0);
  sp.row_lo = Vector::Constant(m, -kInf);
  sp.row_hi = -c;
  sp.lb = Vector::Constant(n + 1, -rho);
  sp.ub = Vector::Constant(n + 1, rho);
  sp.lb(n) = 0.0;
  sp.ub(n) = kInf;
  equilibrate_rows(sp);

  Admm admm(sp, settings);
  double polish_at = 1e-3 * std::max(1.0, out.value);
  while (admm.iter() < settings.max_iter) {
    admm.step();
    if (admm.iter() % settings.check_every != 0) continue;

    const Vector w = admm.x().head(n).cwiseMax(-rho).cwiseMin(rho);
    const double ub = upper_value(w);
    if (ub < out.value) {
      out.value = ub;
      out.witness = w;
    }
    out.lower_bound = std::max(out.lower_bound, lower_value(admm.y_rows().cwiseProduct(sp.row_scale)));
    if (settings.polish && out.value - out.lower_bound <= polish_at) {
      if (auto cand = polish(sp, admm)) {
        const Vector pw = cand->x.head(n).cwiseMax(-rho).cwiseMin(rho);
        const double pub = upper_value(pw);
        if (pub < out.value) {
          out.value = pub;
          out.witness = pw;
        }
        out.lower_bound = std::max(out.lower_bound, lower_value(cand->y_rows.cwiseProduct(sp.row_scale)));
      }
      polish_at = (out.value - out.lower_bound) * 0.1;
    }
    if (out.value - out.lower_bound <= settings.tol) {
      out.status = SolveStatus::optimal;
      out.iterations = admm.iter();
      return out;
    }
    if (admm.iter() % settings.adapt_every == 0) admm.adapt_rho(admm.residuals());
  }
  out.status = SolveStatus::max_iter;
  out.iterations = admm.iter();
  return out;
}

}  // namespace ghostsa
