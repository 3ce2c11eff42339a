#include "ghostsa/synthetic.hpp"

#include <string>

namespace ghostsa {

std::string_view to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::quadratic_affine: return "quadratic_affine";
    case SyntheticKind::finite_support: return "finite_support";
    case SyntheticKind::circle_toy: return "circle_toy";
  }
  return "unknown";
}

SyntheticKind parse_synthetic_kind(std::string_view s) {
  if (s == "quadratic_affine") return SyntheticKind::quadratic_affine;
  if (s == "finite_support") return SyntheticKind::finite_support;
  if (s == "circle_toy") return SyntheticKind::circle_toy;
  throw ConfigError("unknown synthetic problem kind '" + std::string(s) + "'");
}

namespace {

void add_noise(Vector& v, double scale, Rng& rng) {
  if (scale == 0.0) return;
  for (int j = 0; j < v.size(); ++j) v(j) += scale * rng.normal();
}

class QuadraticAffine final : public StochasticProblem {
 public:
  explicit QuadraticAffine(const SyntheticSpec& spec) : noise_(spec.noise) {
    Rng rng(derive_seed(spec.seed, 0x9a));
    h_.resize(spec.n);
    a_.resize(spec.n);
    for (int j = 0; j < spec.n; ++j) {
      h_(j) = 1.0 + 2.0 * rng.uniform();
      a_(j) = -2.0 + 4.0 * rng.uniform();
    }
    A_.resize(spec.m, spec.n);
    for (int i = 0; i < spec.m; ++i)
      for (int j = 0; j < spec.n; ++j) A_(i, j) = rng.normal();
    b_ = A_ * a_ - Vector::Constant(spec.m, spec.slack);
  }

  int dim() const override { return static_cast<int>(a_.size()); }
  int num_constraints() const override { return static_cast<int>(b_.size()); }
  std::string name() const override { return "quadratic_affine"; }

  Sample sample(const Vector& x, Rng& rng) const override {
    const ExactValues ex = *exact(x);
    Sample s{ex.grad_F, ex.C, ex.jac_C, ex.F};
    if (noise_ > 0.0) {
      Vector xi = Vector::Zero(dim());
      add_noise(xi, noise_, rng);
      s.obj_grad += xi;
      s.obj_val += xi.dot(x);
      add_noise(s.cons_vals, noise_, rng);
      for (int i = 0; i < s.cons_jac.rows(); ++i) {
        Vector row = Vector::Zero(dim());
        add_noise(row, noise_, rng);
        s.cons_jac.row(i) += row.transpose();
      }
    }
    return s;
  }

  std::optional<ExactValues> exact(const Vector& x) const override {
    const Vector r = x - a_;
    return ExactValues{0.5 * r.dot(h_.cwiseProduct(r)), A_ * x - b_, h_.cwiseProduct(r), A_};
  }

 private:
  double noise_;
  Vector h_, a_, b_;
  Matrix A_;
};

Sample finite_support_sample(const Vector& x, double noise, double s1, double s2) {
  Sample s;
  s.obj_grad = Vector(2);
  s.obj_grad << x(0) - 2.0 + noise * s1, x(1) - 1.0 + noise * s2;
  s.obj_val = 0.5 * ((x(0) - 2.0) * (x(0) - 2.0) + (x(1) - 1.0) * (x(1) - 1.0)) + noise * (s1 * x(0) + s2 * x(1));
  s.cons_vals = Vector::Constant(1, x.squaredNorm() - 1.0 + noise * s1 * s2);
  s.cons_jac = Matrix(1, 2);
  s.cons_jac << 2.0 * x(0) + noise * s2, 2.0 * x(1) - noise * s1;
  return s;
}

class FiniteSupport final : public StochasticProblem {
 public:
  explicit FiniteSupport(double noise) : noise_(noise) {}

  int dim() const override { return 2; }
  int num_constraints() const override { return 1; }
  std::string name() const override { return "finite_support"; }

  Sample sample(const Vector& x, Rng& rng) const override {
    const std::uint64_t bits = rng();
    return finite_support_sample(x, noise_, (bits & 1) ? 1.0 : -1.0, (bits & 2) ? 1.0 : -1.0);
  }

  std::optional<ExactValues> exact(const Vector& x) const override {
    const SubproblemData d = mean_stats(finite_support_points(x, noise_));
    return ExactValues{d.f, d.c, d.g, d.J};
  }

 private:
  double noise_;
};

class CircleToy final : public StochasticProblem {
 public:
  explicit CircleToy(double noise) : noise_(noise) {}

  int dim() const override { return 2; }
  int num_constraints() const override { return 1; }
  std::string name() const override { return "circle_toy"; }

  Sample sample(const Vector& x, Rng& rng) const override {
    const ExactValues ex = *exact(x);
    Sample s{ex.grad_F, ex.C, ex.jac_C, ex.F};
    if (noise_ > 0.0) {
      Vector xi = Vector::Zero(2);
      add_noise(xi, noise_, rng);
      s.obj_grad += xi;
      s.obj_val += xi.dot(x);
      Vector zeta = Vector::Zero(2);
      add_noise(zeta, noise_, rng);
      s.cons_jac.row(0) += zeta.transpose();
    }
    return s;
  }

  std::optional<ExactValues> exact(const Vector& x) const override {
    ExactValues ex;
    const double u = x(0) - 2.0, v = x(1) - 2.0;
    ex.F = u * u + v * v;
    ex.grad_F = Vector(2);
    ex.grad_F << 2.0 * u, 2.0 * v;
    ex.C = Vector::Constant(1, x.squaredNorm() - 1.0);
    ex.jac_C = 2.0 * x.transpose();
    return ex;
  }

 private:
  double noise_;
};

}  // namespace

std::vector<Sample> finite_support_points(const Vector& x, double noise) {
  std::vector<Sample> pts;
  for (double s2 : {-1.0, 1.0})
    for (double s1 : {-1.0, 1.0}) pts.push_back(finite_support_sample(x, noise, s1, s2));
  return pts;
}

std::unique_ptr<StochasticProblem> make_problem(const SyntheticSpec& spec) {
  if (!(spec.noise >= 0.0)) throw ConfigError("synthetic problem: noise must be nonnegative");
  switch (spec.kind) {
    case SyntheticKind::quadratic_affine:
      if (spec.n < 1 || spec.m < 0) throw ConfigError("quadratic_affine: need n >= 1 and m >= 0");
      return std::make_unique<QuadraticAffine>(spec);
    case SyntheticKind::finite_support:
      if (spec.n != 2 || spec.m != 1) throw ConfigError("finite_support: dimensions are fixed at n = 2, m = 1");
      return std::make_unique<FiniteSupport>(spec.noise);
    case SyntheticKind::circle_toy:
      if (spec.n != 2 || spec.m != 1) throw ConfigError("circle_toy: dimensions are fixed at n = 2, m = 1");
      return std::make_unique<CircleToy>(spec.noise);
  }
  throw ConfigError("unknown synthetic problem kind");
}

}  // namespace ghostsa
