#include "ghostsa/network.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace ghostsa {

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::ellipsoid: return "ellipsoid";
    case Experiment::validation: return "validation";
    case Experiment::multitask: return "multitask";
  }
  return "unknown";
}

Experiment parse_experiment(std::string_view s) {
  if (s == "ellipsoid") return Experiment::ellipsoid;
  if (s == "validation") return Experiment::validation;
  if (s == "multitask") return Experiment::multitask;
  throw ConfigError("unknown experiment '" + std::string(s) + "' (expected ellipsoid|validation|multitask)");
}

std::string_view to_string(LossMode m) { return m == LossMode::squared ? "squared" : "signed"; }

LossMode parse_loss_mode(std::string_view s) {
  if (s == "squared") return LossMode::squared;
  if (s == "signed") return LossMode::signed_residual;
  throw ConfigError("unknown loss mode '" + std::string(s) + "' (expected squared|signed)");
}

void NetSpec::validate() const {
  constexpr std::array<int, 3> inputs{100, 400, 784};
  constexpr std::array<int, 4> hiddens{50, 100, 200, 400};
  if (std::find(inputs.begin(), inputs.end(), input_dim) == inputs.end()) {
    throw ConfigError("network: input_dim must be one of 100, 400, 784");
  }
  if (std::find(hiddens.begin(), hiddens.end(), hidden) == hiddens.end()) {
    throw ConfigError("network: hidden must be one of 50, 100, 200, 400");
  }
  const int want_heads = experiment == Experiment::multitask ? 2 : 1;
  if (heads != want_heads) {
    throw ConfigError("network: experiment " + std::string(to_string(experiment)) + " needs " +
                      std::to_string(want_heads) + " head(s)");
  }
  if (experiment == Experiment::ellipsoid && !(a_w > 0.0 && a_b > 0.0 && c_level > 0.0)) {
    throw ConfigError("network: ellipsoid needs positive a_w, a_b, c_level");
  }
  if (experiment != Experiment::ellipsoid && !threshold) {
    throw ConfigError("network: missing required key 'threshold' for experiment " +
                      std::string(to_string(experiment)));
  }
  if (!(init_scale >= 0.0)) throw ConfigError("network: init_scale must be nonnegative");
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

LossGrad nn_loss_grad(const NetLayout& L, const Vector& params, const Eigen::Ref<const Vector>& input, double label,
                      int head, LossMode mode) {
  if (params.size() != L.size() || input.size() != L.input || head < 0 || head >= L.heads) {
    throw InvalidArgument("nn_loss_grad: shape mismatch");
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> W1(params.data() + L.w1(), L.hidden, L.input);
  const auto b1 = params.segment(L.b1(), L.hidden);
  const auto w2 = params.segment(L.w2(head), L.hidden);
  const double b2 = params(L.b2(head));

  const Vector s = (W1 * input + b1).unaryExpr([](double z) { return sigmoid(z); });
  LossGrad out;
  out.prediction = w2.dot(s) + b2;
  const double r = out.prediction - label;
  double dpred;
  if (mode == LossMode::squared) {
    out.loss = 0.5 * r * r;
    dpred = r;
  } else {
    out.loss = 0.5 * r;
    dpred = 0.5;
  }

  out.grad = Vector::Zero(L.size());
  out.grad.segment(L.w2(head), L.hidden) = dpred * s;
  out.grad(L.b2(head)) = dpred;
  const Vector delta = dpred * w2.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix()));
  out.grad.segment(L.b1(), L.hidden) = delta;
  Eigen::Map<RowMajor> gW1(out.grad.data() + L.w1(), L.hidden, L.input);
  gW1.noalias() = delta * input.transpose();
  return out;
}

std::pair<double, Vector> ellipsoid_constraint(const NetLayout& L, const Vector& params, double a_w, double a_b,
                                               double c_level) {
  const double aw2 = a_w * a_w, ab2 = a_b * a_b;
  Vector grad(L.size());
  double w_sq = 0.0, b_sq = 0.0;
  auto weights = [&](int off, int len) {
    w_sq += params.segment(off, len).squaredNorm();
    grad.segment(off, len) = (2.0 / aw2) * params.segment(off, len);
  };
  auto biases = [&](int off, int len) {
    b_sq += params.segment(off, len).squaredNorm();
    grad.segment(off, len) = (2.0 / ab2) * params.segment(off, len);
  };
  weights(L.w1(), L.hidden * L.input);
  biases(L.b1(), L.hidden);
  weights(L.w2(0), L.heads * L.hidden);
  biases(L.b2(0), L.heads);
  return {w_sq / aw2 + b_sq / ab2 - c_level, grad};
}

NetProblem::NetProblem(NetSpec spec, std::shared_ptr<const Dataset> data)
    : spec_(std::move(spec)), layout_{spec_.input_dim, spec_.hidden, spec_.heads}, data_(std::move(data)) {
  spec_.validate();
  if (!data_) throw ConfigError("network: experiment requires a dataset");
  data_->validate();
  if (data_->input_dim() != spec_.input_dim) {
    throw ConfigError("network: dataset input dimension " + std::to_string(data_->input_dim()) +
                      " does not match input_dim " + std::to_string(spec_.input_dim));
  }
  if (data_->labels.cols() < spec_.heads) throw ConfigError("network: dataset has fewer label columns than heads");
  train_ = data_->indices(Split::train);
  valid_ = data_->indices(Split::validation);
  if (train_.empty()) throw ConfigError("network: dataset has no training rows");
  if (spec_.experiment == Experiment::validation && valid_.empty()) {
    throw ConfigError("network: validation experiment needs validation rows");
  }
}

std::string NetProblem::name() const { return "net_" + std::string(to_string(spec_.experiment)); }

Sample NetProblem::sample(const Vector& x, Rng& rng) const {
  const Dataset& D = *data_;
  auto row = [&](const std::vector<std::size_t>& pool) { return pool[rng() % pool.size()]; };
  auto input = [&](std::size_t i) { return Vector(D.inputs.row(static_cast<Eigen::Index>(i)).transpose()); };
  auto label = [&](std::size_t i, int head) { return D.labels(static_cast<Eigen::Index>(i), head); };

  const std::size_t i = row(train_);
  const Vector in = input(i);
  LossGrad obj = nn_loss_grad(layout_, x, in, label(i, 0), 0, spec_.loss);

  Sample s;
  s.obj_val = obj.loss;
  s.obj_grad = std::move(obj.grad);
  s.cons_vals.resize(1);
  s.cons_jac.resize(1, dim());
  switch (spec_.experiment) {
    case Experiment::ellipsoid: {
      auto [c, g] = ellipsoid_constraint(layout_, x, spec_.a_w, spec_.a_b, spec_.c_level);
      s.cons_vals(0) = c;
      s.cons_jac.row(0) = g.transpose();
      break;
    }
    case Experiment::validation: {
      const std::size_t v = row(valid_);
      LossGrad con = nn_loss_grad(layout_, x, input(v), label(v, 0), 0, spec_.loss);
      s.cons_vals(0) = con.loss - *spec_.threshold;
      s.cons_jac.row(0) = con.grad.transpose();
      break;
    }
    case Experiment::multitask: {
      LossGrad con = nn_loss_grad(layout_, x, in, label(i, 1), 1, spec_.loss);
      s.cons_vals(0) = con.loss - *spec_.threshold;
      s.cons_jac.row(0) = con.grad.transpose();
      break;
    }
  }
  return s;
}

Vector NetProblem::initial_point(Rng& rng) const {
  Vector x(dim());
  for (int j = 0; j < dim(); ++j) x(j) = spec_.init_scale * (2.0 * rng.uniform() - 1.0);
  return x;
}

std::unique_ptr<StochasticProblem> make_problem(const NetSpec& spec, std::shared_ptr<const Dataset> data) {
  return std::make_unique<NetProblem>(spec, std::move(data));
}

}  // namespace ghostsa
