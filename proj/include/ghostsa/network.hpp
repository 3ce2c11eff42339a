#pragma once

// One-hidden-layer sigmoid network trained under expectation constraints.
//
// Parameter layout (flattened, in this order):
//   W1  hidden x input, row-major (unit h, input i at h * input + i)
//   b1  hidden
//   W2  heads x hidden  (head k occupies [k * hidden, (k + 1) * hidden))
//   b2  heads
// Head k predicts  W2_k . sigmoid(W1 theta + b1) + b2_k.

#include <memory>
#include <optional>
#include <string_view>

#include "ghostsa/dataset.hpp"
#include "ghostsa/problem.hpp"

namespace ghostsa {

enum class Experiment { ellipsoid, validation, multitask };
enum class LossMode { squared, signed_residual };

std::string_view to_string(Experiment e);
Experiment parse_experiment(std::string_view s);
std::string_view to_string(LossMode m);
LossMode parse_loss_mode(std::string_view s);

struct NetSpec {
  int input_dim = 100;
  int hidden = 50;
  int heads = 1;
  Experiment experiment = Experiment::ellipsoid;
  LossMode loss = LossMode::squared;
  double a_w = 2.0;
  double a_b = 1.0;
  double c_level = 5.0;
  std::optional<double> threshold;  // loss bound for validation / multitask
  double init_scale = 0.1;          // starting point drawn uniformly from [-init_scale, init_scale]

  void validate() const;
};

struct NetLayout {
  int input = 0, hidden = 0, heads = 1;

  int w1() const { return 0; }
  int b1() const { return hidden * input; }
  int w2(int head) const { return b1() + hidden + head * hidden; }
  int b2(int head) const { return b1() + hidden + heads * hidden + head; }
  int size() const { return hidden * input + hidden + heads * hidden + heads; }
};

double sigmoid(double z);

struct LossGrad {
  double loss = 0.0;
  Vector grad;
  double prediction = 0.0;
};

/// Loss of one head on one example and its gradient w.r.t. every parameter.
/// squared: 1/2 (pred - y)^2;  signed_residual: 1/2 (pred - y).
LossGrad nn_loss_grad(const NetLayout& layout, const Vector& params, const Eigen::Ref<const Vector>& input,
                      double label, int head, LossMode mode = LossMode::squared);

/// |W|^2 / a_w^2 + |b|^2 / a_b^2 - c_level over all weights and biases, with
/// its exact gradient.
std::pair<double, Vector> ellipsoid_constraint(const NetLayout& layout, const Vector& params, double a_w, double a_b,
                                               double c_level);

/// Network training problem over a dataset.
///   ellipsoid:  F = loss(train row), C = ellipsoid constraint (deterministic)
///   validation: F = loss(train row), C = loss(independent validation row) - threshold
///   multitask:  F = loss_head0(train row), C = loss_head1(same row) - threshold
class NetProblem final : public StochasticProblem {
 public:
  NetProblem(NetSpec spec, std::shared_ptr<const Dataset> data);

  int dim() const override { return layout_.size(); }
  int num_constraints() const override { return 1; }
  std::string name() const override;
  Sample sample(const Vector& x, Rng& rng) const override;
  Vector initial_point(Rng& rng) const override;

  const NetLayout& layout() const { return layout_; }
  const NetSpec& spec() const { return spec_; }

 private:
  NetSpec spec_;
  NetLayout layout_;
  std::shared_ptr<const Dataset> data_;
  std::vector<std::size_t> train_, valid_;
};

std::unique_ptr<StochasticProblem> make_problem(const NetSpec& spec, std::shared_ptr<const Dataset> data);

}  // namespace ghostsa
