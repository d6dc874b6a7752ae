#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "spatchgan/optim.hpp"

using namespace spatchgan;

namespace {

struct Fixture {
  Param<double> weight, bias;
  std::vector<ParamRef<double>> refs;

  Fixture() {
    weight.kind = ParamKind::ConvWeight;
    weight.resize(3);
    weight.value = {1.0, -2.0, 0.5};
    bias.kind = ParamKind::Bias;
    bias.resize(2);
    bias.value = {0.25, -0.75};
    refs = {{"w", &weight}, {"b", &bias}};
  }
};

}  // namespace

TEST_CASE("zero learning rate leaves parameters unchanged") {
  Fixture f;
  Adam<double> opt(f.refs, {});
  f.weight.grad = {1.0, 2.0, 3.0};
  f.bias.grad = {4.0, 5.0};
  const auto w0 = f.weight.value;
  const auto b0 = f.bias.value;
  opt.step(0.0);
  CHECK(f.weight.value == w0);
  CHECK(f.bias.value == b0);
  CHECK(opt.steps() == 1);
}

TEST_CASE("decoupled decay shrinks fresh zero-gradient weights exactly") {
  Fixture f;
  AdamConfig<double> cfg;
  cfg.weight_decay = 1e-2;
  Adam<double> opt(f.refs, cfg);
  const auto w0 = f.weight.value;
  const auto b0 = f.bias.value;
  const double lr = 0.1;
  opt.step(lr);  // all gradients zero, moments zero
  for (size_t i = 0; i < w0.size(); ++i)
    CHECK_THAT(f.weight.value[i], Catch::Matchers::WithinULP(w0[i] * (1.0 - lr * 1e-2), 2));
  CHECK(f.bias.value == b0);  // biases never decay
}

TEST_CASE("first step matches the hand-derived Adam update") {
  Fixture f;
  AdamConfig<double> cfg;
  cfg.weight_decay = 0.0;
  Adam<double> opt(f.refs, cfg);
  f.weight.grad = {0.3, -0.7, 0.0};
  const auto w0 = f.weight.value;
  const double lr = 0.01;
  opt.step(lr);
  // At t=1 bias correction cancels the (1-beta) factors: mhat=g, vhat=g^2.
  for (size_t i = 0; i < w0.size(); ++i) {
    const double g = (i == 0) ? 0.3 : (i == 1 ? -0.7 : 0.0);
    const double want = w0[i] - lr * g / (std::sqrt(g * g) + cfg.eps);
    CHECK_THAT(f.weight.value[i], Catch::Matchers::WithinAbs(want, 1e-15));
  }
}

TEST_CASE("zero_grad clears every gradient") {
  Fixture f;
  Adam<double> opt(f.refs, {});
  f.weight.grad = {1, 2, 3};
  f.bias.grad = {4, 5};
  opt.zero_grad();
  for (double g : f.weight.grad) CHECK(g == 0.0);
  for (double g : f.bias.grad) CHECK(g == 0.0);
}

TEST_CASE("moment state is exposed under parameter-derived names") {
  Fixture f;
  Adam<double> opt(f.refs, {});
  std::vector<StateRef<double>> state;
  opt.collect_state(state);
  REQUIRE(state.size() == 4);
  CHECK(state[0].name == "w/adam_m");
  CHECK(state[1].name == "w/adam_v");
  CHECK(state[2].name == "b/adam_m");
  CHECK(state[3].name == "b/adam_v");
  CHECK(state[0].value->size() == 3);

  // Restoring moments and the step counter reproduces the next update.
  f.weight.grad = {0.1, 0.2, 0.3};
  opt.step(0.05);
  std::vector<double> m_snapshot = *state[0].value;
  Fixture g;
  g.weight.value = f.weight.value;
  g.bias.value = f.bias.value;
  Adam<double> opt2(g.refs, {});
  std::vector<StateRef<double>> state2;
  opt2.collect_state(state2);
  *state2[0].value = *state[0].value;
  *state2[1].value = *state[1].value;
  *state2[2].value = *state[2].value;
  *state2[3].value = *state[3].value;
  opt2.set_steps(opt.steps());

  f.weight.grad = {0.4, 0.5, 0.6};
  g.weight.grad = {0.4, 0.5, 0.6};
  opt.step(0.05);
  opt2.step(0.05);
  CHECK(f.weight.value == g.weight.value);
  CHECK(f.bias.value == g.bias.value);
  CHECK(m_snapshot != *state[0].value);  // the step moved the moments
}
