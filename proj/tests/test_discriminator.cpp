// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "asn/discriminator.hpp"
#include "asn/errors.hpp"

using namespace asn;

namespace {

Discriminator zeroed(int classes = 4, LatentMode mode = LatentMode::kl) {
  DiscriminatorConfig cfg;
  cfg.num_classes = classes;
  cfg.latent = mode;
  Discriminator d(cfg, 8);
  torch::NoGradGuard guard;
  d->latent_head()->weight.zero_();
  d->latent_head()->bias.zero_();
  d->class_head()->weight.zero_();
  d->class_head()->bias.zero_();
  return d;
}

}  // namespace

TEST(Discriminator, ZeroInitializedLatentIsStandardNormal) {
  auto d = zeroed();
  const auto g = d->encode_latent(torch::zeros({3, 8}));
  EXPECT_EQ(g.mu.abs().max().item<double>(), 0.0);
  EXPECT_TRUE(torch::allclose(g.sigma(), torch::ones_like(g.sigma())));
  EXPECT_EQ(g.mu.size(1), 64);
}

TEST(Discriminator, SigmaPositiveAndDeterministic) {
  torch::manual_seed(4);
  DiscriminatorConfig cfg;
  Discriminator d(cfg, 8);
  const auto x = torch::randn({16, 8}) * 50;
  const auto a = d->encode_latent(x), b = d->encode_latent(x);
  EXPECT_GT(a.sigma().min().item<double>(), 0.0);
  EXPECT_TRUE(torch::equal(a.mu, b.mu));
  EXPECT_TRUE(torch::equal(a.logvar, b.logvar));
}

TEST(Discriminator, WidthMismatchIsShapeError) {
  DiscriminatorConfig cfg;
  Discriminator d(cfg, 8);
  EXPECT_THROW(d->forward(torch::zeros({2, 7})), ShapeError);
}

TEST(Discriminator, SampleLatentExamples) {
  LatentGaussian g{torch::tensor({1.0, 2.0}), torch::log(torch::tensor({0.25, 4.0}))};
  const auto z = sample_latent(g, torch::tensor({2.0, -1.0}));
  EXPECT_NEAR(z[0].item<double>(), 2.0, 1e-6);
  EXPECT_NEAR(z[1].item<double>(), 0.0, 1e-6);
  EXPECT_TRUE(torch::allclose(sample_latent(g, torch::zeros({2})), g.mu));
  LatentGaussian unit{torch::zeros({3}), torch::zeros({3})};
  const auto eps = torch::tensor({0.3, -1.2, 2.5});
  EXPECT_TRUE(torch::allclose(sample_latent(unit, eps), eps));
}

TEST(Discriminator, ReparameterizationIsDifferentiable) {
  auto mu = torch::tensor({0.5, -0.5}, torch::kDouble).requires_grad_(true);
  auto logvar = torch::tensor({0.1, -0.3}, torch::kDouble).requires_grad_(true);
  const auto eps = torch::tensor({1.5, -2.0}, torch::kDouble);
  sample_latent({mu, logvar}, eps).sum().backward();
  EXPECT_TRUE(torch::allclose(mu.grad(), torch::ones({2}, torch::kDouble)));
  EXPECT_TRUE(torch::allclose(logvar.grad(), 0.5 * torch::exp(0.5 * logvar.detach()) * eps));
}

TEST(Discriminator, ClassifyExamples) {
  auto d = zeroed(4);
  const auto p = d->classify(torch::randn({5, 64}));
  EXPECT_TRUE(torch::allclose(p, torch::full({5, 4}, 0.25)));
  {
    torch::NoGradGuard guard;
    d->class_head()->bias.copy_(torch::tensor({10.0, 0.0, 0.0, 0.0}));
  }
  d->eval();
  const auto q = d->classify(torch::zeros({1, 64}));
  const double z = std::exp(10.0) + 3;
  EXPECT_NEAR(q[0][0].item<double>(), std::exp(10.0) / z, 1e-6);
  EXPECT_NEAR(q[0][1].item<double>(), 1.0 / z, 1e-6);
  EXPECT_NEAR(q[0][0].item<double>(), 0.99986, 1e-5);
}

TEST(Discriminator, RowsSumToOne) {
  torch::manual_seed(6);
  DiscriminatorConfig cfg;
  cfg.num_classes = 3;
  Discriminator d(cfg, 8);
  const auto out = d->forward(torch::randn({32, 8}) * 10);
  EXPECT_LT((out.probs.sum(1) - 1).abs().max().item<double>(), 1e-6);
  EXPECT_GE(out.probs.min().item<double>(), 0.0);
}

TEST(Discriminator, KlClosedFormExamples) {
  EXPECT_NEAR(kl_to_standard_normal({torch::zeros({4}), torch::zeros({4})}).item<double>(), 0.0, 1e-12);
  EXPECT_NEAR(kl_to_standard_normal({torch::ones({1}), torch::zeros({1})}).item<double>(), 0.5, 1e-7);
  torch::manual_seed(7);
  for (int i = 0; i < 100; ++i) {
    LatentGaussian g{torch::randn({6}) * 3, torch::randn({6}) * 2};
    EXPECT_GE(kl_to_standard_normal(g).item<double>(), -1e-7);
  }
}

TEST(Discriminator, KlMatchesNumericalIntegration) {
  for (auto [m, s] : {std::pair{0.3, 0.7}, std::pair{-1.2, 1.9}, std::pair{2.0, 0.2}}) {
    const double closed =
        kl_to_standard_normal({torch::tensor({m}, torch::kDouble), torch::tensor({std::log(s * s)}, torch::kDouble)})
            .item<double>();
    // Trapezoid over +-12 sigma of q.
    const int n = 200000;
    const double lo = m - 12 * s, hi = m + 12 * s, dx = (hi - lo) / n;
    double integral = 0;
    for (int i = 0; i <= n; ++i) {
      const double x = lo + i * dx;
      const double q = std::exp(-0.5 * (x - m) * (x - m) / (s * s)) / (s * std::sqrt(2 * M_PI));
      const double log_q = -0.5 * (x - m) * (x - m) / (s * s) - std::log(s * std::sqrt(2 * M_PI));
      const double log_p = -0.5 * x * x - std::log(std::sqrt(2 * M_PI));
      integral += (i == 0 || i == n ? 0.5 : 1.0) * q * (log_q - log_p) * dx;
    }
    EXPECT_NEAR(closed, integral, 1e-3 * std::abs(integral));
  }
}

TEST(Discriminator, GradientReachesSkillInput) {
  torch::manual_seed(8);
  DiscriminatorConfig cfg;
  cfg.dropout = 0.0;
  Discriminator d(cfg, 8);
  d->to(torch::kDouble);
  auto x = torch::randn({2, 8}, torch::kDouble).requires_grad_(true);
  const auto eps = torch::randn({2, 64}, torch::kDouble);
  auto f = [&](const torch::Tensor& in) { return d->forward(in, eps).probs.select(1, 0).sum(); };
  f(x).backward();
  const auto grad = x.grad().clone();
  EXPECT_GT(grad.abs().max().item<double>(), 0.0);
  torch::NoGradGuard guard;
  const double h = 1e-6;
  for (int j = 0; j < 8; ++j) {
    auto xp = x.detach().clone(), xm = x.detach().clone();
    xp[1][j] += h;
    xm[1][j] -= h;
    const double fd = (f(xp).item<double>() - f(xm).item<double>()) / (2 * h);
    EXPECT_NEAR(grad[1][j].item<double>(), fd, 1e-4 * std::max(1e-3, std::abs(fd)));
  }
}

TEST(Discriminator, DeterministicGivenEpsilonWithoutDropout) {
  torch::manual_seed(9);
  DiscriminatorConfig cfg;
  cfg.dropout = 0.0;
  Discriminator d(cfg, 8);
  const auto x = torch::randn({4, 8});
  const auto eps = torch::randn({4, 64});
  EXPECT_TRUE(torch::equal(d->forward(x, eps).probs, d->forward(x, eps).probs));
  d->eval();
  const auto out = d->forward(x);
  EXPECT_TRUE(torch::equal(out.probs, d->forward(x, torch::zeros({4, 64})).probs));
}

TEST(Discriminator, FcModeHasNoKl) {
  torch::manual_seed(10);
  DiscriminatorConfig cfg;
  cfg.latent = LatentMode::fc;
  Discriminator d(cfg, 8);
  const auto out = d->forward(torch::randn({4, 8}));
  EXPECT_EQ(out.kl.item<double>(), 0.0);
  EXPECT_EQ(out.probs.size(1), 2);
}
