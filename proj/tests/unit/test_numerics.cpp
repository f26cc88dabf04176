#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "dice/distributions.hpp"
#include "dice/errors.hpp"
#include "dice/mlp.hpp"
#include "dice/optimizer.hpp"
#include "dice/policy.hpp"
#include "dice/rng.hpp"
#include "dice/vec.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dice;

TEST_CASE("rng streams are deterministic and well distributed") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng r(7);
  double mean = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    mean += u;
  }
  CHECK(std::abs(mean / 10000.0 - 0.5) < 0.02);

  for (int i = 0; i < 1000; ++i) {
    double u = r.uniform(-3.0, 5.0);
    CHECK(u >= -3.0);
    CHECK(u < 5.0);
  }

  std::set<int> seen;
  for (int i = 0; i < 10000; ++i) {
    int v = r.uniform_int(7);
    CHECK(v >= 0);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("rng normal has unit moments and fixed stream cost") {
  Rng r(11);
  double m = 0.0, m2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    m += x;
    m2 += x * x;
  }
  m /= n;
  m2 /= n;
  CHECK(std::abs(m) < 0.03);
  CHECK(std::abs(m2 - m * m - 1.0) < 0.05);

  // normal() consumes exactly two u64 draws, so interleaving is predictable.
  Rng a(5), b(5);
  a.normal();
  b.next_u64();
  b.next_u64();
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng shuffle produces a permutation, deterministically") {
  Rng a(3), b(3);
  std::vector<int> va(20), vb(20);
  std::iota(va.begin(), va.end(), 0);
  std::iota(vb.begin(), vb.end(), 0);
  a.shuffle(va);
  b.shuffle(vb);
  CHECK(va == vb);
  std::vector<int> sorted = va;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("fnv1a matches the published test vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("derive_seed separates tags and indices and never collides here") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 100; ++i) {
    seeds.insert(derive_seed(123, "agent", i));
    seeds.insert(derive_seed(123, "team", i));
    seeds.insert(derive_seed(123, "init", i));
  }
  CHECK(seeds.size() == 300);
  // Pure function of its arguments: adding more agents never shifts a stream.
  CHECK(derive_seed(123, "agent", 3) == derive_seed(123, "agent", 3));
  CHECK(derive_seed(123, "agent", 3) != derive_seed(124, "agent", 3));
}

TEST_CASE("param_hash distinguishes contents") {
  ParamVector x{1.0, 2.0, 3.0}, y{1.0, 2.0, 3.0000001};
  CHECK(param_hash(x) == param_hash(ParamVector{1.0, 2.0, 3.0}));
  CHECK(param_hash(x) != param_hash(y));
}

TEST_CASE("mlp forward matches a hand-computed network") {
  Mlp net(2, 2, 1);
  CHECK(net.n_params() == 15);
  // w1 rows (1,0), (0,-1); b1 (0, 0.5); w2 rows (1,1), (0,1); b2 zero;
  // w3 (0.5, 1); b3 0.25.
  ParamVector p{1, 0, 0, -1, 0, 0.5, 1, 1, 0, 1, 0, 0, 0.5, 1, 0.25};
  net.unflatten(p);

  // x = (1, -0.5): h1 = relu(1, 1) = (1, 1); h2 = relu(2, 1) = (2, 1);
  // out = 0.5 * 2 + 1 + 0.25.
  auto out = net.forward({1.0, -0.5});
  REQUIRE(out.size() == 1);
  CHECK(out[0] == doctest::Approx(2.25).epsilon(1e-14));

  // x = (-1, 1) drives both hidden layers to zero: out = b3.
  auto out2 = net.forward({-1.0, 1.0});
  CHECK(out2[0] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("mlp batched forward equals per-row forward") {
  Mlp net(3, 5, 2);
  Rng rng(9);
  net.init(rng);
  std::vector<double> xs;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 4; ++i) {
    std::vector<double> x(3);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    rows.push_back(x);
    xs.insert(xs.end(), x.begin(), x.end());
  }
  MlpCache cache;
  net.forward_batch(xs, 4, cache);
  for (int i = 0; i < 4; ++i) {
    auto single = net.forward(rows[i]);
    for (int j = 0; j < 2; ++j)
      CHECK(cache.out[i * 2 + j] == doctest::Approx(single[j]).epsilon(1e-14));
  }
}

TEST_CASE("mlp backward matches finite differences") {
  Mlp net(3, 4, 2);
  Rng rng(17);
  net.init(rng);
  test::jitter_params(net, rng);
  const int batch = 3;
  std::vector<double> xs(batch * 3), upstream(batch * 2);
  for (double& v : xs) v = rng.uniform(-1.0, 1.0);
  for (double& v : upstream) v = rng.uniform(-1.0, 1.0);
  std::vector<std::vector<double>> rows;
  for (int b = 0; b < batch; ++b)
    rows.emplace_back(xs.begin() + b * 3, xs.begin() + (b + 1) * 3);
  REQUIRE(test::relu_kink_clearance(net, rows) > 1e-4);

  MlpCache cache;
  net.forward_batch(xs, batch, cache);
  std::vector<double> input_grad;
  ParamVector analytic = net.backward(cache, upstream, &input_grad);

  Mlp probe = net;
  auto f = [&](const ParamVector& p) {
    probe.unflatten(p);
    MlpCache c;
    probe.forward_batch(xs, batch, c);
    double s = 0.0;
    for (std::size_t i = 0; i < c.out.size(); ++i) s += upstream[i] * c.out[i];
    return s;
  };
  ParamVector fd = test::finite_diff(f, net.flatten());
  CHECK(test::grad_rel_err(analytic, fd) < 1e-6);

  // Same objective differentiated with respect to the inputs.
  auto fx = [&](const ParamVector& x) {
    MlpCache c;
    net.forward_batch(x, batch, c);
    double s = 0.0;
    for (std::size_t i = 0; i < c.out.size(); ++i) s += upstream[i] * c.out[i];
    return s;
  };
  ParamVector fdx = test::finite_diff(fx, xs);
  CHECK(test::grad_rel_err(input_grad, fdx) < 1e-6);
}

TEST_CASE("mlp flatten round-trips and rejects bad sizes") {
  Mlp net(2, 3, 1);
  Rng rng(1);
  net.init(rng);
  ParamVector p = net.flatten();
  Mlp other(2, 3, 1);
  other.unflatten(p);
  CHECK(other.flatten() == p);
  CHECK_THROWS_AS(other.unflatten(ParamVector(p.size() + 1, 0.0)),
                  ConfigError);
  CHECK_THROWS_AS(net.forward({1.0, 2.0, 3.0}), ConfigError);
}

TEST_CASE("mlp init stays within the fan-in bound and zeroes biases") {
  Mlp net(4, 8, 2);
  Rng rng(2);
  net.init(rng);
  ParamVector p = net.flatten();
  double bound1 = 1.0 / std::sqrt(4.0);
  for (int i = 0; i < 8 * 4; ++i) CHECK(std::abs(p[i]) <= bound1);
  for (int i = 8 * 4; i < 8 * 4 + 8; ++i) CHECK(p[i] == 0.0);
}

TEST_CASE("gaussian densities match frozen references") {
  CHECK(gaussian_log_prob({0.0}, {0.0}, {0.0}) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  CHECK(gaussian_log_prob({0.3, -0.5}, {-0.2, 0.4}, {0.5, 0.1}) ==
        doctest::Approx(-2.1485927739032706).epsilon(1e-14));
  CHECK(gaussian_entropy({0.0}) ==
        doctest::Approx(1.4189385332046727).epsilon(1e-14));
  CHECK(gaussian_entropy({-0.2, 0.4}) ==
        doctest::Approx(3.0378770664093455).epsilon(1e-14));
  CHECK(gaussian_kl({0.3}, {0.1}, {-0.2}, {-0.3}) ==
        doctest::Approx(0.44053531429504755).epsilon(1e-13));
  CHECK(gaussian_kl({0.3, -0.1}, {0.1, 0.2}, {0.3, -0.1}, {0.1, 0.2}) ==
        doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("gaussian kl is nonnegative on random parameters") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> mb{rng.uniform(-2, 2)}, lb{rng.uniform(-1, 1)};
    std::vector<double> mc{rng.uniform(-2, 2)}, lc{rng.uniform(-1, 1)};
    CHECK(gaussian_kl(mb, lb, mc, lc) >= -1e-12);
  }
}

TEST_CASE("gaussian gradient helpers match finite differences") {
  std::vector<double> mean{0.3, -0.5}, ls{-0.2, 0.4}, a{0.5, 0.1};
  auto gm = gaussian_log_prob_grad_mean(mean, ls, a);
  auto gs = gaussian_log_prob_grad_log_std(mean, ls, a);

  auto fm = [&](const ParamVector& m) { return gaussian_log_prob(m, ls, a); };
  auto fs = [&](const ParamVector& l) { return gaussian_log_prob(mean, l, a); };
  CHECK(test::grad_rel_err(gm, test::finite_diff(fm, mean)) < 1e-7);
  CHECK(test::grad_rel_err(gs, test::finite_diff(fs, ls)) < 1e-7);

  std::vector<double> mb{0.1, -0.4}, lb{0.2, -0.1};
  std::vector<double> dm, dl;
  gaussian_kl_grad_c(mb, lb, mean, ls, dm, dl);
  auto fkm = [&](const ParamVector& m) { return gaussian_kl(mb, lb, m, ls); };
  auto fkl = [&](const ParamVector& l) { return gaussian_kl(mb, lb, mean, l); };
  CHECK(test::grad_rel_err(dm, test::finite_diff(fkm, mean)) < 1e-7);
  CHECK(test::grad_rel_err(dl, test::finite_diff(fkl, ls)) < 1e-7);
}

TEST_CASE("categorical helpers match frozen references") {
  std::vector<double> logits{0.2, -0.1, 0.7};
  auto p = softmax(logits);
  CHECK(p[0] == doctest::Approx(0.2950253279368993).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.21856013849825404).epsilon(1e-14));
  CHECK(p[2] == doctest::Approx(0.4864145335648466).epsilon(1e-14));
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-14));

  CHECK(categorical_log_prob(logits, 1) ==
        doctest::Approx(-1.520694068914636).epsilon(1e-13));
  CHECK(categorical_entropy(logits) ==
        doctest::Approx(1.0430548436816889).epsilon(1e-13));
  std::vector<double> pb{0.5, 0.25, 0.25};
  CHECK(categorical_kl(pb, logits) ==
        doctest::Approx(0.1309732980747181).epsilon(1e-13));
  CHECK(categorical_kl(p, logits) == doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("categorical gradient helpers match finite differences") {
  std::vector<double> logits{0.2, -0.1, 0.7};
  std::vector<double> pb{0.5, 0.25, 0.25};

  auto glp = categorical_log_prob_grad(logits, 2);
  auto f1 = [&](const ParamVector& l) { return categorical_log_prob(l, 2); };
  CHECK(test::grad_rel_err(glp, test::finite_diff(f1, logits)) < 1e-7);

  auto gkl = categorical_kl_grad_c(pb, logits);
  auto f2 = [&](const ParamVector& l) { return categorical_kl(pb, l); };
  CHECK(test::grad_rel_err(gkl, test::finite_diff(f2, logits)) < 1e-7);

  auto gh = categorical_entropy_grad(logits);
  auto f3 = [&](const ParamVector& l) { return categorical_entropy(l); };
  CHECK(test::grad_rel_err(gh, test::finite_diff(f3, logits)) < 1e-7);
}

TEST_CASE("sga step is exact ascent and rejects non-finite gradients") {
  ParamVector params{1.0, -2.0};
  OptimizerState opt;
  opt.lr = 0.5;
  apply_gradient(params, {2.0, 4.0}, opt);
  CHECK(params[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(params[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(opt.step == 1);

  ParamVector bad{std::nan(""), 0.0};
  CHECK_THROWS_AS(apply_gradient(params, bad, opt), TrainAbort);
  CHECK(params[0] == doctest::Approx(2.0).epsilon(1e-15));  // untouched
  CHECK_THROWS_AS(apply_gradient(params, {1.0, 2.0, 3.0}, opt), ConfigError);
}

TEST_CASE("adam first step moves by roughly lr in the gradient direction") {
  ParamVector params{0.0, 0.0};
  OptimizerState opt;
  opt.lr = 0.1;
  opt.adam = true;
  apply_gradient(params, {3.0, -2.0}, opt);
  // Bias correction makes the first step lr * g / (|g| + eps).
  CHECK(params[0] == doctest::Approx(0.1).epsilon(1e-7));
  CHECK(params[1] == doctest::Approx(-0.1).epsilon(1e-7));

  // Constant gradient keeps pushing the same way.
  for (int i = 0; i < 10; ++i) apply_gradient(params, {3.0, -2.0}, opt);
  CHECK(params[0] > 0.5);
  CHECK(params[1] < -0.5);
}

TEST_CASE("clip_by_norm rescales only above the threshold") {
  ParamVector g{3.0, 4.0};
  clip_by_norm(g, 2.5);
  CHECK(g[0] == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(2.0).epsilon(1e-14));

  ParamVector small{0.3, 0.4};
  clip_by_norm(small, 2.5);
  CHECK(small[0] == doctest::Approx(0.3).epsilon(1e-15));

  ParamVector untouched{30.0, 40.0};
  clip_by_norm(untouched, 0.0);  // disabled
  CHECK(untouched[0] == doctest::Approx(30.0).epsilon(1e-15));
}

TEST_CASE("policy clamps log-std and masks its gradient at the edges") {
  Policy hi(2, 4, 2, HeadKind::Gaussian, /*log_std_init=*/5.0);
  CHECK(hi.log_std()[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(hi.log_std_grad_mask(0) == 0.0);

  Policy mid(2, 4, 2, HeadKind::Gaussian, /*log_std_init=*/0.0);
  CHECK(mid.log_std()[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(mid.log_std_grad_mask(0) == 1.0);
}

TEST_CASE("policy sampling is deterministic and self-consistent") {
  Policy pi(3, 8, 2, HeadKind::Gaussian);
  Rng init(4);
  pi.init(init);

  Rng a(99), b(99);
  std::vector<double> obs{0.1, -0.6, 0.3};
  double lp_a = 0.0, lp_b = 0.0;
  std::vector<double> head;
  Action act_a = pi.sample(obs, a, &lp_a, &head);
  Action act_b = pi.sample(obs, b, &lp_b);
  CHECK(act_a.cont == act_b.cont);
  CHECK(lp_a == lp_b);
  CHECK(pi.log_prob(head, act_a) == doctest::Approx(lp_a).epsilon(1e-14));
  CHECK(pi.entropy(head) ==
        doctest::Approx(gaussian_entropy(pi.log_std())).epsilon(1e-14));
}

TEST_CASE("policy flatten appends log-std after the body parameters") {
  Policy pi(3, 4, 2, HeadKind::Gaussian, 0.7);
  Rng init(5);
  pi.init(init);
  ParamVector flat = pi.flatten();
  CHECK(static_cast<int>(flat.size()) == pi.net().n_params() + 2);
  CHECK(flat[flat.size() - 1] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(flat[flat.size() - 2] == doctest::Approx(0.7).epsilon(1e-15));

  Policy other(3, 4, 2, HeadKind::Gaussian);
  other.unflatten(flat);
  CHECK(other.flatten() == flat);
  CHECK_THROWS_AS(other.unflatten(ParamVector(3, 0.0)), ConfigError);

  Policy cat(3, 4, 5, HeadKind::Categorical);
  CHECK(cat.n_params() == cat.net().n_params());  // no log-std block
}

TEST_CASE("categorical sampling follows the softmax probabilities") {
  Policy pi(2, 4, 3, HeadKind::Categorical);
  Rng init(6);
  pi.init(init);
  std::vector<double> obs{0.4, -0.2};
  auto probs = softmax(pi.head(obs));
  std::vector<int> counts(3, 0);
  Rng rng(31);
  const int n = 20000;
  for (int i = 0; i < n; ++i) counts[pi.sample(obs, rng).disc] += 1;
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(counts[k] / static_cast<double>(n) - probs[k]) < 0.02);
}
