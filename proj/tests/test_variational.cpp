#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lfi/mathx.hpp"
#include "lfi/models/conjugate.hpp"
#include "lfi/variational.hpp"

using namespace lfi;
using nd::RngStream;
using nd::Tensor;

TEST_CASE("meanfield normal density and transform") {
  GlobalApprox q(GlobalKind::kMeanfieldNormal, 1, 0.0, 1.0);
  CHECK(q.logpdf({0.0}) == doctest::Approx(-0.918939).epsilon(1e-6));

  // beta = mu + sigma * delta, replaying the stream to recover delta
  GlobalApprox g(GlobalKind::kMeanfieldNormal, 2, 0.0, 1.0);
  g.mu().data = {3.0, -1.0};
  g.log_sigma().data = {std::log(2.0), std::log(0.5)};
  RngStream r(77, 0), replay(77, 0);
  nd::Tape t;
  auto ids = g.lambda_on_tape(t, false);
  auto s = g.sample_on(t, ids, r);
  double d0 = replay.normal(), d1 = replay.normal();
  CHECK(t.value(s.beta).data[0] == doctest::Approx(3.0 + 2.0 * d0).epsilon(1e-15));
  CHECK(t.value(s.beta).data[1] == doctest::Approx(-1.0 + 0.5 * d1).epsilon(1e-15));
  std::vector<double> b{t.value(s.beta).data[0], t.value(s.beta).data[1]};
  CHECK(t.value(s.log_q).data[0] == doctest::Approx(g.logpdf(b)).epsilon(1e-12));
}

TEST_CASE("meanfield lognormal density and transform") {
  GlobalApprox q(GlobalKind::kMeanfieldLognormal, 1, 0.0, 1.0);
  CHECK(q.logpdf({1.0}) == doctest::Approx(-0.918939).epsilon(1e-6));

  RngStream r(78, 0), replay(78, 0);
  nd::Tape t;
  auto ids = q.lambda_on_tape(t, false);
  auto s = q.sample_on(t, ids, r);
  double d0 = replay.normal();
  CHECK(t.value(s.beta).data[0] == doctest::Approx(std::exp(d0)).epsilon(1e-12));
  CHECK(t.value(s.log_q).data[0] ==
        doctest::Approx(q.logpdf({t.value(s.beta).data[0]})).epsilon(1e-12));
  CHECK(t.value(s.beta).data[0] > 0.0);
}

TEST_CASE("point mass returns its location, exposes no density") {
  GlobalApprox q(GlobalKind::kPointMass, 2);
  q.mu().data = {2.0, 3.0};
  RngStream r(79, 0);
  for (int i = 0; i < 3; ++i) {
    auto d = q.sample(r);
    CHECK(d.beta == std::vector<double>{2.0, 3.0});
    CHECK_FALSE(d.log_q.has_value());
  }
  nd::Tape t;
  auto ids = q.lambda_on_tape(t, true);
  auto s = q.sample_on(t, ids, r);
  CHECK(t.value(s.beta).data == std::vector<double>{2.0, 3.0});
  CHECK(s.log_q == nd::Tape::kNone);
  CHECK_THROWS_AS(q.logpdf({2.0, 3.0}), ContractViolation);
  CHECK(q.lambda_params().size() == 1);
}

TEST_CASE("sample moments match the family parameters") {
  int n = 100000;
  GlobalApprox q(GlobalKind::kMeanfieldNormal, 1, 0.0, 1.0);
  q.mu().data = {0.7};
  q.log_sigma().data = {std::log(1.3)};
  RngStream r(80, 0);
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) xs.push_back(q.sample(r).beta[0]);
  double m = nd::mean_of(xs), v = nd::var_of(xs), sd = std::sqrt(v);
  CHECK(std::abs(m - 0.7) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(v - 1.69) < 3.0 * 1.69 * std::sqrt(2.0 / (n - 1.0)));

  GlobalApprox ql(GlobalKind::kMeanfieldLognormal, 1, 0.2, 0.4);
  std::vector<double> ys;
  ys.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ys.push_back(ql.sample(r).beta[0]);
  double lmean = std::exp(0.2 + 0.5 * 0.16);
  double lvar = (std::exp(0.16) - 1.0) * std::exp(2 * 0.2 + 0.16);
  CHECK(std::abs(nd::mean_of(ys) - lmean) <
        3.0 * std::sqrt(lvar / static_cast<double>(n)));
  // variance needs its own spread estimate (fourth moment)
  double vy = nd::var_of(ys), my = nd::mean_of(ys), m4 = 0.0;
  for (double y : ys) m4 += std::pow(y - my, 4.0);
  m4 /= n;
  double se_var = std::sqrt((m4 - vy * vy) / n);
  CHECK(std::abs(vy - lvar) < 3.0 * se_var);
}

TEST_CASE("densities integrate to one") {
  GlobalApprox qn(GlobalKind::kMeanfieldNormal, 1, 0.3, 0.8);
  double mass = 0.0, step = 1e-4;
  for (double x = 0.3 - 6 * 0.8; x <= 0.3 + 6 * 0.8; x += step)
    mass += std::exp(qn.logpdf({x})) * step;
  CHECK(std::abs(mass - 1.0) < 1e-3);

  GlobalApprox ql(GlobalKind::kMeanfieldLognormal, 1, 0.0, 0.5);
  double lo = std::exp(-6 * 0.5), hi = std::exp(6 * 0.5);
  mass = 0.0;
  step = 1e-4;
  for (double x = lo; x <= hi; x += step) mass += std::exp(ql.logpdf({x})) * step;
  CHECK(std::abs(mass - 1.0) < 1e-3);
}

TEST_CASE("pathwise lambda gradients match finite differences") {
  for (GlobalKind kind : {GlobalKind::kMeanfieldNormal, GlobalKind::kMeanfieldLognormal}) {
    GlobalApprox q(kind, 2, 0.1, 0.7);
    q.mu().data = {0.3, -0.2};

    // scalar objective with both a sample path and a density term
    auto eval = [&](bool with_grad, std::vector<Tensor>* grads) {
      RngStream r(91, 4);  // same stream every call: delta is held fixed
      nd::Tape t;
      auto ids = q.lambda_on_tape(t, with_grad);
      auto s = q.sample_on(t, ids, r);
      auto obj = t.add(t.sum(t.square(s.beta)), t.scale(s.log_q, 0.3));
      if (with_grad) *grads = t.gradient(obj, ids);
      return t.value(obj).data[0];
    };
    std::vector<Tensor> grads;
    eval(true, &grads);

    double h = 1e-6;
    auto params = q.lambda_params();
    for (std::size_t pk = 0; pk < params.size(); ++pk) {
      for (std::size_t i = 0; i < params[pk]->data.size(); ++i) {
        double keep = params[pk]->data[i];
        params[pk]->data[i] = keep + h;
        double up = eval(false, nullptr);
        params[pk]->data[i] = keep - h;
        double dn = eval(false, nullptr);
        params[pk]->data[i] = keep;
        double fd = (up - dn) / (2 * h);
        CHECK(std::abs(grads[pk].data[i] - fd) / std::max(1e-3, std::abs(fd)) < 1e-4);
      }
    }
  }
}

TEST_CASE("local approx sampling") {
  LocalApprox loc(2, 3, 1, 0, 16);
  // zero phi: output is identically zero
  for (auto& p : loc.net().params())
    for (auto& v : p.data) v = 0.0;
  RngStream r(95, 0);
  auto z = loc.sample_row({1.0, -2.0, 0.5}, {0.3}, r);
  CHECK(z == std::vector<double>{0.0, 0.0});

  // determinism given the stream
  RngStream a(96, 1), b(96, 1);
  RngStream ir(97, 0);
  loc.net().init_scaled(ir);
  CHECK(loc.sample_row({1, 2, 3}, {0.5}, a) == loc.sample_row({1, 2, 3}, {0.5}, b));

  // noise reaches the output: variance over draws is positive
  std::vector<double> zs;
  for (int i = 0; i < 1000; ++i) zs.push_back(loc.sample_row({1, 2, 3}, {0.5}, r)[0]);
  CHECK(nd::var_of(zs) > 0.0);

  // tape rows agree with plain rows under a replayed stream
  Tensor X = Tensor::zeros({4, 3});
  for (auto& v : X.data) v = r.normal();
  RngStream s1(98, 0), s2(98, 0);
  nd::Tape t;
  auto phi = loc.phi_on_tape(t, false);
  auto beta_id = t.constant(Tensor::row({0.5}));
  auto rows = loc.sample_rows(t, X, beta_id, phi, s1);
  // plain path consumes noise row-by-row in the same order
  for (int i = 0; i < 4; ++i) {
    auto zi = loc.sample_row({X.at(i, 0), X.at(i, 1), X.at(i, 2)}, {0.5}, s2);
    for (int j = 0; j < 2; ++j)
      CHECK(t.value(rows).at(i, j) == doctest::Approx(zi[static_cast<std::size_t>(j)]).epsilon(1e-12));
  }
}

TEST_CASE("entropy term") {
  // point mass + flat prior is exactly zero
  GlobalApprox pm(GlobalKind::kPointMass, 1);
  pm.mu().data = {1.7};
  auto flat = [](const std::vector<double>&) { return 0.0; };
  CHECK(entropy_term(pm, {1.7}, std::nullopt, flat, true) == 0.0);

  // point mass + proper prior returns log p(lambda)
  auto stdn = [](const std::vector<double>& b) { return nd::normal_logpdf(b[0], 0, 1); };
  CHECK(entropy_term(pm, {1.7}, std::nullopt, stdn, false) ==
        doctest::Approx(nd::normal_logpdf(1.7, 0, 1)));

  // q identical to the prior: zero at any beta
  GlobalApprox q(GlobalKind::kMeanfieldNormal, 1, 0.0, 1.0);
  for (double b : {-1.3, 0.0, 2.4})
    CHECK(entropy_term(q, {b}, q.logpdf({b}), stdn, false) == doctest::Approx(0.0).epsilon(1e-12));

  // N(0,1) against an N(0, variance 2) prior at beta = 0
  auto wide = [](const std::vector<double>& b) {
    return nd::normal_logpdf(b[0], 0, std::sqrt(2.0));
  };
  CHECK(entropy_term(q, {0.0}, q.logpdf({0.0}), wide, false) ==
        doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(entropy_term(q, {0.0}, std::nullopt, stdn, false), ContractViolation);
}

TEST_CASE("entropy term on tape matches plain evaluation") {
  NormalNormalModel model;  // standard normal prior
  GlobalApprox q(GlobalKind::kMeanfieldNormal, 1, 0.4, 0.9);
  RngStream r(101, 0);
  nd::Tape t;
  auto ids = q.lambda_on_tape(t, true);
  auto s = q.sample_on(t, ids, r);
  auto e = entropy_term_on(t, model, q, s);
  double beta = t.value(s.beta).data[0];
  auto prior = [&](const std::vector<double>& b) { return model.prior_logpdf(b); };
  CHECK(t.value(e).data[0] ==
        doctest::Approx(entropy_term(q, {beta}, q.logpdf({beta}), prior, false)).epsilon(1e-12));

  GlobalApprox pm(GlobalKind::kPointMass, 1);
  pm.mu().data = {0.8};
  nd::Tape t2;
  auto ids2 = pm.lambda_on_tape(t2, true);
  auto s2 = pm.sample_on(t2, ids2, r);
  auto e2 = entropy_term_on(t2, model, pm, s2);
  CHECK(t2.value(e2).data[0] == doctest::Approx(nd::normal_logpdf(0.8, 0, 1)).epsilon(1e-12));
}

TEST_CASE("jsonl draw serialization") {
  GlobalApprox::Draw d;
  d.beta = {0.5, -1.25};
  d.log_q = -0.918939;
  std::string line = draw_jsonl(d);
  CHECK(line.substr(0, 9) == "{\"beta\":[");
  CHECK(line.find("0.5") != std::string::npos);
  CHECK(line.find("-1.25") != std::string::npos);
  CHECK(line.find("\"log_q\":-0.9189") != std::string::npos);
  CHECK(line.back() == '}');

  GlobalApprox::Draw pm;
  pm.beta = {2.0};
  CHECK(draw_jsonl(pm) == "{\"beta\":[2],\"log_q\":null}");
}
