#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "lrb/bootstrap.hpp"
#include "lrb/distributions.hpp"
#include "lrb/errors.hpp"
#include "oracles.hpp"

using namespace lrb;

namespace {

Dataset probit_data(int n, std::uint64_t seed) {
  Rng r(seed);
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x(i) = r.uniform() * 12 - 6;
    y(i) = r.uniform() < norm_cdf(12 + 2 * x(i) - 2 * x(i) * x(i)) ? 1 : 0;
  }
  return make_dataset(y, x, {ColumnMeta{"x"}});
}

ModelSpec binary(Link link = Link::probit) { return make_spec(Family::binomial, link, {Term::raw("x")}); }

}  // namespace

TEST_CASE("se_estimate examples") {
  Eigen::MatrixXd r(2, 1);
  r << 0, 2;
  CHECK(se_estimate(r)(0) == 1.0);
  CHECK(se_estimate(Eigen::MatrixXd::Constant(5, 1, 3.0))(0) == 0.0);
  Rng g(1);
  Eigen::MatrixXd v(100, 1);
  std::vector<double> vv;
  for (int i = 0; i < 100; ++i) vv.push_back(v(i, 0) = g.normal() * 3 + 10);
  CHECK(std::abs(se_estimate(v)(0) - oracle::sd_two_pass(vv)) < 1e-12);
  CHECK_THROWS_AS(se_estimate(Eigen::MatrixXd::Zero(1, 1)), Error);
}

TEST_CASE("percentile intervals") {
  Eigen::MatrixXd r(100, 1);
  for (int i = 0; i < 100; ++i) r(i, 0) = (i + 1) / 100.0;
  auto ci = ci_percentile(r, 0.10);
  CHECK(ci(0, 0) == doctest::Approx(0.0595).epsilon(1e-12));
  CHECK(ci(0, 1) == doctest::Approx(0.9505).epsilon(1e-12));
  auto c = ci_percentile(Eigen::MatrixXd::Constant(10, 1, 2.5), 0.05);
  CHECK(c(0, 0) == 2.5);
  CHECK(c(0, 1) == 2.5);
  auto med = ci_percentile(r, 1.0);
  CHECK(med(0, 0) == doctest::Approx(0.505));
  CHECK(med(0, 1) == med(0, 0));
}

TEST_CASE("p-values") {
  Eigen::VectorXd pos(3);
  pos << 0.5, 1, 2;
  CHECK(p_value(pos, 0.0, Alternative::greater) == 0.0);
  Eigen::VectorXd sym(4);
  sym << -2, -1, 1, 2;
  CHECK(p_value(sym, 0.0, Alternative::two_sided) == 1.0);
  Eigen::VectorXd v(4);
  v << -1, 1, 2, 3;
  CHECK(p_value(v, 0.0, Alternative::two_sided) == 0.5);
  CHECK(p_value(v, 0.0, Alternative::less) == 0.75);
}

TEST_CASE("normal interval is centered at the estimate") {
  Eigen::Vector2d est(1.0, -2.0), se(0.5, 0.1);
  auto ci = ci_normal(est, se, 0.05);
  const double z = norm_quantile(0.975);
  for (int k = 0; k < 2; ++k) {
    CHECK(0.5 * (ci(k, 0) + ci(k, 1)) == doctest::Approx(est(k)).epsilon(1e-15));
    CHECK(ci(k, 1) - ci(k, 0) == doctest::Approx(2 * z * se(k)).epsilon(1e-14));
  }
}

TEST_CASE("lrb with l = n reproduces the classical residual bootstrap") {
  auto data = probit_data(120, 3);
  BootstrapOptions opt;
  opt.B = 30;
  opt.seed = 99;
  for (auto kind : {ResidualKind::surrogate, ResidualKind::pearson, ResidualKind::sbs}) {
    auto a = run(data, binary(), BootstrapMethod::lrb(kind, 120), opt);
    auto b = run(data, binary(), BootstrapMethod::classical(kind), opt);
    CHECK(a.replicates == b.replicates);
  }
}

TEST_CASE("zero residuals give zero spread") {
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(30, 0, 3);
  Eigen::VectorXd y = (1.0 + 2.0 * x.array()).matrix();
  auto data = make_dataset(y, x, {ColumnMeta{"x"}}, false);
  auto spec = make_spec(Family::gaussian, Link::identity, {Term::raw("x")});
  BootstrapOptions opt;
  opt.B = 20;
  auto out = run(data, spec, BootstrapMethod(MethodKind::lrb, ResidualKind::raw, 5), opt);
  CHECK(out.se_hat.cwiseAbs().maxCoeff() < 1e-12);
  for (Eigen::Index b = 0; b < out.replicates.rows(); ++b)
    CHECK((out.replicates.row(b).transpose() - out.estimate).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("results do not depend on thread count") {
  auto data = probit_data(200, 5);
  BootstrapOptions opt;
  opt.B = 40;
  opt.threads = 1;
  for (auto m : {BootstrapMethod::lrb(ResidualKind::surrogate, 10), BootstrapMethod::of(MethodKind::pairwise),
                 BootstrapMethod::of(MethodKind::multiplier), BootstrapMethod::of(MethodKind::parametric)}) {
    auto a = run(data, binary(), m, opt);
    BootstrapOptions o4 = opt;
    o4.threads = 4;
    auto b = run(data, binary(), m, o4);
    CHECK(a.replicates == b.replicates);
    CHECK(a.se_hat == b.se_hat);
  }
}

TEST_CASE("pairwise rows are original rows; wild draws center on the fit") {
  auto data = probit_data(150, 7);
  BootstrapOptions opt;
  auto prep = prepare(data, binary(), BootstrapMethod::of(MethodKind::pairwise), opt);
  Resampler pairwise(prep, BootstrapMethod::of(MethodKind::pairwise));
  Rng rng(1);
  auto rep = pairwise.draw(rng);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) CHECK(rep.y(static_cast<Eigen::Index>(i)) == data.y(static_cast<Eigen::Index>(rep.rows[i])));

  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(20, -1, 1);
  Rng g(2);
  Eigen::VectorXd yg(20);
  for (int i = 0; i < 20; ++i) yg(i) = x(i) * x(i) + g.normal();
  auto gdata = make_dataset(yg, x, {ColumnMeta{"x"}});
  auto gspec = make_spec(Family::gaussian, Link::identity, {Term::raw("x")});
  auto gprep = prepare(gdata, gspec, BootstrapMethod::of(MethodKind::wild), opt);
  Resampler wild(gprep, BootstrapMethod::of(MethodKind::wild));
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(20);
  const int R = 10000;
  for (int b = 0; b < R; ++b) sum += wild.draw(rng).y;
  for (int i = 0; i < 20; ++i) {
    const double se = std::abs(yg(i) - gprep.fit.mu(i)) / std::sqrt(R);
    CHECK(std::abs(sum(i) / R - gprep.fit.eta(i)) <= 3 * se + 1e-12);
  }
}

TEST_CASE("method compatibility") {
  auto data = probit_data(80, 2);
  BootstrapOptions opt;
  opt.B = 5;
  try {
    run(data, binary(), BootstrapMethod::lrb(ResidualKind::raw, 5), opt);
    FAIL("expected IncompatibleResidual");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IncompatibleResidual);
  }
  CHECK_THROWS_AS(run(data, binary(), BootstrapMethod::lrb(ResidualKind::surrogate, 0), opt), Error);
}

TEST_CASE("too many failures abort") {
  // near-separated data: most pairwise resamples separate
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(12, 0, 1);
  Eigen::VectorXd y(12);
  y << 0, 0, 0, 0, 0, 1, 0, 1, 1, 1, 1, 1;
  auto data = make_dataset(y, x, {ColumnMeta{"x"}});
  BootstrapOptions opt;
  opt.B = 50;
  try {
    run(data, binary(Link::logit), BootstrapMethod::of(MethodKind::pairwise), opt);
    FAIL("expected TooManyFailures");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooManyFailures);
  }
}

TEST_CASE("correct model: lrb and parametric agree") {
  Rng r(31);
  const int n = 1000;
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x(i) = r.uniform() * 12 - 6;
    y(i) = r.uniform() < norm_cdf(1 + 0.5 * x(i)) ? 1 : 0;
  }
  auto data = make_dataset(y, x, {ColumnMeta{"x"}});
  BootstrapOptions opt;
  opt.B = 400;
  auto a = run(data, binary(), BootstrapMethod::lrb(ResidualKind::surrogate, 10), opt);
  auto b = run(data, binary(), BootstrapMethod::of(MethodKind::parametric), opt);
  CHECK(std::abs(a.se_hat(1) / b.se_hat(1) - 1.0) < 0.15);
}

TEST_CASE("serialization") {
  auto data = probit_data(100, 4);
  BootstrapOptions opt;
  opt.B = 10;
  auto out = run(data, binary(), BootstrapMethod::lrb(ResidualKind::surrogate, 8), opt);
  auto j = to_json(out, true);
  CHECK(j["provenance"]["method"] == "lrb");
  CHECK(j["provenance"]["l"] == 8);
  CHECK(j["replicates"].size() == out.replicates.rows());
  std::ostringstream os;
  write_summary_csv(os, out);
  CHECK(os.str().rfind("coefficient,estimate,se_hat,ci_nor_lo,ci_nor_hi,ci_per_lo,ci_per_hi,p_two_sided\n", 0) == 0);
  auto raw = back_transformed(out, build_design(data, binary()));
  CHECK(raw.se_hat(1) == doctest::Approx(out.se_hat(1) / data.columns[0].scale).epsilon(1e-10));
}
