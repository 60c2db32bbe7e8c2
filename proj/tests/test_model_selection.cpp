#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "lrb/distributions.hpp"
#include "lrb/errors.hpp"
#include "lrb/model_selection.hpp"

using namespace lrb;

namespace {

Dataset sc1_like(int n, std::uint64_t seed) {
  Rng r(seed);
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x(i) = r.uniform() * 12 - 6;
    y(i) = r.uniform() < norm_cdf(12 + 2 * x(i) - 2 * x(i) * x(i)) ? 1 : 0;
  }
  return make_dataset(y, x, {ColumnMeta{"x"}});
}

Dataset exact_line(int n) {
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x(i) = i * 0.1;
    y(i) = 1.5 - 0.5 * x(i);
  }
  return make_dataset(y, x, {ColumnMeta{"x"}});
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("rank_values orders ascending with label tie-break") {
  CHECK(rank_values({0.3, 0.1, 0.2}, {"a", "b", "c"}) == std::vector<int>{3, 1, 2});
  CHECK(rank_values({0.5, 0.5}, {"m2", "m1"}) == std::vector<int>{2, 1});
  CHECK(rank_values({0.5, 0.5}, {"m1", "m2"}) == std::vector<int>{1, 2});
}

TEST_CASE("cr1 and cr2 examples") {
  CHECK(cr1({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(cr2({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(cr1({1, 2, 3}, {3, 2, 1}) == doctest::Approx(1.0 / 3));
  CHECK(cr2({1, 2, 3}, {3, 2, 1}) == 0.0);
  CHECK(cr1({1, 2, 3}, {1, 3, 2}) == doctest::Approx(1.0 / 3));
  CHECK(cr2({1, 2, 3}, {1, 3, 2}) == doctest::Approx(2.0 / 3));
  // Common relabeling leaves cr2 unchanged.
  CHECK(cr2({2, 3, 1}, {3, 2, 1}) == cr2({3, 1, 2}, {2, 1, 3}));
  CHECK(code_of([] { cr1({1, 2}, {1, 2, 3}); }) == ErrorCode::LengthMismatch);
  CHECK(code_of([] { cr2({1, 2, 2}, {1, 2, 3}); }) == ErrorCode::NotAPermutation);
}

TEST_CASE("zero residual gaussian model scores zero") {
  const Dataset d = exact_line(30);
  const auto spec = make_spec(Family::gaussian, Link::identity, {Term::raw("x")});
  BootstrapOptions o;
  o.B = 20;
  const auto e = estimate_criteria(d, spec, BootstrapMethod::lrb(ResidualKind::pearson, 5), o);
  CHECK(std::abs(e.L) < 1e-20);
  CHECK(std::abs(e.Gamma) < 1e-20);
}

TEST_CASE("gamma criterion needs a recreating method") {
  const Dataset d = sc1_like(200, 3);
  const auto spec = make_spec(Family::binomial, Link::probit, {Term::raw("x")});
  BootstrapOptions o;
  o.B = 10;
  for (auto k : {MethodKind::pairwise, MethodKind::wild, MethodKind::multiplier}) {
    CHECK(code_of([&] { prediction_error(d, spec, BootstrapMethod::of(k), o); }) == ErrorCode::MethodCannotRecreate);
    // The in-sample loss only needs beta*, so it is available.
    CHECK(std::isfinite(in_sample_loss(d, spec, BootstrapMethod::of(k), o)));
  }
  CHECK(code_of([&] {
          rank_models(d, {{"a", spec}, {"b", spec}}, Criterion::Gamma, BootstrapMethod::of(MethodKind::pairwise), o);
        }) == ErrorCode::MethodCannotRecreate);
  CHECK(code_of([&] {
          rank_models(d, {{"a", make_ordinal_spec(3, {Term::raw("x")})}, {"b", spec}}, Criterion::L,
                      BootstrapMethod::lrb(ResidualKind::surrogate, 5), o);
        }) == ErrorCode::UnsupportedModel);
}

TEST_CASE("gaussian in-sample loss at beta_hat is the mean squared error") {
  Rng r(5);
  const int n = 80;
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x(i) = r.normal();
    y(i) = 1 + x(i) + 0.7 * r.normal();
  }
  const Dataset d = make_dataset(y, x, {ColumnMeta{"x"}});
  const auto spec = make_spec(Family::gaussian, Link::identity, {Term::raw("x")});
  const auto method = BootstrapMethod::lrb(ResidualKind::raw, 10);
  const Prepared prep = prepare(d, spec, method, {});
  const auto t = criterion_terms(prep, prep.fit.beta, Replicate{});
  const double mse = (d.y - prep.fit.mu).squaredNorm() / n;
  CHECK(t.term2 == doctest::Approx(mse).epsilon(1e-12));
  CHECK(t.term1 == doctest::Approx(mse).epsilon(1e-12));
  CHECK(t.term3 == 0.0);
}

TEST_CASE("identical specs tie and break by label; order does not matter") {
  const Dataset d = sc1_like(300, 11);
  const auto a = make_spec(Family::binomial, Link::probit, {Term::raw("x")});
  const auto b = make_spec(Family::binomial, Link::probit, {Term::raw("x"), Term::power("x", 2)});
  BootstrapOptions o;
  o.B = 50;
  o.seed = 9;
  const auto method = BootstrapMethod::lrb(ResidualKind::surrogate, 10);

  const auto tie = rank_models(d, {{"m1", a}, {"m2", a}}, Criterion::L, method, o);
  CHECK(tie.L[0] == tie.L[1]);
  CHECK(tie.rank_L == std::vector<int>{1, 2});

  const auto fwd = rank_models(d, {{"lin", a}, {"quad", b}}, Criterion::Gamma, method, o);
  const auto rev = rank_models(d, {{"quad", b}, {"lin", a}}, Criterion::Gamma, method, o);
  CHECK(fwd.L[0] == rev.L[1]);
  CHECK(fwd.Gamma[1] == rev.Gamma[0]);
  CHECK(fwd.rank_L[0] + fwd.rank_L[1] == 3);
  CHECK(fwd.rank_Gamma[0] + fwd.rank_Gamma[1] == 3);

  const auto j = to_json(fwd);
  CHECK(j["models"].size() == 2);
  std::ostringstream table;
  write_table(table, fwd);
  CHECK(table.str().find("quad") != std::string::npos);
}

TEST_CASE("criteria are stable across disjoint seeds at B = 2000") {
  const Dataset d = sc1_like(400, 21);
  const auto spec = make_spec(Family::binomial, Link::probit, {Term::raw("x")});
  const auto method = BootstrapMethod::lrb(ResidualKind::surrogate, 10);
  BootstrapOptions o;
  o.B = 2000;
  o.seed = 1;
  const auto e1 = estimate_criteria(d, spec, method, o);
  o.seed = 2;
  const auto e2 = estimate_criteria(d, spec, method, o);
  CHECK(std::abs(e1.L - e2.L) / e1.L < 0.02);
  CHECK(std::abs(e1.Gamma - e2.Gamma) / e1.Gamma < 0.02);
}

TEST_CASE("lrb optimism is positive on average over SC1-like draws") {
  const auto spec = make_spec(Family::binomial, Link::probit, {Term::raw("x")});
  const auto method = BootstrapMethod::lrb(ResidualKind::surrogate, 10);
  BootstrapOptions o;
  o.B = 500;
  double total = 0;
  for (std::uint64_t s = 1; s <= 4; ++s) {
    o.seed = s;
    total += estimate_criteria(sc1_like(400, 100 + s), spec, method, o).optimism;
  }
  CHECK(total > 0);
}
