#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dpcopula/errors.hpp"
#include "dpcopula/eval.hpp"
#include "dpcopula/pipeline.hpp"
#include "dpcopula/schema_config.hpp"
#include "fixtures.hpp"

using namespace dpcopula;
using namespace dpcopula::testing;

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

TEST_CASE("query enumeration sizes") {
  const GroupMap two(categorical_schema({2, 3}));
  CHECK(enumerate_queries(two, 1).size() == 10);
  const auto q2 = enumerate_queries(two, 2);
  CHECK(q2.size() == 6);
  for (const auto& q : q2) CHECK_FALSE(two.same_attribute(q.columns[0], q.columns[1]));
  CHECK(q2.front() == QuerySpec{2, {0, 2, 0}, 1});
  CHECK(q2.back() == QuerySpec{2, {1, 4, 0}, 1});

  const GroupMap three(categorical_schema({2, 3, 4}));
  CHECK(enumerate_queries(three, 3).size() == 24);
  CHECK(enumerate_queries(three, 2).size() == 6 + 8 + 12);
  CHECK_THROWS_AS(enumerate_queries(three, 4), ConfigError);

  const auto adult = load_schema(DPCOPULA_DATA_DIR "/adult_schema.json");
  CHECK(enumerate_queries(GroupMap(adult), 1).size() == 388);

  // nine groups totalling 1,201 columns
  const GroupMap hospital(categorical_schema({222, 176, 163, 156, 154, 120, 113, 12, 85}));
  CHECK(hospital.width() == 1201);
  CHECK(enumerate_queries(hospital, 2).size() == 626491);
}

TEST_CASE("query evaluation") {
  const auto schema = categorical_schema({2, 2});
  // a0=v1 column [1,1,0], a1=v1 column [1,0,0]
  const auto bds = dummy_encode(from_codes(schema, {{1, 1, 0}, {1, 0, 0}}));
  CHECK(evaluate_query(bds, {1, {1, 0, 0}, 1}) == 2);
  CHECK(evaluate_query(bds, {1, {1, 0, 0}, 0}) == 1);
  CHECK(evaluate_query(bds, {2, {1, 3, 0}, 1}) == 1);

  const auto ds = random_dataset({3, 2, 3}, 20, 12);
  const auto rnd = dummy_encode(ds);
  const auto queries = enumerate_queries(rnd.groups(), 3);
  const auto answers = answer_queries(rnd, queries, 2);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& q = queries[i];
    std::uint64_t oracle = 0;
    for (std::size_t r = 0; r < rnd.rows(); ++r) {
      oracle += rnd.get(r, q.columns[0]) && rnd.get(r, q.columns[1]) && rnd.get(r, q.columns[2]);
    }
    CHECK(answers[i] == static_cast<double>(oracle));
  }
}

TEST_CASE("alpha-beta summaries") {
  const std::vector<double> e{1, 2, 3, 4, 100};
  auto s = alpha_beta_summary(e, 0.2);
  CHECK(s.average == doctest::Approx(2.5));
  CHECK(s.maximum == 4);
  s = alpha_beta_summary(e, 0.0);
  CHECK(s.average == doctest::Approx(22.0));
  CHECK(s.maximum == 100);
  for (double beta : {0.0, 0.01, 0.5}) {
    const auto z = alpha_beta_summary(std::vector<double>(7, 0.0), beta);
    CHECK(z.average == 0.0);
    CHECK(z.maximum == 0.0);
  }
  // 99% of 100 keeps exactly 99 entries
  std::vector<double> hundred(100);
  std::iota(hundred.begin(), hundred.end(), 1.0);
  CHECK(alpha_beta_summary(hundred, 0.01).maximum == 99);
  CHECK(alpha_beta_summary(hundred, 0.05).maximum == 95);
  CHECK_THROWS_AS(alpha_beta_summary({}, 0.1), ConfigError);

  const auto report = ErrorReport::from_answers("dpc", "Q1", hundred, std::vector<double>(100, 0.0));
  CHECK(report.summaries[2].maximum == 100);
  CHECK(report.cdf().size() == 100);
  CHECK(report.cdf()[49] == 50);
  const auto j = report.to_json();
  CHECK(j["alpha_beta"].size() == 3);
}

TEST_CASE("variant names") {
  for (auto v : {Variant::dpc, Variant::cop, Variant::cop_id, Variant::cop_1, Variant::no_cor, Variant::lap}) {
    CHECK(parse_variant(to_string(v)) == v);
  }
  CHECK(parse_variant("lap") == Variant::lap);
  CHECK(parse_variant("COP-ID") == Variant::cop_id);
  CHECK_THROWS_AS(parse_variant("nope"), ConfigError);
}

TEST_CASE("Laplace baseline") {
  const std::vector<double> truth{10, 0, 300, 7};
  const auto exact = laplace_answers(truth, 0.5, NoiseSource::unsafe_zero(), "lap");
  CHECK(exact == truth);
  const auto noisy = laplace_answers(truth, 0.5, NoiseSource::laplace(1), "lap");
  CHECK(noisy != truth);
  CHECK(noisy == laplace_answers(truth, 0.5, NoiseSource::laplace(1), "lap"));

  std::vector<double> zeros(200000, 0.0);
  const auto draws = laplace_answers(zeros, 0.25, NoiseSource::laplace(3), "spread");
  double sq = 0.0;
  for (double x : draws) sq += x * x;
  CHECK(sq / draws.size() == doctest::Approx(2.0 * 16.0).epsilon(0.05));
}

TEST_CASE("cop-ID behaves like the independence answers") {
  const auto ds = planted_dataset(20000, 21);
  const auto bds = dummy_encode(ds);
  const auto q2 = enumerate_queries(bds.groups(), 2);
  const auto truth = answer_queries(bds, q2);
  SynthesisOptions opt;
  opt.seed = 5;
  const auto cop_id = synthesize_variant(Variant::cop_id, ds, bds, opt);
  const auto exact = exact_statistics(ds, bds);
  const auto indep = independence_answers(exact.marginals, bds.rows(), q2);
  const auto sampled = answer_queries(cop_id, q2);
  for (std::size_t i = 0; i < q2.size(); ++i) {
    const double p = indep[i] / bds.rows();
    CHECK(std::fabs(sampled[i] - indep[i]) < 4.0 * std::sqrt(bds.rows() * p * (1 - p)) + 1.0);
  }
  // planted dependence makes both worse than the full copula on average
  const auto cop = answer_queries(synthesize_variant(Variant::cop, ds, bds, opt), q2);
  const auto errors = [&](const std::vector<double>& a) {
    std::vector<double> e(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) e[i] = std::fabs(a[i] - truth[i]);
    return mean_of(e);
  };
  CHECK(errors(cop) < errors(sampled));
  CHECK_THROWS_AS(synthesize_variant(Variant::lap, ds, bds, opt), ConfigError);
}

TEST_CASE("cop-1 drives two balanced columns to comonotone co-occurrence") {
  const auto schema = categorical_schema({2, 2});
  std::vector<std::uint32_t> a;
  std::vector<std::uint32_t> b;
  for (int i = 0; i < 4000; ++i) {
    a.push_back(i % 2);
    b.push_back((i / 2) % 2);
  }
  const auto ds = from_codes(schema, {a, b});
  const auto bds = dummy_encode(ds);
  SynthesisOptions opt;
  opt.seed = 8;
  const auto out = synthesize_variant(Variant::cop_1, ds, bds, opt);
  // columns a0=v1 and a1=v1, each with mean 0.5
  std::size_t both = 0;
  for (std::size_t r = 0; r < out.rows(); ++r) both += out.get(r, 1) && out.get(r, 3);
  CHECK(static_cast<double>(both) / out.rows() == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("correlation split") {
  const auto schema = categorical_schema({2, 2, 2});
  std::vector<std::uint32_t> x;
  std::vector<std::uint32_t> z;
  std::mt19937_64 gen(4);
  for (int i = 0; i < 2000; ++i) {
    x.push_back(static_cast<std::uint32_t>(gen() % 2));
    z.push_back(static_cast<std::uint32_t>(gen() % 2));
  }
  const auto ds = from_codes(schema, {x, x, z});
  const auto bds = dummy_encode(ds);
  const auto q2 = enumerate_queries(bds.groups(), 2);
  const auto pearson = exact_pearson_matrix(ds, bds);
  const auto split = correlation_split(q2, pearson, 0.5);
  REQUIRE(split.high.size() == 4);
  for (auto i : split.high) {
    CHECK(bds.groups().attribute_of(q2[i].columns[0]) == 0);
    CHECK(bds.groups().attribute_of(q2[i].columns[1]) == 1);
  }
  CHECK(split.high.size() + split.low.size() == q2.size());
  CHECK(correlation_split(q2, pearson, 0.0).high.size() == q2.size());

  const auto rnd = random_dataset({3, 4, 2}, 100, 6);
  const auto rb = dummy_encode(rnd);
  const auto rq = enumerate_queries(rb.groups(), 2);
  const auto rs = correlation_split(rq, exact_pearson_matrix(rnd, rb), 0.1);
  CHECK(rs.high.size() + rs.low.size() == rq.size());
}

TEST_CASE("artificial order demo") {
  for (std::size_t n : {2u, 5u, 17u, 100u}) {
    const auto r = artificial_order_demo(n, 1.0);
    CHECK(r.predicted == 2.0);
    CHECK(std::fabs(r.measured - 2.0) < 1e-12);
  }
  const auto five = artificial_order_demo(5, 0.6);
  CHECK(five.predicted == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(five.measured == doctest::Approx(0.4).epsilon(1e-12));
  // y = (3,2,1,4,5) against x = (1..5)
  CHECK(direct_pearson({1, 2, 3, 4, 5}, {3, 2, 1, 4, 5}) == doctest::Approx(0.6));
  CHECK(std::fabs(artificial_order_demo(100000, 0.5).predicted - 0.25) < 1e-4);
  CHECK_THROWS_AS(artificial_order_demo(5, 0.3), ConfigError);
  CHECK_THROWS_AS(artificial_order_demo(5, 0.0), ConfigError);
}
