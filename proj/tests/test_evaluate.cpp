#include <doctest.h>

#include <cmath>
#include <limits>

#include "autoeval/evaluate.hpp"
#include "test_util.hpp"

using namespace autoeval;

namespace {

AccuracyVector acc(double overall, std::initializer_list<double> cats) {
  AccuracyVector a;
  a.overall = overall;
  a.per_category.resize(cats.size());
  Eigen::Index i = 0;
  for (double v : cats) a.per_category(i++) = v;
  return a;
}

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TEST_CASE("perfect predictions give zero RMSE") {
  const std::vector<AccuracyVector> t = {acc(0.8, {0.7, 0.9}), acc(0.5, {0.4, 0.6})};
  const EvalReport r = evaluate({"a", "b"}, t, t);
  CHECK(r.overall_rmse_pct == 0.0);
  CHECK(r.category_rmse_pct == 0.0);
  CHECK(r.num_sets == 2);
  CHECK(r.num_category_pairs == 4);
}

TEST_CASE("single-set RMSE is the absolute difference in percent") {
  const EvalReport r =
      evaluate({"a"}, {acc(0.8, {0.8, 0.8})}, {acc(0.7, {0.8, 0.8})});
  CHECK(r.overall_rmse_pct == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("two-set RMSE formula") {
  const EvalReport r = evaluate({"a", "b"}, {acc(0.73, {0.5}), acc(0.54, {0.5})},
                                {acc(0.7, {0.5}), acc(0.5, {0.5})});
  CHECK(r.overall_rmse_pct ==
        doctest::Approx(100.0 * std::sqrt((0.0009 + 0.0016) / 2.0)).epsilon(1e-12));
  CHECK(r.overall_rmse_pct == doctest::Approx(3.5355339059327378).epsilon(1e-9));
}

TEST_CASE("undefined pairs are excluded and counted") {
  // truth category 1 of set a undefined; prediction category 0 of set b nan
  const std::vector<AccuracyVector> truths = {acc(0.8, {0.8, kNan}),
                                              acc(0.6, {0.5, 0.7})};
  const std::vector<AccuracyVector> preds = {acc(0.8, {0.9, 0.2}),
                                             acc(0.6, {kNan, 0.8})};
  const EvalReport r = evaluate({"a", "b"}, preds, truths);
  CHECK(r.num_category_pairs == 2);  // (a,0) and (b,1)
  CHECK(r.num_skipped_category_pairs == 1);  // (b,0)
  CHECK(r.category_rmse_pct ==
        doctest::Approx(100.0 * std::sqrt((0.01 + 0.01) / 2.0)).epsilon(1e-12));
  CHECK(std::isnan(r.per_category_rmse_pct[0]) == false);
}

TEST_CASE("length mismatch is an error") {
  CHECK_THROWS_AS(evaluate({"a"}, {acc(0.5, {0.5, 0.5})}, {}), std::invalid_argument);
}

TEST_CASE("undefined truth overall is an error") {
  CHECK_THROWS_AS(
      evaluate({"a"}, {acc(0.5, {0.5, 0.5})}, {acc(kNan, {0.5, 0.5})}),
      std::invalid_argument);
}

TEST_CASE("report JSON is deterministic") {
  const std::vector<AccuracyVector> t = {acc(0.8, {0.7, 0.9})};
  const std::vector<AccuracyVector> p = {acc(0.75, {0.72, 0.88})};
  EvalReport r = evaluate({"a"}, p, t);
  r.baselines.push_back({"ac", 1.25, 4.5});
  const std::string a = report_to_json(evaluate({"a"}, p, t)).dump(2);
  const std::string b = report_to_json(evaluate({"a"}, p, t)).dump(2);
  CHECK(a == b);
  CHECK(report_to_json(r).dump(2) == report_to_json(r).dump(2));
  CHECK(report_table(r).find("ac") != std::string::npos);
}

TEST_CASE("predictions CSV round-trip including nan") {
  testutil::TempDir dir("pred");
  const std::vector<std::string> ids = {"s1", "s2"};
  const std::vector<AccuracyVector> preds = {acc(0.8125, {0.75, kNan}),
                                             acc(0.4375, {0.5, 0.25})};
  const auto path = dir.path() / "pred.csv";
  write_predictions_csv(ids, preds, path);

  const PredictionsFile file = read_predictions_csv(path);
  CHECK(file.ids == ids);
  CHECK(file.predictions[0].overall == 0.8125);
  CHECK(file.predictions[0].per_category(0) == 0.75);
  CHECK(std::isnan(file.predictions[0].per_category(1)));
  CHECK(file.predictions[1].per_category(1) == 0.25);

  const std::string text = testutil::read_file(path);
  CHECK(text.find("id,overall,a0,a1") == 0);
}
