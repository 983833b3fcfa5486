#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "autoeval/data.hpp"
#include "autoeval/random.hpp"
#include "test_util.hpp"

using namespace autoeval;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("confidence matrix validation") {
  Eigen::MatrixXd ok(3, 2);
  ok << 0.9, 0.1, 0.2, 0.8, 0.6, 0.4;
  CHECK_NOTHROW(ConfidenceMatrix::validated(ok));

  Eigen::MatrixXd two_rows(2, 2);
  two_rows << 0.9, 0.1, 0.2, 0.8;
  CHECK_THROWS_AS(ConfidenceMatrix::validated(two_rows), std::invalid_argument);

  Eigen::MatrixXd one_col(3, 1);
  one_col << 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(ConfidenceMatrix::validated(one_col), std::invalid_argument);

  Eigen::MatrixXd bad_sum = ok;
  bad_sum(1, 1) = 0.6;  // row sums to 0.8
  CHECK_THROWS_WITH_AS(ConfidenceMatrix::validated(bad_sum),
                       doctest::Contains("row-sum violation"), std::invalid_argument);

  Eigen::MatrixXd negative = ok;
  negative(0, 0) = -0.1;
  CHECK_THROWS_AS(ConfidenceMatrix::validated(negative), std::invalid_argument);
}

TEST_CASE("row renormalization within tolerance") {
  Eigen::MatrixXd near(3, 2);
  near << 0.9000001, 0.1, 0.2, 0.8, 0.5, 0.5;
  const ConfidenceMatrix m = ConfidenceMatrix::validated(near);
  CHECK(m.values().row(0).sum() == doctest::Approx(1.0).epsilon(1e-14));
  // rows already summing to 1 are left untouched
  CHECK(m.values()(2, 0) == 0.5);
}

TEST_CASE("compute_accuracy on the worked examples") {
  SUBCASE("all argmax correct") {
    Eigen::MatrixXd z(3, 2);
    z << 0.9, 0.1, 0.2, 0.8, 0.6, 0.4;
    const auto acc = compute_accuracy(ConfidenceMatrix::validated(z), {0, 1, 0});
    CHECK(acc.overall == 1.0);
    CHECK(acc.per_category(0) == 1.0);
    CHECK(acc.per_category(1) == 1.0);
  }

  SUBCASE("tie breaks to the lowest index") {
    Eigen::MatrixXd z(3, 2);
    z << 0.5, 0.5, 0.9, 0.1, 0.9, 0.1;
    const auto acc = compute_accuracy(ConfidenceMatrix::validated(z), {1, 0, 0});
    CHECK(acc.overall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(acc.per_category(0) == 1.0);
    CHECK(acc.per_category(1) == 0.0);
  }

  SUBCASE("absent category is undefined") {
    Eigen::MatrixXd z(3, 2);
    z << 0.9, 0.1, 0.8, 0.2, 0.6, 0.4;
    const auto acc = compute_accuracy(ConfidenceMatrix::validated(z), {0, 0, 0});
    CHECK(is_defined(acc.per_category(0)));
    CHECK_FALSE(is_defined(acc.per_category(1)));
  }

  SUBCASE("label length mismatch") {
    Eigen::MatrixXd z(3, 2);
    z << 0.9, 0.1, 0.2, 0.8, 0.6, 0.4;
    CHECK_THROWS_AS(compute_accuracy(ConfidenceMatrix::validated(z), {0, 1}),
                    std::invalid_argument);
  }
}

TEST_CASE("overall accuracy is the count-weighted mean of category accuracies") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 5 + Eigen::Index(rng.next() % 40);
    const Eigen::Index c = 2 + Eigen::Index(rng.next() % 6);
    const ConfidenceMatrix m = testutil::random_confidence(n, c, rng);
    std::vector<int> labels(n);
    for (auto& y : labels) y = int(rng.next() % c);

    const AccuracyVector acc = compute_accuracy(m, labels);
    double weighted = 0.0;
    for (Eigen::Index k = 0; k < c; ++k) {
      const auto count = std::count(labels.begin(), labels.end(), int(k));
      if (count > 0) weighted += acc.per_category(k) * double(count) / double(n);
    }
    CHECK(std::abs(weighted - acc.overall) < 1e-12);
  }
}

TEST_CASE("accuracy is invariant under identical row permutation") {
  SplitMix64 rng(13);
  const ConfidenceMatrix m = testutil::random_confidence(17, 4, rng);
  std::vector<int> labels(17);
  for (auto& y : labels) y = int(rng.next() % 4);
  const AccuracyVector base = compute_accuracy(m, labels);

  std::vector<int> perm(17);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = 16; i > 0; --i) std::swap(perm[i], perm[rng.next() % (i + 1)]);

  Eigen::MatrixXd pz(17, 4);
  std::vector<int> plabels(17);
  for (int i = 0; i < 17; ++i) {
    pz.row(i) = m.values().row(perm[i]);
    plabels[i] = labels[perm[i]];
  }
  const AccuracyVector permuted =
      compute_accuracy(ConfidenceMatrix::validated(pz), plabels);
  CHECK(permuted.overall == base.overall);
  for (Eigen::Index k = 0; k < 4; ++k) {
    if (is_defined(base.per_category(k))) {
      CHECK(permuted.per_category(k) == base.per_category(k));
    } else {
      CHECK_FALSE(is_defined(permuted.per_category(k)));
    }
  }
}

TEST_CASE("confidence CSV parsing") {
  testutil::TempDir dir("csv");

  SUBCASE("labeled file") {
    write_file(dir.path() / "a.csv", "label,c0,c1\n0,0.9,0.1\n1,0.2,0.8\n0,0.6,0.4\n");
    const MetaSet set = load_confidence_csv(dir.path() / "a.csv");
    CHECK(set.id == "a");
    CHECK(set.matrix.num_instances() == 3);
    CHECK(set.matrix.num_categories() == 2);
    REQUIRE(set.labels.has_value());
    CHECK(*set.labels == std::vector<int>{0, 1, 0});
    REQUIRE(set.accuracy.has_value());
    CHECK(set.accuracy->overall == 1.0);
  }

  SUBCASE("unlabeled file") {
    write_file(dir.path() / "b.csv", "c0,c1\n0.9,0.1\n0.2,0.8\n0.6,0.4\n");
    const MetaSet set = load_confidence_csv(dir.path() / "b.csv");
    CHECK_FALSE(set.labels.has_value());
    CHECK_FALSE(set.accuracy.has_value());
  }

  SUBCASE("row-sum violation names the problem") {
    write_file(dir.path() / "c.csv", "c0,c1\n0.9,0.1\n0.5,0.3\n0.6,0.4\n");
    CHECK_THROWS_WITH_AS(load_confidence_csv(dir.path() / "c.csv"),
                         doctest::Contains("row-sum violation"), std::runtime_error);
  }

  SUBCASE("malformed row names the line") {
    write_file(dir.path() / "d.csv", "c0,c1\n0.9,0.1\n0.5,oops\n0.6,0.4\n");
    CHECK_THROWS_WITH_AS(load_confidence_csv(dir.path() / "d.csv"),
                         doctest::Contains("line 3"), std::runtime_error);
  }

  SUBCASE("label out of range") {
    write_file(dir.path() / "e.csv", "label,c0,c1\n0,0.9,0.1\n2,0.2,0.8\n0,0.6,0.4\n");
    CHECK_THROWS_WITH_AS(load_confidence_csv(dir.path() / "e.csv"),
                         doctest::Contains("out of range"), std::runtime_error);
  }

  SUBCASE("too few rows") {
    write_file(dir.path() / "f.csv", "c0,c1\n0.9,0.1\n0.2,0.8\n");
    CHECK_THROWS_AS(load_confidence_csv(dir.path() / "f.csv"), std::runtime_error);
  }

  SUBCASE("missing field count") {
    write_file(dir.path() / "g.csv", "c0,c1\n0.9,0.1\n0.2\n0.6,0.4\n");
    CHECK_THROWS_WITH_AS(load_confidence_csv(dir.path() / "g.csv"),
                         doctest::Contains("line 3"), std::runtime_error);
  }
}

TEST_CASE("corpus save/load round-trip") {
  testutil::TempDir dir("corpus");
  SplitMix64 rng(7);

  std::vector<MetaSet> corpus;
  for (int s = 0; s < 3; ++s) {
    const Eigen::Index n = 5 + Eigen::Index(rng.next() % 10);
    MetaSet set{"set_" + std::to_string(s), testutil::random_confidence(n, 4, rng),
                std::nullopt, std::nullopt};
    std::vector<int> labels(n);
    for (auto& y : labels) y = int(rng.next() % 4);
    set.labels = labels;
    set.accuracy = compute_accuracy(set.matrix, labels);
    corpus.push_back(std::move(set));
  }

  save_corpus(corpus, dir.path());
  const std::vector<MetaSet> loaded = load_corpus(dir.path());
  REQUIRE(loaded.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(loaded[i].id == corpus[i].id);
    CHECK(testutil::exact_equal(loaded[i].matrix.values(), corpus[i].matrix.values()));
    REQUIRE(loaded[i].labels.has_value());
    CHECK(*loaded[i].labels == *corpus[i].labels);
    CHECK(loaded[i].accuracy->overall == corpus[i].accuracy->overall);
    for (Eigen::Index k = 0; k < 4; ++k) {
      const double a = corpus[i].accuracy->per_category(k);
      const double b = loaded[i].accuracy->per_category(k);
      if (is_defined(a)) CHECK(a == b);
      else CHECK_FALSE(is_defined(b));
    }
  }

  // manifest agrees with the recomputed accuracies, exactly
  const auto entries = load_manifest(dir.path());
  REQUIRE(entries.size() == corpus.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CHECK(entries[i].accuracy->overall == loaded[i].accuracy->overall);
  }
}

TEST_CASE("mixed category counts are rejected") {
  testutil::TempDir dir("mixed");
  SplitMix64 rng(9);
  std::vector<MetaSet> corpus;
  corpus.push_back({"a", testutil::random_confidence(5, 4, rng), std::nullopt, std::nullopt});
  corpus.push_back({"b", testutil::random_confidence(5, 3, rng), std::nullopt, std::nullopt});
  CHECK_THROWS_WITH_AS(save_corpus(corpus, dir.path()),
                       doctest::Contains("mixed category counts"), std::runtime_error);
}
