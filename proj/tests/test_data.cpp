#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "navar/data.hpp"
#include "navar/error.hpp"
#include "test_support.hpp"

using namespace navar;
using navar::testing::TempDir;
using navar::testing::write_file;

namespace {

template <typename F>
Error expect_error(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected navar::Error");
  return Error(ErrorCode::kContract, "");
}

bool contains(const std::string& text, const std::string& part) {
  return text.find(part) != std::string::npos;
}

GeneratorOptions noiseless(std::size_t burn_in = 0) {
  GeneratorOptions o;
  o.noise_scale = 0.0;
  o.burn_in = burn_in;
  return o;
}

}  // namespace

TEST_CASE("toy3 truth lists exactly the six recurrence links") {
  const auto ds = generate_toy3(100, 1);
  REQUIRE(ds.truth);
  const auto& truth = *ds.truth;
  // 1-based (cause, effect) from the recurrence.
  const int expected[3][3] = {{0, 0, 1}, {1, 1, 1}, {1, 1, 0}};
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t e = 0; e < 3; ++e) CHECK(truth.link(c, e) == (expected[c][e] == 1));
  }
  CHECK(truth.link_count() == 6);
  CHECK_FALSE(truth.link(2, 2));
  CHECK(ds.replicates.front().rows() == 100);
  CHECK(ds.variable_names == std::vector<std::string>{"X1", "X2", "X3"});
}

TEST_CASE("toy3 default length") {
  const auto ds = generate_toy3();
  CHECK(ds.replicates.front().rows() == 4000);
  CHECK(ds.replicates.front().cols() == 3);
}

TEST_CASE("noiseless toy3 from zero follows the hand-iterated recurrence") {
  const auto ds = generate_toy3(12, 0, noiseless());
  const Tensor& x = ds.replicates.front();
  double x1 = 0, x2 = 0, x3 = 0;
  for (std::size_t t = 0; t < 12; ++t) {
    const double n1 = std::cos(x2) + std::tanh(x3);
    const double n2 = 0.35 * x2 + x3;
    const double n3 = std::fabs(0.5 * x1) + std::sin(2.0 * x2);
    x1 = n1, x2 = n2, x3 = n3;
    CHECK(x(t, 0) == doctest::Approx(x1).epsilon(1e-14));
    CHECK(x(t, 1) == doctest::Approx(x2).epsilon(1e-14));
    CHECK(x(t, 2) == doctest::Approx(x3).epsilon(1e-14));
  }
  // X2 stays 0 only for two steps: X3 feeds it from the third step on.
  CHECK(x(0, 1) == 0.0);
  CHECK(x(1, 1) == 0.0);
  CHECK(x(2, 1) == 0.5);
}

TEST_CASE("lag scm truth and first noiseless step") {
  const auto ds = generate_lag_scm(50, 2);
  REQUIRE(ds.truth);
  CHECK(ds.truth->link(1, 0));
  CHECK(ds.truth->link(0, 1));
  CHECK_FALSE(ds.truth->link(0, 0));
  CHECK_FALSE(ds.truth->link(1, 1));
  CHECK(ds.truth->link_lags(1, 0) == std::vector<std::size_t>{3, 4, 5});
  CHECK(ds.truth->link_lags(0, 1) == std::vector<std::size_t>{2, 4});
  CHECK(generate_lag_scm().replicates.front().rows() == 4000);

  const auto quiet = generate_lag_scm(10, 0, noiseless());
  CHECK(quiet.replicates.front()(0, 1) == 0.0);
  CHECK(quiet.replicates.front()(0, 0) == 1.0);
}

TEST_CASE("lag scm noise has standard deviation 0.1") {
  const auto ds = generate_lag_scm(4000, 3);
  const Tensor& v = ds.replicates.front();
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 5; t < v.rows(); ++t) {
    const double resid = v(t, 1) - v(t - 2, 0) * v(t - 4, 0);
    sum += resid;
    sq += resid * resid;
    ++n;
  }
  const double mean = sum / n;
  CHECK(std::sqrt(sq / n - mean * mean) == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("generators are deterministic per seed") {
  CHECK(generate_toy3(200, 7).replicates == generate_toy3(200, 7).replicates);
  CHECK_FALSE(generate_toy3(200, 7).replicates == generate_toy3(200, 8).replicates);
  CHECK(generate_lag_scm(200, 7).replicates == generate_lag_scm(200, 7).replicates);
  CHECK(generate_linear_var(4, 200, 2, 0.5, 1.0, 7, 2).replicates ==
        generate_linear_var(4, 200, 2, 0.5, 1.0, 7, 2).replicates);
}

TEST_CASE("generators reject short series") {
  CHECK(expect_error([] { generate_toy3(9, 0); }).code() == ErrorCode::kConfig);
  CHECK(expect_error([] { generate_lag_scm(9, 0); }).code() == ErrorCode::kConfig);
}

TEST_CASE("linear var truth semantics") {
  const auto full = generate_linear_var(2, 100, 1, 1.0, 0.3, 4);
  REQUIRE(full.truth);
  CHECK(full.truth->link_count() == 4);

  const auto empty = generate_linear_var(3, 2000, 2, 1e-12, 1.0, 4);
  CHECK(empty.truth->link_count() == 0);
  // No coefficients: each series is white noise.
  const Tensor& x = empty.replicates.front();
  for (std::size_t i = 0; i < 3; ++i) {
    double num = 0, den = 0, mean = 0;
    for (std::size_t t = 0; t < x.rows(); ++t) mean += x(t, i);
    mean /= x.rows();
    for (std::size_t t = 0; t < x.rows(); ++t) {
      den += (x(t, i) - mean) * (x(t, i) - mean);
      if (t > 0) num += (x(t, i) - mean) * (x(t - 1, i) - mean);
    }
    CHECK(std::abs(num / den) < 0.1);
  }
}

TEST_CASE("linear var stays bounded over a long run") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto ds = generate_linear_var(6, 10000, 3, 0.6, 1.0, seed);
    double peak = 0.0;
    for (double v : ds.replicates.front().values()) {
      REQUIRE(std::isfinite(v));
      peak = std::max(peak, std::abs(v));
    }
    CHECK(peak < 1e3);
  }
}

TEST_CASE("linear var replicates share truth and N") {
  const auto ds = generate_linear_var(100, 21, 2, 0.02, 1.0, 7, 46);
  CHECK(ds.replicates.size() == 46);
  for (const auto& r : ds.replicates) {
    CHECK(r.rows() == 21);
    CHECK(r.cols() == 100);
  }
  CHECK_FALSE(ds.replicates[0] == ds.replicates[1]);
}

TEST_CASE("linear var argument errors") {
  CHECK(expect_error([] { generate_linear_var(3, 100, 1, 0.0, 1.0, 0); }).code() ==
        ErrorCode::kConfig);
  CHECK(expect_error([] { generate_linear_var(3, 100, 1, 1.5, 1.0, 0); }).code() ==
        ErrorCode::kConfig);
  CHECK(expect_error([] { generate_linear_var(0, 100, 1, 0.5, 1.0, 0); }).code() ==
        ErrorCode::kConfig);
}

TEST_CASE("companion spectral radius hand cases") {
  std::vector<Tensor> diag{Tensor::matrix(2, 2, {0.5, 0, 0, -0.8})};
  CHECK(companion_spectral_radius(diag) == doctest::Approx(0.8).epsilon(1e-12));
  // x_t = 0.5 x_{t-1} + 0.3 x_{t-2}: roots of z^2 - 0.5 z - 0.3.
  std::vector<Tensor> ar2{Tensor::matrix(1, 1, {0.5}), Tensor::matrix(1, 1, {0.3})};
  CHECK(companion_spectral_radius(ar2) ==
        doctest::Approx((0.5 + std::sqrt(0.25 + 1.2)) / 2.0).epsilon(1e-12));
}

TEST_CASE("normalization hits zero mean and unit std on the fit range") {
  auto ds = generate_linear_var(3, 500, 1, 0.7, 1.0, 9, 3);
  for (auto& r : ds.replicates) {
    for (std::size_t t = 0; t < r.rows(); ++t) r(t, 1) = 5.0 + 3.0 * r(t, 1);
  }
  const auto lengths = training_lengths(ds, 0.2);
  CHECK(lengths == std::vector<std::size_t>{400, 400, 400});
  const auto normalized = apply_normalization(ds, fit_normalization(ds, lengths));
  for (std::size_t i = 0; i < 3; ++i) {
    double sum = 0, sq = 0;
    std::size_t n = 0;
    for (const auto& r : normalized.replicates) {
      for (std::size_t t = 0; t < 400; ++t) {
        sum += r(t, i);
        ++n;
      }
    }
    const double mean = sum / n;
    for (const auto& r : normalized.replicates) {
      for (std::size_t t = 0; t < 400; ++t) sq += (r(t, i) - mean) * (r(t, i) - mean);
    }
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(sq / n) - 1.0) < 1e-9);
  }
}

TEST_CASE("normalization stats come from the fit range only") {
  TimeSeriesDataset ds;
  ds.replicates.push_back(Tensor::matrix(5, 1, {1, 3, 1, 3, 100}));
  ds.variable_names = {"a"};
  const auto stats = fit_normalization(ds, std::vector<std::size_t>{4});
  CHECK(stats.mean[0] == 2.0);
  CHECK(stats.stddev[0] == 1.0);
  const auto out = apply_normalization(ds, stats);
  CHECK(out.replicates[0](4, 0) == 98.0);
  REQUIRE(out.normalization);
  CHECK(*out.normalization == stats);
}

TEST_CASE("normalization is idempotent and a no-op on normalized data") {
  const auto once = normalize(generate_toy3(300, 4)).dataset;
  const auto twice = normalize(once);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(twice.stats.mean[i]) < 1e-12);
    CHECK(std::abs(twice.stats.stddev[i] - 1.0) < 1e-12);
  }
  for (std::size_t k = 0; k < once.replicates[0].size(); ++k) {
    CHECK(std::abs(twice.dataset.replicates[0][k] - once.replicates[0][k]) < 1e-12);
  }
}

TEST_CASE("constant variable is named in the error") {
  TimeSeriesDataset ds;
  ds.replicates.push_back(Tensor::matrix(3, 2, {1, 4, 2, 4, 3, 4}));
  ds.variable_names = {"moving", "flat"};
  const Error e = expect_error([&] { normalize(ds); });
  CHECK(e.code() == ErrorCode::kConstantVariable);
  CHECK(contains(e.what(), "flat"));
}

TEST_CASE("window count for multi-replicate short series") {
  const auto ds = generate_linear_var(3, 21, 2, 0.5, 1.0, 1, 46);
  const auto w = make_windows(ds, 2);
  CHECK(w.samples == 46 * 19);
  CHECK(w.samples == 874);
  CHECK(w.targets.rows() == 874);
  CHECK(w.windows.size() == 3);
}

TEST_CASE("window columns run in lag order") {
  TimeSeriesDataset ds;
  ds.replicates.push_back(Tensor::matrix(5, 2, {0, 10, 1, 11, 2, 12, 3, 13, 4, 14}));
  ds.variable_names = {"a", "b"};
  const auto w = make_windows(ds, 3);
  REQUIRE(w.samples == 2);
  CHECK(w.windows[0](0, 0) == 2);  // x_{t-1} at t=3
  CHECK(w.windows[0](0, 2) == 0);  // x_{t-3}
  CHECK(w.windows[1](1, 0) == 13);
  CHECK(w.targets(1, 1) == 14);
  CHECK(w.time == std::vector<std::size_t>{3, 4});
}

TEST_CASE("windows never cross replicate boundaries") {
  auto ds = generate_linear_var(2, 30, 1, 0.5, 1.0, 2, 3);
  const auto before = make_windows(ds, 4);
  ds.replicates[0](29, 0) += 1000.0;
  const auto after = make_windows(ds, 4);
  for (std::size_t s = 0; s < before.samples; ++s) {
    if (before.replicate[s] == 0) continue;
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(after.windows[0](s, k) == before.windows[0](s, k));
      CHECK(after.windows[1](s, k) == before.windows[1](s, k));
    }
  }
}

TEST_CASE("short replicate cannot supply windows") {
  TimeSeriesDataset ds;
  ds.replicates.push_back(Tensor::zeros(3, 2));
  ds.variable_names = {"a", "b"};
  CHECK(expect_error([&] { make_windows(ds, 3); }).code() == ErrorCode::kDatasetTooShort);
}

TEST_CASE("csv round trip is value identical") {
  TempDir dir("csv");
  TimeSeriesDataset ds;
  ds.replicates.push_back(Tensor::matrix(3, 2, {0.1, -2.5e-300, 1.0 / 3.0, 7.0, -0.0, 1e21}));
  ds.variable_names = {"a", "b"};
  save_csv(ds, dir.file("t.csv"));
  const auto back = load_csv(dir.file("t.csv"));
  CHECK(back.variable_names == ds.variable_names);
  CHECK(back.replicates == ds.replicates);

  auto wide = generate_linear_var(4, 40, 1, 0.5, 1.0, 3, 2);
  save_csv(wide, dir.file("w.csv"));
  const auto wide_back = load_csv(dir.file("w.csv"));
  CHECK(wide_back.replicates == wide.replicates);
}

TEST_CASE("csv header names and headerless files") {
  TempDir dir("csv");
  write_file(dir.file("h.csv"), "a,b\n1,2\n3,4\n");
  const auto ds = load_csv(dir.file("h.csv"));
  CHECK(ds.variable_names == std::vector<std::string>{"a", "b"});
  CHECK(ds.replicates[0] == Tensor::matrix(2, 2, {1, 2, 3, 4}));

  write_file(dir.file("n.tsv"), "1\t2\n3\t4\n");
  CsvOptions opt;
  opt.has_header = false;
  opt.delimiter = '\t';
  const auto raw = load_csv(dir.file("n.tsv"), opt);
  CHECK(raw.replicates[0] == Tensor::matrix(2, 2, {1, 2, 3, 4}));
  CHECK(raw.variables() == 2);
}

TEST_CASE("csv parse errors name the location") {
  TempDir dir("csv");
  write_file(dir.file("ragged.csv"), "a,b\n1,2\n3\n5,6\n");
  Error ragged = expect_error([&] { load_csv(dir.file("ragged.csv")); });
  CHECK(ragged.code() == ErrorCode::kParse);
  CHECK(contains(ragged.what(), "line 3"));

  write_file(dir.file("text.csv"), "a,b\n1,2\n3,x\n");
  Error text = expect_error([&] { load_csv(dir.file("text.csv")); });
  CHECK(text.code() == ErrorCode::kParse);
  CHECK(contains(text.what(), "line 3"));
  CHECK(contains(text.what(), "column 2"));

  CHECK(expect_error([&] { load_csv(dir.file("missing.csv")); }).code() == ErrorCode::kIo);
}

TEST_CASE("replicate column groups rows") {
  TempDir dir("csv");
  write_file(dir.file("r.csv"), "replicate,a,b\n0,1,2\n0,3,4\n1,5,6\n1,7,8\n1,9,10\n");
  const auto ds = load_csv(dir.file("r.csv"));
  REQUIRE(ds.replicates.size() == 2);
  CHECK(ds.variable_names == std::vector<std::string>{"a", "b"});
  CHECK(ds.replicates[1].rows() == 3);
  CHECK(ds.replicates[1](2, 1) == 10);

  save_csv(ds, dir.file("r2.csv"));
  CHECK(load_csv(dir.file("r2.csv")).replicates == ds.replicates);

  write_file(dir.file("f1.csv"), "a,b\n1,2\n3,4\n");
  write_file(dir.file("f2.csv"), "a,b\n5,6\n");
  const std::vector<std::string> files{dir.file("f1.csv"), dir.file("f2.csv")};
  const auto multi = load_csv_replicates(files);
  CHECK(multi.replicates.size() == 2);
  CHECK(multi.replicates[1] == Tensor::matrix(1, 2, {5, 6}));
}

TEST_CASE("truth csv round trip with and without header") {
  TempDir dir("truth");
  const auto truth = *generate_toy3(20, 0).truth;
  const std::vector<std::string> names{"X1", "X2", "X3"};
  save_truth_csv(truth, dir.file("t.csv"), names);
  CHECK(load_truth_csv(dir.file("t.csv")).adjacency == truth.adjacency);
  save_truth_csv(truth, dir.file("plain.csv"));
  CHECK(load_truth_csv(dir.file("plain.csv")).adjacency == truth.adjacency);

  write_file(dir.file("bad.csv"), "0,1\n2,0\n");
  CHECK(expect_error([&] { load_truth_csv(dir.file("bad.csv")); }).code() == ErrorCode::kParse);
  write_file(dir.file("rect.csv"), "0,1,0\n1,0,0\n");
  CHECK(expect_error([&] { load_truth_csv(dir.file("rect.csv")); }).code() == ErrorCode::kParse);
}
