#include "support.hpp"

#include <fstream>

#include "cookgen/metrics.hpp"

using namespace cookgen;

namespace {

// Direct 2-D window loop; no separability, no shared code with the library.
double naive_ssim(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int win, double sigma) {
  Eigen::MatrixXd w(win, win);
  const double c = (win - 1) / 2.0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) w(i, j) = std::exp(-((i - c) * (i - c) + (j - c) * (j - c)) / (2 * sigma * sigma));
  w /= w.sum();
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0;
  int count = 0;
  for (Index r = 0; r + win <= x.rows(); ++r)
    for (Index q = 0; q + win <= x.cols(); ++q) {
      const auto bx = x.block(r, q, win, win).array(), by = y.block(r, q, win, win).array();
      const double mx = (w.array() * bx).sum(), my = (w.array() * by).sum();
      const double vx = (w.array() * (bx - mx).square()).sum(), vy = (w.array() * (by - my).square()).sum();
      const double cxy = (w.array() * (bx - mx) * (by - my)).sum();
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return total / count;
}

EmbeddingNetConfig tiny_cis() {
  EmbeddingNetConfig c;
  c.img_size = 32;
  c.embed_dim = 16;
  c.proj_dims = {16, 8};
  c.widths = {8, 8, 8, 8};
  c.groups = 4;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("ssim of constant images") {
  const double c1 = 1e-4;
  CHECK(ssim(Eigen::MatrixXd::Zero(16, 16), Eigen::MatrixXd::Ones(16, 16)) ==
        doctest::Approx(c1 / (1 + c1)).epsilon(1e-12));
  CHECK(ssim(Image(16, 16, -1.0f), Image(16, 16, 1.0f)) == doctest::Approx(c1 / (1 + c1)).epsilon(1e-9));
}

TEST_CASE("ssim matches a direct window evaluation") {
  std::mt19937_64 rng(50);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd x(20, 24), y(20, 24);
    for (Index i = 0; i < x.size(); ++i) {
      x.data()[i] = u(rng);
      y.data()[i] = 0.6 * x.data()[i] + 0.4 * u(rng);
    }
    CHECK(ssim(x, y) == doctest::Approx(naive_ssim(x, y, 11, 1.5)).epsilon(1e-10));
  }
}

TEST_CASE("ssim range and identity") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x(16, 16), y(16, 16);
    for (Index i = 0; i < x.size(); ++i) {
      x.data()[i] = u(rng);
      y.data()[i] = u(rng);
    }
    const double s = ssim(x, y);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
    CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));
    Eigen::MatrixXd z = x;
    z(trial % 16, 3) += 0.05;
    CHECK(ssim(x, z) < 1.0);
  }
  CHECK_THROWS_AS(ssim(Eigen::MatrixXd::Zero(8, 8), Eigen::MatrixXd::Zero(8, 8)), InvalidArgument);
  CHECK_THROWS_AS(ssim(Eigen::MatrixXd::Zero(16, 16), Eigen::MatrixXd::Zero(16, 12)), ShapeError);
}

TEST_CASE("spearman with ties") {
  CHECK(spearman({1, 2, 3, 4, 5}, {5, 6, 7, 8, 7}) == doctest::Approx(0.8207826816681233).epsilon(1e-12));
  CHECK(spearman({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 400}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(spearman({1}, {1}), InvalidArgument);
}

TEST_CASE("state table is order invariant and labelled") {
  EmbeddingNet<float> net(tiny_cis());
  auto spec = testing::cookie_spec();
  const auto data = synth_dataset({spec}, 3, 8, 30.0, 32);
  std::vector<const CookingSession*> fwd{&data[0], &data[1], &data[2]}, rev{&data[2], &data[0], &data[1]};
  const auto a = eval_state_table(net, PerceptualImpl::PyramidL1, fwd);
  const auto b = eval_state_table(net, PerceptualImpl::PyramidL1, rev);
  CHECK(a.perc_label == "one_minus_pyramid_l1");
  for (size_t k = 0; k < 4; ++k) {
    CHECK(a.rows[k].kind == std::string(kPairKinds[k]));
    CHECK(a.rows[k].count == 3);
    CHECK(a.rows[k].ssim == doctest::Approx(b.rows[k].ssim).epsilon(1e-12));
    CHECK(a.rows[k].cis == doctest::Approx(b.rows[k].cis).epsilon(1e-12));
    CHECK(a.rows[k].one_minus_perc == doctest::Approx(b.rows[k].one_minus_perc).epsilon(1e-12));
  }
  CHECK(a.rows[0].ssim == doctest::Approx(1.0));
  CHECK(a.rows[0].cis == doctest::Approx(1.0).epsilon(1e-6));

  PerceptualPlugin<double> plugin = [](const Var<double>& x, const Var<double>& y) { return mean_abs_diff(x, y); };
  CHECK(eval_state_table(net, PerceptualImpl::ExternalLpips, fwd, plugin).perc_label == "one_minus_lpips");

  testing::TempDir dir("table");
  write_state_table_csv(a, dir.path / "t.csv");
  std::ifstream in(dir.path / "t.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "pair_kind,ssim,one_minus_pyramid_l1,cis,count");
}

TEST_CASE("trajectory report") {
  EmbeddingNet<float> net(tiny_cis());
  const auto s = synth_session(testing::cookie_spec(), 8, 30.0, 32);
  const auto r = trajectory_report(net, s, 0);
  REQUIRE(r.rows.size() == 8);
  CHECK(r.rows[0].cis == 1.0);
  CHECK(r.rows[0].ssim == doctest::Approx(1.0));
  CHECK(r.rows[0].one_minus_perc == 1.0);
  double lo = 1e9, hi = -1e9;
  for (const auto& row : r.rows) {
    lo = std::min(lo, row.ssim);
    hi = std::max(hi, row.ssim);
  }
  CHECK(r.ssim_range == doctest::Approx(hi - lo));
  CHECK(r.range_ratio == doctest::Approx(r.cis_range / r.ssim_range));
  CHECK_THROWS_AS(trajectory_report(net, s, 8), InvalidArgument);

  testing::TempDir dir("traj");
  write_trajectory_csv(r, dir.path / "t.csv");
  std::ifstream in(dir.path / "t.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "frame_index,t_seconds,cis,ssim,one_minus_pyramid_l1");
}

TEST_CASE("line plot draws on a white canvas") {
  const Image img = plot_lines({{"a", {0.0, 0.5, 1.0}, {1, 0, 0}}}, 64, 32);
  CHECK(img.width() == 64);
  CHECK(img.height() == 32);
  CHECK(img.max_value() == 1.0f);
  CHECK(img.min_value() < 0.0f);
  CHECK_THROWS_AS(plot_lines({}, 8, 8), InvalidArgument);
}
