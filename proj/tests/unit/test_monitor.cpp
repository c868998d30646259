#include "support.hpp"

#include <fstream>

#include "cookgen/monitor.hpp"

using namespace cookgen;

namespace {

// Brute-force peak rule: recompute every smoothed value from scratch for
// each prefix and return the first (decision frame, peak frame).
std::optional<std::pair<int, int>> naive_stop(const std::vector<double>& s, const MonitorConfig& cfg) {
  const int half = cfg.smooth_window / 2;
  for (int n = 1; n <= static_cast<int>(s.size()); ++n) {
    int arg = -1;
    double best = -1e300;
    for (int i = 0; i < n; ++i) {
      const int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
      double sum = 0;
      for (int k = lo; k <= hi; ++k) sum += s[static_cast<size_t>(k)];
      const double v = sum / (hi - lo + 1);
      if (v >= best) {
        best = v;
        arg = i;
      }
    }
    if (best >= cfg.min_peak_sim && n - 1 - arg >= cfg.peak_confirm) return std::pair{n - 1, arg};
  }
  return std::nullopt;
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

TEST_CASE("hand-traced stop") {
  MonitorConfig cfg;
  cfg.smooth_window = 1;
  cfg.peak_confirm = 2;
  cfg.min_peak_sim = 0.5;
  const auto r = run_similarities({0.2, 0.4, 0.7, 0.9, 0.85, 0.80}, cfg);
  REQUIRE(r.stop_index.has_value());
  CHECK(*r.stop_index == 3);
  CHECK(*r.decided_at == 5);
  CHECK(*r.stop_t_seconds == 90.0);
  CHECK(r.trace.size() == 6);
  CHECK(r.trace.back().decision == "stop");
  CHECK(r.trace[4].decision == "continue");
}

TEST_CASE("rising and low traces never stop") {
  std::vector<double> rising, low;
  for (int i = 0; i < 40; ++i) {
    rising.push_back(0.1 + 0.02 * i);
    low.push_back(0.45 * std::abs(std::sin(i * 0.7)));
  }
  for (int w : {1, 3, 5}) {
    MonitorConfig cfg;
    cfg.smooth_window = w;
    CHECK_FALSE(run_similarities(rising, cfg).stop_index.has_value());
    CHECK_FALSE(run_similarities(low, cfg).stop_index.has_value());
  }
  CHECK_FALSE(run_similarities({0.99}).stop_index.has_value());
}

TEST_CASE("incremental rule agrees with brute force on random traces") {
  std::mt19937_64 rng(40);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int stops = 0;
  for (int trial = 0; trial < 400; ++trial) {
    MonitorConfig cfg;
    cfg.smooth_window = 1 + 2 * static_cast<int>(rng() % 3);
    cfg.peak_confirm = 1 + static_cast<int>(rng() % 3);
    cfg.min_peak_sim = u(rng);
    std::vector<double> s;
    const int n = 1 + static_cast<int>(rng() % 25);
    // Coarse values make ties common.
    for (int i = 0; i < n; ++i) s.push_back(std::round(u(rng) * 8) / 8);
    const auto want = naive_stop(s, cfg);
    const auto got = run_similarities(s, cfg);
    REQUIRE(want.has_value() == got.stop_index.has_value());
    if (want) {
      ++stops;
      CHECK(*got.decided_at == want->first);
      CHECK(*got.stop_index == want->second);
      const double peak = got.trace[static_cast<size_t>(*got.stop_index)].smoothed;
      for (const TraceRow& row : got.trace) CHECK(row.smoothed <= peak);
    }
    // Replay determinism.
    const auto again = run_similarities(s, cfg);
    CHECK(again.stop_index == got.stop_index);
  }
  CHECK(stops > 50);
}

TEST_CASE("smoothed values are centred moving averages") {
  MonitorState st(Eigen::VectorXd(), MonitorConfig{});
  const std::vector<double> s{0.1, 0.2, 0.6, 0.3};
  for (size_t i = 0; i < s.size(); ++i) st.push(30.0 * static_cast<double>(i), s[i]);
  CHECK(st.smoothed()[0] == doctest::Approx(0.15));
  CHECK(st.smoothed()[1] == doctest::Approx(0.3));
  CHECK(st.smoothed()[2] == doctest::Approx(1.1 / 3));
  CHECK(st.smoothed()[3] == doctest::Approx(0.45));
}

TEST_CASE("state errors and config validation") {
  MonitorConfig cfg;
  cfg.smooth_window = 1;
  cfg.peak_confirm = 1;
  MonitorState st(Eigen::VectorXd(), cfg);
  CHECK(st.status() == MonitorStatus::Running);
  CHECK(st.history().empty());
  st.push(0, 0.9);
  CHECK_THROWS_AS(st.push(0, 0.5), InvalidArgument);
  CHECK(st.push(30, 0.5).stop);
  CHECK(st.status() == MonitorStatus::Stopped);
  CHECK_THROWS_AS(st.push(60, 0.4), StateError);

  cfg.smooth_window = 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = MonitorConfig{};
  cfg.min_peak_sim = 1.5;
  CHECK_THROWS_AS(MonitorConfig::from_json(cfg.to_json()), ConfigError);
}

TEST_CASE("monitor over a network") {
  EmbeddingNet<float> net(tiny_cis());
  const auto session = synth_session(testing::cookie_spec(), 8, 30.0, 32);
  const Image& target = session.frames[3].image;
  const MonitorState a = start_monitor(net, target), b = start_monitor(net, target);
  CHECK(a.target_embedding() == b.target_embedding());

  MonitorState st = start_monitor(net, target);
  for (const Frame& f : session.frames) {
    if (step(st, net, f).stop) break;
  }
  CHECK(st.step_seconds().size() == st.history().size());
  const auto r = run_session_offline(net, session, target);
  CHECK(r.trace.size() == st.history().size());
  for (size_t i = 0; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].raw_similarity == st.history()[i].second);
    CHECK(r.trace[i].raw_similarity == doctest::Approx(f_cul(net, session.frames[i].image, target)));
  }

  CookingSession one = session;
  one.frames.resize(1);
  CHECK_FALSE(run_session_offline(net, one, target).stop_index.has_value());
}

TEST_CASE("trace csv layout") {
  testing::TempDir dir("trace");
  MonitorConfig cfg;
  cfg.smooth_window = 1;
  write_trace_csv(run_similarities({0.2, 0.4, 0.7, 0.9, 0.85, 0.80}, cfg), dir.path / "t.csv");
  std::ifstream in(dir.path / "t.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "frame_index,t_seconds,raw_similarity,smoothed,decision");
  int rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    ++rows;
    last = line;
  }
  CHECK(rows == 6);
  CHECK(last.substr(last.size() - 4) == "stop");
}
