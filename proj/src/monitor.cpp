#include "cookgen/monitor.hpp"

#include <algorithm>
#include <chrono>

#include "cookgen/csv.hpp"

namespace cookgen {

void MonitorConfig::validate() const {
  if (interval_s <= 0) throw ConfigError("monitor: interval_s must be positive");
  if (smooth_window < 1 || smooth_window % 2 == 0) throw ConfigError("monitor: smooth_window must be odd and >= 1");
  if (peak_confirm < 1) throw ConfigError("monitor: peak_confirm must be >= 1");
  if (min_peak_sim < 0 || min_peak_sim > 1) throw ConfigError("monitor: min_peak_sim must lie in [0, 1]");
}

nlohmann::json MonitorConfig::to_json() const {
  return {{"interval_s", interval_s},
          {"smooth_window", smooth_window},
          {"peak_confirm", peak_confirm},
          {"min_peak_sim", min_peak_sim}};
}

MonitorConfig MonitorConfig::from_json(const nlohmann::json& j) {
  MonitorConfig c;
  c.interval_s = j.value("interval_s", c.interval_s);
  c.smooth_window = j.value("smooth_window", c.smooth_window);
  c.peak_confirm = j.value("peak_confirm", c.peak_confirm);
  c.min_peak_sim = j.value("min_peak_sim", c.min_peak_sim);
  c.validate();
  return c;
}

MonitorState::MonitorState(Eigen::VectorXd target_embedding, MonitorConfig cfg)
    : target_(std::move(target_embedding)), cfg_(cfg) {
  cfg_.validate();
}

Decision MonitorState::push(double t_seconds, double raw_similarity) {
  if (status_ == MonitorStatus::Stopped)
    throw StateError("monitor already stopped at frame " + std::to_string(stop_.index));
  if (!history_.empty() && !(t_seconds > history_.back().first))
    throw InvalidArgument("monitor: timestamp " + std::to_string(t_seconds) + " does not follow " +
                          std::to_string(history_.back().first));

  history_.emplace_back(t_seconds, raw_similarity);
  prefix_.push_back(prefix_.back() + raw_similarity);
  smoothed_.push_back(0.0);
  const int n = static_cast<int>(history_.size());
  const int half = cfg_.smooth_window / 2;

  // Only the last `half + 1` centred averages see the new sample.
  for (int i = std::max(0, n - 1 - half); i < n; ++i) {
    const int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
    smoothed_[static_cast<size_t>(i)] = (prefix_[static_cast<size_t>(hi) + 1] - prefix_[static_cast<size_t>(lo)]) /
                                        static_cast<double>(hi - lo + 1);
  }
  // Values whose full window is in place are final.
  for (; settled_count_ < n - half; ++settled_count_) {
    const double v = smoothed_[static_cast<size_t>(settled_count_)];
    if (v >= settled_max_) {
      settled_max_ = v;
      settled_arg_ = settled_count_;
    }
  }
  // Latest index wins ties, so every later value is strictly lower.
  int arg = settled_arg_;
  double best = settled_max_;
  for (int i = settled_count_; i < n; ++i)
    if (smoothed_[static_cast<size_t>(i)] >= best) {
      best = smoothed_[static_cast<size_t>(i)];
      arg = i;
    }

  if (arg >= 0 && best >= cfg_.min_peak_sim && n - 1 - arg >= cfg_.peak_confirm) {
    status_ = MonitorStatus::Stopped;
    stop_ = Decision{true, arg, history_[static_cast<size_t>(arg)].first};
    return stop_;
  }
  return Decision{};
}

template <typename Scalar>
MonitorState start_monitor(const EmbeddingNet<Scalar>& cis_net, const Image& target_image, const MonitorConfig& cfg) {
  return MonitorState(embed(cis_net, target_image), cfg);
}

template <typename Scalar>
Decision step(MonitorState& state, const EmbeddingNet<Scalar>& cis_net, const Frame& frame) {
  if (state.status() == MonitorStatus::Stopped)
    throw StateError("monitor already stopped at frame " + std::to_string(state.stop().index));
  const auto t0 = std::chrono::steady_clock::now();
  const double sim = f_cul(embed(cis_net, frame.image), state.target_embedding());
  const Decision d = state.push(frame.t_seconds, sim);
  state.record_step_time(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return d;
}

namespace {

MonitorReport make_report(const MonitorState& state, int processed) {
  MonitorReport r;
  for (int i = 0; i < processed; ++i) {
    const auto& [t, raw] = state.history()[static_cast<size_t>(i)];
    const bool last = i + 1 == processed && state.status() == MonitorStatus::Stopped;
    r.trace.push_back({i, t, raw, state.smoothed()[static_cast<size_t>(i)], last ? "stop" : "continue"});
  }
  if (state.status() == MonitorStatus::Stopped) {
    r.stop_index = state.stop().index;
    r.stop_t_seconds = state.stop().t_seconds;
    r.decided_at = processed - 1;
  }
  r.step_seconds = state.step_seconds();
  return r;
}

}  // namespace

template <typename Scalar>
MonitorReport run_session_offline(const EmbeddingNet<Scalar>& cis_net, const CookingSession& session,
                                  const Image& target_image, const MonitorConfig& cfg) {
  if (session.frames.empty()) throw InvalidArgument("run_session_offline: session has no frames");
  MonitorState state = start_monitor(cis_net, target_image, cfg);
  int processed = 0;
  for (const Frame& f : session.frames) {
    ++processed;
    if (step(state, cis_net, f).stop) break;
  }
  return make_report(state, processed);
}

MonitorReport run_similarities(const std::vector<double>& similarities, const MonitorConfig& cfg) {
  MonitorState state(Eigen::VectorXd(), cfg);
  int processed = 0;
  for (double s : similarities) {
    const double t = processed * cfg.interval_s;
    ++processed;
    if (state.push(t, s).stop) break;
  }
  return make_report(state, processed);
}

void write_trace_csv(const MonitorReport& report, const std::filesystem::path& path) {
  CsvWriter csv(path, {"frame_index", "t_seconds", "raw_similarity", "smoothed", "decision"});
  for (const TraceRow& r : report.trace)
    csv.row({static_cast<long long>(r.frame_index), r.t_seconds, r.raw_similarity, r.smoothed, r.decision});
}

template MonitorState start_monitor(const EmbeddingNet<float>&, const Image&, const MonitorConfig&);
template MonitorState start_monitor(const EmbeddingNet<double>&, const Image&, const MonitorConfig&);
template Decision step(MonitorState&, const EmbeddingNet<float>&, const Frame&);
template Decision step(MonitorState&, const EmbeddingNet<double>&, const Frame&);
template MonitorReport run_session_offline(const EmbeddingNet<float>&, const CookingSession&, const Image&,
                                           const MonitorConfig&);
template MonitorReport run_session_offline(const EmbeddingNet<double>&, const CookingSession&, const Image&,
                                           const MonitorConfig&);

}  // namespace cookgen
