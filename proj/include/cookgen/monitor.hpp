#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cookgen/cis.hpp"

namespace cookgen {

struct MonitorConfig {
  double interval_s = 30.0;
  int smooth_window = 3;
  int peak_confirm = 2;
  double min_peak_sim = 0.5;

  void validate() const;
  nlohmann::json to_json() const;
  static MonitorConfig from_json(const nlohmann::json& j);
};

enum class MonitorStatus { Running, Stopped };

struct Decision {
  bool stop = false;
  int index = -1;  // peak frame when stopping
  double t_seconds = 0.0;
};

class MonitorState {
 public:
  MonitorState() = default;
  MonitorState(Eigen::VectorXd target_embedding, MonitorConfig cfg);

  const Eigen::VectorXd& target_embedding() const { return target_; }
  const MonitorConfig& config() const { return cfg_; }
  // (t_seconds, clamped raw similarity) per processed frame.
  const std::vector<std::pair<double, double>>& history() const { return history_; }
  const std::vector<double>& smoothed() const { return smoothed_; }
  const std::vector<double>& step_seconds() const { return step_seconds_; }
  MonitorStatus status() const { return status_; }
  // Set once stopped.
  const Decision& stop() const { return stop_; }

  // Feed the next similarity value; the shared rule behind step().
  Decision push(double t_seconds, double raw_similarity);
  void record_step_time(double seconds) { step_seconds_.push_back(seconds); }

 private:
  Eigen::VectorXd target_;
  MonitorConfig cfg_;
  std::vector<std::pair<double, double>> history_;
  std::vector<double> smoothed_;
  std::vector<double> step_seconds_;
  std::vector<double> prefix_{0.0};  // prefix sums of raw similarity
  MonitorStatus status_ = MonitorStatus::Running;
  Decision stop_;
  // Maximum over smoothed values that can no longer change.
  double settled_max_ = -1.0;
  int settled_arg_ = -1;
  int settled_count_ = 0;
};

template <typename Scalar>
MonitorState start_monitor(const EmbeddingNet<Scalar>& cis_net, const Image& target_image,
                           const MonitorConfig& cfg = {});

// Embeds the frame, appends f_cul(frame, target) and applies the peak rule.
// Throws StateError after a stop and InvalidArgument on a non-increasing
// timestamp.
template <typename Scalar>
Decision step(MonitorState& state, const EmbeddingNet<Scalar>& cis_net, const Frame& frame);

struct TraceRow {
  int frame_index = 0;
  double t_seconds = 0.0;
  double raw_similarity = 0.0;
  double smoothed = 0.0;
  std::string decision;
};

struct MonitorReport {
  std::optional<int> stop_index;
  std::optional<double> stop_t_seconds;
  // Frame whose arrival triggered the stop.
  std::optional<int> decided_at;
  // One row per processed frame; replay ends at the stop decision.
  std::vector<TraceRow> trace;
  std::vector<double> step_seconds;
};

template <typename Scalar>
MonitorReport run_session_offline(const EmbeddingNet<Scalar>& cis_net, const CookingSession& session,
                                  const Image& target_image, const MonitorConfig& cfg = {});

// Replays a precomputed similarity sequence (one sample per interval_s).
MonitorReport run_similarities(const std::vector<double>& similarities, const MonitorConfig& cfg = {});

void write_trace_csv(const MonitorReport& report, const std::filesystem::path& path);

}  // namespace cookgen
