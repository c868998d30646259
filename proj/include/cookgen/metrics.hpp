#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "cookgen/cis.hpp"
#include "cookgen/training.hpp"

namespace cookgen {

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Single-scale SSIM of two grayscale planes already in [0, dynamic_range],
// Gaussian-weighted, mean over the valid-mode map.
double ssim(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const SsimOptions& opt = {});
// Images are reduced to the channel mean and remapped from [-1, 1] to [0, 1].
double ssim(const Image& a, const Image& b, const SsimOptions& opt = {});

// Rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

inline constexpr std::array<const char*, 4> kPairKinds = {"raw-raw", "raw-basic", "raw-standard", "raw-extended"};

struct StateRow {
  std::string kind;
  double ssim = 0.0;
  double one_minus_perc = 0.0;
  double cis = 0.0;
  int count = 0;
};

struct StateTable {
  std::array<StateRow, 4> rows;
  // Column header of the perceptual column, e.g. "one_minus_pyramid_l1".
  std::string perc_label;
};

template <typename Scalar>
StateTable eval_state_table(const EmbeddingNet<Scalar>& cis_net, PerceptualImpl perceptual_impl,
                            const std::vector<const CookingSession*>& sessions,
                            const PerceptualPlugin<double>& plugin = {});
void write_state_table_csv(const StateTable& table, const std::filesystem::path& path);

struct TrajectoryRow {
  int frame_index = 0;
  double t_seconds = 0.0;
  double cis = 0.0;
  double ssim = 0.0;
  double one_minus_perc = 0.0;
};

struct TrajectoryReport {
  std::vector<TrajectoryRow> rows;
  std::string perc_label;
  double cis_range = 0.0;
  double ssim_range = 0.0;
  double perc_range = 0.0;
  // cis_range / ssim_range (infinite when SSIM is flat).
  double range_ratio = 0.0;
};

template <typename Scalar>
TrajectoryReport trajectory_report(const EmbeddingNet<Scalar>& cis_net, const CookingSession& session,
                                   const Image& anchor, PerceptualImpl perceptual_impl = PerceptualImpl::PyramidL1,
                                   const PerceptualPlugin<double>& plugin = {});
// Throws InvalidArgument when the anchor index is out of range.
template <typename Scalar>
TrajectoryReport trajectory_report(const EmbeddingNet<Scalar>& cis_net, const CookingSession& session,
                                   int anchor_frame, PerceptualImpl perceptual_impl = PerceptualImpl::PyramidL1,
                                   const PerceptualPlugin<double>& plugin = {});
void write_trajectory_csv(const TrajectoryReport& report, const std::filesystem::path& path);

struct Series {
  std::string name;
  std::vector<double> values;
  Eigen::Vector3d color;  // RGB in [0, 1]
};

// Line chart on a white canvas; y axis fixed to [y_min, y_max].
Image plot_lines(const std::vector<Series>& series, Index width = 480, Index height = 240, double y_min = 0.0,
                 double y_max = 1.0);

}  // namespace cookgen
