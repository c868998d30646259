#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cookgen/image.hpp"

namespace cookgen {

inline constexpr std::array<std::string_view, 4> kStateNames = {"raw", "basic", "standard", "extended"};
inline constexpr double kDefaultIntervalSeconds = 30.0;

struct Frame {
  Image image;
  double t_seconds = 0.0;
};

struct CookingSession {
  std::string session_id;
  std::string recipe_id;
  std::vector<Frame> frames;
  double duration_T = 0.0;
  // State name -> frame index.
  std::map<std::string, int> annotations;

  Index size() const { return static_cast<Index>(frames.size()); }
  std::optional<int> annotation(std::string_view state) const;
};

// Throws InvalidArgument when frames/timestamps/annotations break the
// session invariants.
void validate_session(const CookingSession& session);

enum class ShapeKind { Disc, Rectangle, BlobCluster };

struct SyntheticRecipeSpec {
  std::string name;
  ShapeKind shape_kind = ShapeKind::Disc;
  Eigen::Vector3d raw_color{0.9, 0.8, 0.6};
  Eigen::Vector3d extended_color{0.45, 0.25, 0.1};
  double browning_rate = 8.0;
  double browning_midpoint = 0.5;
  double size_factor = 1.0;
  double texture_noise_gain = 0.15;
  std::array<double, 3> state_fractions{0.4, 0.65, 0.9};
  std::uint64_t seed = 0;
};

void validate_spec(const SyntheticRecipeSpec& spec);
std::vector<SyntheticRecipeSpec> load_recipe_specs(const std::filesystem::path& path);
void save_recipe_specs(const std::vector<SyntheticRecipeSpec>& specs, const std::filesystem::path& path);
ShapeKind shape_kind_from_string(std::string_view s);
std::string_view to_string(ShapeKind kind);

// Closed forms the renderer follows, exposed as oracles.
// Browning progress in [0, 1] at session fraction u: logistic curve
// rescaled so that progress(0) = 0 and progress(1) = 1.
double browning_progress(const SyntheticRecipeSpec& spec, double u);
// Dish interior colour in [0, 1]^3 at session fraction u.
Eigen::Vector3d interior_color(const SyntheticRecipeSpec& spec, double u);
// 1 inside the dish footprint at session fraction u, else 0.
Plane dish_mask(const SyntheticRecipeSpec& spec, Index img_size, double u);
// Annotated frame index for a state fraction.
int state_frame_index(double fraction, int n_frames);

CookingSession synth_session(const SyntheticRecipeSpec& spec, int n_frames,
                             double interval_s = kDefaultIntervalSeconds, Index img_size = 64);

// Synthetic dataset: `sessions_per_recipe` sessions per spec, each with a
// seed derived from (spec.seed, session number).
std::vector<CookingSession> synth_dataset(const std::vector<SyntheticRecipeSpec>& specs, int sessions_per_recipe,
                                          int n_frames, double interval_s = kDefaultIntervalSeconds,
                                          Index img_size = 64);
SyntheticRecipeSpec session_spec(const SyntheticRecipeSpec& spec, int session_number);

// Session directory layout: <root>/<session_id>/frame_NNNN.png + session.json.
std::vector<CookingSession> load_sessions(const std::filesystem::path& root);
CookingSession load_session(const std::filesystem::path& dir);
void save_session(const CookingSession& session, const std::filesystem::path& root);

struct DatasetSplit {
  std::vector<std::string> train, val, test;
};

DatasetSplit split_dataset(const std::vector<CookingSession>& sessions, std::uint64_t seed);
void save_split(const DatasetSplit& split, const std::filesystem::path& path);
DatasetSplit load_split(const std::filesystem::path& path);
std::vector<const CookingSession*> select_sessions(const std::vector<CookingSession>& sessions,
                                                   const std::vector<std::string>& ids);

struct AugmentParams {
  bool flip = false;
  double angle_deg = 0.0;
};

// Horizontal flip with p = 0.5, then rotation uniform in [-60, 60] degrees.
AugmentParams draw_augment(std::mt19937_64& rng);
// Flip (if set), then rotate about the centre with bilinear resampling;
// samples falling outside the source are filled with -1.
Image augment(const Image& image, const AugmentParams& params);
Image augment(const Image& image, std::mt19937_64& rng);

enum class MatrixKind { GroundTruthTemporal, Predicted };

struct SimilarityMatrix {
  Eigen::MatrixXd values;
  MatrixKind kind = MatrixKind::Predicted;
  Index size() const { return values.rows(); }
};

// values(i, j) = 1 - |t_i - t_j| / T.
SimilarityMatrix temporal_matrix(const CookingSession& session);

struct StatePair {
  Image raw_image;
  Image state_image;
  std::string recipe_id;
  std::string state_name;
};

// One (raw, state) pair per annotated cooked state, ordered by frame index.
std::vector<StatePair> pair_raw_state(const CookingSession& session);

}  // namespace cookgen
