#include "cookgen/sessions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include <json.hpp>

namespace cookgen {

using nlohmann::json;
namespace fs = std::filesystem;

std::optional<int> CookingSession::annotation(std::string_view state) const {
  auto it = annotations.find(std::string(state));
  if (it == annotations.end()) return std::nullopt;
  return it->second;
}

void validate_session(const CookingSession& s) {
  const std::string who = "session '" + s.session_id + "': ";
  if (s.frames.empty()) throw InvalidArgument(who + "no frames");
  const Index h = s.frames[0].image.height(), w = s.frames[0].image.width();
  for (size_t i = 0; i < s.frames.size(); ++i) {
    const Frame& f = s.frames[i];
    if (f.image.height() != h || f.image.width() != w) throw InvalidArgument(who + "frames differ in size");
    if (f.t_seconds < 0) throw InvalidArgument(who + "negative timestamp");
    if (i > 0 && f.t_seconds < s.frames[i - 1].t_seconds)
      throw InvalidArgument(who + "timestamps decrease at frame " + std::to_string(i));
  }
  for (const auto& [name, idx] : s.annotations)
    if (idx < 0 || idx >= static_cast<int>(s.frames.size()))
      throw InvalidArgument(who + "annotation '" + name + "' points outside the session");
  if (auto raw = s.annotation("raw"); raw && *raw != 0) throw InvalidArgument(who + "raw annotation must be frame 0");
  int last = -1;
  for (std::string_view state : kStateNames) {
    auto idx = s.annotation(state);
    if (!idx) continue;
    if (*idx <= last) throw InvalidArgument(who + "annotated states are not strictly increasing");
    last = *idx;
  }
}

// ---------------------------------------------------------------------------
// Synthetic recipes

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Disc: return "disc";
    case ShapeKind::Rectangle: return "rectangle";
    case ShapeKind::BlobCluster: return "blob-cluster";
  }
  return "disc";
}

ShapeKind shape_kind_from_string(std::string_view s) {
  if (s == "disc") return ShapeKind::Disc;
  if (s == "rectangle") return ShapeKind::Rectangle;
  if (s == "blob-cluster") return ShapeKind::BlobCluster;
  throw InvalidArgument("unknown shape kind '" + std::string(s) + "'");
}

void validate_spec(const SyntheticRecipeSpec& spec) {
  const std::string who = "recipe spec '" + spec.name + "': ";
  auto in_unit = [](const Eigen::Vector3d& c) { return (c.array() >= 0.0).all() && (c.array() <= 1.0).all(); };
  if (!in_unit(spec.raw_color) || !in_unit(spec.extended_color)) throw InvalidArgument(who + "colours must lie in [0,1]");
  if (!(spec.browning_rate > 0)) throw InvalidArgument(who + "browning_rate must be positive");
  if (!(spec.browning_midpoint > 0 && spec.browning_midpoint < 1))
    throw InvalidArgument(who + "browning_midpoint must lie in (0,1)");
  if (!(spec.size_factor > 0)) throw InvalidArgument(who + "size_factor must be positive");
  if (!(spec.texture_noise_gain >= 0)) throw InvalidArgument(who + "texture_noise_gain must be nonnegative");
  const auto& f = spec.state_fractions;
  if (!(0 < f[0] && f[0] < f[1] && f[1] < f[2] && f[2] <= 1))
    throw InvalidArgument(who + "state fractions must satisfy 0 < basic < standard < extended <= 1");
}

namespace {

json spec_to_json(const SyntheticRecipeSpec& s) {
  return json{{"name", s.name},
              {"shape_kind", std::string(to_string(s.shape_kind))},
              {"raw_color", {s.raw_color[0], s.raw_color[1], s.raw_color[2]}},
              {"extended_color", {s.extended_color[0], s.extended_color[1], s.extended_color[2]}},
              {"browning_rate", s.browning_rate},
              {"browning_midpoint", s.browning_midpoint},
              {"size_factor", s.size_factor},
              {"texture_noise_gain", s.texture_noise_gain},
              {"state_fractions", s.state_fractions},
              {"seed", s.seed}};
}

SyntheticRecipeSpec spec_from_json(const json& j) {
  SyntheticRecipeSpec s;
  s.name = j.at("name").get<std::string>();
  s.shape_kind = shape_kind_from_string(j.value("shape_kind", std::string("disc")));
  auto color = [](const json& c) {
    if (!c.is_array() || c.size() != 3) throw FormatError("colour must be a 3-element array");
    return Eigen::Vector3d(c[0].get<double>(), c[1].get<double>(), c[2].get<double>());
  };
  s.raw_color = color(j.at("raw_color"));
  s.extended_color = color(j.at("extended_color"));
  s.browning_rate = j.value("browning_rate", s.browning_rate);
  s.browning_midpoint = j.value("browning_midpoint", s.browning_midpoint);
  s.size_factor = j.value("size_factor", s.size_factor);
  s.texture_noise_gain = j.value("texture_noise_gain", s.texture_noise_gain);
  if (j.contains("state_fractions")) s.state_fractions = j.at("state_fractions").get<std::array<double, 3>>();
  s.seed = j.value("seed", std::uint64_t{0});
  validate_spec(s);
  return s;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finaliser over a combined key
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Blob {
  double dx, dy, r;
};

// Per-session layout drawn once from the spec seed.
struct Geometry {
  double cx, cy, radius, angle;
  std::vector<Blob> blobs;
  Eigen::Vector3d background;
};

Geometry make_geometry(const SyntheticRecipeSpec& spec, Index img_size) {
  std::mt19937_64 rng(mix_seed(spec.seed, 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double n = static_cast<double>(img_size);
  Geometry g;
  g.cx = (n - 1) / 2 + (unit(rng) - 0.5) * 0.12 * n;
  g.cy = (n - 1) / 2 + (unit(rng) - 0.5) * 0.12 * n;
  g.radius = n * (0.2 + 0.06 * unit(rng));
  g.angle = unit(rng) * std::numbers::pi;
  const double phase = unit(rng) * 2 * std::numbers::pi;
  g.blobs.push_back({0, 0, 0.55});
  for (int k = 0; k < 3; ++k) {
    const double a = phase + 2 * std::numbers::pi * k / 3;
    g.blobs.push_back({0.6 * std::cos(a), 0.6 * std::sin(a), 0.42 + 0.1 * unit(rng)});
  }
  const double base = 0.12 + 0.06 * unit(rng);
  g.background = Eigen::Vector3d(base, base * 0.95, base * 0.9);
  return g;
}

Plane mask_from_geometry(const SyntheticRecipeSpec& spec, const Geometry& g, Index img_size, double u) {
  const double scale = 1.0 + (spec.size_factor - 1.0) * u;
  const double r = g.radius * scale;
  Plane m = Plane::Zero(img_size, img_size);
  const double ca = std::cos(g.angle), sa = std::sin(g.angle);
  for (Index y = 0; y < img_size; ++y) {
    for (Index x = 0; x < img_size; ++x) {
      const double px = static_cast<double>(x) - g.cx, py = static_cast<double>(y) - g.cy;
      bool inside = false;
      switch (spec.shape_kind) {
        case ShapeKind::Disc:
          inside = px * px + py * py <= r * r;
          break;
        case ShapeKind::Rectangle: {
          const double lx = ca * px + sa * py, ly = -sa * px + ca * py;
          inside = std::abs(lx) <= r && std::abs(ly) <= 0.65 * r;
          break;
        }
        case ShapeKind::BlobCluster:
          for (const Blob& b : g.blobs) {
            const double qx = px - b.dx * r, qy = py - b.dy * r, br = b.r * r;
            if (qx * qx + qy * qy <= br * br) {
              inside = true;
              break;
            }
          }
          break;
      }
      m(y, x) = inside ? 1.0f : 0.0f;
    }
  }
  return m;
}

// Zero-mean, unit-variance smooth texture field.
Plane texture_field(const SyntheticRecipeSpec& spec, Index img_size) {
  std::mt19937_64 rng(mix_seed(spec.seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);
  Plane raw(img_size, img_size);
  for (Index i = 0; i < raw.size(); ++i) raw.data()[i] = static_cast<float>(normal(rng));
  Plane smooth = Plane::Zero(img_size, img_size);
  for (Index y = 0; y < img_size; ++y)
    for (Index x = 0; x < img_size; ++x) {
      float acc = 0;
      int cnt = 0;
      for (Index dy = -1; dy <= 1; ++dy)
        for (Index dx = -1; dx <= 1; ++dx) {
          const Index yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= img_size || xx < 0 || xx >= img_size) continue;
          acc += raw(yy, xx);
          ++cnt;
        }
      smooth(y, x) = acc / static_cast<float>(cnt);
    }
  const float mu = smooth.mean();
  const float sd = std::sqrt((smooth.array() - mu).square().mean());
  return (smooth.array() - mu) / sd;
}

constexpr double kSensorNoise = 0.01;

}  // namespace

std::vector<SyntheticRecipeSpec> load_recipe_specs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open recipe spec file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("recipe spec file '" + path.string() + "': " + e.what());
  }
  if (!j.is_array()) throw FormatError("recipe spec file '" + path.string() + "' must hold a JSON list");
  std::vector<SyntheticRecipeSpec> specs;
  for (const json& e : j) specs.push_back(spec_from_json(e));
  return specs;
}

void save_recipe_specs(const std::vector<SyntheticRecipeSpec>& specs, const fs::path& path) {
  json j = json::array();
  for (const auto& s : specs) j.push_back(spec_to_json(s));
  std::ofstream(path) << j.dump(2) << '\n';
}

double browning_progress(const SyntheticRecipeSpec& spec, double u) {
  auto logistic = [&](double v) { return 1.0 / (1.0 + std::exp(-spec.browning_rate * (v - spec.browning_midpoint))); };
  const double lo = logistic(0.0), hi = logistic(1.0);
  return (logistic(u) - lo) / (hi - lo);
}

Eigen::Vector3d interior_color(const SyntheticRecipeSpec& spec, double u) {
  return spec.raw_color + (spec.extended_color - spec.raw_color) * browning_progress(spec, u);
}

Plane dish_mask(const SyntheticRecipeSpec& spec, Index img_size, double u) {
  return mask_from_geometry(spec, make_geometry(spec, img_size), img_size, u);
}

int state_frame_index(double fraction, int n_frames) {
  return static_cast<int>(std::lround(fraction * static_cast<double>(n_frames - 1)));
}

CookingSession synth_session(const SyntheticRecipeSpec& spec, int n_frames, double interval_s, Index img_size) {
  validate_spec(spec);
  if (n_frames < 4) throw InvalidArgument("synth_session: need at least 4 frames, got " + std::to_string(n_frames));
  if (!(interval_s > 0)) throw InvalidArgument("synth_session: interval must be positive");
  if (img_size < 8) throw InvalidArgument("synth_session: image size too small");

  CookingSession s;
  s.recipe_id = spec.name;
  s.session_id = spec.name + "-" + std::to_string(spec.seed);
  s.annotations["raw"] = 0;
  int previous = 0;
  for (int k = 0; k < 3; ++k) {
    const int idx = state_frame_index(spec.state_fractions[static_cast<size_t>(k)], n_frames);
    if (idx <= previous)
      throw InvalidArgument("synth_session: state '" + std::string(kStateNames[static_cast<size_t>(k + 1)]) +
                            "' collides with an earlier state at frame " + std::to_string(idx));
    s.annotations[std::string(kStateNames[static_cast<size_t>(k + 1)])] = idx;
    previous = idx;
  }

  const Geometry geom = make_geometry(spec, img_size);
  const Plane texture = texture_field(spec, img_size);
  s.frames.reserve(static_cast<size_t>(n_frames));
  for (int k = 0; k < n_frames; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(n_frames - 1);
    const Plane mask = mask_from_geometry(spec, geom, img_size, u);
    const Eigen::Vector3d color = interior_color(spec, u);
    const double amp = spec.texture_noise_gain * u;
    std::mt19937_64 rng(mix_seed(spec.seed, 1000 + static_cast<std::uint64_t>(k)));
    std::normal_distribution<double> sensor(0.0, kSensorNoise);
    Frame f;
    f.t_seconds = static_cast<double>(k) * interval_s;
    f.image = Image(img_size, img_size);
    for (Index y = 0; y < img_size; ++y)
      for (Index x = 0; x < img_size; ++x) {
        const bool inside = mask(y, x) > 0.5f;
        for (int c = 0; c < 3; ++c) {
          double v = inside ? 2.0 * color[c] - 1.0 + amp * texture(y, x) : 2.0 * geom.background[c] - 1.0;
          v += sensor(rng);
          f.image.at(c, y, x) = static_cast<float>(std::clamp(v, -1.0, 1.0));
        }
      }
    s.frames.push_back(std::move(f));
  }
  s.duration_T = s.frames.back().t_seconds;
  return s;
}

SyntheticRecipeSpec session_spec(const SyntheticRecipeSpec& spec, int session_number) {
  SyntheticRecipeSpec s = spec;
  s.seed = mix_seed(spec.seed, 0xC00C + static_cast<std::uint64_t>(session_number)) % 1000000007ULL;
  return s;
}

std::vector<CookingSession> synth_dataset(const std::vector<SyntheticRecipeSpec>& specs, int sessions_per_recipe,
                                          int n_frames, double interval_s, Index img_size) {
  std::vector<CookingSession> out;
  for (const auto& spec : specs)
    for (int i = 0; i < sessions_per_recipe; ++i) {
      CookingSession s = synth_session(session_spec(spec, i), n_frames, interval_s, img_size);
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d", i);
      s.session_id = spec.name + "_" + buf;
      out.push_back(std::move(s));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Directory layout

namespace {

std::optional<int> frame_number(const fs::path& p) {
  const std::string name = p.filename().string();
  constexpr std::string_view prefix = "frame_", suffix = ".png";
  if (name.size() <= prefix.size() + suffix.size() || !name.starts_with(prefix) || !name.ends_with(suffix))
    return std::nullopt;
  const std::string_view digits(name.data() + prefix.size(), name.size() - prefix.size() - suffix.size());
  int v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return v;
}

}  // namespace

CookingSession load_session(const fs::path& dir) {
  CookingSession s;
  s.session_id = dir.filename().string();
  const std::string who = "session '" + s.session_id + "': ";
  const fs::path meta_path = dir / "session.json";
  if (!fs::exists(meta_path)) throw FormatError(who + "missing metadata file session.json");
  json meta;
  try {
    std::ifstream in(meta_path);
    in >> meta;
    s.recipe_id = meta.at("recipe_id").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(who + "bad session.json: " + e.what());
  }
  const double interval = meta.value("interval_s", kDefaultIntervalSeconds);
  if (!(interval > 0)) throw FormatError(who + "interval_s must be positive");

  std::vector<std::pair<int, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (auto n = frame_number(entry.path())) files.emplace_back(*n, entry.path());
  std::sort(files.begin(), files.end());
  for (size_t i = 0; i < files.size(); ++i)
    if (files[i].first != static_cast<int>(i))
      throw FormatError(who + "frame index " + std::to_string(i) + " missing from the sequence");

  std::vector<double> times;
  if (meta.contains("t_seconds")) {
    times = meta.at("t_seconds").get<std::vector<double>>();
    if (times.size() != files.size()) throw FormatError(who + "t_seconds length does not match frame count");
  } else {
    for (size_t i = 0; i < files.size(); ++i) times.push_back(static_cast<double>(i) * interval);
  }
  for (size_t i = 1; i < times.size(); ++i)
    if (times[i] < times[i - 1]) throw FormatError(who + "non-monotone timestamps at frame " + std::to_string(i));

  for (size_t i = 0; i < files.size(); ++i) s.frames.push_back(Frame{read_png(files[i].second), times[i]});
  if (meta.contains("annotations"))
    for (const auto& [k, v] : meta.at("annotations").items()) s.annotations[k] = v.get<int>();
  s.duration_T = s.frames.empty() ? 0.0 : s.frames.back().t_seconds;
  try {
    if (!s.frames.empty()) validate_session(s);
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
  return s;
}

std::vector<CookingSession> load_sessions(const fs::path& root) {
  if (!fs::is_directory(root)) throw FormatError("session root '" + root.string() + "' is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<CookingSession> out;
  for (const auto& d : dirs) out.push_back(load_session(d));
  return out;
}

void save_session(const CookingSession& session, const fs::path& root) {
  const fs::path dir = root / session.session_id;
  fs::create_directories(dir);
  for (size_t i = 0; i < session.frames.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%04zu.png", i);
    write_png(session.frames[i].image, dir / buf);
  }
  const double interval = session.frames.size() > 1 ? session.frames[1].t_seconds - session.frames[0].t_seconds
                                                    : kDefaultIntervalSeconds;
  json meta{{"recipe_id", session.recipe_id}, {"interval_s", interval}, {"annotations", session.annotations}};
  std::ofstream(dir / "session.json") << meta.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Splits

DatasetSplit split_dataset(const std::vector<CookingSession>& sessions, std::uint64_t seed) {
  if (sessions.size() < 10)
    throw InvalidArgument("split_dataset: need at least 10 sessions, got " + std::to_string(sessions.size()));
  std::map<std::string, std::vector<std::string>> by_recipe;
  std::set<std::string> seen;
  for (const auto& s : sessions) {
    if (!seen.insert(s.session_id).second) throw InvalidArgument("split_dataset: duplicate session id " + s.session_id);
    by_recipe[s.recipe_id].push_back(s.session_id);
  }
  std::mt19937_64 rng(seed);
  DatasetSplit split;
  for (auto& [recipe, ids] : by_recipe) {
    std::sort(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);
    const size_t n = ids.size(), n_test = n / 5, n_val = n / 10;
    split.test.insert(split.test.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.val.insert(split.val.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_test),
                     ids.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    split.train.insert(split.train.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), ids.end());
  }
  return split;
}

void save_split(const DatasetSplit& split, const fs::path& path) {
  json j{{"train", split.train}, {"val", split.val}, {"test", split.test}};
  std::ofstream(path) << j.dump(2) << '\n';
}

DatasetSplit load_split(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open split file '" + path.string() + "'");
  try {
    json j;
    in >> j;
    return DatasetSplit{j.at("train").get<std::vector<std::string>>(), j.at("val").get<std::vector<std::string>>(),
                        j.at("test").get<std::vector<std::string>>()};
  } catch (const json::exception& e) {
    throw FormatError("split file '" + path.string() + "': " + e.what());
  }
}

std::vector<const CookingSession*> select_sessions(const std::vector<CookingSession>& sessions,
                                                   const std::vector<std::string>& ids) {
  std::map<std::string, const CookingSession*> index;
  for (const auto& s : sessions) index[s.session_id] = &s;
  std::vector<const CookingSession*> out;
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw LookupError("unknown session id '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Augmentation

AugmentParams draw_augment(std::mt19937_64& rng) {
  std::bernoulli_distribution flip(0.5);
  std::uniform_real_distribution<double> angle(-60.0, 60.0);
  AugmentParams p;
  p.flip = flip(rng);
  p.angle_deg = angle(rng);
  return p;
}

Image augment(const Image& image, const AugmentParams& params) {
  Image src = image;
  if (params.flip)
    for (int c = 0; c < 3; ++c) src.plane(c) = image.plane(c).rowwise().reverse().eval();
  if (params.angle_deg == 0.0) return src;

  const Index h = src.height(), w = src.width();
  const double cx = (static_cast<double>(w) - 1) / 2, cy = (static_cast<double>(h) - 1) / 2;
  const double th = params.angle_deg * std::numbers::pi / 180.0;
  const double ct = std::cos(th), st = std::sin(th);
  Image out(h, w, -1.0f);
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      // Inverse map: output pixel -> source coordinate.
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double sx = ct * dx + st * dy + cx, sy = -st * dx + ct * dy + cy;
      if (sx < 0 || sy < 0 || sx > static_cast<double>(w - 1) || sy > static_cast<double>(h - 1)) continue;
      const auto x0 = static_cast<Index>(sx), y0 = static_cast<Index>(sy);
      const Index x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const auto fx = static_cast<float>(sx - static_cast<double>(x0));
      const auto fy = static_cast<float>(sy - static_cast<double>(y0));
      for (int c = 0; c < 3; ++c) {
        const Plane& p = src.plane(c);
        const float top = p(y0, x0) * (1 - fx) + p(y0, x1) * fx;
        const float bot = p(y1, x0) * (1 - fx) + p(y1, x1) * fx;
        out.at(c, y, x) = std::clamp(top * (1 - fy) + bot * fy, -1.0f, 1.0f);
      }
    }
  }
  return out;
}

Image augment(const Image& image, std::mt19937_64& rng) { return augment(image, draw_augment(rng)); }

// ---------------------------------------------------------------------------

SimilarityMatrix temporal_matrix(const CookingSession& session) {
  const Index n = session.size();
  if (n < 2) throw InvalidArgument("temporal_matrix: need at least 2 frames");
  const double T = session.duration_T;
  if (!(T > 0)) throw InvalidArgument("temporal_matrix: session duration must be positive");
  SimilarityMatrix m{Eigen::MatrixXd(n, n), MatrixKind::GroundTruthTemporal};
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double dt = std::abs(session.frames[static_cast<size_t>(i)].t_seconds -
                                 session.frames[static_cast<size_t>(j)].t_seconds);
      m.values(i, j) = 1.0 - dt / T;
    }
  return m;
}

std::vector<StatePair> pair_raw_state(const CookingSession& session) {
  auto raw = session.annotation("raw");
  if (!raw) throw InvalidArgument("pair_raw_state: session '" + session.session_id + "' has no raw annotation");
  std::vector<std::pair<int, std::string>> states;
  for (const auto& [name, idx] : session.annotations)
    if (name != "raw") states.emplace_back(idx, name);
  if (states.empty())
    throw InvalidArgument("pair_raw_state: session '" + session.session_id + "' has no cooked-state annotation");
  std::sort(states.begin(), states.end());
  std::vector<StatePair> pairs;
  for (const auto& [idx, name] : states)
    pairs.push_back(StatePair{session.frames[0].image, session.frames[static_cast<size_t>(idx)].image,
                              session.recipe_id, name});
  return pairs;
}

}  // namespace cookgen
