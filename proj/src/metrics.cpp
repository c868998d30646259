#include "cookgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cookgen/csv.hpp"

namespace cookgen {

namespace {

Eigen::VectorXd gaussian_window(int size, double sigma) {
  Eigen::VectorXd g(size);
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) g(i) = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
  return g / g.sum();
}

// Separable valid-mode correlation with a symmetric kernel.
Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& m, const Eigen::VectorXd& g) {
  const Index k = g.size(), oh = m.rows() - k + 1, ow = m.cols() - k + 1;
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(m.rows(), ow);
  for (Index i = 0; i < k; ++i) rows += g(i) * m.middleCols(i, ow);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(oh, ow);
  for (Index i = 0; i < k; ++i) out += g(i) * rows.middleRows(i, oh);
  return out;
}

Eigen::MatrixXd unit_gray(const Image& im) { return ((im.gray().cast<double>().array() + 1.0) * 0.5).matrix(); }

double range_of(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

}  // namespace

double ssim(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const SsimOptions& opt) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw ShapeError("ssim: " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + " vs " +
                     std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
  if (opt.window < 1 || opt.window > x.rows() || opt.window > x.cols())
    throw InvalidArgument("ssim: window " + std::to_string(opt.window) + " does not fit a " +
                          std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + " image");
  const Eigen::VectorXd g = gaussian_window(opt.window, opt.sigma);
  const double c1 = std::pow(opt.k1 * opt.dynamic_range, 2), c2 = std::pow(opt.k2 * opt.dynamic_range, 2);

  const Eigen::ArrayXXd mx = filter_valid(x, g).array(), my = filter_valid(y, g).array();
  const Eigen::ArrayXXd sxx = filter_valid(x.cwiseProduct(x), g).array() - mx * mx;
  const Eigen::ArrayXXd syy = filter_valid(y.cwiseProduct(y), g).array() - my * my;
  const Eigen::ArrayXXd sxy = filter_valid(x.cwiseProduct(y), g).array() - mx * my;
  const Eigen::ArrayXXd map =
      ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
  return map.mean();
}

double ssim(const Image& a, const Image& b, const SsimOptions& opt) {
  if (a.height() != b.height() || a.width() != b.width()) throw ShapeError("ssim: image sizes differ");
  return ssim(unit_gray(a), unit_gray(b), opt);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("spearman: need two equal-length samples (n >= 2)");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<size_t> order(v.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) { return v[i] < v[j]; });
    Eigen::VectorXd r(static_cast<Index>(v.size()));
    for (size_t i = 0; i < order.size();) {
      size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      for (size_t k = i; k <= j; ++k) r(static_cast<Index>(order[k])) = 0.5 * static_cast<double>(i + j);
      i = j + 1;
    }
    return r;
  };
  const Eigen::VectorXd ra = ranks(a), rb = ranks(b);
  const Eigen::VectorXd ca = ra.array() - ra.mean(), cb = rb.array() - rb.mean();
  const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  if (denom == 0.0) return 0.0;
  return ca.dot(cb) / denom;
}

namespace {

std::string perc_column(PerceptualImpl impl) {
  return impl == PerceptualImpl::PyramidL1 ? "one_minus_pyramid_l1" : "one_minus_lpips";
}

}  // namespace

template <typename Scalar>
StateTable eval_state_table(const EmbeddingNet<Scalar>& cis_net, PerceptualImpl perceptual_impl,
                            const std::vector<const CookingSession*>& sessions,
                            const PerceptualPlugin<double>& plugin) {
  if (sessions.empty()) throw InvalidArgument("eval_state_table: no test sessions");
  StateTable table;
  table.perc_label = perc_column(perceptual_impl);
  for (size_t k = 0; k < kPairKinds.size(); ++k) table.rows[k].kind = kPairKinds[k];

  for (const CookingSession* s : sessions) {
    const auto raw_index = s->annotation("raw");
    if (!raw_index) continue;
    std::vector<Image> images;
    std::vector<size_t> kinds;
    for (size_t k = 0; k < kStateNames.size(); ++k)
      if (const auto idx = s->annotation(kStateNames[k])) {
        images.push_back(s->frames[static_cast<size_t>(*idx)].image);
        kinds.push_back(k);
      }
    const Eigen::MatrixXd e = embed_all(cis_net, std::span<const Image>(images));
    const Image& raw = images.front();
    for (size_t i = 0; i < images.size(); ++i) {
      StateRow& row = table.rows[kinds[i]];
      row.ssim += ssim(raw, images[i]);
      row.one_minus_perc += 1.0 - perceptual_loss(raw, images[i], perceptual_impl, plugin);
      row.cis += f_cul(Eigen::VectorXd(e.row(0).transpose()), Eigen::VectorXd(e.row(static_cast<Index>(i)).transpose()));
      ++row.count;
    }
  }
  if (table.rows[0].count == 0) throw InvalidArgument("eval_state_table: no session carries a raw annotation");
  for (StateRow& row : table.rows)
    if (row.count > 0) {
      row.ssim /= row.count;
      row.one_minus_perc /= row.count;
      row.cis /= row.count;
    }
  return table;
}

void write_state_table_csv(const StateTable& table, const std::filesystem::path& path) {
  CsvWriter csv(path, {"pair_kind", "ssim", table.perc_label, "cis", "count"});
  for (const StateRow& r : table.rows)
    csv.row({r.kind, r.ssim, r.one_minus_perc, r.cis, static_cast<long long>(r.count)});
}

template <typename Scalar>
TrajectoryReport trajectory_report(const EmbeddingNet<Scalar>& cis_net, const CookingSession& session,
                                   const Image& anchor, PerceptualImpl perceptual_impl,
                                   const PerceptualPlugin<double>& plugin) {
  if (session.frames.empty()) throw InvalidArgument("trajectory_report: session has no frames");
  std::vector<Image> images{anchor};
  for (const Frame& f : session.frames) images.push_back(f.image);
  const Eigen::MatrixXd e = embed_all(cis_net, std::span<const Image>(images));
  const Eigen::VectorXd ea = e.row(0).transpose();

  TrajectoryReport r;
  r.perc_label = perc_column(perceptual_impl);
  std::vector<double> cis, ss, pc;
  for (size_t i = 0; i < session.frames.size(); ++i) {
    const Image& im = session.frames[i].image;
    TrajectoryRow row{static_cast<int>(i), session.frames[i].t_seconds,
                      f_cul(ea, Eigen::VectorXd(e.row(static_cast<Index>(i) + 1).transpose())), ssim(anchor, im),
                      1.0 - perceptual_loss(anchor, im, perceptual_impl, plugin)};
    cis.push_back(row.cis);
    ss.push_back(row.ssim);
    pc.push_back(row.one_minus_perc);
    r.rows.push_back(row);
  }
  r.cis_range = range_of(cis);
  r.ssim_range = range_of(ss);
  r.perc_range = range_of(pc);
  r.range_ratio = r.ssim_range > 0 ? r.cis_range / r.ssim_range : std::numeric_limits<double>::infinity();
  return r;
}

template <typename Scalar>
TrajectoryReport trajectory_report(const EmbeddingNet<Scalar>& cis_net, const CookingSession& session,
                                   int anchor_frame, PerceptualImpl perceptual_impl,
                                   const PerceptualPlugin<double>& plugin) {
  if (anchor_frame < 0 || anchor_frame >= static_cast<int>(session.frames.size()))
    throw InvalidArgument("trajectory_report: anchor frame " + std::to_string(anchor_frame) + " outside [0, " +
                          std::to_string(session.frames.size()) + ")");
  TrajectoryReport r = trajectory_report(cis_net, session, session.frames[static_cast<size_t>(anchor_frame)].image,
                                         perceptual_impl, plugin);
  // The self-pair is 1 by definition; remove rounding in the embedding.
  r.rows[static_cast<size_t>(anchor_frame)].cis = 1.0;
  return r;
}

void write_trajectory_csv(const TrajectoryReport& report, const std::filesystem::path& path) {
  CsvWriter csv(path, {"frame_index", "t_seconds", "cis", "ssim", report.perc_label});
  for (const TrajectoryRow& r : report.rows)
    csv.row({static_cast<long long>(r.frame_index), r.t_seconds, r.cis, r.ssim, r.one_minus_perc});
}

Image plot_lines(const std::vector<Series>& series, Index width, Index height, double y_min, double y_max) {
  if (width < 16 || height < 16) throw InvalidArgument("plot_lines: canvas too small");
  if (!(y_max > y_min)) throw InvalidArgument("plot_lines: empty y range");
  Image canvas(height, width, 1.0f);
  const Index margin = 8;
  const double pw = static_cast<double>(width - 2 * margin - 1), ph = static_cast<double>(height - 2 * margin - 1);
  auto put = [&](Index y, Index x, const Eigen::Vector3d& rgb) {
    if (y < 0 || y >= height || x < 0 || x >= width) return;
    for (int c = 0; c < 3; ++c) canvas.at(c, y, x) = static_cast<float>(rgb(c) * 2.0 - 1.0);
  };
  const Eigen::Vector3d axis(0.6, 0.6, 0.6);
  for (Index x = margin; x < width - margin; ++x) put(height - margin - 1, x, axis);
  for (Index y = margin; y < height - margin; ++y) put(y, margin, axis);

  for (const Series& s : series) {
    if (s.values.size() < 2) continue;
    auto to_px = [&](size_t i) {
      const double fx = static_cast<double>(i) / static_cast<double>(s.values.size() - 1);
      const double fy = std::clamp((s.values[i] - y_min) / (y_max - y_min), 0.0, 1.0);
      return Eigen::Vector2d(margin + fx * pw, margin + (1.0 - fy) * ph);
    };
    for (size_t i = 0; i + 1 < s.values.size(); ++i) {
      const Eigen::Vector2d a = to_px(i), b = to_px(i + 1);
      const int steps = static_cast<int>(std::ceil((b - a).cwiseAbs().maxCoeff())) + 1;
      for (int k = 0; k <= steps; ++k) {
        const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(k) / steps);
        put(std::lround(p.y()), std::lround(p.x()), s.color);
        put(std::lround(p.y()) + 1, std::lround(p.x()), s.color);
      }
    }
  }
  return canvas;
}

#define COOKGEN_INSTANTIATE_METRICS(S)                                                                          \
  template StateTable eval_state_table(const EmbeddingNet<S>&, PerceptualImpl,                                  \
                                       const std::vector<const CookingSession*>&, const PerceptualPlugin<double>&); \
  template TrajectoryReport trajectory_report(const EmbeddingNet<S>&, const CookingSession&, const Image&,       \
                                              PerceptualImpl, const PerceptualPlugin<double>&);                 \
  template TrajectoryReport trajectory_report(const EmbeddingNet<S>&, const CookingSession&, int,               \
                                              PerceptualImpl, const PerceptualPlugin<double>&);

COOKGEN_INSTANTIATE_METRICS(float)
COOKGEN_INSTANTIATE_METRICS(double)

}  // namespace cookgen
