// Command-line front end: synthetic data, training, generation, monitoring,
// evaluation, quantization and report grids.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

#include "cookgen/archive.hpp"
#include "cookgen/metrics.hpp"
#include "cookgen/monitor.hpp"
#include "cookgen/training.hpp"
#include "cookgen/version.hpp"

namespace fs = std::filesystem;
using namespace cookgen;
using json = nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

// Run configs resolve relative paths against their own directory.
fs::path resolve(const fs::path& base, const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("run config is missing '") + key + "'");
  fs::path p = j.at(key).get<std::string>();
  return p.is_absolute() ? p : base / p;
}

void write_run_manifest(const fs::path& out_dir, const std::string& command, const json& config,
                        std::uint64_t seed) {
  fs::create_directories(out_dir);
  write_json({{"command", command}, {"version", version_string()}, {"seed", seed}, {"config", config}},
             out_dir / "run_manifest.json");
}

std::vector<const CookingSession*> pick(const std::vector<CookingSession>& all, const fs::path& split_path,
                                        const std::string& which) {
  if (split_path.empty()) {
    std::vector<const CookingSession*> out;
    for (const auto& s : all) out.push_back(&s);
    return out;
  }
  const DatasetSplit split = load_split(split_path);
  if (which == "train") return select_sessions(all, split.train);
  if (which == "val") return select_sessions(all, split.val);
  if (which == "test") return select_sessions(all, split.test);
  throw ConfigError("unknown split part '" + which + "'");
}

int cmd_synth(const fs::path& spec_path, const fs::path& out, int sessions, int frames, double interval, Index size) {
  const auto specs = load_recipe_specs(spec_path);
  const auto data = synth_dataset(specs, sessions, frames, interval, size);
  fs::create_directories(out);
  for (const auto& s : data) save_session(s, out);
  json cfg{{"spec", spec_path.string()}, {"sessions_per_recipe", sessions}, {"frames", frames},
           {"interval_s", interval},     {"img_size", size}};
  write_run_manifest(out, "synth", cfg, specs.empty() ? 0 : specs.front().seed);
  std::cout << "wrote " << data.size() << " sessions to " << out << '\n';
  return 0;
}

int cmd_split(const fs::path& data_dir, std::uint64_t seed, const fs::path& out) {
  const auto data = load_sessions(data_dir);
  const DatasetSplit split = split_dataset(data, seed);
  save_split(split, out);
  std::cout << "train " << split.train.size() << ", val " << split.val.size() << ", test " << split.test.size()
            << '\n';
  return 0;
}

int cmd_train_cis(const fs::path& config_path) {
  const json cfg = read_json(config_path);
  const fs::path base = config_path.parent_path();
  const fs::path out = resolve(base, cfg, "out");
  const auto data = load_sessions(resolve(base, cfg, "data"));
  const fs::path split = cfg.contains("split") ? resolve(base, cfg, "split") : fs::path();
  const auto train = pick(data, split, "train");

  EmbeddingNet<float> net(EmbeddingNetConfig::from_json(cfg.value("model", json::object())));
  const CisTrainConfig tc = CisTrainConfig::from_json(cfg.value("train", json::object()));
  write_run_manifest(out, "train-cis", cfg, tc.seed);
  std::cout << "cis parameters: " << parameter_count(net) << ", training sessions: " << train.size() << '\n';
  train_cis(net, train, tc, out / "cis_loss.csv", [](const CisEpochStats& s) {
    std::cout << "epoch " << s.epoch << " loss " << s.mean_loss << " lr " << s.lr << std::endl;
  });
  save_weights(net, out / "cis");
  return 0;
}

int cmd_train_gen(const fs::path& config_path) {
  const json cfg = read_json(config_path);
  const fs::path base = config_path.parent_path();
  const fs::path out = resolve(base, cfg, "out");
  const auto data = load_sessions(resolve(base, cfg, "data"));
  const fs::path split = cfg.contains("split") ? resolve(base, cfg, "split") : fs::path();
  const auto train = pick(data, split, "train");
  const EmbeddingNet<float> cis = load_cis(resolve(base, cfg, "cis"));

  ContextIndex contexts;
  register_contexts(contexts, train);
  const GeneratorConfig gc = GeneratorConfig::from_json(cfg.value("generator", json::object()));
  GeneratorNet<float> gen(gc, contexts);
  DiscriminatorNet<float> disc(DiscriminatorConfig::from_json(cfg.value("discriminator", json::object())));
  const GenTrainConfig tc = GenTrainConfig::from_json(cfg.value("train", json::object()));

  const Index census = generator_parameter_census(gc), counted = parameter_count(gen);
  std::cout << "generator parameters: " << counted << " (shape census " << census << ")\n"
            << "discriminator parameters: " << parameter_count(disc) << '\n';
  for (const FeatureShape& f : generator_feature_shapes(gc))
    std::cout << "  " << f.stage << ": " << f.channels << " x " << f.spatial << " x " << f.spatial << '\n';
  if (census != counted) throw StateError("parameter census mismatch");

  write_run_manifest(out, "train-gen", cfg, tc.seed);
  train_generator(train, gen, disc, cis, tc, {out / "gen_loss.csv", out / "gen_manifest.json"},
                  [](const GenEpochStats& s) {
                    std::cout << "epoch " << s.epoch << " composite " << s.composite << " gan_d " << s.gan_d
                              << " gan_g " << s.gan_g << " perc " << s.perc << " cis " << s.cis << " lr " << s.lr
                              << std::endl;
                  });
  save_weights(gen, out / "generator");
  save_weights(disc, out / "discriminator");
  return 0;
}

int cmd_generate(const fs::path& archive, const fs::path& raw_path, const std::string& recipe,
                 const std::string& state, bool all_states, const fs::path& out) {
  const GeneratorNet<float> gen = load_generator(archive);
  const Image raw = read_png(raw_path);
  std::vector<std::string> states;
  if (all_states) {
    states = gen.contexts().states_of(recipe);
    if (states.empty()) throw LookupError("no states registered for recipe '" + recipe + "'");
  } else {
    if (state.empty()) throw ConfigError("generate needs --state or --all-states");
    states.push_back(state);
  }
  fs::create_directories(out);
  for (const std::string& s : states) {
    write_png(generate(gen, raw, recipe, s), out / (s + ".png"));
    std::cout << "wrote " << (out / (s + ".png")).string() << '\n';
  }
  write_run_manifest(out, "generate",
                     {{"archive", archive.string()}, {"raw", raw_path.string()}, {"recipe", recipe}, {"states", states}},
                     gen.config().seed);
  return 0;
}

int cmd_monitor(const fs::path& cis_dir, const fs::path& session_dir, const fs::path& target_path,
                const fs::path& config_path, const fs::path& out) {
  const EmbeddingNet<float> cis = load_cis(cis_dir);
  const CookingSession session = load_session(session_dir);
  const Image target = read_png(target_path);
  const MonitorConfig mc = config_path.empty() ? MonitorConfig{} : MonitorConfig::from_json(read_json(config_path));
  const MonitorReport r = run_session_offline(cis, session, target, mc);
  fs::create_directories(out);
  write_trace_csv(r, out / "trace.csv");
  json decision{{"session_id", session.session_id}, {"stopped", r.stop_index.has_value()}};
  if (r.stop_index) {
    decision["stop_index"] = *r.stop_index;
    decision["stop_t_seconds"] = *r.stop_t_seconds;
    decision["decided_at"] = *r.decided_at;
    const std::array<Image, 2> strip{target, session.frames[static_cast<size_t>(*r.stop_index)].image};
    write_png(hstack(std::span<const Image>(strip)), out / "strip.png");
    std::cout << "stop at frame " << *r.stop_index << " (t = " << *r.stop_t_seconds << " s)\n";
  } else {
    std::cout << "no stop: similarity peak never confirmed\n";
  }
  write_json(decision, out / "decision.json");
  write_run_manifest(out, "monitor",
                     {{"cis", cis_dir.string()}, {"session", session_dir.string()}, {"target", target_path.string()},
                      {"monitor", mc.to_json()}},
                     0);
  return 0;
}

int cmd_eval(const fs::path& cis_dir, const fs::path& data_dir, const fs::path& split, const std::string& perc,
             const fs::path& out) {
  const EmbeddingNet<float> cis = load_cis(cis_dir);
  const auto data = load_sessions(data_dir);
  const auto test = pick(data, split, "test");
  const PerceptualImpl impl = perceptual_impl_from_string(perc);
  fs::create_directories(out / "trajectories");
  const StateTable table = eval_state_table(cis, impl, test);
  write_state_table_csv(table, out / "state_table.csv");
  for (const StateRow& r : table.rows)
    std::cout << r.kind << ": ssim " << r.ssim << ", " << table.perc_label << " " << r.one_minus_perc << ", cis "
              << r.cis << " (n=" << r.count << ")\n";
  for (const CookingSession* s : test) {
    const TrajectoryReport tr = trajectory_report(cis, *s, 0, impl);
    write_trajectory_csv(tr, out / "trajectories" / (s->session_id + ".csv"));
    std::vector<Series> series{{"cis", {}, {0.8, 0.2, 0.1}}, {"ssim", {}, {0.1, 0.3, 0.8}},
                               {table.perc_label, {}, {0.2, 0.6, 0.2}}};
    for (const TrajectoryRow& row : tr.rows) {
      series[0].values.push_back(row.cis);
      series[1].values.push_back(row.ssim);
      series[2].values.push_back(row.one_minus_perc);
    }
    write_png(plot_lines(series), out / "trajectories" / (s->session_id + ".png"));
  }
  write_run_manifest(out, "eval",
                     {{"cis", cis_dir.string()}, {"data", data_dir.string()}, {"split", split.string()},
                      {"perceptual_impl", perc}},
                     0);
  return 0;
}

int cmd_quantize(const fs::path& archive_dir, const fs::path& scheme_path, const fs::path& out) {
  const WeightArchive in = load_archive(archive_dir);
  const QuantScheme scheme =
      scheme_path.empty() ? QuantScheme::hybrid_default() : QuantScheme::from_json(read_json(scheme_path));
  QuantReport report;
  const WeightArchive q = quantize_archive(in, scheme, &report);
  save_archive(q, out);
  write_json(report.to_json(), out / "quant_report.json");
  std::cout << "bytes " << report.bytes_before << " -> " << report.bytes_after << " (x" << report.reduction()
            << ")\n";
  return 0;
}

int cmd_report(const fs::path& gen_dir, const fs::path& data_dir, const fs::path& split, int max_rows,
               const fs::path& out) {
  const GeneratorNet<float> gen = load_generator(gen_dir);
  const auto data = load_sessions(data_dir);
  const auto test = pick(data, split, "test");
  std::vector<Image> rows;
  for (const CookingSession* s : test) {
    if (static_cast<int>(rows.size()) >= max_rows) break;
    std::vector<Image> cells;
    for (const StatePair& p : pair_raw_state(*s)) {
      if (!gen.contexts().contains(p.recipe_id, p.state_name)) continue;
      cells.push_back(p.raw_image);
      cells.push_back(p.state_image);
      cells.push_back(generate(gen, p.raw_image, p.recipe_id, p.state_name));
    }
    if (!cells.empty()) rows.push_back(hstack(std::span<const Image>(cells)));
  }
  if (rows.empty()) throw InvalidArgument("report: no session with registered contexts");
  // Rows can differ in width when sessions carry different state sets.
  Index width = 0;
  for (const Image& r : rows) width = std::max(width, r.width());
  for (Image& r : rows)
    if (r.width() < width) {
      Image padded(r.height(), width, 1.0f);
      for (int c = 0; c < 3; ++c) padded.plane(c).leftCols(r.width()) = r.plane(c);
      r = padded;
    }
  fs::create_directories(out.parent_path().empty() ? fs::path(".") : out.parent_path());
  write_png(vstack(std::span<const Image>(rows)), out);
  std::cout << "wrote " << rows.size() << " rows (raw | real | generated per state) to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cooked-food image synthesis and progress monitoring"};
  app.set_version_flag("--version", std::string(version_string()));
  app.require_subcommand(1);

  fs::path spec, out, data, split, config, archive, raw, cis, session, target, scheme;
  std::string recipe, state, perc = "pyramid-l1";
  int sessions = 20, frames = 16, max_rows = 8;
  double interval = kDefaultIntervalSeconds;
  Index size = 64;
  std::uint64_t seed = 0;
  bool all_states = false;

  auto* synth = app.add_subcommand("synth", "write a synthetic session dataset from a recipe spec file");
  synth->add_option("--spec", spec, "JSON list of recipe specs")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", out, "output directory")->required();
  synth->add_option("--sessions", sessions, "sessions per recipe")->check(CLI::PositiveNumber);
  synth->add_option("--frames", frames, "frames per session")->check(CLI::Range(4, 100000));
  synth->add_option("--interval", interval, "seconds between frames")->check(CLI::PositiveNumber);
  synth->add_option("--size", size, "image size in pixels")->check(CLI::PositiveNumber);

  auto* split_cmd = app.add_subcommand("split", "70:10:20 stratified split of a session directory");
  split_cmd->add_option("--data", data)->required()->check(CLI::ExistingDirectory);
  split_cmd->add_option("--seed", seed);
  split_cmd->add_option("--out", out, "split JSON")->required();

  auto* train_cis_cmd = app.add_subcommand("train-cis", "train the CIS embedding network");
  train_cis_cmd->add_option("--config", config, "run config JSON")->required()->check(CLI::ExistingFile);

  auto* train_gen_cmd = app.add_subcommand("train-gen", "train the conditioned generator");
  train_gen_cmd->add_option("--config", config, "run config JSON")->required()->check(CLI::ExistingFile);

  auto* gen_cmd = app.add_subcommand("generate", "generate cooked-state images from a raw image");
  gen_cmd->add_option("--archive", archive, "generator archive")->required()->check(CLI::ExistingDirectory);
  gen_cmd->add_option("--raw", raw, "raw image PNG")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--recipe", recipe)->required();
  auto* state_opt = gen_cmd->add_option("--state", state);
  gen_cmd->add_flag("--all-states", all_states, "one image per registered state")->excludes(state_opt);
  gen_cmd->add_option("--out", out)->required();

  auto* mon_cmd = app.add_subcommand("monitor", "replay a session against a target image");
  mon_cmd->add_option("--cis", cis, "CIS archive")->required()->check(CLI::ExistingDirectory);
  mon_cmd->add_option("--session", session, "session directory")->required()->check(CLI::ExistingDirectory);
  mon_cmd->add_option("--target", target, "target image PNG")->required()->check(CLI::ExistingFile);
  mon_cmd->add_option("--config", config, "monitor config JSON")->check(CLI::ExistingFile);
  mon_cmd->add_option("--out", out)->required();

  auto* eval_cmd = app.add_subcommand("eval", "state table and trajectory reports");
  eval_cmd->add_option("--cis", cis, "CIS archive")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--data", data)->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--split", split, "split JSON (uses its test part)")->check(CLI::ExistingFile);
  eval_cmd->add_option("--perceptual", perc)->check(CLI::IsMember({"pyramid-l1", "external-lpips"}));
  eval_cmd->add_option("--out", out)->required();

  auto* quant_cmd = app.add_subcommand("quantize", "apply a quantization scheme to an archive");
  quant_cmd->add_option("--archive", archive)->required()->check(CLI::ExistingDirectory);
  quant_cmd->add_option("--scheme", scheme, "scheme JSON (default: hybrid int8/fp16)")->check(CLI::ExistingFile);
  quant_cmd->add_option("--out", out)->required();

  auto* report_cmd = app.add_subcommand("report", "image grid: raw | real | generated per state");
  report_cmd->add_option("--generator", archive)->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--data", data)->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--split", split)->check(CLI::ExistingFile);
  report_cmd->add_option("--rows", max_rows)->check(CLI::PositiveNumber);
  report_cmd->add_option("--out", out, "output PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(spec, out, sessions, frames, interval, size);
    if (*split_cmd) return cmd_split(data, seed, out);
    if (*train_cis_cmd) return cmd_train_cis(config);
    if (*train_gen_cmd) return cmd_train_gen(config);
    if (*gen_cmd) return cmd_generate(archive, raw, recipe, state, all_states, out);
    if (*mon_cmd) return cmd_monitor(cis, session, target, config, out);
    if (*eval_cmd) return cmd_eval(cis, data, split, perc, out);
    if (*quant_cmd) return cmd_quantize(archive, scheme, out);
    if (*report_cmd) return cmd_report(archive, data, split, max_rows, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
