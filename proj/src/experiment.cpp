#include "surfipp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "surfipp/io_util.hpp"
#include "surfipp/log.hpp"

namespace surfipp {

namespace {

constexpr std::uint64_t kTruthTag = 0x7472757468ULL;
constexpr std::uint64_t kSpdTag = 0x535044ULL;

std::vector<double> time_grid(double budget, int points) {
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = budget * i / (points - 1);
  g.back() = budget;
  return g;
}

void apply_overrides(ScenarioConfig& cfg, const CliOverrides& o) {
  if (o.out) cfg.output = *o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.parallel) cfg.parallel = *o.parallel;
  cfg.validate();
}

std::string csv_name(const std::string& name) {
  std::string s = name;
  std::replace(s.begin(), s.end(), ',', '_');
  return s;
}

}  // namespace

Band confidence_band(const std::vector<std::vector<double>>& series) {
  Band b;
  if (series.empty()) return b;
  const std::size_t len = series.front().size();
  const double k = static_cast<double>(series.size());
  for (std::size_t i = 0; i < len; ++i) {
    double sum = 0.0;
    for (const auto& s : series) sum += s[i];
    const double mean = sum / k;
    double ss = 0.0;
    for (const auto& s : series) ss += (s[i] - mean) * (s[i] - mean);
    const double sd = series.size() > 1 ? std::sqrt(ss / (k - 1)) : 0.0;
    const double half = 1.96 * sd / std::sqrt(k);
    b.mean.push_back(mean);
    b.lo.push_back(mean - half);
    b.hi.push_back(mean + half);
  }
  return b;
}

std::vector<MethodSpec> compare_methods() {
  return {{"ipp", PlannerKind::ipp, "mgp", 1},
          {"coverage", PlannerKind::coverage, "mgp", 2},
          {"random", PlannerKind::random, "mgp", 3}};
}

std::vector<MethodSpec> ablation_methods(const std::vector<std::string>& priors) {
  std::vector<MethodSpec> out;
  for (const auto& p : priors) out.push_back({p, PlannerKind::ipp, p, 1});
  return out;
}

ExperimentResult run_experiment(const Scenario& scenario, const std::vector<MethodSpec>& methods,
                                int trials, std::uint64_t base_seed, int parallel,
                                int grid_points) {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (parallel < 1) throw ConfigError("parallel must be >= 1");
  const auto wall0 = std::chrono::steady_clock::now();
  ExperimentResult res;
  res.grid = time_grid(scenario.planner.budget, grid_points);

  const auto n = static_cast<int>(scenario.mesh->num_facets());
  const double target = scenario.prior_cov->trace();
  std::shared_ptr<const Eigen::MatrixXd> identity;
  for (const auto& m : methods) {
    if (m.prior == "identity" && !identity) {
      identity = std::make_shared<const Eigen::MatrixXd>(alt_covariance("identity", n, target, 0));
    } else if (m.prior != "mgp" && m.prior != "identity" && m.prior != "random_spd") {
      throw ConfigError("unknown prior '" + m.prior + "'");
    }
  }

  struct Job {
    std::vector<double> trace, rmse;
    TrialSummary summary;
  };
  const std::size_t total = methods.size() * static_cast<std::size_t>(trials);
  std::vector<Job> jobs(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= total) return;
      const auto& m = methods[j / static_cast<std::size_t>(trials)];
      const int trial = static_cast<int>(j % static_cast<std::size_t>(trials));
      try {
        MissionOptions opts;
        opts.kind = m.kind;
        opts.seed = seed_combine(base_seed, m.seed_tag, static_cast<std::uint64_t>(trial));
        opts.truth_seed = seed_combine(base_seed, kTruthTag, static_cast<std::uint64_t>(trial));
        if (m.prior == "identity") {
          opts.prior_override = identity;
        } else if (m.prior == "random_spd") {
          opts.prior_override = std::make_shared<const Eigen::MatrixXd>(alt_covariance(
              "random_spd", n, target, seed_combine(base_seed, kSpdTag, static_cast<std::uint64_t>(trial))));
        }
        const MissionLog log = run_mission(scenario, opts);
        Job& job = jobs[j];
        job.trace = interpolate_events(log.events, res.grid, true);
        job.rmse = interpolate_events(log.events, res.grid, false);
        auto& s = job.summary;
        s.method = m.name;
        s.trial = trial;
        s.seed = opts.seed;
        s.initial_trace = log.events.front().trace;
        s.final_trace = log.events.back().trace;
        s.final_rmse = log.events.back().rmse;
        s.elapsed = log.elapsed;
        s.last_measurement = log.events.back().time;
        s.measurements = static_cast<int>(log.events.size()) - 1;
        s.collision_samples = log.collision_samples;
        for (std::size_t e = 1; e < log.events.size(); ++e) {
          if (log.events[e].trace > log.events[e - 1].trace) s.trace_monotone = false;
        }
        s.wall_seconds = log.wall_seconds;
        surfipp::log().info("{} trial {}: trace {} -> {}, rmse {} ({} s)", m.name, trial,
                            s.initial_trace, s.final_trace, s.final_rmse, s.wall_seconds);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(total);
      }
    }
  };
  const int threads = std::min<int>(parallel, static_cast<int>(total));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    std::vector<std::vector<double>> tr, rm;
    for (int t = 0; t < trials; ++t) {
      Job& job = jobs[mi * static_cast<std::size_t>(trials) + static_cast<std::size_t>(t)];
      tr.push_back(std::move(job.trace));
      rm.push_back(std::move(job.rmse));
      res.trials.push_back(job.summary);
    }
    res.methods.push_back({methods[mi].name, confidence_band(tr), confidence_band(rm)});
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return res;
}

void write_band_csv(const ExperimentResult& res, bool trace, const std::filesystem::path& path) {
  std::vector<std::string> header{"t"};
  for (const auto& m : res.methods) {
    const auto base = csv_name(m.name);
    header.push_back(base + "_mean");
    header.push_back(base + "_lo");
    header.push_back(base + "_hi");
  }
  CsvWriter csv(path, header);
  for (std::size_t i = 0; i < res.grid.size(); ++i) {
    std::vector<double> row{res.grid[i]};
    for (const auto& m : res.methods) {
      const Band& b = trace ? m.trace : m.rmse;
      row.push_back(b.mean[i]);
      row.push_back(b.lo[i]);
      row.push_back(b.hi[i]);
    }
    csv.row_numbers(row);
  }
}

void write_trials_csv(const ExperimentResult& res, const std::filesystem::path& path) {
  CsvWriter csv(path, {"method", "trial", "seed", "initial_trace", "final_trace", "final_rmse",
                       "elapsed", "last_measurement", "measurements", "collision_samples"});
  for (const auto& s : res.trials) {
    csv.row({csv_name(s.method), std::to_string(s.trial), std::to_string(s.seed),
             fmt_num(s.initial_trace), fmt_num(s.final_trace), fmt_num(s.final_rmse),
             fmt_num(s.elapsed), fmt_num(s.last_measurement), std::to_string(s.measurements),
             std::to_string(s.collision_samples)});
  }
}

namespace {

void write_report(const ExperimentResult& res, const ScenarioConfig& cfg, const std::string& kind,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# " << kind << " report\n\n";
  out << "Trials per method: " << cfg.trials << ". Base seed: " << cfg.seed << ".\n";
  out << "Trial t of every method flies over the same ground-truth field (paired comparison).\n";
  out << "Bands are normal-approximation 95% intervals: mean +/- 1.96 sd / sqrt(trials).\n";
  out << "Curves are linear interpolations of each mission log onto " << res.grid.size()
      << " points over [0, " << fmt_num(cfg.planner.budget) << "] s.\n\n";
  out << "| method | trace at B/2 | trace at B | RMSE at B |\n|---|---|---|---|\n";
  const std::size_t mid = (res.grid.size() - 1) / 2;
  for (const auto& m : res.methods) {
    out << "| " << m.name << " | " << fmt_num(m.trace.mean[mid], 5) << " | "
        << fmt_num(m.trace.mean.back(), 5) << " | " << fmt_num(m.rmse.mean.back(), 5) << " |\n";
  }
  out << "\nWall time: " << fmt_num(res.wall_seconds, 4) << " s\n";
}

void print_summary(const ExperimentResult& res) {
  const std::size_t mid = (res.grid.size() - 1) / 2;
  for (const auto& m : res.methods) {
    std::cout << m.name << ": trace(B/2)=" << fmt_num(m.trace.mean[mid], 6)
              << " trace(B)=" << fmt_num(m.trace.mean.back(), 6)
              << " rmse(B)=" << fmt_num(m.rmse.mean.back(), 6) << "\n";
  }
}

std::uint64_t method_tag(PlannerKind kind) {
  for (const auto& m : compare_methods()) {
    if (m.kind == kind) return m.seed_tag;
  }
  return 0;
}

}  // namespace

void cmd_run(const std::filesystem::path& config, const CliOverrides& o) {
  ScenarioConfig cfg = load_config(config);
  apply_overrides(cfg, o);
  const Scenario sc = build_scenario(cfg);
  const PlannerKind kind = parse_planner_kind(cfg.method);

  MissionOptions opts;
  opts.kind = kind;
  opts.seed = seed_combine(cfg.seed, method_tag(kind), 0);
  opts.truth_seed = seed_combine(cfg.seed, kTruthTag, 0);
  const MissionLog log = run_mission(sc, opts);

  std::filesystem::create_directories(cfg.output);
  write_metrics_csv(log, cfg.output / "metrics.csv");
  write_path_csv(log, cfg.output / "trajectory.csv", cfg.report.trajectory_rate);
  write_map_csv(log.initial_map, cfg.output / "map_initial.csv");
  write_map_csv(log.final_map, cfg.output / "map_final.csv");
  const GroundTruthField truth =
      sc.fixed_truth ? *sc.fixed_truth : generate_field(*sc.mesh, *sc.geo, sc.truth, opts.truth_seed);
  write_field_csv(truth, cfg.output / "truth.csv");

  nlohmann::ordered_json j;
  j["method"] = cfg.method;
  j["seed"] = cfg.seed;
  j["facets"] = sc.mesh->num_facets();
  j["library_size"] = sc.library->size();
  j["budget"] = cfg.planner.budget;
  j["elapsed"] = log.elapsed;
  j["measurements"] = log.events.size() - 1;
  j["horizons"] = log.horizons.size();
  j["initial_trace"] = log.events.front().trace;
  j["final_trace"] = log.events.back().trace;
  j["initial_rmse"] = log.events.front().rmse;
  j["final_rmse"] = log.events.back().rmse;
  j["collision_samples"] = log.collision_samples;
  j["wall_seconds"] = log.wall_seconds;
  std::ofstream(cfg.output / "summary.json") << j.dump(2) << "\n";
  std::cout << cfg.method << ": trace " << fmt_num(log.events.front().trace, 6) << " -> "
            << fmt_num(log.events.back().trace, 6) << ", rmse " << fmt_num(log.events.front().rmse, 6)
            << " -> " << fmt_num(log.events.back().rmse, 6) << " (" << log.events.size() - 1
            << " measurements)\n";
}

void cmd_compare(const std::filesystem::path& config, const CliOverrides& o) {
  ScenarioConfig cfg = load_config(config);
  apply_overrides(cfg, o);
  const Scenario sc = build_scenario(cfg);
  const ExperimentResult res = run_experiment(sc, compare_methods(), cfg.trials, cfg.seed,
                                              cfg.parallel, cfg.report.grid_points);
  std::filesystem::create_directories(cfg.output);
  write_band_csv(res, true, cfg.output / "compare_trace.csv");
  write_band_csv(res, false, cfg.output / "compare_rmse.csv");
  write_trials_csv(res, cfg.output / "compare_trials.csv");
  write_report(res, cfg, "compare", cfg.output / "compare_report.md");
  print_summary(res);
}

void cmd_ablate(const std::filesystem::path& config, const CliOverrides& o) {
  ScenarioConfig cfg = load_config(config);
  apply_overrides(cfg, o);
  const Scenario sc = build_scenario(cfg);
  const ExperimentResult res = run_experiment(sc, ablation_methods(cfg.ablation_priors), cfg.trials,
                                              cfg.seed, cfg.parallel, cfg.report.grid_points);
  std::filesystem::create_directories(cfg.output);
  write_band_csv(res, true, cfg.output / "ablate_trace.csv");
  write_band_csv(res, false, cfg.output / "ablate_rmse.csv");
  write_trials_csv(res, cfg.output / "ablate_trials.csv");
  write_report(res, cfg, "ablation", cfg.output / "ablate_report.md");
  print_summary(res);
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_band_svg(const std::string& title, const std::string& y_label,
                            const std::vector<double>& t, const std::vector<std::string>& names,
                            const std::vector<Band>& bands) {
  constexpr double W = 720, H = 440, L = 80, R = 150, T = 40, B = 60;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  if (t.size() < 2) throw Error("plot needs at least two time points");
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const auto& b : bands) {
    for (double v : b.lo) ymin = std::min(ymin, v);
    for (double v : b.hi) ymax = std::max(ymax, v);
  }
  if (!(ymax > ymin)) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  const double t0 = t.front(), t1 = t.back();
  auto sx = [&](double v) { return L + (v - t0) / (t1 - t0) * (W - L - R); };
  auto sy = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };
  auto num = [](double v) { return fmt_num(v, 6); };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">"
      << xml_escape(title) << "</text>\n";
  svg << "<g stroke=\"#444\" stroke-width=\"1\">\n"
      << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\"/>\n<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\"/>\n</g>\n";
  svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#222\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double tv = t0 + (t1 - t0) * k / 5.0, yv = ymin + (ymax - ymin) * k / 5.0;
    svg << "<text x=\"" << num(sx(tv)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
        << fmt_num(tv, 4) << "</text>\n";
    svg << "<text x=\"" << L - 6 << "\" y=\"" << num(sy(yv) + 4) << "\" text-anchor=\"end\">"
        << fmt_num(yv, 4) << "</text>\n";
  }
  svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18
      << "\" text-anchor=\"middle\">time [s]</text>\n"
      << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (T + H - B) / 2 << ")\">" << xml_escape(y_label) << "</text>\n</g>\n";

  for (std::size_t m = 0; m < bands.size(); ++m) {
    const char* color = colors[m % 6];
    const Band& b = bands[m];
    svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < t.size(); ++i) svg << num(sx(t[i])) << "," << num(sy(b.hi[i])) << " ";
    for (std::size_t i = t.size(); i-- > 0;) svg << num(sx(t[i])) << "," << num(sy(b.lo[i])) << " ";
    svg << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < t.size(); ++i) svg << num(sx(t[i])) << "," << num(sy(b.mean[i])) << " ";
    svg << "\"/>\n";
    const double ly = T + 10 + 20.0 * static_cast<double>(m);
    svg << "<line x1=\"" << W - R + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 40 << "\" y2=\""
        << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << W - R + 46 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(names[m]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void cmd_plot(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("results directory " + dir.string() + " does not exist");
  }
  int written = 0;
  for (const std::string prefix : {"compare", "ablate"}) {
    for (const std::string metric : {"trace", "rmse"}) {
      const auto csv_path = dir / (prefix + "_" + metric + ".csv");
      if (!std::filesystem::exists(csv_path)) continue;
      const CsvTable table = read_csv(csv_path);
      const int ct = table.column("t");
      if (ct < 0 || table.rows.size() < 2) throw Error(csv_path.string() + ": no time series");
      std::vector<double> t;
      for (const auto& row : table.rows) t.push_back(row[static_cast<std::size_t>(ct)]);
      std::vector<std::string> names;
      std::vector<Band> bands;
      for (const auto& h : table.header) {
        if (h.size() <= 5 || h.compare(h.size() - 5, 5, "_mean") != 0) continue;
        const std::string name = h.substr(0, h.size() - 5);
        const int cm = table.column(name + "_mean"), cl = table.column(name + "_lo"),
                  ch = table.column(name + "_hi");
        if (cl < 0 || ch < 0) throw Error(csv_path.string() + ": missing band columns for " + name);
        Band b;
        for (const auto& row : table.rows) {
          b.mean.push_back(row[static_cast<std::size_t>(cm)]);
          b.lo.push_back(row[static_cast<std::size_t>(cl)]);
          b.hi.push_back(row[static_cast<std::size_t>(ch)]);
        }
        names.push_back(name);
        bands.push_back(std::move(b));
      }
      const std::string label = metric == "trace" ? "Tr(P)" : "RMSE";
      std::ofstream(dir / (prefix + "_" + metric + ".svg"))
          << render_band_svg(prefix + ": " + label + " (mean, 95% band)", label, t, names, bands);
      ++written;
    }
  }
  if (written == 0) {
    throw ConfigError("no compare_*.csv or ablate_*.csv files in " + dir.string());
  }
}

}  // namespace surfipp
