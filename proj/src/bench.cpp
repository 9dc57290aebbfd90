#include "tractfit/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tractfit/audio_io.hpp"
#include "tractfit/inversion.hpp"
#include "tractfit/parallel.hpp"
#include "tractfit/rng.hpp"
#include "tractfit/vocal_tract.hpp"

namespace tractfit {

namespace {

constexpr std::array kExperimentNames = {
    std::pair{Experiment::SingleParam, std::string_view("single_param")},
    std::pair{Experiment::AllParams, std::string_view("all_params")},
    std::pair{Experiment::Noisy, std::string_view("noisy")},
    std::pair{Experiment::TimeVarying, std::string_view("time_varying")},
    std::pair{Experiment::RealAudio, std::string_view("real_audio")},
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

std::string snr_label(double snr) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "noisy_%gdB", snr);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// A grid cell: everything needed to run one row.
struct Cell {
  Experiment experiment;
  Method method;
  ReprKind repr;
  int rep;
  std::optional<Param> free_param;  // single_param
  std::optional<double> snr_db;     // noisy
  std::filesystem::path wav;        // real_audio
};

std::string id_for(const Cell& c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r%03d", c.rep);
  std::string id = buf;
  if (c.free_param) id += "_" + std::string(info(*c.free_param).short_name);
  if (!c.wav.empty()) id = c.wav.stem().string();
  std::replace(id.begin(), id.end(), ',', '_');
  return id;
}

std::uint64_t synth_seed(std::uint64_t master, int rep) {
  return derive_seed(master, {hash_string("synth"), static_cast<std::uint64_t>(rep)});
}

void fill_from_match(ReportRow& row, const MatchResult& r) {
  row.n_evals = r.optimization.n_evals;
  row.elapsed_s = r.optimization.elapsed_s;
  row.stop_reason = std::string(to_string(r.optimization.stop_reason));
  row.audio_mae = r.audio_mae;
}

void fill_errors(ReportRow& row, const ParamErrors& e, const ParamMask& mask) {
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (mask[i]) row.param_errors[i] = e.per_param[i];
  }
  row.mean_norm_error = e.mean;
}

std::optional<double> try_stoi(const ExperimentConfig& cfg, const AudioClip& ref, const AudioClip& deg) {
  if (!cfg.compute_stoi) return std::nullopt;
  try {
    return stoi(ref, deg).value;
  } catch (const std::invalid_argument&) {
    return std::nullopt;  // too short or silent: leave the cell empty
  }
}

// Windowed matching shared by time_varying and real_audio rows.
void run_windowed(const ExperimentConfig& cfg, const Cell& cell, const AudioClip& target, MatchTask task,
                  const std::optional<ParamTrajectory>& truth, ReportRow& row) {
  const std::size_t ws = static_cast<std::size_t>(std::llround(cfg.window_ms * 1e-3 * target.sample_rate_hz));
  const std::size_t n_windows = ws ? target.size() / ws : 0;
  if (n_windows == 0) throw std::invalid_argument("target is shorter than one window");
  task.target = target;
  task.stop.max_evals = std::max<std::size_t>(1, cfg.max_evals / n_windows);
  task.optimizer.initial = initial_point(cfg.master_seed, cell.rep, kNumParams);
  WindowedOptions opt;
  opt.window_ms = cfg.window_ms;
  const TrajectoryResult tr = match_windowed(task, opt);

  row.n_evals = 0;
  row.elapsed_s = 0.0;
  for (const auto& w : tr.windows) {
    row.n_evals += w.optimization.n_evals;
    row.elapsed_s += w.optimization.elapsed_s;
  }
  row.stop_reason = std::string(to_string(tr.windows.back().optimization.stop_reason));

  const int fs = target.sample_rate_hz;
  const std::size_t analyzed = n_windows * ws;
  const AudioClip ref = target.slice(0, analyzed);
  const AudioClip resynth =
      synthesize_trajectory(tr.smoothed_trajectory(fs), static_cast<double>(analyzed) / fs, task.synth);
  row.audio_mae = waveform_mae(ref, resynth);
  row.stoi = try_stoi(cfg, ref, resynth);

  if (truth) {
    ParamErrors e;
    for (std::size_t i = 0; i < n_windows; ++i) {
      const double center = (static_cast<double>(i) + 0.5) * static_cast<double>(ws) / fs;
      const NormalizedParams t = truth->at(center);
      for (std::size_t p = 0; p < kNumParams; ++p) {
        e.per_param[p] += std::abs(t[p] - tr.smoothed[i][p]) / static_cast<double>(n_windows);
      }
    }
    double s = 0.0;
    for (double v : e.per_param) s += v;
    e.mean = s / kNumParams;
    fill_errors(row, e, kAllFree);
  }
}

ReportRow run_cell(const ExperimentConfig& cfg, const Cell& cell) {
  ReportRow row;
  row.experiment = cell.snr_db ? snr_label(*cell.snr_db) : std::string(to_string(cell.experiment));
  row.optimizer = std::string(to_string(cell.method));
  row.representation = std::string(to_string(cell.repr));
  row.repetition = cell.rep;
  row.target_id = id_for(cell);

  MatchTask task;
  task.repr = cell.repr;
  task.optimizer.method = cell.method;
  task.optimizer.seed = optimizer_seed(cfg.master_seed, cell.method, cell.repr, cell.rep);
  task.stop.max_evals = cfg.max_evals;
  task.synth.seed = synth_seed(cfg.master_seed, cell.rep);

  try {
    switch (cell.experiment) {
      case Experiment::SingleParam: {
        if (cell.method == Method::CMAES) {
          row.stop_reason = std::string(kUnsupportedReason);
          row.message = "CMA-ES does not support single-parameter problems";
          return row;
        }
        const TractParams truth = target_params(cfg.master_seed, cell.rep);
        task.target = synthesize_static(truth, cfg.clip_duration_s, task.synth);
        task.free_mask = single_free(*cell.free_param);
        task.fixed_values = truth;
        // The same start value for every parameter of a repetition.
        task.optimizer.initial = initial_point(cfg.master_seed, cell.rep, 1);
        const MatchResult r = match_single_param(task, truth);
        fill_from_match(row, r);
        fill_errors(row, *r.errors, task.free_mask);
        row.stoi = try_stoi(cfg, task.target, render_candidate(task, r.estimate));
        break;
      }
      case Experiment::AllParams:
      case Experiment::Noisy: {
        const TractParams truth = target_params(cfg.master_seed, cell.rep);
        task.target = synthesize_static(truth, cfg.clip_duration_s, task.synth);
        const AudioClip clean = task.target;
        if (cell.snr_db) {
          const auto noise_seed = derive_seed(cfg.master_seed, {hash_string("noise"), static_cast<std::uint64_t>(cell.rep),
                                                                static_cast<std::uint64_t>(std::llround(*cell.snr_db * 1000))});
          task.target = add_noise_snr(task.target, *cell.snr_db, noise_seed);
        }
        task.optimizer.initial = initial_point(cfg.master_seed, cell.rep, kNumParams);
        const MatchResult r = match_static(task, truth);
        fill_from_match(row, r);
        fill_errors(row, *r.errors, kAllFree);
        // Noisy rows are scored against the clean sound the estimate should reproduce.
        const AudioClip resynth = render_candidate(task, r.estimate);
        row.audio_mae = waveform_mae(clean, resynth);
        row.stoi = try_stoi(cfg, clean, resynth);
        break;
      }
      case Experiment::TimeVarying: {
        const ParamTrajectory truth({{0.0, target_params(cfg.master_seed, cell.rep, 0)},
                                     {cfg.clip_duration_s, target_params(cfg.master_seed, cell.rep, 1)}});
        const AudioClip target = synthesize_trajectory(truth, cfg.clip_duration_s, task.synth);
        run_windowed(cfg, cell, target, task, truth, row);
        break;
      }
      case Experiment::RealAudio: {
        const AudioClip target = read_wav(cell.wav);
        run_windowed(cfg, cell, target, task, std::nullopt, row);
        break;
      }
    }
  } catch (const std::exception& e) {
    ReportRow failed;
    failed.experiment = row.experiment;
    failed.optimizer = row.optimizer;
    failed.representation = row.representation;
    failed.repetition = row.repetition;
    failed.target_id = row.target_id;
    failed.stop_reason = std::string(kFailedReason);
    failed.message = e.what();
    return failed;
  }
  return row;
}

std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  std::vector<std::filesystem::path> wavs;
  if (cfg.experiment == Experiment::RealAudio) {
    for (const auto& entry : std::filesystem::directory_iterator(cfg.target_dir)) {
      auto ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (entry.is_regular_file() && ext == ".wav") wavs.push_back(entry.path());
    }
    std::sort(wavs.begin(), wavs.end());
    if (wavs.empty()) throw std::invalid_argument("no .wav files in " + cfg.target_dir.string());
  }
  std::vector<std::optional<double>> conditions = {std::nullopt};
  if (cfg.experiment == Experiment::Noisy) {
    conditions.clear();
    for (double s : cfg.snr_grid) conditions.emplace_back(s);
  }
  for (const auto& snr : conditions) {
    for (Method m : cfg.optimizers) {
      for (ReprKind r : cfg.representations) {
        if (cfg.experiment == Experiment::SingleParam) {
          for (Param p : cfg.params) {
            for (int rep = 0; rep < cfg.repetitions; ++rep) cells.push_back({cfg.experiment, m, r, rep, p, snr, {}});
          }
        } else if (cfg.experiment == Experiment::RealAudio) {
          for (const auto& w : wavs) {
            for (int rep = 0; rep < cfg.repetitions; ++rep) cells.push_back({cfg.experiment, m, r, rep, {}, snr, w});
          }
        } else {
          for (int rep = 0; rep < cfg.repetitions; ++rep) cells.push_back({cfg.experiment, m, r, rep, {}, snr, {}});
        }
      }
    }
  }
  return cells;
}

template <typename T, typename F>
std::vector<T> parse_list(const nlohmann::json& j, const char* key, F from_string) {
  if (!j.is_array()) throw std::invalid_argument(std::string(key) + " must be an array");
  std::vector<T> out;
  for (const auto& v : j) {
    const auto parsed = from_string(v.get<std::string>());
    if (!parsed) throw std::invalid_argument(std::string("unknown entry in ") + key + ": " + v.get<std::string>());
    out.push_back(*parsed);
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

}  // namespace

std::string_view to_string(Experiment e) {
  for (const auto& [k, name] : kExperimentNames) {
    if (k == e) return name;
  }
  return "?";
}

std::optional<Experiment> experiment_from_string(std::string_view name) {
  for (const auto& [k, n] : kExperimentNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

ExperimentConfig ExperimentConfig::profile(std::string_view name) {
  ExperimentConfig c;
  if (name == "desk") return c;
  if (name == "full") {
    c.clip_duration_s = 1.0;
    c.max_evals = 10000;
    return c;
  }
  throw std::invalid_argument("unknown profile '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (max_evals < 1) throw std::invalid_argument("max_evals must be >= 1");
  if (optimizers.empty()) throw std::invalid_argument("optimizers must not be empty");
  if (representations.empty()) throw std::invalid_argument("representations must not be empty");
  if (!(clip_duration_s > 0.0)) throw std::invalid_argument("clip_duration_s must be positive");
  if (!(window_ms > 0.0)) throw std::invalid_argument("window_ms must be positive");
  if (experiment == Experiment::SingleParam && params.empty()) throw std::invalid_argument("params must not be empty");
  if (experiment == Experiment::Noisy && snr_grid.empty()) throw std::invalid_argument("snr_grid must not be empty");
  if (experiment == Experiment::RealAudio && target_dir.empty()) {
    throw std::invalid_argument("target_dir is required for real_audio");
  }
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("experiment config must be a JSON object");
  ExperimentConfig c = profile(j.value("profile", std::string("desk")));
  static const std::set<std::string> known = {
      "profile",   "experiment",  "optimizers", "representations", "params",       "repetitions",
      "master_seed", "max_evals", "clip_duration_s", "snr_grid",   "window_ms",    "target_dir",
      "scores_csv", "compute_stoi", "threads"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  try {
    if (j.contains("experiment")) {
      const auto e = experiment_from_string(j.at("experiment").get<std::string>());
      if (!e) throw std::invalid_argument("unknown experiment '" + j.at("experiment").get<std::string>() + "'");
      c.experiment = *e;
    }
    if (j.contains("optimizers")) c.optimizers = parse_list<Method>(j.at("optimizers"), "optimizers", method_from_string);
    if (j.contains("representations")) {
      c.representations = parse_list<ReprKind>(j.at("representations"), "representations", repr_from_string);
    }
    if (j.contains("params")) c.params = parse_list<Param>(j.at("params"), "params", param_from_name);
    if (j.contains("repetitions")) c.repetitions = j.at("repetitions").get<int>();
    if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("max_evals")) c.max_evals = j.at("max_evals").get<std::size_t>();
    if (j.contains("clip_duration_s")) c.clip_duration_s = j.at("clip_duration_s").get<double>();
    if (j.contains("snr_grid")) c.snr_grid = j.at("snr_grid").get<std::vector<double>>();
    if (j.contains("window_ms")) c.window_ms = j.at("window_ms").get<double>();
    if (j.contains("target_dir")) c.target_dir = j.at("target_dir").get<std::string>();
    if (j.contains("scores_csv")) c.scores_csv = j.at("scores_csv").get<std::string>();
    if (j.contains("compute_stoi")) c.compute_stoi = j.at("compute_stoi").get<bool>();
    if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["experiment"] = to_string(experiment);
  j["optimizers"] = nlohmann::json::array();
  for (Method m : optimizers) j["optimizers"].push_back(to_string(m));
  j["representations"] = nlohmann::json::array();
  for (ReprKind r : representations) j["representations"].push_back(to_string(r));
  j["params"] = nlohmann::json::array();
  for (Param p : params) j["params"].push_back(info(p).name);
  j["repetitions"] = repetitions;
  j["master_seed"] = master_seed;
  j["max_evals"] = max_evals;
  j["clip_duration_s"] = clip_duration_s;
  j["snr_grid"] = snr_grid;
  j["window_ms"] = window_ms;
  j["target_dir"] = target_dir.string();
  j["scores_csv"] = scores_csv.string();
  j["compute_stoi"] = compute_stoi;
  j["threads"] = threads;
  return j;
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json j;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json params;
    for (std::size_t i = 0; i < kNumParams; ++i) params[std::string(kParamInfo[i].name)] = e.params.values()[i];
    j["entries"].push_back({{"id", e.id}, {"wav", e.wav.generic_string()}, {"params", params}, {"seed", e.seed}});
  }
  return j;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  std::set<std::string> ids;
  for (const auto& e : j.at("entries")) {
    DatasetEntry d;
    d.id = e.at("id").get<std::string>();
    if (!ids.insert(d.id).second) throw std::invalid_argument("duplicate manifest id '" + d.id + "'");
    d.wav = e.at("wav").get<std::string>();
    d.seed = e.at("seed").get<std::uint64_t>();
    ParamArray a{};
    for (std::size_t i = 0; i < kNumParams; ++i) a[i] = e.at("params").at(std::string(kParamInfo[i].name)).get<double>();
    d.params = TractParams(a);
    m.entries.push_back(std::move(d));
  }
  return m;
}

DatasetManifest generate_dataset(std::size_t n, std::uint64_t master_seed, const std::filesystem::path& out_dir,
                                 double duration_s) {
  if (n < 1) throw std::invalid_argument("dataset size must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw WavIoError("cannot create " + out_dir.string() + ": " + ec.message());
  DatasetManifest m;
  for (std::size_t i = 0; i < n; ++i) {
    DatasetEntry e;
    char id[32];
    std::snprintf(id, sizeof id, "clip_%03zu", i);
    e.id = id;
    e.wav = e.id + ".wav";
    e.seed = derive_seed(master_seed, {hash_string("dataset"), i});
    CounterRng rng(e.seed, hash_string("params"));
    ParamArray u{};
    for (auto& v : u) v = rng.uniform();
    e.params = denormalize(NormalizedParams(u));
    SynthConfig sc;
    sc.seed = e.seed;
    write_wav(out_dir / e.wav, synthesize_static(e.params, duration_s, sc), WavEncoding::Float32);
    m.entries.push_back(std::move(e));
  }
  std::ofstream f(out_dir / "manifest.json");
  if (!f) throw WavIoError("cannot write " + (out_dir / "manifest.json").string());
  f << m.to_json().dump(2) << '\n';
  if (!f) throw WavIoError("write failed for " + (out_dir / "manifest.json").string());
  return m;
}

TractParams target_params(std::uint64_t master_seed, int rep, std::uint64_t stream) {
  CounterRng rng(derive_seed(master_seed, {hash_string("target"), static_cast<std::uint64_t>(rep)}), stream);
  ParamArray u{};
  for (auto& v : u) v = rng.uniform();
  return denormalize(NormalizedParams(u));
}

Vector initial_point(std::uint64_t master_seed, int rep, std::size_t dims) {
  CounterRng rng(derive_seed(master_seed, {hash_string("initial"), static_cast<std::uint64_t>(rep)}));
  Vector x(dims);
  for (auto& v : x) v = rng.uniform();
  return x;
}

std::uint64_t optimizer_seed(std::uint64_t master_seed, Method m, ReprKind r, int rep) {
  return derive_seed(master_seed,
                     {hash_string(to_string(m)), hash_string(to_string(r)), static_cast<std::uint64_t>(rep)});
}

std::size_t ExperimentReport::failed_count() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.failed(); }));
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  if (!cfg.scores_csv.empty()) report.imported_scores = import_scores(cfg.scores_csv);
  const auto cells = enumerate_cells(cfg);
  report.rows.resize(cells.size());
  parallel_for(cells.size(), cfg.threads, [&](std::size_t i) { report.rows[i] = run_cell(cfg, cells[i]); });
  return report;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& out_path) {
  if (report.rows.empty()) throw std::invalid_argument("report has no rows");
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const auto& r : report.rows) {
    out << r.experiment << ',' << r.optimizer << ',' << r.representation << ',' << r.repetition << ',' << r.target_id;
    for (const auto& e : r.param_errors) out << ',' << fmt_opt(e);
    out << ',' << fmt_opt(r.mean_norm_error) << ',' << fmt_opt(r.audio_mae) << ',' << fmt_opt(r.stoi) << ','
        << r.n_evals << ',' << fmt_double(r.elapsed_s) << ',' << r.stop_reason << '\n';
  }
  std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
  if (!f) throw WavIoError("cannot open " + out_path.string() + " for writing");
  f << out.str();
  if (!f) throw WavIoError("write failed for " + out_path.string());
}

ExperimentReport read_report(const std::filesystem::path& csv_path) {
  std::ifstream f(csv_path);
  if (!f) throw WavIoError("cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(f, line) || line != kReportHeader) {
    throw std::invalid_argument(csv_path.string() + ": unexpected CSV header");
  }
  ExperimentReport report;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 19) {
      throw std::invalid_argument(csv_path.string() + ":" + std::to_string(line_no) + ": expected 19 columns");
    }
    try {
      ReportRow r;
      r.experiment = c[0];
      r.optimizer = c[1];
      r.representation = c[2];
      r.repetition = std::stoi(c[3]);
      r.target_id = c[4];
      for (std::size_t i = 0; i < kNumParams; ++i) r.param_errors[i] = parse_opt(c[5 + i]);
      r.mean_norm_error = parse_opt(c[13]);
      r.audio_mae = parse_opt(c[14]);
      r.stoi = parse_opt(c[15]);
      r.n_evals = static_cast<std::size_t>(std::stoull(c[16]));
      r.elapsed_s = std::stod(c[17]);
      r.stop_reason = c[18];
      report.rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::invalid_argument(csv_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return report;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += ch;
    }
  }
  return out;
}

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7"};

struct Axes {
  double left = 70, right = 170, top = 40, bottom = 60, width = 900, height = 420;
  double plot_w() const { return width - left - right; }
  double plot_h() const { return height - top - bottom; }
};

void svg_frame(std::ostringstream& s, const Axes& a, std::string_view title, std::string_view ylabel, double ymax) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << a.width << "\" height=\"" << a.height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << a.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
    << "</text>\n";
  s << "<text transform=\"translate(16," << a.top + a.plot_h() / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << xml_escape(ylabel) << "</text>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = ymax * t / 5.0;
    const double y = a.top + a.plot_h() * (1.0 - t / 5.0);
    s << "<line x1=\"" << a.left << "\" x2=\"" << a.left + a.plot_w() << "\" y1=\"" << y << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << a.left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fmt_double(std::round(v * 1e4) / 1e4)
      << "</text>\n";
  }
  s << "<line x1=\"" << a.left << "\" x2=\"" << a.left << "\" y1=\"" << a.top << "\" y2=\"" << a.top + a.plot_h()
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << a.left << "\" x2=\"" << a.left + a.plot_w() << "\" y1=\"" << a.top + a.plot_h() << "\" y2=\""
    << a.top + a.plot_h() << "\" stroke=\"black\"/>\n";
}

void svg_legend(std::ostringstream& s, const Axes& a, const std::vector<std::string>& series) {
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double y = a.top + 10 + 18.0 * k;
    const double x = a.width - a.right + 15;
    s << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[k % 8]
      << "\"/>\n";
    s << "<text x=\"" << x + 18 << "\" y=\"" << y + 2 << "\">" << xml_escape(series[k]) << "</text>\n";
  }
}

double nice_max(double m) {
  if (!(m > 0.0) || !std::isfinite(m)) return 1.0;
  return m * 1.1;
}

// values[g][s]; NaN means "no data" and draws no bar.
std::string grouped_bars(std::string_view title, std::string_view ylabel, const std::vector<std::string>& groups,
                         const std::vector<std::string>& series, const std::vector<std::vector<double>>& values) {
  Axes a;
  double ymax = 0.0;
  for (const auto& row : values) {
    for (double v : row) {
      if (std::isfinite(v)) ymax = std::max(ymax, v);
    }
  }
  ymax = nice_max(ymax);
  std::ostringstream s;
  svg_frame(s, a, title, ylabel, ymax);
  const double group_w = a.plot_w() / static_cast<double>(groups.size());
  const double bar_w = group_w * 0.8 / static_cast<double>(series.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double gx = a.left + group_w * static_cast<double>(g);
    s << "<g class=\"group\">\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
      const double v = values[g][k];
      if (!std::isfinite(v)) continue;
      const double h = a.plot_h() * v / ymax;
      s << "<rect x=\"" << gx + group_w * 0.1 + bar_w * static_cast<double>(k) << "\" y=\""
        << a.top + a.plot_h() - h << "\" width=\"" << bar_w << "\" height=\"" << h << "\" fill=\""
        << kPalette[k % 8] << "\"><title>" << xml_escape(series[k]) << ": " << fmt_double(v) << "</title></rect>\n";
    }
    s << "<text x=\"" << gx + group_w / 2 << "\" y=\"" << a.top + a.plot_h() + 18 << "\" text-anchor=\"middle\">"
      << xml_escape(groups[g]) << "</text>\n</g>\n";
  }
  svg_legend(s, a, series);
  s << "</svg>\n";
  return s.str();
}

std::string line_chart(std::string_view title, std::string_view xlabel, std::string_view ylabel,
                       const std::vector<double>& xs, const std::vector<std::string>& series,
                       const std::vector<std::vector<double>>& ys) {
  Axes a;
  double ymax = 0.0;
  for (const auto& row : ys) {
    for (double v : row) {
      if (std::isfinite(v)) ymax = std::max(ymax, v);
    }
  }
  ymax = nice_max(ymax);
  const double xmin = *std::min_element(xs.begin(), xs.end());
  const double xmax = *std::max_element(xs.begin(), xs.end());
  const double span = xmax > xmin ? xmax - xmin : 1.0;
  auto px = [&](double x) { return a.left + a.plot_w() * (x - xmin) / span; };
  auto py = [&](double y) { return a.top + a.plot_h() * (1.0 - y / ymax); };
  std::ostringstream s;
  svg_frame(s, a, title, ylabel, ymax);
  for (double x : xs) {
    s << "<text x=\"" << px(x) << "\" y=\"" << a.top + a.plot_h() + 18 << "\" text-anchor=\"middle\">" << fmt_double(x)
      << "</text>\n";
  }
  s << "<text x=\"" << a.left + a.plot_w() / 2 << "\" y=\"" << a.height - 15 << "\" text-anchor=\"middle\">"
    << xml_escape(xlabel) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    std::string pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(ys[k][i])) continue;
      pts += fmt_double(px(xs[i])) + "," + fmt_double(py(ys[k][i])) + " ";
      s << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(ys[k][i]) << "\" r=\"3\" fill=\"" << kPalette[k % 8]
        << "\"/>\n";
    }
    s << "<polyline fill=\"none\" stroke=\"" << kPalette[k % 8] << "\" stroke-width=\"2\" points=\"" << pts
      << "\"/>\n";
  }
  svg_legend(s, a, series);
  s << "</svg>\n";
  return s.str();
}

// Distinct values of a row field in first-seen order.
template <typename F>
std::vector<std::string> distinct(const std::vector<const ReportRow*>& rows, F field) {
  std::vector<std::string> out;
  for (const auto* r : rows) {
    const std::string v = field(*r);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw WavIoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw WavIoError("write failed for " + path.string());
}

}  // namespace

std::vector<std::filesystem::path> render_plots(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  if (report.rows.empty()) throw std::invalid_argument("report has no rows");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw WavIoError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<const ReportRow*> ok;
  for (const auto& r : report.rows) {
    if (!r.failed() && r.stop_reason != kUnsupportedReason) ok.push_back(&r);
  }
  std::vector<std::filesystem::path> written;
  if (ok.empty()) return written;

  const auto optimizers = distinct(ok, [](const ReportRow& r) { return r.optimizer; });
  const auto reprs = distinct(ok, [](const ReportRow& r) { return r.representation; });
  std::vector<std::string> param_names;
  for (const auto& pi : kParamInfo) param_names.emplace_back(pi.short_name);

  auto collect = [&](auto pred, auto value) {
    std::vector<double> v;
    for (const auto* r : ok) {
      if (!pred(*r)) continue;
      const std::optional<double> x = value(*r);
      if (x) v.push_back(*x);
    }
    return median(std::move(v));
  };
  auto any_finite = [](const std::vector<std::vector<double>>& m) {
    for (const auto& row : m) {
      for (double v : row) {
        if (std::isfinite(v)) return true;
      }
    }
    return false;
  };
  auto emit = [&](const std::string& name, const std::string& svg) {
    write_text(out_dir / name, svg);
    written.push_back(out_dir / name);
  };

  // Per-parameter error, split by optimizer and by representation.
  for (const auto& [name, labels, key] :
       {std::tuple{std::string("errors_by_optimizer.svg"), optimizers, 0},
        std::tuple{std::string("errors_by_representation.svg"), reprs, 1}}) {
    std::vector<std::vector<double>> vals(kNumParams, std::vector<double>(labels.size()));
    for (std::size_t p = 0; p < kNumParams; ++p) {
      for (std::size_t k = 0; k < labels.size(); ++k) {
        vals[p][k] = collect(
            [&, key = key](const ReportRow& r) { return (key == 0 ? r.optimizer : r.representation) == labels[k]; },
            [&](const ReportRow& r) { return r.param_errors[p]; });
      }
    }
    if (any_finite(vals)) {
      emit(name, grouped_bars(key == 0 ? "Median normalized parameter error by optimizer"
                                       : "Median normalized parameter error by representation",
                              "normalized error", param_names, labels, vals));
    }
  }

  auto by_optimizer = [&](auto value) {
    std::vector<std::vector<double>> vals(optimizers.size(), std::vector<double>(reprs.size()));
    for (std::size_t g = 0; g < optimizers.size(); ++g) {
      for (std::size_t k = 0; k < reprs.size(); ++k) {
        vals[g][k] = collect(
            [&](const ReportRow& r) { return r.optimizer == optimizers[g] && r.representation == reprs[k]; }, value);
      }
    }
    return vals;
  };
  const auto mae_vals = by_optimizer([](const ReportRow& r) { return r.audio_mae; });
  if (any_finite(mae_vals)) {
    emit("audio_mae.svg", grouped_bars("Median waveform MAE of the resynthesis", "audio MAE", optimizers, reprs, mae_vals));
  }
  const auto time_vals = by_optimizer([](const ReportRow& r) { return std::optional<double>(r.elapsed_s); });
  emit("timing.svg", grouped_bars("Median optimizer wall time", "seconds", optimizers, reprs, time_vals));

  // SNR curves for noisy rows.
  std::map<double, std::string> snrs;
  for (const auto* r : ok) {
    double snr = 0.0;
    if (std::sscanf(r->experiment.c_str(), "noisy_%lfdB", &snr) == 1) snrs[snr] = r->experiment;
  }
  if (!snrs.empty()) {
    std::vector<double> xs;
    for (const auto& [snr, _] : snrs) xs.push_back(snr);
    std::vector<std::string> series;
    std::vector<std::vector<double>> ys;
    for (const auto& o : optimizers) {
      for (const auto& rp : reprs) {
        std::vector<double> line;
        for (const auto& [snr, label] : snrs) {
          line.push_back(collect(
              [&](const ReportRow& r) { return r.experiment == label && r.optimizer == o && r.representation == rp; },
              [](const ReportRow& r) { return r.audio_mae; }));
        }
        if (std::any_of(line.begin(), line.end(), [](double v) { return std::isfinite(v); })) {
          series.push_back(o + "/" + rp);
          ys.push_back(std::move(line));
        }
      }
    }
    if (!series.empty()) emit("snr_curves.svg", line_chart("Median waveform MAE versus SNR", "SNR (dB)", "audio MAE", xs, series, ys));
  }
  return written;
}

}  // namespace tractfit
