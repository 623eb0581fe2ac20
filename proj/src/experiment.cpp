#include "bprp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "json.hpp"

#include "bprp/baselines.hpp"
#include "bprp/errors.hpp"
#include "bprp/io.hpp"
#include "bprp/localize.hpp"
#include "bprp/presets.hpp"
#include "bprp/rng.hpp"
#include "bprp/stats.hpp"
#include "bprp/track.hpp"

namespace bprp {

using nlohmann::json;

namespace {

std::vector<Point> points_from(const json& j) {
  std::vector<Point> out;
  for (const auto& p : j) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

McmcConfig seeded(const McmcConfig& base, std::uint64_t seed) {
  McmcConfig c = base;
  c.seed = seed;
  return c;
}

std::string num(double v, int decimals = 4) { return io::format_number(v, decimals); }

}  // namespace

void ExperimentConfig::validate() const {
  if (!(delta > 0) || !(smax > 0) || !(sharpness > 0)) throw InvalidInput("delta, smax and sharpness must be > 0");
  if (!(train_seconds >= delta)) throw InvalidInput("train_seconds must cover at least one window");
  for (const auto& m : methods) {
    if (std::find(kAllMethods.begin(), kAllMethods.end(), m) == kAllMethods.end()) {
      throw InvalidInput("unknown method '" + m + "'");
    }
  }
  if (methods.empty()) throw InvalidInput("no methods selected");
  if (labeled_count && train_locations && *labeled_count > train_locations->size()) {
    throw InvalidInput("labeled_count exceeds the number of training locations");
  }
  mcmc.validate();
}

bool ExperimentConfig::has_method(std::string_view m) const {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

std::vector<std::string> parse_method_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : text + ",") {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur.push_back(ch);
    }
  }
  return out;
}

void apply_config_file(ExperimentConfig& c, const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw InvalidInput("config " + path.string() + ": " + e.what());
  }
  try {
    if (j.contains("preset")) c.preset = j.at("preset").get<std::string>();
    if (j.contains("layout")) c.layout_path = j.at("layout").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("methods")) {
      c.methods = j.at("methods").is_string() ? parse_method_list(j.at("methods").get<std::string>())
                                              : j.at("methods").get<std::vector<std::string>>();
    }
    if (j.contains("out")) c.output_dir = j.at("out").get<std::string>();
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
    if (j.contains("smax")) c.smax = j.at("smax").get<double>();
    if (j.contains("sharpness")) c.sharpness = j.at("sharpness").get<double>();
    if (j.contains("train_locations")) c.train_locations = points_from(j.at("train_locations"));
    if (j.contains("labeled_count")) c.labeled_count = j.at("labeled_count").get<std::size_t>();
    if (j.contains("known_beacon_count")) c.known_beacon_count = j.at("known_beacon_count").get<std::size_t>();
    if (j.contains("traces")) {
      std::vector<std::vector<Point>> traces;
      for (const auto& t : j.at("traces")) traces.push_back(points_from(t));
      c.traces = traces;
    }
    if (j.contains("train_seconds")) c.train_seconds = j.at("train_seconds").get<double>();
    if (j.contains("contact_pairs")) c.contact_pairs = j.at("contact_pairs").get<std::size_t>();
    if (j.contains("contact_beacons")) c.contact_beacons = j.at("contact_beacons").get<std::size_t>();
    if (j.contains("beacon_sweep")) c.beacon_sweep = j.at("beacon_sweep").get<std::vector<std::size_t>>();
    if (j.contains("rssi_sigma")) c.rssi_sigma = j.at("rssi_sigma").get<double>();
    if (j.contains("alpha")) c.decode_threshold = j.at("alpha").get<double>();
    if (j.contains("mcmc")) {
      const auto& m = j.at("mcmc");
      if (m.contains("burn_in")) c.mcmc.burn_in = m.at("burn_in").get<std::size_t>();
      if (m.contains("draws")) c.mcmc.draws = m.at("draws").get<std::size_t>();
      if (m.contains("chains")) c.mcmc.chains = m.at("chains").get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw InvalidInput("config " + path.string() + ": " + e.what());
  }
}

std::vector<ObservationWindow> simulate_stationary(const Layout& layout, const PrpModel& truth,
                                                   const std::string& receiver_id, Point where, double seconds,
                                                   const SimConfig& sim) {
  SimConfig cfg = sim;
  cfg.dwell = seconds;
  const Trajectory traj = generate_trajectory(layout, {where}, cfg);
  return simulate_packets(layout, truth, traj, cfg, receiver_id);
}

Layout beacon_subset(const Layout& layout, std::size_t count) {
  const auto& all = layout.beacons();
  if (count == 0) throw InvalidInput("beacon subset must keep at least one beacon");
  if (count >= all.size()) return layout;
  std::vector<Beacon> kept;
  for (std::size_t i = 0; i < count; ++i) kept.push_back(all[i * all.size() / count]);
  return layout.with_beacons(std::move(kept));
}

ObservationWindow restrict_to_layout(const ObservationWindow& window, const Layout& layout) {
  ObservationWindow out = window;
  out.records.clear();
  for (const auto& r : window.records) {
    if (layout.beacon_index(r.beacon_id)) out.records.push_back(r);
  }
  return out;
}

bool walkable(const Layout& layout, Point p) {
  if (!layout.contains(p)) return false;
  for (const auto& s : layout.stacks()) {
    if (p.x > s.x && p.x < s.x_max() && p.y > s.y && p.y < s.y_max()) return false;
  }
  return true;
}

std::string window_id(const ObservationWindow& w) { return w.receiver_id + "@" + io::format_number(w.window_start, 1); }

std::vector<ContactPairTruth> sample_contact_pairs(const Layout& layout, std::size_t count, std::uint64_t seed,
                                                   double min_sep, double max_sep) {
  std::vector<ContactPairTruth> out;
  for (std::size_t k = 0; k < count; ++k) {
    SplitMix64 rng(derive_seed(seed, "contact-pair", {k}));
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const Point a{rng.uniform(0.0, layout.width()), rng.uniform(0.0, layout.length())};
      const double sep = rng.uniform(min_sep, max_sep);
      const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      const Point b{a.x + sep * std::cos(angle), a.y + sep * std::sin(angle)};
      if (!walkable(layout, a) || !walkable(layout, b)) continue;
      const std::string base = "pair" + std::to_string(k);
      out.push_back({base + "-a", base + "-b", a, b});
      break;
    }
    if (out.size() != k + 1) throw InvalidInput("could not place contact pair " + std::to_string(k));
  }
  return out;
}

SimulationArtifacts run_simulation(const ExperimentConfig& config) {
  config.validate();
  Preset preset = make_preset(config.preset);
  const Layout truth_layout = config.layout_path.empty() ? preset.layout : io::read_layout(config.layout_path);
  const std::vector<Point> spots = config.train_locations.value_or(preset.training_spots);
  const auto traces = config.traces.value_or(preset.traces);
  const std::size_t labeled = config.labeled_count.value_or(spots.size());
  if (labeled > spots.size()) throw InvalidInput("labeled_count exceeds the number of training locations");
  const PrpModel truth = truth_model();

  SimConfig sim;
  sim.seed = derive_seed(config.seed, "sim");
  sim.window = config.delta;
  sim.rssi_sigma = config.rssi_sigma;
  sim.decode_threshold = config.decode_threshold;

  SimulationArtifacts out{truth_layout, {}, {}, {}, {}, {}, {}, {}, {}};
  // Beacons beyond known_beacon_count are hidden from training: flagged unknown, placed at the centroid.
  const std::size_t n_beacons = truth_layout.beacons().size();
  const std::size_t known = std::min(config.known_beacon_count.value_or(n_beacons), n_beacons);
  if (known < n_beacons) {
    const Layout known_subset = beacon_subset(truth_layout, known);
    std::vector<Beacon> beacons = truth_layout.beacons();
    for (auto& b : beacons) {
      if (!known_subset.beacon_index(b.id)) {
        b.position_known = false;
        b.position = truth_layout.centroid();
      }
    }
    out.layout = truth_layout.with_beacons(std::move(beacons));
  }

  json truth_doc;
  truth_doc["schema"] = "truth_v1";
  truth_doc["seed"] = config.seed;
  truth_doc["preset"] = config.preset;
  truth_doc["delta"] = config.delta;
  truth_doc["beacons"] = json::array();
  for (const auto& b : truth_layout.beacons()) truth_doc["beacons"].push_back({{"id", b.id}, {"x", b.position.x}, {"y", b.position.y}});

  truth_doc["training"] = json::array();
  for (std::size_t k = 0; k < spots.size(); ++k) {
    const std::string rx = "train" + std::to_string(k);
    if (!walkable(truth_layout, spots[k])) throw OutOfBounds("training location " + rx + " is not walkable");
    auto w = simulate_stationary(truth_layout, truth, rx, spots[k], config.train_seconds, sim);
    out.train_windows.insert(out.train_windows.end(), w.begin(), w.end());
    out.train_labels[rx] = k < labeled ? std::optional<Point>(spots[k]) : std::nullopt;
    truth_doc["training"].push_back({{"receiver_id", rx}, {"x", spots[k].x}, {"y", spots[k].y}, {"labeled", k < labeled}});
  }

  truth_doc["windows"] = json::array();
  const auto add_windows = [&](const std::vector<ObservationWindow>& ws, const std::vector<Point>& where) {
    for (std::size_t i = 0; i < ws.size(); ++i) {
      const std::string id = window_id(ws[i]);
      out.window_truth[id] = where[i];
      truth_doc["windows"].push_back({{"window_id", id},
                                      {"receiver_id", ws[i].receiver_id},
                                      {"window_start", ws[i].window_start},
                                      {"x", where[i].x},
                                      {"y", where[i].y}});
      out.test_windows.push_back(ws[i]);
    }
  };
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const std::string rx = "trace" + std::to_string(k);
    const Trajectory traj = generate_trajectory(truth_layout, traces[k], sim);
    const auto ws = simulate_packets(truth_layout, truth, traj, sim, rx);
    add_windows(ws, window_mean_positions(traj, sim));
    out.trajectories[rx] = traj;
    out.trace_receivers.push_back(rx);
  }

  truth_doc["contacts"] = json::array();
  out.contacts = sample_contact_pairs(truth_layout, config.contact_pairs, derive_seed(config.seed, "contacts"));
  for (const auto& c : out.contacts) {
    add_windows(simulate_stationary(truth_layout, truth, c.receiver_a, c.a, config.delta, sim), {c.a});
    add_windows(simulate_stationary(truth_layout, truth, c.receiver_b, c.b, config.delta, sim), {c.b});
    truth_doc["contacts"].push_back({{"pair", {c.receiver_a, c.receiver_b}},
                                     {"window_start", sim.start_time},
                                     {"distance_m", distance(c.a, c.b)}});
  }
  out.truth_json = truth_doc.dump(2) + "\n";
  return out;
}

void write_outputs(const fs::path& dir, const OutputFiles& files) {
  fs::create_directories(dir);
  for (const auto& [name, text] : files) io::write_text(dir / name, text);
}

OutputFiles simulation_files(const SimulationArtifacts& sim) {
  OutputFiles f;
  f["layout.json"] = io::layout_to_json(sim.layout);
  f["truth.json"] = sim.truth_json;
  f["packets_train.csv"] = io::packets_to_csv(sim.train_windows);
  f["packets_test.csv"] = io::packets_to_csv(sim.test_windows);
  for (const auto& [rx, traj] : sim.trajectories) f["trajectory_" + rx + ".csv"] = io::trajectory_to_csv(traj);
  return f;
}

EvalReport evaluate(const std::string& truth_json, const std::string& predictions_csv,
                    const std::optional<std::string>& contacts_csv) {
  json truth;
  try {
    truth = json::parse(truth_json);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("truth: ") + e.what());
  }
  std::map<std::string, Point> where;
  for (const auto& w : truth.at("windows")) {
    where[w.at("window_id").get<std::string>()] = {w.at("x").get<double>(), w.at("y").get<double>()};
  }

  std::istringstream in(predictions_csv);
  std::string line;
  if (!std::getline(in, line) || line != "window_id,method,x,y,sd_x,sd_y") {
    throw InvalidInput("predictions: missing or unexpected header");
  }
  std::map<std::string, std::vector<double>> errors;
  std::vector<std::string> method_order;
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<std::string> mismatches;
  std::string errors_csv = "window_id,method,error_m\n";
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 6) throw InvalidInput("predictions: expected 6 fields");
    const auto it = where.find(f[0]);
    if (it == where.end()) {
      mismatches.push_back(f[0]);
      continue;
    }
    if (!seen.insert({f[0], f[1]}).second) throw DataConsistency("duplicate prediction for " + f[0] + " / " + f[1]);
    const Point p{io::parse_double(f[2], "predictions"), io::parse_double(f[3], "predictions")};
    const double e = distance(p, it->second);
    if (!errors.contains(f[1])) method_order.push_back(f[1]);
    errors[f[1]].push_back(e);
    errors_csv += f[0] + "," + f[1] + "," + num(e) + "\n";
  }
  if (!mismatches.empty()) {
    std::string list;
    for (std::size_t i = 0; i < mismatches.size() && i < 20; ++i) list += (i ? ", " : "") + mismatches[i];
    throw DataConsistency("predictions reference " + std::to_string(mismatches.size()) +
                          " window id(s) absent from truth: " + list);
  }

  EvalReport report;
  json doc;
  doc["schema"] = "report_v1";
  doc["localization"] = json::object();
  std::string table = "method                median_m   mean_m     n\n";
  for (const auto& m : method_order) {
    const auto& e = errors[m];
    report.median_error[m] = stats::median(e);
    doc["localization"][m] = {{"median_error_m", report.median_error[m]}, {"mean_error_m", stats::mean(e)}, {"n", e.size()}};
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-20s  %-9s  %-9s  %zu\n", m.c_str(), num(report.median_error[m], 3).c_str(),
                  num(stats::mean(e), 3).c_str(), e.size());
    table += buf;
  }
  std::string cdf = "quantile";
  for (const auto& m : method_order) cdf += "," + m;
  cdf += "\n";
  for (int q = 0; q <= 100; ++q) {
    cdf += num(q / 100.0, 2);
    for (const auto& m : method_order) cdf += "," + num(stats::quantile(errors[m], q / 100.0));
    cdf += "\n";
  }

  // Beacon-count sweep rows from "bprp@N" methods.
  std::string sweep = "beacons,median_error_m\n";
  std::vector<std::pair<int, double>> sweep_rows;
  for (const auto& m : method_order) {
    if (m.rfind("bprp@", 0) == 0) sweep_rows.emplace_back(std::stoi(m.substr(5)), report.median_error[m]);
  }
  std::sort(sweep_rows.rbegin(), sweep_rows.rend());
  for (const auto& [n, e] : sweep_rows) sweep += std::to_string(n) + "," + num(e) + "\n";

  if (contacts_csv) {
    std::map<std::string, double> truth_d;
    if (truth.contains("contacts")) {
      for (const auto& c : truth.at("contacts")) {
        truth_d[c.at("pair").at(0).get<std::string>() + "|" + c.at("pair").at(1).get<std::string>()] =
            c.at("distance_m").get<double>();
      }
    }
    std::istringstream cin(*contacts_csv);
    if (!std::getline(cin, line) || line.rfind("receiver_a,receiver_b,method,estimate_m", 0) != 0) {
      throw InvalidInput("contacts: missing or unexpected header");
    }
    std::map<std::string, std::vector<double>> abs_err;
    std::vector<std::string> order;
    while (std::getline(cin, line)) {
      if (line.empty()) continue;
      const auto f = io::split_csv_line(line);
      if (f.size() < 4) throw InvalidInput("contacts: expected at least 4 fields");
      const auto it = truth_d.find(f[0] + "|" + f[1]);
      if (it == truth_d.end()) throw DataConsistency("contact pair " + f[0] + "," + f[1] + " absent from truth");
      if (!abs_err.contains(f[2])) order.push_back(f[2]);
      abs_err[f[2]].push_back(std::abs(io::parse_double(f[3], "contacts") - it->second));
    }
    doc["contact"] = json::object();
    table += "\ncontact method        median_abs_error_m   n\n";
    for (const auto& m : order) {
      report.contact_median_abs_error[m] = stats::median(abs_err[m]);
      doc["contact"][m] = {{"median_abs_error_m", report.contact_median_abs_error[m]}, {"n", abs_err[m].size()}};
      char buf[128];
      std::snprintf(buf, sizeof buf, "%-20s  %-19s  %zu\n", m.c_str(), num(report.contact_median_abs_error[m], 3).c_str(),
                    abs_err[m].size());
      table += buf;
    }
  }
  report.files["report.json"] = doc.dump(2) + "\n";
  report.files["errors.csv"] = errors_csv;
  report.files["cdf.csv"] = cdf;
  report.files["summary.txt"] = table;
  if (!sweep_rows.empty()) report.files["sweep.csv"] = sweep;
  return report;
}

OutputFiles run_pipeline(const ExperimentConfig& config) {
  const SimulationArtifacts sim = run_simulation(config);
  OutputFiles files = simulation_files(sim);

  TrainingDataset data{sim.layout, sim.train_windows, sim.train_labels};
  TrainOptions topt;
  topt.mcmc = seeded(config.mcmc, derive_seed(config.seed, "train"));
  spdlog::info("training on {} windows", data.windows.size());
  const TrainResult trained = train(data, topt);
  PrpModel model = trained.model;
  const Layout layout = recovered_layout(sim.layout, trained);
  files["posterior_train.csv"] = io::posterior_to_csv(trained.samples);
  files["posterior_train.json"] = io::posterior_sidecar_json(trained.samples);

  const bool need_rssi = config.has_method("rssi") || config.has_method("fused");
  if (need_rssi) {
    TrainingDataset rssi_data{layout, sim.train_windows, sim.train_labels};
    model.rssi = fit_rssi_model(rssi_data, seeded(config.mcmc, derive_seed(config.seed, "rssi-fit")),
                                config.decode_threshold)
                     .model;
  }
  files["model.json"] = io::model_to_json(model);

  std::string predictions = "window_id,method,x,y,sd_x,sd_y\n";
  const auto emit = [&predictions](const std::string& id, const std::string& method, Point p, Point sd) {
    predictions += id + "," + method + "," + num(p.x) + "," + num(p.y) + "," + num(sd.x) + "," + num(sd.y) + "\n";
  };
  const auto local_opts = [&](const std::string& id, const std::string& method) {
    LocalizeOptions o;
    o.mcmc = seeded(config.mcmc, derive_seed(config.seed, "localize", {hash_string(id), hash_string(method)}));
    return o;
  };
  std::vector<const ObservationWindow*> trace_windows;
  for (const auto& w : sim.test_windows) {
    if (std::find(sim.trace_receivers.begin(), sim.trace_receivers.end(), w.receiver_id) != sim.trace_receivers.end()) {
      trace_windows.push_back(&w);
    }
  }
  spdlog::info("localizing {} trace windows", trace_windows.size());
  for (const ObservationWindow* w : trace_windows) {
    const std::string id = window_id(*w);
    if (config.has_method("bprp")) {
      const auto p = localize(*w, model, layout, local_opts(id, "bprp"));
      emit(id, "bprp", p.map, p.sd);
    }
    if (config.has_method("rssi")) {
      const auto p = bayesian_rssi_localize(*w, *model.rssi, layout, local_opts(id, "rssi"));
      emit(id, "rssi", p.map, p.sd);
    }
    if (config.has_method("fused")) {
      const auto p = fused_localize(*w, model, *model.rssi, layout, local_opts(id, "fused"));
      emit(id, "fused", p.map, p.sd);
    }
    if (config.has_method("bprp")) {
      for (const std::size_t n : config.beacon_sweep) {
        const Layout sub = beacon_subset(layout, n);
        const std::string method = "bprp@" + std::to_string(std::min(n, layout.beacons().size()));
        const auto p = localize(restrict_to_layout(*w, sub), model, sub, local_opts(id, method));
        emit(id, method, p.map, p.sd);
      }
    }
  }
  if (config.has_method("track")) {
    MobilityConfig mob{config.smax, config.delta, 0.05};
    for (const auto& rx : sim.trace_receivers) {
      std::vector<ObservationWindow> ws;
      for (const ObservationWindow* w : trace_windows) {
        if (w->receiver_id == rx) ws.push_back(*w);
      }
      if (ws.empty()) continue;
      const auto t = track(ws, model, layout, mob, local_opts(rx, "track"));
      for (std::size_t i = 0; i < ws.size(); ++i) emit(window_id(ws[i]), "track", t.map.samples[i].position, t.sd[i]);
    }
  }
  files["predictions.csv"] = predictions;

  std::optional<std::string> contacts;
  if (config.has_method("two_step") || config.has_method("triangle")) {
    std::string csv = "receiver_a,receiver_b,method,estimate_m,mean_m,sd_m\n";
    json reports = json::array();
    spdlog::info("estimating {} contact distances", sim.contacts.size());
    for (const auto& c : sim.contacts) {
      const ObservationWindow* wa = nullptr;
      const ObservationWindow* wb = nullptr;
      for (const auto& w : sim.test_windows) {
        if (w.receiver_id == c.receiver_a) wa = &w;
        if (w.receiver_id == c.receiver_b) wb = &w;
      }
      if (wa == nullptr || wb == nullptr) throw DataConsistency("missing contact windows for " + c.receiver_a);
      ContactOptions copt;
      copt.sharpness = config.sharpness;
      copt.mcmc = seeded(config.mcmc, derive_seed(config.seed, "contact", {hash_string(c.receiver_a)}));
      copt.localize.mcmc = seeded(config.mcmc, derive_seed(config.seed, "contact-localize", {hash_string(c.receiver_a)}));
      PairQuery query;
      try {
        query = make_pair_query(layout, *wa, *wb, config.contact_beacons);
      } catch (const InsufficientGeometry& e) {
        spdlog::warn("pair {}-{}: {}", c.receiver_a, c.receiver_b, e.what());
        continue;
      }
      const auto record = [&](const DistancePosterior& d) {
        csv += c.receiver_a + "," + c.receiver_b + "," + d.method + "," + num(d.map_estimate) + "," + num(d.mean) + "," +
               num(d.sd) + "\n";
        reports.push_back(json::parse(io::pair_report_json(c.receiver_a, c.receiver_b, d)));
      };
      if (config.has_method("two_step")) record(two_step_pair_distance(query, model, layout, copt));
      if (config.has_method("triangle")) record(triangle_pair_distance(query, model, layout, copt));
    }
    files["contacts.csv"] = csv;
    files["contacts.json"] = reports.dump(2) + "\n";
    contacts = csv;
  }

  const EvalReport report = evaluate(sim.truth_json, predictions, contacts);
  for (const auto& [name, text] : report.files) files[name] = text;
  return files;
}

int cmd_simulate(const ExperimentConfig& config) {
  const auto files = simulation_files(run_simulation(config));
  write_outputs(config.output_dir, files);
  spdlog::info("wrote {} files to {}", files.size(), config.output_dir.string());
  return 0;
}

int cmd_train(const ExperimentConfig& config, const fs::path& layout_path, const fs::path& packets,
              const fs::path& truth_path) {
  config.mcmc.validate();
  const Layout layout = io::read_layout(layout_path);
  const auto windows = io::packets_from_csv(io::read_text(packets), config.delta);
  const json truth = json::parse(io::read_text(truth_path));
  std::map<std::string, std::optional<Point>> labels;
  for (const auto& t : truth.at("training")) {
    const bool labeled = t.value("labeled", true);
    labels[t.at("receiver_id").get<std::string>()] =
        labeled ? std::optional<Point>(Point{t.at("x").get<double>(), t.at("y").get<double>()}) : std::nullopt;
  }
  TrainingDataset data{layout, windows, labels};
  TrainOptions topt;
  topt.mcmc = seeded(config.mcmc, derive_seed(config.seed, "train"));
  const TrainResult trained = train(data, topt);
  PrpModel model = trained.model;
  const Layout recovered = recovered_layout(layout, trained);
  if (config.has_method("rssi") || config.has_method("fused")) {
    TrainingDataset rssi_data{recovered, windows, labels};
    model.rssi = fit_rssi_model(rssi_data, seeded(config.mcmc, derive_seed(config.seed, "rssi-fit")),
                                config.decode_threshold)
                     .model;
  }
  OutputFiles files;
  files["model.json"] = io::model_to_json(model);
  files["layout_recovered.json"] = io::layout_to_json(recovered);
  files["posterior_train.csv"] = io::posterior_to_csv(trained.samples);
  files["posterior_train.json"] = io::posterior_sidecar_json(trained.samples);
  write_outputs(config.output_dir, files);
  return 0;
}

int cmd_localize(const ExperimentConfig& config, const fs::path& layout_path, const fs::path& model_path,
                 const fs::path& packets) {
  const Layout layout = io::read_layout(layout_path);
  const PrpModel model = io::read_model(model_path);
  const auto windows = io::packets_from_csv(io::read_text(packets), config.delta);
  std::string predictions = "window_id,method,x,y,sd_x,sd_y\n";
  for (const auto& w : windows) {
    const std::string id = window_id(w);
    for (const auto& method : config.methods) {
      LocalizeOptions o;
      o.mcmc = seeded(config.mcmc, derive_seed(config.seed, "localize", {hash_string(id), hash_string(method)}));
      LocationPosterior p;
      if (method == "bprp") {
        p = localize(w, model, layout, o);
      } else if (method == "rssi" || method == "fused") {
        if (!model.rssi) throw InvalidInput("model has no rssi block; required by method " + method);
        p = method == "rssi" ? bayesian_rssi_localize(w, *model.rssi, layout, o)
                             : fused_localize(w, model, *model.rssi, layout, o);
      } else {
        continue;
      }
      predictions += id + "," + method + "," + num(p.map.x) + "," + num(p.map.y) + "," + num(p.sd.x) + "," +
                     num(p.sd.y) + "\n";
    }
  }
  write_outputs(config.output_dir, {{"predictions.csv", predictions}});
  return 0;
}

int cmd_eval(const fs::path& truth, const fs::path& predictions, const std::optional<fs::path>& contacts,
             const fs::path& out) {
  std::optional<std::string> contacts_text;
  if (contacts) contacts_text = io::read_text(*contacts);
  const auto report = evaluate(io::read_text(truth), io::read_text(predictions), contacts_text);
  write_outputs(out, report.files);
  std::fputs(report.files.at("summary.txt").c_str(), stdout);
  return 0;
}

int cmd_pipeline(const ExperimentConfig& config) {
  const auto files = run_pipeline(config);
  write_outputs(config.output_dir, files);
  auto it = files.find("summary.txt");
  if (it != files.end()) std::fputs(it->second.c_str(), stdout);
  return 0;
}

}  // namespace bprp
