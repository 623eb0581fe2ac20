#include "bprp/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "bprp/errors.hpp"

namespace bprp::io {

using nlohmann::json;

namespace {

json rect_json(const Rect& r) { return {{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }

Rect rect_from(const json& j) { return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()}; }

std::vector<Rect> rects_from(const json& j, const char* key) {
  std::vector<Rect> out;
  if (!j.contains(key)) return out;
  for (const auto& r : j.at(key)) out.push_back(rect_from(r));
  return out;
}

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string(what) + ": malformed JSON (" + e.what() + ")");
  }
}

void check_schema(const json& j, const char* expected) {
  if (!j.is_object() || !j.contains("schema") || j.at("schema") != expected) {
    throw InvalidInput(std::string("expected a document with schema \"") + expected + "\"");
  }
}

std::string optional_number(const std::optional<double>& v, int decimals) {
  return v ? format_number(*v, decimals) : std::string();
}

}  // namespace

std::string format_number(double v, int decimals) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  // Avoid "-0.000000".
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << text;
    if (!out) throw InvalidInput("failed writing " + path.string());
  }
  fs::rename(tmp, path);
}

std::string layout_to_json(const Layout& layout) {
  json j;
  j["schema"] = "layout_v1";
  j["width"] = layout.width();
  j["length"] = layout.length();
  j["stacks"] = json::array();
  for (const auto& r : layout.stacks()) j["stacks"].push_back(rect_json(r));
  j["corridors"] = json::array();
  for (const auto& r : layout.corridors()) j["corridors"].push_back(rect_json(r));
  if (!layout.desks().empty()) {
    j["desks"] = json::array();
    for (const auto& r : layout.desks()) j["desks"].push_back(rect_json(r));
  }
  j["beacons"] = json::array();
  for (const auto& b : layout.beacons()) {
    j["beacons"].push_back({{"id", b.id},
                            {"x", b.position.x},
                            {"y", b.position.y},
                            {"rate_hz", b.rate_hz},
                            {"power_dbm", b.power_dbm},
                            {"known", b.position_known}});
  }
  return j.dump(2) + "\n";
}

Layout layout_from_json(const std::string& text) {
  const json j = parse(text, "layout");
  check_schema(j, "layout_v1");
  try {
    std::vector<Beacon> beacons;
    for (const auto& b : j.at("beacons")) {
      Beacon beacon;
      beacon.id = b.at("id").get<std::string>();
      beacon.position = {b.at("x").get<double>(), b.at("y").get<double>()};
      beacon.rate_hz = b.value("rate_hz", 10.0);
      beacon.power_dbm = b.value("power_dbm", -15.0);
      beacon.position_known = b.value("known", true);
      beacons.push_back(std::move(beacon));
    }
    return Layout(j.at("width").get<double>(), j.at("length").get<double>(), rects_from(j, "stacks"),
                  rects_from(j, "corridors"), std::move(beacons), rects_from(j, "desks"));
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("layout: ") + e.what());
  }
}

Layout read_layout(const fs::path& path) { return layout_from_json(read_text(path)); }

std::string model_to_json(const PrpModel& model) {
  json j;
  j["schema"] = "model_v1";
  j["elements"] = json::object();
  for (const auto e : kAllElements) {
    const LinkParams& p = model.link(e);
    j["elements"][std::string(element_key(e))] = {{"w0", p.w0}, {"w", p.w}, {"w_pair", p.w_pair}};
  }
  j["standardization"] = {{"mean", model.standardization.mean}, {"sd", model.standardization.sd}};
  j["prior_sigma"] = model.prior_sigma;
  if (model.rssi) {
    j["rssi"] = {{"p_ref", model.rssi->p_ref},
                 {"path_exponent", model.rssi->path_exponent},
                 {"noise_sigma", model.rssi->noise_sigma},
                 {"alpha", model.rssi->decode_threshold}};
  }
  return j.dump(2) + "\n";
}

PrpModel model_from_json(const std::string& text) {
  const json j = parse(text, "model");
  check_schema(j, "model_v1");
  try {
    PrpModel m;
    for (const auto& [key, v] : j.at("elements").items()) {
      const GeometricElement e = element_from_key(key);
      LinkParams& p = m.link(e);
      p.w0 = v.at("w0").get<double>();
      p.w = v.at("w").get<std::array<double, 3>>();
      p.w_pair = v.at("w_pair").get<std::array<double, 6>>();
    }
    m.standardization.mean = j.at("standardization").at("mean").get<std::array<double, 3>>();
    m.standardization.sd = j.at("standardization").at("sd").get<std::array<double, 3>>();
    for (const double s : m.standardization.sd) {
      if (!(s > 0)) throw InvalidInput("model: standardization sd must be > 0");
    }
    m.prior_sigma = j.value("prior_sigma", 10.0);
    if (j.contains("rssi")) {
      const auto& r = j.at("rssi");
      m.rssi = RssiPathModel{r.at("p_ref").get<double>(), r.at("path_exponent").get<double>(),
                             r.at("noise_sigma").get<double>(), r.value("alpha", -95.0)};
      m.rssi->validate();
    }
    return m;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("model: ") + e.what());
  }
}

PrpModel read_model(const fs::path& path) { return model_from_json(read_text(path)); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) throw InvalidInput("bad number '" + s + "' in " + what);
  return v;
}

std::string packets_to_csv(const std::vector<ObservationWindow>& windows) {
  std::string out = std::string(kPacketHeader) + "\n";
  for (const auto& w : windows) {
    for (const auto& r : w.records) {
      out += w.receiver_id + "," + format_number(w.window_start, 3) + "," + r.beacon_id + "," +
             std::to_string(r.packets_received) + "," + optional_number(r.t_first, 4) + "," +
             optional_number(r.t_last, 4) + "," + optional_number(r.mean_rssi, 3) + "\n";
    }
  }
  return out;
}

std::vector<ObservationWindow> packets_from_csv(const std::string& text, double delta) {
  if (!(delta > 0)) throw InvalidInput("packet log: window length must be > 0");
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != split_csv_line(kPacketHeader)) {
    throw InvalidInput("packet log: missing or unexpected header");
  }
  std::vector<ObservationWindow> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const std::string where = "packet log line " + std::to_string(line_no);
    if (f.size() != 7) throw InvalidInput(where + ": expected 7 fields");
    const auto key = std::make_pair(f[0], f[1]);
    auto it = index.find(key);
    if (it == index.end()) {
      ObservationWindow w;
      w.receiver_id = f[0];
      w.window_start = parse_double(f[1], where);
      w.window_end = w.window_start + delta;
      it = index.emplace(key, out.size()).first;
      out.push_back(std::move(w));
    }
    BeaconRecord r;
    r.beacon_id = f[2];
    const double c = parse_double(f[3], where);
    if (c < 0 || c != std::floor(c)) throw InvalidInput(where + ": packets_received must be a non-negative integer");
    r.packets_received = static_cast<std::int64_t>(c);
    if (!f[4].empty()) r.t_first = parse_double(f[4], where);
    if (!f[5].empty()) r.t_last = parse_double(f[5], where);
    if (!f[6].empty()) r.mean_rssi = parse_double(f[6], where);
    out[it->second].records.push_back(std::move(r));
  }
  // Timestamps are written rounded; re-validate with the same tolerance.
  for (auto& w : out) {
    for (auto& r : w.records) {
      if (r.t_first) r.t_first = std::clamp(*r.t_first, w.window_start, w.window_end);
      if (r.t_last) r.t_last = std::clamp(*r.t_last, w.window_start, w.window_end);
    }
    w.validate();
  }
  return out;
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::string out = std::string(kTrajectoryHeader) + "\n";
  for (const auto& s : traj.samples) {
    out += format_number(s.t, 3) + "," + format_number(s.position.x, 4) + "," + format_number(s.position.y, 4) + "," +
           format_number(s.speed, 4) + "\n";
  }
  return out;
}

Trajectory trajectory_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != split_csv_line(kTrajectoryHeader)) {
    throw InvalidInput("trajectory: missing or unexpected header");
  }
  Trajectory traj;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw InvalidInput("trajectory: expected 4 fields");
    traj.samples.push_back({parse_double(f[0], "trajectory"),
                            {parse_double(f[1], "trajectory"), parse_double(f[2], "trajectory")},
                            parse_double(f[3], "trajectory")});
  }
  return traj;
}

std::string posterior_to_csv(const PosteriorSamples& samples) {
  std::string out;
  for (std::size_t c = 0; c < samples.names.size(); ++c) out += (c ? "," : "") + samples.names[c];
  out += "\n";
  for (std::size_t r = 0; r < samples.n_draws(); ++r) {
    for (std::size_t c = 0; c < samples.n_params; ++c) out += (c ? "," : "") + format_number(samples.at(r, c), 6);
    out += "\n";
  }
  return out;
}

std::string posterior_sidecar_json(const PosteriorSamples& samples) {
  json j;
  j["acceptance_rate"] = samples.acceptance_rate;
  j["chains"] = samples.chain_count;
  j["burn_in"] = samples.burn_in;
  j["draws"] = samples.n_draws();
  j["psrf"] = json::object();
  for (std::size_t c = 0; c < samples.names.size(); ++c) {
    const double r = c < samples.psrf.size() ? samples.psrf[c] : std::nan("");
    j["psrf"][samples.names[c]] = std::isfinite(r) ? json(r) : json(nullptr);
  }
  j["warnings"] = samples.warnings;
  return j.dump(2) + "\n";
}

std::string pair_report_json(const std::string& a, const std::string& b, const DistancePosterior& p) {
  json j;
  j["pair"] = {a, b};
  j["map_m"] = p.map_estimate;
  j["mean_m"] = p.mean;
  j["sd_m"] = p.sd;
  j["n_draws"] = p.draws.size();
  j["method"] = p.method;
  j["signal"] = std::string(signal_name(p.signal));
  return j.dump(2) + "\n";
}

}  // namespace bprp::io
