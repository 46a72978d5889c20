#include <fstream>
#include <sstream>

#include "faultloc/error.hpp"
#include "faultloc/numfmt.hpp"
#include "faultloc/sim.hpp"

namespace faultloc::sim {

using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw Error("parse", where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error("parse", "unknown field '" + key + "' in " + where);
  }
}

json range_json(const Range& r) { return json::array({r.min, r.max}); }

Range range_from(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 2) {
    throw Error("parse", std::string("range '") + name + "' must be a [min, max] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

const char* kind_name(EventKind k) { return k == EventKind::Fault ? "fault" : "load-step"; }

}  // namespace

json to_json(const NetworkConfig& c) {
  json branches = json::array();
  for (const auto& b : c.branches) {
    branches.push_back({{"r_per_km", b.r_per_km},
                        {"l_per_km", b.l_per_km},
                        {"c_per_km", b.c_per_km},
                        {"length_km", b.length_km},
                        {"n_sections", b.n_sections}});
  }
  json terminals = json::array();
  for (const auto& t : c.terminals) {
    terminals.push_back({{"source", t.source},
                         {"source_resistance", t.source_resistance},
                         {"load_conductance", t.load_conductance}});
  }
  return {{"nominal_voltage", c.nominal_voltage},
          {"branches", branches},
          {"terminals", terminals},
          {"limiting_inductance", c.limiting_inductance},
          {"measuring_terminal", c.measuring_terminal},
          {"dt_output", c.dt_output},
          {"max_dt_internal", c.max_dt_internal}};
}

NetworkConfig network_from_json(const json& j) {
  check_keys(j, {"nominal_voltage", "branches", "terminals", "limiting_inductance",
                 "measuring_terminal", "dt_output", "max_dt_internal"},
             "network");
  NetworkConfig c = NetworkConfig::defaults();
  read_opt(j, "nominal_voltage", c.nominal_voltage);
  read_opt(j, "limiting_inductance", c.limiting_inductance);
  read_opt(j, "measuring_terminal", c.measuring_terminal);
  read_opt(j, "dt_output", c.dt_output);
  read_opt(j, "max_dt_internal", c.max_dt_internal);
  if (j.contains("branches")) {
    const auto& arr = j.at("branches");
    if (!arr.is_array() || arr.size() != kTerminals) {
      throw Error("parse", "network.branches must list exactly 3 lines");
    }
    for (int k = 0; k < kTerminals; ++k) {
      check_keys(arr[k], {"r_per_km", "l_per_km", "c_per_km", "length_km", "n_sections"},
                 "network.branches[" + std::to_string(k) + "]");
      auto& b = c.branches[k];
      read_opt(arr[k], "r_per_km", b.r_per_km);
      read_opt(arr[k], "l_per_km", b.l_per_km);
      read_opt(arr[k], "c_per_km", b.c_per_km);
      read_opt(arr[k], "length_km", b.length_km);
      read_opt(arr[k], "n_sections", b.n_sections);
    }
  }
  if (j.contains("terminals")) {
    const auto& arr = j.at("terminals");
    if (!arr.is_array() || arr.size() != kTerminals) {
      throw Error("parse", "network.terminals must list exactly 3 terminals");
    }
    for (int k = 0; k < kTerminals; ++k) {
      check_keys(arr[k], {"source", "source_resistance", "load_conductance"},
                 "network.terminals[" + std::to_string(k) + "]");
      auto& t = c.terminals[k];
      read_opt(arr[k], "source", t.source);
      read_opt(arr[k], "source_resistance", t.source_resistance);
      read_opt(arr[k], "load_conductance", t.load_conductance);
    }
  }
  c.validate();
  return c;
}

json to_json(const ScenarioRanges& r) {
  return {{"fault_resistance", range_json(r.fault_resistance)},
          {"limiting_inductance", range_json(r.limiting_inductance)},
          {"load_step", range_json(r.load_step)},
          {"inception_time", range_json(r.inception_time)}};
}

ScenarioRanges ranges_from_json(const json& j) {
  check_keys(j, {"fault_resistance", "limiting_inductance", "load_step", "inception_time"}, "ranges");
  ScenarioRanges r;
  if (j.contains("fault_resistance")) r.fault_resistance = range_from(j.at("fault_resistance"), "fault_resistance");
  if (j.contains("limiting_inductance")) {
    r.limiting_inductance = range_from(j.at("limiting_inductance"), "limiting_inductance");
  }
  if (j.contains("load_step")) r.load_step = range_from(j.at("load_step"), "load_step");
  if (j.contains("inception_time")) r.inception_time = range_from(j.at("inception_time"), "inception_time");
  r.validate();
  return r;
}

json to_json(const FaultScenario& s) {
  json j = {{"id", s.id},
            {"kind", kind_name(s.kind)},
            {"branch_index", s.branch_index},
            {"distance_km", s.distance_km},
            {"fault_resistance", s.fault_resistance},
            {"inception_time", s.inception_time},
            {"limiting_inductance", s.limiting_inductance},
            {"load_step_fraction", s.load_step_fraction}};
  if (s.is_fault()) {
    j["label"] = s.distance_km;
  } else {
    j["label"] = "non-fault";
  }
  return j;
}

FaultScenario scenario_from_json(const json& j) {
  FaultScenario s;
  read_opt(j, "id", s.id);
  const auto kind = j.value("kind", std::string("fault"));
  if (kind == "fault") {
    s.kind = EventKind::Fault;
  } else if (kind == "load-step") {
    s.kind = EventKind::LoadStep;
  } else {
    throw Error("parse", "unknown scenario kind '" + kind + "'");
  }
  read_opt(j, "branch_index", s.branch_index);
  read_opt(j, "distance_km", s.distance_km);
  read_opt(j, "fault_resistance", s.fault_resistance);
  read_opt(j, "inception_time", s.inception_time);
  read_opt(j, "limiting_inductance", s.limiting_inductance);
  read_opt(j, "load_step_fraction", s.load_step_fraction);
  return s;
}

void write_waveform_csv(const std::filesystem::path& path, const WaveformRecord& record) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
  const bool with_if = record.fault_current.size() == record.size();
  out << (with_if ? "t,v,i,i_f\n" : "t,v,i\n");
  for (std::size_t k = 0; k < record.size(); ++k) {
    out << format_double(static_cast<double>(k) * record.dt_output) << ','
        << format_double(record.voltage[k]) << ',' << format_double(record.current[k]);
    if (with_if) out << ',' << format_double(record.fault_current[k]);
    out << '\n';
  }
  if (!out) throw Error("io", "write failed for " + path.string());
}

WaveformRecord read_waveform_csv(const std::filesystem::path& path, const FaultScenario& scenario) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("parse", path.string() + ": empty waveform file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // The fault-current column is optional.
  if (line != "t,v,i" && line != "t,v,i,i_f") {
    throw Error("parse", path.string() + ":1: expected header 't,v,i' or 't,v,i,i_f'");
  }
  const std::size_t n_fields = line == "t,v,i" ? 3 : 4;

  WaveformRecord rec;
  rec.scenario = scenario;
  std::vector<double> times;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
      fields.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    fields.push_back(rest);
    if (fields.size() != n_fields) {
      throw Error("parse", path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(n_fields) + " fields");
    }
    try {
      times.push_back(parse_double(fields[0]));
      rec.voltage.push_back(parse_double(fields[1]));
      rec.current.push_back(parse_double(fields[2]));
      if (n_fields == 4) rec.fault_current.push_back(parse_double(fields[3]));
    } catch (const Error& e) {
      throw Error("parse", path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (times.size() >= 2) rec.dt_output = times[1] - times[0];
  return rec;
}

void write_waveform_dir(const std::filesystem::path& dir, const NetworkConfig& config,
                        std::span<const WaveformRecord> records) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("io", "cannot create " + dir.string() + ": " + ec.message());
  json manifest = {{"dt_output", config.dt_output}, {"network", to_json(config)}};
  json scenarios = json::array();
  for (const auto& rec : records) {
    std::ostringstream name;
    name << "scenario_" << rec.scenario.id << ".csv";
    write_waveform_csv(dir / name.str(), rec);
    json entry = to_json(rec.scenario);
    entry["file"] = name.str();
    scenarios.push_back(entry);
  }
  manifest["scenarios"] = scenarios;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("io", "cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

namespace {

json read_manifest(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw Error("io", "cannot open " + manifest_path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("parse", manifest_path.string() + ": " + e.what());
  }
}

}  // namespace

NetworkConfig read_waveform_network(const std::filesystem::path& dir) {
  const auto manifest = read_manifest(dir);
  if (!manifest.contains("network")) throw Error("parse", (dir / "manifest.json").string() + ": no network");
  return network_from_json(manifest.at("network"));
}

std::vector<WaveformRecord> read_waveform_dir(const std::filesystem::path& dir) {
  const auto manifest = read_manifest(dir);
  const double dt = manifest.value("dt_output", 1e-3);
  std::vector<WaveformRecord> out;
  for (const auto& entry : manifest.at("scenarios")) {
    auto rec = read_waveform_csv(dir / entry.at("file").get<std::string>(), scenario_from_json(entry));
    rec.dt_output = dt;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace faultloc::sim
