#pragma once

// Lumped-line transient simulator for a radial three-terminal DC network.
//
// Each terminal k is a converter node (optional ideal source behind a series
// resistance, optional shunt load) joined to its terminal node through the
// current-limiting inductor. Branch k runs from terminal node k to the common
// junction as a cascade of pi-sections. All energy-storage elements are
// integrated with the trapezoidal rule on a fixed internal step, and the
// measured waveforms are decimated to the output rate.

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace faultloc::sim {

inline constexpr int kTerminals = 3;

struct LineParams {
  double r_per_km = 0.03206;   // ohm/km
  double l_per_km = 0.86e-3;   // H/km
  double c_per_km = 0.012e-6;  // F/km
  double length_km = 300.0;
  int n_sections = 60;

  double section_length_km() const { return length_km / n_sections; }
  // Wave travel time per km, sqrt(l c).
  double delay_per_km() const;
  void validate() const;
};

struct TerminalParams {
  bool source = false;
  double source_resistance = 1.0;  // ohm, only meaningful with a source
  double load_conductance = 0.0;   // S, shunt at the converter node
};

struct NetworkConfig {
  double nominal_voltage = 640e3;
  // branches[k] joins terminal k to the junction.
  std::array<LineParams, kTerminals> branches{};
  std::array<TerminalParams, kTerminals> terminals{};
  double limiting_inductance = 0.1;  // H, same inductor at every terminal
  int measuring_terminal = 0;
  double dt_output = 1e-3;
  double max_dt_internal = 10e-6;

  // 400/300/300 km star with the source at terminal 0 and 500 MW loads at
  // terminals 1 and 2.
  static NetworkConfig defaults();
  void validate() const;
};

enum class EventKind { Fault, LoadStep };

struct FaultScenario {
  int id = 0;
  EventKind kind = EventKind::Fault;
  // Fault: the branch carrying the fault. LoadStep: the terminal whose load steps.
  int branch_index = 0;
  double distance_km = 0.0;  // from the measuring terminal along the tree path
  double fault_resistance = 1.0;
  double inception_time = 0.02;
  double limiting_inductance = 0.1;
  double load_step_fraction = 0.0;

  bool is_fault() const { return kind == EventKind::Fault; }
  friend bool operator==(const FaultScenario&, const FaultScenario&) = default;
};

struct WaveformRecord {
  double dt_output = 1e-3;
  std::vector<double> voltage;
  std::vector<double> current;
  // Current through the fault resistance, sampled like voltage/current. Empty
  // for non-fault events and for records read back from CSV.
  std::vector<double> fault_current;
  FaultScenario scenario;

  std::size_t size() const { return voltage.size(); }
  double duration() const { return static_cast<double>(voltage.size()) * dt_output; }
  // Index of the first output sample at or after inception.
  std::size_t inception_index() const;
};

struct RlBranch {
  int from = 0;  // positive current flows from -> to
  int to = 0;
  double resistance = 0.0;
  double inductance = 0.0;
};

/// Network topology plus its DC operating point.
struct SimState {
  NetworkConfig config;
  int node_count = 0;
  std::vector<double> node_capacitance;  // F to ground
  // Line sections first, then the three limiting inductors (converter -> terminal).
  std::vector<RlBranch> rl_branches;
  std::array<int, kTerminals> converter_node{};
  std::array<int, kTerminals> terminal_node{};
  int junction_node = 0;
  // branch_nodes[k][p] is the node at position p along branch k, p = 0 at the
  // terminal and p = n_sections at the junction.
  std::array<std::vector<int>, kTerminals> branch_nodes;

  std::vector<double> node_voltage;
  std::vector<double> branch_current;

  double dt_internal = 0.0;
  std::int64_t decimation = 1;  // internal steps per output sample

  std::size_t limiting_branch(int terminal) const {
    return rl_branches.size() - kTerminals + static_cast<std::size_t>(terminal);
  }
  // Length of the path from the measuring terminal to the far end of `branch`.
  double path_length_km(int branch) const;
  // Longest path from the measuring terminal.
  double max_path_length_km() const;
  // Node nearest to `distance_km` along the measuring path through `branch`.
  // Throws when the distance is not reachable on that branch.
  int fault_node(int branch, double distance_km) const;
  double terminal_voltage() const;
  double terminal_current() const;
};

SimState build_network(const NetworkConfig& config);

/// Fixed-step trapezoidal integrator over a SimState. Holds its own copy of
/// the state, so independent instances may run concurrently.
class Transient {
 public:
  Transient(const SimState& state, double limiting_inductance);
  ~Transient();
  Transient(Transient&&) noexcept;
  Transient& operator=(Transient&&) noexcept;

  void set_fault(int node, double resistance);
  void set_sources_enabled(bool enabled);
  void scale_load(int terminal, double factor);

  void step();
  std::int64_t steps() const;
  double time() const;

  std::span<const double> node_voltages() const;
  double terminal_voltage() const;
  double terminal_current() const;
  double fault_current() const;
  // Sum of 1/2 C v^2 over capacitors and 1/2 L i^2 over inductors.
  double stored_energy() const;
  bool finite() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

WaveformRecord simulate(const SimState& state, const FaultScenario& scenario, double duration);

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct ScenarioRanges {
  Range fault_resistance{0.01, 200.0};
  Range limiting_inductance{1e-3, 200e-3};
  Range load_step{0.10, 0.50};  // magnitude; the sign is drawn separately
  Range inception_time{0.02, 0.02};
  void validate() const;
};

std::vector<FaultScenario> generate_scenarios(const NetworkConfig& config, std::uint64_t seed,
                                              int n_fault, int n_nonfault,
                                              const ScenarioRanges& ranges = {});

// No-noise sentinel for add_noise.
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

WaveformRecord add_noise(const WaveformRecord& record, double snr_db, std::uint64_t seed);

// --- serialization -------------------------------------------------------

nlohmann::json to_json(const NetworkConfig& config);
NetworkConfig network_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioRanges& ranges);
ScenarioRanges ranges_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FaultScenario& scenario);
FaultScenario scenario_from_json(const nlohmann::json& j);

void write_waveform_csv(const std::filesystem::path& path, const WaveformRecord& record);
WaveformRecord read_waveform_csv(const std::filesystem::path& path, const FaultScenario& scenario);

// Writes scenario_<id>.csv files plus manifest.json into `dir`.
void write_waveform_dir(const std::filesystem::path& dir, const NetworkConfig& config,
                        std::span<const WaveformRecord> records);
std::vector<WaveformRecord> read_waveform_dir(const std::filesystem::path& dir);
// Network stored in the directory's manifest.
NetworkConfig read_waveform_network(const std::filesystem::path& dir);

}  // namespace faultloc::sim
