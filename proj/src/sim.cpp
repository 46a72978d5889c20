#include "faultloc/sim.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "faultloc/error.hpp"

namespace faultloc::sim {

using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

double LineParams::delay_per_km() const { return std::sqrt(l_per_km * c_per_km); }

void LineParams::validate() const {
  require(r_per_km > 0 && l_per_km > 0 && c_per_km > 0 && length_km > 0,
          "line parameters must be strictly positive");
  require(n_sections >= 10, "a line needs at least 10 sections");
}

NetworkConfig NetworkConfig::defaults() {
  NetworkConfig c;
  c.branches[0].length_km = 400.0;
  c.branches[0].n_sections = 80;
  c.branches[1].length_km = 300.0;
  c.branches[1].n_sections = 60;
  c.branches[2].length_km = 300.0;
  c.branches[2].n_sections = 60;
  c.terminals[0] = {.source = true, .source_resistance = 0.25, .load_conductance = 0.0};
  // 500 MW at nominal voltage.
  const double g_load = 500e6 / (c.nominal_voltage * c.nominal_voltage);
  c.terminals[1] = {.source = false, .source_resistance = 1.0, .load_conductance = g_load};
  c.terminals[2] = {.source = false, .source_resistance = 1.0, .load_conductance = g_load};
  return c;
}

void NetworkConfig::validate() const {
  require(nominal_voltage > 0, "nominal_voltage must be positive");
  for (const auto& b : branches) b.validate();
  for (const auto& t : terminals) {
    require(t.source_resistance > 0, "source_resistance must be positive");
    require(t.load_conductance >= 0, "load_conductance must be non-negative");
  }
  require(limiting_inductance > 0, "limiting_inductance must be positive");
  require(measuring_terminal >= 0 && measuring_terminal < kTerminals,
          "measuring_terminal must be 0, 1 or 2");
  require(dt_output > 0 && max_dt_internal > 0, "time steps must be positive");
}

std::size_t WaveformRecord::inception_index() const {
  return static_cast<std::size_t>(std::ceil(scenario.inception_time / dt_output - 1e-9));
}

double SimState::path_length_km(int branch) const {
  const int m = config.measuring_terminal;
  require(branch >= 0 && branch < kTerminals, "branch index out of range");
  if (branch == m) return config.branches[m].length_km;
  return config.branches[m].length_km + config.branches[branch].length_km;
}

double SimState::max_path_length_km() const {
  double best = 0.0;
  for (int b = 0; b < kTerminals; ++b) best = std::max(best, path_length_km(b));
  return best;
}

int SimState::fault_node(int branch, double distance_km) const {
  const int m = config.measuring_terminal;
  require(branch >= 0 && branch < kTerminals, "branch index out of range");
  const auto& own = config.branches[m];
  constexpr double kSlack = 1e-9;
  if (branch == m) {
    if (!(distance_km >= 0 && distance_km <= own.length_km + kSlack)) {
      throw Error("unreachable", "fault distance " + std::to_string(distance_km) +
                                     " km is not on branch " + std::to_string(branch));
    }
    const auto pos = std::lround(distance_km / own.section_length_km());
    return branch_nodes[m][std::clamp<long>(pos, 0, own.n_sections)];
  }
  const auto& far = config.branches[branch];
  const double offset = distance_km - own.length_km;
  if (!(offset >= -kSlack && offset <= far.length_km + kSlack)) {
    throw Error("unreachable", "fault distance " + std::to_string(distance_km) +
                                   " km is not on branch " + std::to_string(branch));
  }
  const auto from_junction = std::lround(offset / far.section_length_km());
  const long pos = far.n_sections - std::clamp<long>(from_junction, 0, far.n_sections);
  return branch_nodes[branch][pos];
}

double SimState::terminal_voltage() const {
  return node_voltage[terminal_node[config.measuring_terminal]];
}

double SimState::terminal_current() const {
  return branch_current[limiting_branch(config.measuring_terminal)];
}

namespace {

// DC operating point: capacitors open, inductors shorted. Line sections keep
// their resistance; the lossless limiting inductors get an explicit current
// unknown (modified nodal analysis).
void solve_steady_state(SimState& s) {
  const auto& cfg = s.config;
  bool grounded = false;
  for (const auto& t : cfg.terminals) grounded = grounded || t.source || t.load_conductance > 0;
  if (!grounded) {
    throw Error("singular_network", "steady state is singular: no terminal has a source or load");
  }

  const int n = s.node_count;
  const int dim = n + kTerminals;
  std::vector<Triplet> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  const std::size_t n_sections = s.rl_branches.size() - kTerminals;
  for (std::size_t b = 0; b < n_sections; ++b) {
    const auto& br = s.rl_branches[b];
    const double g = 1.0 / br.resistance;
    trips.emplace_back(br.from, br.from, g);
    trips.emplace_back(br.to, br.to, g);
    trips.emplace_back(br.from, br.to, -g);
    trips.emplace_back(br.to, br.from, -g);
  }
  for (int k = 0; k < kTerminals; ++k) {
    const auto& t = cfg.terminals[k];
    const int c = s.converter_node[k];
    if (t.source) {
      trips.emplace_back(c, c, 1.0 / t.source_resistance);
      rhs[c] += cfg.nominal_voltage / t.source_resistance;
    }
    if (t.load_conductance > 0) trips.emplace_back(c, c, t.load_conductance);
    const int row = n + k;
    const int term = s.terminal_node[k];
    trips.emplace_back(row, c, 1.0);
    trips.emplace_back(row, term, -1.0);
    trips.emplace_back(c, row, 1.0);
    trips.emplace_back(term, row, -1.0);
  }
  SparseMat a(dim, dim);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  Eigen::SparseLU<SparseMat> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) {
    throw Error("singular_network", "steady-state solve failed: " + lu.lastErrorMessage());
  }
  const Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) {
    throw Error("singular_network", "steady-state solve produced a non-finite solution");
  }

  s.node_voltage.assign(x.data(), x.data() + n);
  s.branch_current.assign(s.rl_branches.size(), 0.0);
  for (std::size_t b = 0; b < n_sections; ++b) {
    const auto& br = s.rl_branches[b];
    s.branch_current[b] = (x[br.from] - x[br.to]) / br.resistance;
  }
  for (int k = 0; k < kTerminals; ++k) s.branch_current[s.limiting_branch(k)] = x[n + k];
}

}  // namespace

SimState build_network(const NetworkConfig& config) {
  config.validate();
  SimState s;
  s.config = config;

  int next = 0;
  for (int k = 0; k < kTerminals; ++k) s.converter_node[k] = next++;
  for (int k = 0; k < kTerminals; ++k) s.terminal_node[k] = next++;
  s.junction_node = next++;
  for (int k = 0; k < kTerminals; ++k) {
    const int n_sec = config.branches[k].n_sections;
    auto& nodes = s.branch_nodes[k];
    nodes.resize(n_sec + 1);
    nodes.front() = s.terminal_node[k];
    nodes.back() = s.junction_node;
    for (int p = 1; p < n_sec; ++p) nodes[p] = next++;
  }
  s.node_count = next;
  s.node_capacitance.assign(next, 0.0);

  double min_section_delay = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kTerminals; ++k) {
    const auto& line = config.branches[k];
    const double len = line.section_length_km();
    const double c_half = 0.5 * line.c_per_km * len;
    const auto& nodes = s.branch_nodes[k];
    for (int p = 0; p < line.n_sections; ++p) {
      s.node_capacitance[nodes[p]] += c_half;
      s.node_capacitance[nodes[p + 1]] += c_half;
      s.rl_branches.push_back({nodes[p], nodes[p + 1], line.r_per_km * len, line.l_per_km * len});
    }
    min_section_delay = std::min(min_section_delay, len * line.delay_per_km());
  }
  for (int k = 0; k < kTerminals; ++k) {
    s.rl_branches.push_back({s.converter_node[k], s.terminal_node[k], 0.0, config.limiting_inductance});
  }

  // dt_internal is the largest step within both bounds that divides dt_output.
  const double dt_bound = std::min(config.max_dt_internal, 0.5 * min_section_delay);
  const double ratio = config.dt_output / dt_bound;
  require(ratio < 1e9, "internal step is too small relative to the output step");
  s.decimation = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(ratio - 1e-9)));
  s.dt_internal = config.dt_output / static_cast<double>(s.decimation);

  solve_steady_state(s);
  return s;
}

// --- Transient ------------------------------------------------------------

struct Transient::Impl {
  SimState state;                    // owned copy
  double dt = 0.0;
  std::int64_t n_steps = 0;

  std::vector<double> cap_g;      // 2C/dt
  std::vector<double> cap_i;      // capacitor current at the last step
  std::vector<double> br_g;       // 1/(R + 2L/dt)
  std::vector<double> br_k;       // 2L/dt - R
  std::vector<double> br_hist;
  std::vector<double> shunt_g;    // sources, loads, fault
  std::vector<double> injection;  // Norton source currents
  std::vector<double> rhs;
  std::vector<double> load_factor = std::vector<double>(kTerminals, 1.0);
  bool sources_on = true;
  int fault_node = -1;
  double fault_g = 0.0;

  SparseMat y;
  Eigen::SimplicialLDLT<SparseMat> solver;
  Eigen::VectorXd x;

  void assemble() {
    const int n = state.node_count;
    shunt_g.assign(n, 0.0);
    injection.assign(n, 0.0);
    const auto& cfg = state.config;
    for (int k = 0; k < kTerminals; ++k) {
      const auto& t = cfg.terminals[k];
      const int c = state.converter_node[k];
      if (t.source) {
        shunt_g[c] += 1.0 / t.source_resistance;
        if (sources_on) injection[c] += cfg.nominal_voltage / t.source_resistance;
      }
      shunt_g[c] += t.load_conductance * load_factor[k];
    }
    if (fault_node >= 0) shunt_g[fault_node] += fault_g;

    std::vector<Triplet> trips;
    trips.reserve(n + 4 * state.rl_branches.size());
    for (int i = 0; i < n; ++i) trips.emplace_back(i, i, cap_g[i] + shunt_g[i]);
    for (std::size_t b = 0; b < state.rl_branches.size(); ++b) {
      const auto& br = state.rl_branches[b];
      const double g = br_g[b];
      trips.emplace_back(br.from, br.from, g);
      trips.emplace_back(br.to, br.to, g);
      // Lower triangle only; SimplicialLDLT reads the lower part.
      const int lo = std::min(br.from, br.to);
      const int hi = std::max(br.from, br.to);
      trips.emplace_back(hi, lo, -g);
    }
    const bool first = y.rows() == 0;
    y.resize(n, n);
    y.setFromTriplets(trips.begin(), trips.end());
    y.makeCompressed();
    if (first) solver.analyzePattern(y);
    solver.factorize(y);
    if (solver.info() != Eigen::Success) {
      throw Error("numerical", "transient system matrix is not positive definite");
    }
  }
};

Transient::Transient(const SimState& state, double limiting_inductance)
    : impl_(std::make_unique<Impl>()) {
  require(limiting_inductance > 0, "limiting inductance must be positive");
  auto& m = *impl_;
  m.state = state;
  for (int k = 0; k < kTerminals; ++k) {
    m.state.rl_branches[m.state.limiting_branch(k)].inductance = limiting_inductance;
  }
  m.dt = state.dt_internal;
  const int n = state.node_count;
  m.cap_g.resize(n);
  for (int i = 0; i < n; ++i) m.cap_g[i] = 2.0 * state.node_capacitance[i] / m.dt;
  m.cap_i.assign(n, 0.0);
  const auto nb = m.state.rl_branches.size();
  m.br_g.resize(nb);
  m.br_k.resize(nb);
  m.br_hist.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& br = m.state.rl_branches[b];
    const double z = 2.0 * br.inductance / m.dt;
    m.br_g[b] = 1.0 / (br.resistance + z);
    m.br_k[b] = z - br.resistance;
  }
  m.rhs.resize(n);
  m.x.resize(n);
  m.assemble();
}

Transient::~Transient() = default;
Transient::Transient(Transient&&) noexcept = default;
Transient& Transient::operator=(Transient&&) noexcept = default;

void Transient::set_fault(int node, double resistance) {
  auto& m = *impl_;
  require(node >= 0 && node < m.state.node_count, "fault node out of range");
  require(resistance > 0, "fault resistance must be positive");
  m.fault_node = node;
  m.fault_g = 1.0 / resistance;
  m.assemble();
}

void Transient::set_sources_enabled(bool enabled) {
  impl_->sources_on = enabled;
  impl_->assemble();
}

void Transient::scale_load(int terminal, double factor) {
  require(terminal >= 0 && terminal < kTerminals, "terminal index out of range");
  require(factor >= 0, "load factor must be non-negative");
  impl_->load_factor[terminal] = factor;
  impl_->assemble();
}

void Transient::step() {
  auto& m = *impl_;
  auto& v = m.state.node_voltage;
  auto& cur = m.state.branch_current;
  const int n = m.state.node_count;
  const auto& branches = m.state.rl_branches;

  for (int i = 0; i < n; ++i) m.rhs[i] = m.cap_g[i] * v[i] + m.cap_i[i] + m.injection[i];
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const auto& br = branches[b];
    const double h = m.br_g[b] * ((v[br.from] - v[br.to]) + m.br_k[b] * cur[b]);
    m.br_hist[b] = h;
    m.rhs[br.from] -= h;
    m.rhs[br.to] += h;
  }

  m.x = m.solver.solve(Eigen::Map<const Eigen::VectorXd>(m.rhs.data(), n));

  for (int i = 0; i < n; ++i) {
    const double v_new = m.x[i];
    m.cap_i[i] = m.cap_g[i] * (v_new - v[i]) - m.cap_i[i];
    v[i] = v_new;
  }
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const auto& br = branches[b];
    cur[b] = m.br_g[b] * (v[br.from] - v[br.to]) + m.br_hist[b];
  }
  ++m.n_steps;
}

std::int64_t Transient::steps() const { return impl_->n_steps; }
double Transient::time() const { return static_cast<double>(impl_->n_steps) * impl_->dt; }

std::span<const double> Transient::node_voltages() const { return impl_->state.node_voltage; }
double Transient::terminal_voltage() const { return impl_->state.terminal_voltage(); }
double Transient::terminal_current() const { return impl_->state.terminal_current(); }

double Transient::fault_current() const {
  const auto& m = *impl_;
  if (m.fault_node < 0) return 0.0;
  return m.state.node_voltage[m.fault_node] * m.fault_g;
}

double Transient::stored_energy() const {
  const auto& s = impl_->state;
  double e = 0.0;
  for (int i = 0; i < s.node_count; ++i) e += 0.5 * s.node_capacitance[i] * s.node_voltage[i] * s.node_voltage[i];
  for (std::size_t b = 0; b < s.rl_branches.size(); ++b) {
    e += 0.5 * s.rl_branches[b].inductance * s.branch_current[b] * s.branch_current[b];
  }
  return e;
}

bool Transient::finite() const {
  const auto& v = impl_->state.node_voltage;
  const auto& c = impl_->state.branch_current;
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }) &&
         std::all_of(c.begin(), c.end(), [](double x) { return std::isfinite(x); });
}

// --- simulate ------------------------------------------------------------

WaveformRecord simulate(const SimState& state, const FaultScenario& scenario, double duration) {
  const auto& cfg = state.config;
  require(duration > 0, "duration must be positive");
  require(scenario.inception_time > 0 && scenario.inception_time < duration,
          "inception_time must lie strictly inside the simulation window");
  require(scenario.limiting_inductance > 0, "limiting inductance must be positive");

  int fault_node = -1;
  if (scenario.is_fault()) {
    require(scenario.fault_resistance > 0, "fault resistance must be positive");
    fault_node = state.fault_node(scenario.branch_index, scenario.distance_km);
  } else {
    require(scenario.branch_index >= 0 && scenario.branch_index < kTerminals,
            "load-step terminal out of range");
    require(scenario.load_step_fraction > -1.0, "load step cannot remove more than the whole load");
  }

  const auto n_out = static_cast<std::size_t>(std::llround(duration / cfg.dt_output));
  require(n_out >= 1, "duration shorter than one output sample");
  const std::int64_t event_step = std::llround(scenario.inception_time / state.dt_internal);
  const std::int64_t total_steps = static_cast<std::int64_t>(n_out - 1) * state.decimation;

  WaveformRecord rec;
  rec.dt_output = cfg.dt_output;
  rec.scenario = scenario;
  rec.voltage.reserve(n_out);
  rec.current.reserve(n_out);
  if (scenario.is_fault()) rec.fault_current.reserve(n_out);

  Transient sim(state, scenario.limiting_inductance);
  auto sample = [&] {
    rec.voltage.push_back(sim.terminal_voltage());
    rec.current.push_back(sim.terminal_current());
    if (scenario.is_fault()) rec.fault_current.push_back(sim.fault_current());
  };
  sample();
  for (std::int64_t s = 0; s < total_steps; ++s) {
    if (s == event_step) {
      if (scenario.is_fault()) {
        sim.set_fault(fault_node, scenario.fault_resistance);
      } else {
        sim.scale_load(scenario.branch_index, 1.0 + scenario.load_step_fraction);
      }
    }
    sim.step();
    if ((s + 1) % state.decimation == 0) {
      if (!sim.finite()) {
        throw Error("divergence", "simulation diverged at t = " + std::to_string(sim.time()) +
                                      " s (scenario " + std::to_string(scenario.id) + ")");
      }
      sample();
    }
  }
  return rec;
}

}  // namespace faultloc::sim
