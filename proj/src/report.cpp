#include <fstream>

#include "faultloc/csv.hpp"
#include "faultloc/error.hpp"
#include "faultloc/harness.hpp"
#include "faultloc/numfmt.hpp"

namespace faultloc::harness {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error("io", "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error("io", "write failed for " + path.string());
}

std::string mode_name(data::ChannelMode m) { return std::string(data::to_string(m)); }

}  // namespace

void write_kfold_csv(const std::filesystem::path& path, const EvalReport& report) {
  auto out = open_out(path);
  out << "channels,model,fold,n_train,n_val,mae_km\n";
  for (const auto& mode : report.modes) {
    for (const auto& m : mode.models) {
      for (std::size_t f = 0; f < m.fold_mae.size(); ++f) {
        out << mode_name(mode.mode) << ',' << csv_field(m.model) << ',' << f << ',' << mode.n_train[f] << ','
            << mode.n_val[f] << ',' << format_double(m.fold_mae[f]) << '\n';
      }
    }
  }
  finish(out, path);
}

void write_summary_csv(const std::filesystem::path& path, const EvalReport& report) {
  auto out = open_out(path);
  out << "channels,model,mean_mae_km,fold_std_km,status,config\n";
  for (const auto& mode : report.modes) {
    for (const auto& m : mode.models) {
      out << mode_name(mode.mode) << ',' << csv_field(m.model) << ',' << format_double(m.mean_mae) << ','
          << format_double(m.fold_std) << ',' << csv_field(m.error.empty() ? "ok" : "error: " + m.error) << ','
          << report.config_fingerprint << '\n';
    }
  }
  finish(out, path);
}

void write_timing_csv(const std::filesystem::path& path, const EvalReport& report) {
  auto out = open_out(path);
  out << "channels,model,fit_seconds\n";
  for (const auto& mode : report.modes) {
    for (const auto& m : mode.models) {
      out << mode_name(mode.mode) << ',' << csv_field(m.model) << ',' << format_double(m.fit_seconds) << '\n';
    }
  }
  finish(out, path);
}

void write_curve_csv(const std::filesystem::path& path, std::span<const LearningCurve> curves) {
  auto out = open_out(path);
  out << "channels,model,n_train,train_mae_km,val_mae_km,fit_seconds,cumulative_seconds\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out << mode_name(c.mode) << ',' << csv_field(c.model) << ',' << p.n_train << ','
          << format_double(p.train_mae) << ',' << format_double(p.val_mae) << ',' << format_double(p.fit_seconds)
          << ',' << format_double(p.cumulative_seconds) << '\n';
    }
  }
  finish(out, path);
}

void write_noise_csv(const std::filesystem::path& path, std::span<const NoiseRow> rows) {
  auto out = open_out(path);
  out << "snr_db,channels,model,mean_mae_km,fold_std_km\n";
  for (const auto& r : rows) {
    out << format_double(r.snr_db) << ',' << mode_name(r.mode) << ',' << csv_field(r.model) << ','
        << format_double(r.mean_mae) << ',' << format_double(r.fold_std) << '\n';
  }
  finish(out, path);
}

void write_impedance_csv(const std::filesystem::path& path, std::span<const ImpedanceRow> rows) {
  auto out = open_out(path);
  out << "scenario,branch,true_km,fault_resistance,rf_assumed,v_s,i_s,i_f_oracle,z_total,line_length_km,"
         "blind_km,oracle_km\n";
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.branch << ',' << format_double(r.true_km) << ','
        << format_double(r.fault_resistance) << ',' << format_double(r.inputs.r_f_assumed) << ','
        << format_double(r.inputs.v_s) << ',' << format_double(r.inputs.i_s) << ',' << format_double(r.i_f_oracle)
        << ',' << format_double(r.inputs.z_total) << ',' << format_double(r.inputs.line_length) << ','
        << format_double(r.blind_km) << ',' << format_double(r.oracle_km) << '\n';
  }
  finish(out, path);
}

void write_classify_csv(const std::filesystem::path& path, const ClassificationReport& report) {
  auto out = open_out(path);
  out << "fold,n_val,accuracy,true_pos,true_neg,false_pos,false_neg\n";
  for (std::size_t f = 0; f < report.fold_accuracy.size(); ++f) {
    out << f << ',' << report.fold_size[f] << ',' << format_double(report.fold_accuracy[f]) << ",,,,\n";
  }
  std::size_t total = 0;
  for (auto n : report.fold_size) total += n;
  out << "all," << total << ',' << format_double(report.accuracy) << ',' << report.true_pos << ','
      << report.true_neg << ',' << report.false_pos << ',' << report.false_neg << '\n';
  finish(out, path);
}

void emit_report(const EvalReport& report, const std::filesystem::path& dir, bool include_timing) {
  write_kfold_csv(dir / "kfold.csv", report);
  write_summary_csv(dir / "summary.csv", report);
  if (include_timing) write_timing_csv(dir / "kfold_timing.csv", report);
}

}  // namespace faultloc::harness
