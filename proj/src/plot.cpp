#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "faultloc/csv.hpp"
#include "faultloc/error.hpp"
#include "faultloc/harness.hpp"
#include "faultloc/numfmt.hpp"
#include "faultloc/svg.hpp"

namespace faultloc::svg {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;
  bool log_x;

  double px(double x) const {
    const double t = log_x ? (std::log10(x) - std::log10(x0)) / (std::log10(x1) - std::log10(x0)) : (x - x0) / (x1 - x0);
    return kLeft + t * (kWidth - kLeft - kRight);
  }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double pad = lo == 0 ? 1.0 : std::abs(lo) * 0.1;
    lo -= pad;
    hi += pad;
  }
}

std::string header(const Axes& axes) {
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
       "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + escape(axes.title) +
       "</text>\n";
  s += "<text x=\"" + num((kLeft + kWidth - kRight) / 2) + "\" y=\"" + num(kHeight - 10) +
       "\" text-anchor=\"middle\">" + escape(axes.x_label) + "</text>\n";
  s += "<text x=\"15\" y=\"" + num((kTop + kHeight - kBottom) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
       num((kTop + kHeight - kBottom) / 2) + ")\">" + escape(axes.y_label) + "</text>\n";
  return s;
}

std::string y_axis(const Frame& f) {
  std::string s;
  for (int t = 0; t <= 4; ++t) {
    const double v = f.y0 + (f.y1 - f.y0) * t / 4.0;
    const double y = f.py(v);
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kWidth - kRight) + "\" y2=\"" + num(y) +
         "\" stroke=\"#ddd\"/>\n";
    s += "<text x=\"" + num(kLeft - 5) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + tick_label(v) +
         "</text>\n";
  }
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
       num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kHeight - kBottom) + "\" x2=\"" + num(kWidth - kRight) +
       "\" y2=\"" + num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
  return s;
}

std::string legend(const std::vector<Series>& series) {
  std::string s;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(i);
    const char* color = kPalette[i % std::size(kPalette)];
    s += "<rect x=\"" + num(kWidth - kRight + 10) + "\" y=\"" + num(y - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
         color + "\"/>\n";
    s += "<text x=\"" + num(kWidth - kRight + 25) + "\" y=\"" + num(y + 1) + "\">" + escape(series[i].name) +
         "</text>\n";
  }
  return s;
}

}  // namespace

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string line_chart(const Axes& axes, const std::vector<Series>& series) {
  Frame f{INFINITY, -INFINITY, INFINITY, -INFINITY, axes.log_x};
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (axes.log_x && s.x[i] <= 0)) continue;
      f.x0 = std::min(f.x0, s.x[i]);
      f.x1 = std::max(f.x1, s.x[i]);
      f.y0 = std::min(f.y0, s.y[i]);
      f.y1 = std::max(f.y1, s.y[i]);
    }
  }
  if (!std::isfinite(f.x0)) {
    f = {0, 1, 0, 1, false};
  }
  if (f.log_x && !(f.x1 > f.x0)) f.log_x = false;
  widen(f.x0, f.x1);
  if (f.y0 > 0 && f.y0 < 0.5 * f.y1) f.y0 = 0;
  widen(f.y0, f.y1);

  std::string s = header(axes) + y_axis(f);
  for (int t = 0; t <= 4; ++t) {
    const double v = f.log_x ? std::pow(10.0, std::log10(f.x0) + (std::log10(f.x1) - std::log10(f.x0)) * t / 4.0)
                             : f.x0 + (f.x1 - f.x0) * t / 4.0;
    s += "<text x=\"" + num(f.px(v)) + "\" y=\"" + num(kHeight - kBottom + 15) + "\" text-anchor=\"middle\">" +
         tick_label(v) + "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    std::string points;
    std::string marks;
    const auto& ser = series[k];
    for (std::size_t i = 0; i < std::min(ser.x.size(), ser.y.size()); ++i) {
      if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i]) || (f.log_x && ser.x[i] <= 0)) continue;
      const auto px = num(f.px(ser.x[i]));
      const auto py = num(f.py(ser.y[i]));
      points += px + "," + py + " ";
      marks += "<circle cx=\"" + px + "\" cy=\"" + py + "\" r=\"" + (axes.markers_only ? "1.5" : "3") +
               "\" fill=\"" + color + "\"/>\n";
    }
    if (!axes.markers_only && !points.empty()) {
      points.pop_back();
      s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + points +
           "\"/>\n";
    }
    s += marks;
  }
  return s + legend(series) + "</svg>\n";
}

std::string bar_chart(const Axes& axes, const std::vector<std::string>& categories,
                      const std::vector<Series>& series) {
  Frame f{0, 1, 0, -INFINITY, false};
  for (const auto& ser : series) {
    for (double v : ser.y) {
      if (std::isfinite(v)) f.y1 = std::max(f.y1, v);
    }
  }
  if (!std::isfinite(f.y1) || f.y1 <= 0) f.y1 = 1;
  f.y1 *= 1.05;

  std::string s = header(axes) + y_axis(f);
  const double plot_w = kWidth - kLeft - kRight;
  const double group_w = categories.empty() ? plot_w : plot_w / static_cast<double>(categories.size());
  const double bar_w = group_w * 0.8 / static_cast<double>(std::max<std::size_t>(series.size(), 1));
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double gx = kLeft + group_w * static_cast<double>(c);
    s += "<text x=\"" + num(gx + group_w / 2) + "\" y=\"" + num(kHeight - kBottom + 15) + "\" text-anchor=\"middle\">" +
         escape(categories[c]) + "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
      if (c >= series[k].y.size() || !std::isfinite(series[k].y[c])) continue;
      const double v = std::max(series[k].y[c], 0.0);
      const double top = f.py(v);
      s += "<rect x=\"" + num(gx + group_w * 0.1 + bar_w * static_cast<double>(k)) + "\" y=\"" + num(top) +
           "\" width=\"" + num(bar_w) + "\" height=\"" + num(kHeight - kBottom - top) + "\" fill=\"" +
           kPalette[k % std::size(kPalette)] + "\"><title>" + escape(series[k].name + " " + categories[c] + ": " +
                                                                     tick_label(series[k].y[c])) +
           "</title></rect>\n";
    }
  }
  return s + legend(series) + "</svg>\n";
}

}  // namespace faultloc::svg

namespace faultloc::harness {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << text;
  if (!out.flush()) throw Error("io", "write failed for " + path.string());
}

// Distinct values in first-seen order.
std::vector<std::string> distinct(const std::vector<std::string>& values) {
  std::vector<std::string> out;
  for (const auto& v : values) {
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

// Bars of mean MAE per model, grouped by channel mode.
std::string summary_plot(const CsvTable& t) {
  const auto channels = t.strings("channels");
  const auto models = t.strings("model");
  const auto mae = t.numbers("mean_mae_km");
  const auto cats = distinct(channels);
  std::vector<svg::Series> series;
  for (const auto& m : distinct(models)) {
    svg::Series s{m, {}, std::vector<double>(cats.size(), NAN)};
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (models[r] != m) continue;
      const auto c = std::find(cats.begin(), cats.end(), channels[r]) - cats.begin();
      s.y[static_cast<std::size_t>(c)] = mae[r];
    }
    series.push_back(std::move(s));
  }
  return svg::bar_chart({"Mean 7-fold MAE by model", "channels", "MAE (km)"}, cats, series);
}

// Per-fold MAE lines, one per model and channel mode.
std::string kfold_plot(const CsvTable& t) {
  const auto channels = t.strings("channels");
  const auto models = t.strings("model");
  const auto fold = t.numbers("fold");
  const auto mae = t.numbers("mae_km");
  std::map<std::string, svg::Series> by_key;
  std::vector<std::string> order;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto key = models[r] + " (" + channels[r] + ")";
    if (!by_key.count(key)) {
      order.push_back(key);
      by_key[key].name = key;
    }
    by_key[key].x.push_back(fold[r]);
    by_key[key].y.push_back(mae[r]);
  }
  std::vector<svg::Series> series;
  for (const auto& k : order) series.push_back(by_key[k]);
  return svg::line_chart({"Validation MAE per fold", "fold", "MAE (km)"}, series);
}

std::vector<std::pair<std::string, std::string>> curve_plots(const CsvTable& t, const std::string& stem) {
  const auto channels = t.strings("channels");
  const auto n = t.numbers("n_train");
  const auto train = t.numbers("train_mae_km");
  const auto val = t.numbers("val_mae_km");
  const auto fit = t.numbers("fit_seconds");
  const auto cum = t.numbers("cumulative_seconds");
  std::vector<svg::Series> errors, times, vs_time;
  for (const auto& c : distinct(channels)) {
    svg::Series tr{"train (" + c + ")", {}, {}}, va{"validation (" + c + ")", {}, {}};
    svg::Series ft{"fit time (" + c + ")", {}, {}}, vt{"validation (" + c + ")", {}, {}};
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (channels[r] != c) continue;
      tr.x.push_back(n[r]);
      tr.y.push_back(train[r]);
      va.x.push_back(n[r]);
      va.y.push_back(val[r]);
      ft.x.push_back(n[r]);
      ft.y.push_back(fit[r]);
      vt.x.push_back(cum[r]);
      vt.y.push_back(val[r]);
    }
    errors.push_back(tr);
    errors.push_back(va);
    times.push_back(ft);
    vs_time.push_back(vt);
  }
  return {
      {stem + ".svg", svg::line_chart({"Learning curve", "training samples", "MAE (km)", true}, errors)},
      {stem + "_time.svg", svg::line_chart({"Fit time", "training samples", "seconds", true}, times)},
      {stem + "_mae_vs_time.svg",
       svg::line_chart({"Validation MAE against cumulative fit time", "cumulative seconds", "MAE (km)"}, vs_time)},
  };
}

std::string noise_plot(const CsvTable& t) {
  const auto snr = t.strings("snr_db");
  const auto channels = t.strings("channels");
  const auto models = t.strings("model");
  const auto mae = t.numbers("mean_mae_km");
  std::vector<std::string> cats;
  for (const auto& s : distinct(snr)) cats.push_back(s == "inf" ? "clean" : s + " dB");
  const auto snr_levels = distinct(snr);
  std::vector<svg::Series> series;
  std::vector<std::string> order;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto key = models[r] + " (" + channels[r] + ")";
    auto it = std::find(order.begin(), order.end(), key);
    if (it == order.end()) {
      order.push_back(key);
      series.push_back({key, {}, std::vector<double>(cats.size(), NAN)});
      it = order.end() - 1;
    }
    const auto c = std::find(snr_levels.begin(), snr_levels.end(), snr[r]) - snr_levels.begin();
    series[static_cast<std::size_t>(it - order.begin())].y[static_cast<std::size_t>(c)] = mae[r];
  }
  return svg::bar_chart({"MAE under measurement noise", "SNR", "MAE (km)"}, cats, series);
}

std::string impedance_plot(const CsvTable& t) {
  const auto truth = t.numbers("true_km");
  svg::Series blind{"blind I_F", truth, t.numbers("blind_km")};
  svg::Series oracle{"oracle I_F", truth, t.numbers("oracle_km")};
  svg::Series ideal{"ideal", {}, {}};
  if (!truth.empty()) {
    const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
    ideal.x = {*lo, *hi};
    ideal.y = {*lo, *hi};
  }
  return svg::line_chart({"Impedance locator estimates", "true distance (km)", "estimate (km)", false, true},
                         {blind, oracle, ideal});
}

}  // namespace

std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("io", "not a directory: " + dir.string());
  std::vector<std::pair<std::filesystem::path, std::string>> charts;
  if (std::filesystem::exists(dir / "summary.csv")) {
    charts.emplace_back(dir / "summary.svg", summary_plot(read_csv(dir / "summary.csv")));
  }
  if (std::filesystem::exists(dir / "kfold.csv")) {
    charts.emplace_back(dir / "kfold.svg", kfold_plot(read_csv(dir / "kfold.csv")));
  }
  if (std::filesystem::exists(dir / "noise.csv")) {
    charts.emplace_back(dir / "noise.svg", noise_plot(read_csv(dir / "noise.csv")));
  }
  if (std::filesystem::exists(dir / "impedance.csv")) {
    charts.emplace_back(dir / "impedance.svg", impedance_plot(read_csv(dir / "impedance.csv")));
  }
  std::vector<std::filesystem::path> curves;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("curve_") && entry.path().extension() == ".csv") curves.push_back(entry.path());
  }
  std::sort(curves.begin(), curves.end());
  for (const auto& c : curves) {
    for (auto& [file, text] : curve_plots(read_csv(c), c.stem().string())) charts.emplace_back(dir / file, text);
  }
  std::vector<std::filesystem::path> written;
  for (const auto& [path, text] : charts) {
    write_text(path, text);
    written.push_back(path);
  }
  return written;
}

}  // namespace faultloc::harness
