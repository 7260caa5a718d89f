#include "citerate/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "citerate/errors.hpp"
#include "citerate/layout.hpp"

namespace citerate::report {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double h = q * (static_cast<double>(sorted.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - std::floor(h);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

ForestRow summarize_column(const std::vector<double>& col, const std::string& label) {
  ForestRow row;
  row.label = label;
  double sum = 0.0;
  for (double v : col) sum += v;
  row.mean = sum / static_cast<double>(col.size());
  std::vector<double> sorted = col;
  std::sort(sorted.begin(), sorted.end());
  row.lo = quantile_sorted(sorted, 0.025);
  row.hi = quantile_sorted(sorted, 0.975);
  return row;
}

// Symmetric log used for style trajectories: linear in [-1, 1], logarithmic
// beyond.
double symlog(double v) {
  if (std::abs(v) <= 1.0) return v;
  return std::copysign(1.0 + std::log(std::abs(v)), v);
}

const char* kPalette[] = {"#348abd", "#a60628", "#7a68a6", "#467821", "#d55e00",
                          "#cc79a7", "#56b4e9", "#009e73", "#f0e442", "#0072b2"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string fmt_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<ForestRow> summarize(const infer::PosteriorDraws& pd,
                                 const std::vector<std::string>& labels) {
  if (pd.n_draws() < 40)
    throw data_error("summarize: need at least 40 retained draws, have " +
                     std::to_string(pd.n_draws()));
  std::vector<ForestRow> rows;
  rows.reserve(labels.size());
  for (const auto& label : labels) {
    const auto idx = pd.column_index(label);
    if (!idx) {
      std::ostringstream os;
      os << "summarize: label '" << label << "' not found; available:";
      std::size_t listed = 0;
      for (const auto& n : pd.names) {
        os << ' ' << n;
        if (++listed >= 60) {
          os << " ... (" << pd.names.size() << " total)";
          break;
        }
      }
      throw data_error(os.str());
    }
    rows.push_back(summarize_column(pd.column(*idx), label));
  }
  return rows;
}

std::vector<StyleProfile> style_profiles(const infer::PosteriorDraws& pd,
                                         const ModelConfig& cfg, double threshold) {
  const int k_total = cfg.components;
  const int horizon = cfg.horizon;
  std::vector<StyleProfile> out;
  for (int k = 0; k < k_total; ++k) {
    const auto ws = pd.column_index("omega_S[" + std::to_string(k) + "]");
    const auto wf = pd.column_index("omega_F[" + std::to_string(k) + "]");
    const auto bi = pd.column_index("base[" + std::to_string(k) + "]");
    const auto si = pd.column_index("shift[" + std::to_string(k) + "]");
    if (!ws || !wf || !bi || !si)
      throw data_error("style_profiles: draws are missing style columns for k=" +
                       std::to_string(k));
    StyleProfile prof;
    prof.style = k;
    prof.weight_s = summarize_column(pd.column(*ws), "omega_S[" + std::to_string(k) + "]");
    prof.weight_f = summarize_column(pd.column(*wf), "omega_F[" + std::to_string(k) + "]");
    if (prof.weight_s.mean <= threshold && prof.weight_f.mean <= threshold) continue;

    const auto base = pd.column(*bi);
    const auto shift = pd.column(*si);
    prof.traj_mean.resize(horizon);
    prof.traj_lo.resize(horizon);
    prof.traj_hi.resize(horizon);
    std::vector<double> traj(base.size());
    for (int t = 0; t < horizon; ++t) {
      for (std::size_t d = 0; d < base.size(); ++d) {
        const double e = std::max(static_cast<double>(t) - shift[d], 0.0);
        traj[d] = e * std::log(base[d]);
      }
      const ForestRow r = summarize_column(traj, "");
      prof.traj_mean[t] = r.mean;
      prof.traj_lo[t] = r.lo;
      prof.traj_hi[t] = r.hi;
    }
    out.push_back(std::move(prof));
  }
  return out;
}

BayesR2 bayes_r2(const infer::PosteriorDraws& pd, const Dataset& data,
                 const ModelConfig& cfg_in) {
  ModelConfig cfg = cfg_in;
  if (cfg.group_names.empty()) cfg.group_names = data.group_names;
  const auto ci = model::ConstrainedIndex::create(cfg, static_cast<int>(data.size()));
  if (pd.n_params != static_cast<std::size_t>(ci.size))
    throw config_error("bayes_r2: draw columns do not match the model layout");

  BayesR2 res;
  res.definition =
      "squared Pearson correlation between posterior-mean expected counts "
      "(1-gate_i)*mu_i*sum_k omega[r_i][k]*base_k^max(t-shift_k,0) and observed counts "
      "over observed paper-year cells (per-year cells, not totals)";

  const int horizon = cfg.horizon;
  const int n = static_cast<int>(data.size());
  const std::size_t n_draws = pd.n_draws();
  std::vector<double> pred(static_cast<std::size_t>(n) * horizon, 0.0);
  std::vector<double> mult_s(horizon), mult_f(horizon);

  for (std::size_t d = 0; d < n_draws; ++d) {
    const double* row = pd.values.data() + d * pd.n_params;
    for (int t = 0; t < horizon; ++t) {
      double ms = 0.0, mf = 0.0;
      for (int k = 0; k < ci.n_styles; ++k) {
        const double e = std::max(static_cast<double>(t) - row[ci.shift + k], 0.0);
        const double m = std::pow(row[ci.base + k], e);
        ms += row[ci.omega_s + k] * m;
        mf += row[ci.omega_f + k] * m;
      }
      mult_s[t] = ms;
      mult_f[t] = mf;
    }
    for (int i = 0; i < n; ++i) {
      const auto& rec = data.papers[i];
      double eta;
      if (cfg.variant == Variant::Science) {
        const int g = rec.group_index;
        eta = (rec.success() ? row[ci.beta + g] : 0.0) + row[ci.bias + g];
      } else {
        eta = row[ci.bias];
        for (int j = 0; j < ci.n_coef; ++j) eta += row[ci.beta + j] * rec.features[j];
      }
      const double mu_i = std::exp(eta);
      const double keep = 1.0 - row[ci.gate + i];
      const auto& mult = rec.success() ? mult_s : mult_f;
      for (int t = 0; t < horizon; ++t)
        pred[static_cast<std::size_t>(i) * horizon + t] += keep * mu_i * mult[t];
    }
  }

  std::vector<double> xs, ys;
  for (int i = 0; i < n; ++i) {
    const auto& rec = data.papers[i];
    for (int t = 0; t < horizon && t < static_cast<int>(rec.counts.size()); ++t) {
      if (!rec.observed[t]) continue;
      xs.push_back(pred[static_cast<std::size_t>(i) * horizon + t] /
                   static_cast<double>(n_draws));
      ys.push_back(static_cast<double>(rec.counts[t]));
    }
  }
  if (xs.size() < 3) {
    res.note = "fewer than 3 observed cells";
    return res;
  }
  const double nobs = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= nobs;
  my /= nobs;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    res.note = "undefined: zero-variance predictions or observations";
    return res;
  }
  res.r2 = sxy * sxy / (sxx * syy);
  return res;
}

void emit_forest_csv(const std::vector<ForestRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << "label,mean,lo_2.5,hi_97.5\n";
  for (const auto& r : rows)
    out << r.label << ',' << fmt_number(r.mean) << ',' << fmt_number(r.lo) << ','
        << fmt_number(r.hi) << '\n';
  if (!out) throw data_error("write failed for '" + path + "'");
}

void emit_forest_svg(const std::vector<ForestRow>& rows, const std::string& path,
                     const std::string& title) {
  const int label_w = 230, right = 40, top = 50, bottom = 50, row_h = 26;
  const int plot_w = 520;
  const int width = label_w + plot_w + right;
  const int height = top + std::max<int>(1, static_cast<int>(rows.size())) * row_h + bottom;

  double lo = 0.0, hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.lo);
    hi = std::max(hi, r.hi);
  }
  if (rows.empty()) {
    lo = -1.0;
    hi = 1.0;
  }
  const double pad = 0.05 * std::max(hi - lo, 1e-12);
  const double x0 = lo - pad, x1 = hi + pad;
  auto xpix = [&](double v) {
    return label_w + plot_w * (v - x0) / (x1 - x0);
  };

  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << xml_escape(title) << "</text>\n";

  const int axis_y = height - bottom + 8;
  out << "<line x1=\"" << label_w << "\" y1=\"" << top - 8 << "\" x2=\"" << label_w
      << "\" y2=\"" << axis_y - 8 << "\" stroke=\"#888\"/>\n";
  out << "<line x1=\"" << label_w << "\" y1=\"" << axis_y - 8 << "\" x2=\""
      << label_w + plot_w << "\" y2=\"" << axis_y - 8 << "\" stroke=\"#888\"/>\n";
  out << "<text x=\"" << label_w + plot_w / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << "effect size (log rate)</text>\n";

  if (rows.empty()) {
    out << "<text x=\"" << label_w + plot_w / 2 << "\" y=\"" << top + row_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "fill=\"#999\">no data</text>\n";
    out << "</svg>\n";
    return;
  }

  // Zero reference line.
  if (x0 < 0.0 && x1 > 0.0) {
    out << "<line x1=\"" << xpix(0.0) << "\" y1=\"" << top - 8 << "\" x2=\"" << xpix(0.0)
        << "\" y2=\"" << axis_y - 8
        << "\" stroke=\"#348abd\" stroke-dasharray=\"5,4\"/>\n";
  }
  // Axis extremes annotated with the data values themselves (they appear in
  // the sibling CSV, which is the source of truth).
  out << "<text x=\"" << xpix(lo) << "\" y=\"" << axis_y + 6
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
      << fmt_number(lo) << "</text>\n";
  out << "<text x=\"" << xpix(hi) << "\" y=\"" << axis_y + 6
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
      << fmt_number(hi) << "</text>\n";

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double y = top + row_h * (static_cast<double>(i) + 0.5);
    out << "<text x=\"" << label_w - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(r.label) << "</text>\n";
    out << "<line x1=\"" << xpix(r.lo) << "\" y1=\"" << y << "\" x2=\"" << xpix(r.hi)
        << "\" y2=\"" << y << "\" stroke=\"black\" stroke-width=\"1.4\"/>\n";
    const double mx = xpix(r.mean);
    out << "<polygon points=\"" << mx - 5 << ',' << y << ' ' << mx << ',' << y - 5 << ' '
        << mx + 5 << ',' << y << ' ' << mx << ',' << y + 5
        << "\" fill=\"black\"/>\n";
  }
  out << "</svg>\n";
  if (!out) throw data_error("write failed for '" + path + "'");
}

void emit_styles_csv(const std::vector<StyleProfile>& profiles, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << "style,omega_S_mean,omega_S_lo,omega_S_hi,omega_F_mean,omega_F_lo,omega_F_hi,"
      << "year,log_mult_mean,log_mult_lo,log_mult_hi\n";
  for (const auto& p : profiles) {
    for (std::size_t t = 0; t < p.traj_mean.size(); ++t) {
      out << p.style << ',' << fmt_number(p.weight_s.mean) << ','
          << fmt_number(p.weight_s.lo) << ',' << fmt_number(p.weight_s.hi) << ','
          << fmt_number(p.weight_f.mean) << ',' << fmt_number(p.weight_f.lo) << ','
          << fmt_number(p.weight_f.hi) << ',' << t << ',' << fmt_number(p.traj_mean[t])
          << ',' << fmt_number(p.traj_lo[t]) << ',' << fmt_number(p.traj_hi[t]) << '\n';
    }
  }
  if (!out) throw data_error("write failed for '" + path + "'");
}

void emit_styles_svg(const std::vector<StyleProfile>& profiles, const std::string& path,
                     const std::string& title) {
  const int left = 70, right = 260, top = 50, bottom = 56;
  const int plot_w = 460, plot_h = 320;
  const int width = left + plot_w + right;
  const int height = top + plot_h + bottom;

  int horizon = 0;
  double vmax = 1.0;
  for (const auto& p : profiles) {
    horizon = std::max(horizon, static_cast<int>(p.traj_mean.size()));
    for (double v : p.traj_hi) vmax = std::max(vmax, std::abs(v));
    for (double v : p.traj_lo) vmax = std::max(vmax, std::abs(v));
  }
  const double sym_max = symlog(vmax) * 1.05;
  auto xpix = [&](double t) {
    return left + plot_w * (horizon > 1 ? t / (horizon - 1.0) : 0.5);
  };
  auto ypix = [&](double v) {
    return top + plot_h / 2.0 - symlog(v) / sym_max * plot_h / 2.0;
  };

  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << xml_escape(title) << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"#888\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"#888\"/>\n";
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << "years since publication</text>\n";
  out << "<text transform=\"rotate(-90 18 " << top + plot_h / 2 << ")\" x=\"18\" y=\""
      << top + plot_h / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\">log rate multiplier (symlog)</text>\n";

  if (profiles.empty()) {
    out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << top + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "fill=\"#999\">no data</text>\n";
    out << "</svg>\n";
    return;
  }

  // Zero line plus the extreme trajectory value as the y-scale anchor.
  out << "<line x1=\"" << left << "\" y1=\"" << ypix(0.0) << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << ypix(0.0) << "\" stroke=\"#348abd\" stroke-dasharray=\"5,4\"/>\n";
  out << "<text x=\"" << left - 6 << "\" y=\"" << ypix(vmax) + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << fmt_number(vmax) << "</text>\n";

  for (int t = 0; t < horizon; ++t) {
    out << "<text x=\"" << xpix(t) << "\" y=\"" << top + plot_h + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << t
        << "</text>\n";
  }

  int color_idx = 0;
  for (const auto& p : profiles) {
    const char* color = kPalette[color_idx % (sizeof(kPalette) / sizeof(kPalette[0]))];
    ++color_idx;
    auto polyline = [&](const std::vector<double>& ys, const char* dash) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
      if (dash[0] != '\0') out << " stroke-dasharray=\"" << dash << "\"";
      out << " points=\"";
      for (std::size_t t = 0; t < ys.size(); ++t)
        out << xpix(static_cast<double>(t)) << ',' << ypix(ys[t]) << ' ';
      out << "\"/>\n";
    };
    polyline(p.traj_mean, "");
    polyline(p.traj_lo, "2,3");
    polyline(p.traj_hi, "2,3");
    const double ly = top + 14.0 * color_idx;
    out << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly - 4 << "\" x2=\""
        << left + plot_w + 30 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + plot_w + 36 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"10\">style " << p.style << " (S "
        << fmt_number(p.weight_s.mean) << ", F " << fmt_number(p.weight_f.mean)
        << ")</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw data_error("write failed for '" + path + "'");
}

}  // namespace citerate::report
