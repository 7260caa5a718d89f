#include "citerate/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "citerate/errors.hpp"

namespace citerate::data {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

struct ErrorCollector {
  std::vector<std::string> errors;
  void add(int line, const std::string& msg) {
    errors.push_back("line " + std::to_string(line) + ": " + msg);
  }
  void raise_if_any(const std::string& path) const {
    if (errors.empty()) return;
    std::ostringstream os;
    os << path << ": " << errors.size() << " error(s)";
    for (const auto& e : errors) os << "\n  " << e;
    throw data_error(os.str());
  }
};

bool parse_int(const std::string& s, long& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stol(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size();
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size();
}

// Count columns c0..c{T-1}; unobserved (empty) cells must form a suffix.
bool parse_counts(const std::vector<std::string>& cells, std::size_t first, int horizon,
                  std::vector<std::optional<long>>& out, int line, ErrorCollector& errs) {
  out.assign(horizon, std::nullopt);
  bool seen_empty = false;
  bool ok = true;
  for (int t = 0; t < horizon; ++t) {
    const std::string& cell = cells[first + t];
    if (cell.empty()) {
      seen_empty = true;
      continue;
    }
    if (seen_empty) {
      errs.add(line, "non-prefix observation mask: c" + std::to_string(t) +
                         " filled after an empty year");
      ok = false;
      break;
    }
    long v = 0;
    if (!parse_int(cell, v) || v < 0) {
      errs.add(line, "c" + std::to_string(t) + " must be a non-negative integer, got '" +
                         cell + "'");
      ok = false;
      continue;
    }
    out[t] = v;
  }
  return ok;
}

int horizon_from_header(const std::vector<std::string>& header, std::size_t first_count,
                        const std::string& path) {
  const int horizon = static_cast<int>(header.size() - first_count);
  if (horizon < 1) throw data_error(path + ": no count columns in header");
  for (int t = 0; t < horizon; ++t) {
    if (header[first_count + t] != "c" + std::to_string(t))
      throw data_error(path + ": expected count column c" + std::to_string(t) + ", got '" +
                       header[first_count + t] + "'");
  }
  return horizon;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.empty()) throw data_error(path + ": empty file");
  return lines;
}

}  // namespace

ScienceTable load_science_csv(const std::string& path) {
  const auto lines = read_lines(path);
  const auto header = split_csv_line(lines[0]);
  const std::vector<std::string> expected = {"paper_id", "field", "reproduced", "pub_year",
                                             "source"};
  if (header.size() < expected.size() + 1)
    throw data_error(path + ": science header too short");
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (header[i] != expected[i])
      throw data_error(path + ": expected header column '" + expected[i] + "', got '" +
                       header[i] + "'");

  ScienceTable table;
  table.horizon = horizon_from_header(header, expected.size(), path);
  ErrorCollector errs;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const int line = static_cast<int>(li) + 1;
    const auto cells = split_csv_line(lines[li]);
    if (cells.size() != header.size()) {
      errs.add(line, "expected " + std::to_string(header.size()) + " cells, got " +
                         std::to_string(cells.size()));
      continue;
    }
    ScienceRow row;
    row.line = line;
    row.paper_id = cells[0];
    row.field = cells[1];
    if (row.paper_id.empty()) errs.add(line, "empty paper_id");
    if (std::find(kScienceFields.begin(), kScienceFields.end(), row.field) ==
        kScienceFields.end())
      errs.add(line, "unknown field label '" + row.field + "'");
    long v = 0;
    if (!parse_int(cells[2], v) || (v != 0 && v != 1))
      errs.add(line, "reproduced must be 0 or 1, got '" + cells[2] + "'");
    else
      row.reproduced = static_cast<int>(v);
    if (!parse_int(cells[3], v) || v < 1800 || v > 2200)
      errs.add(line, "implausible pub_year '" + cells[3] + "'");
    else
      row.pub_year = static_cast<int>(v);
    row.source = cells[4];
    if (row.source != "GS" && row.source != "SC")
      errs.add(line, "source must be GS or SC, got '" + row.source + "'");
    parse_counts(cells, 5, table.horizon, row.counts, line, errs);
    table.rows.push_back(std::move(row));
  }
  errs.raise_if_any(path);
  if (table.rows.empty()) throw data_error(path + ": no data rows");
  return table;
}

MlTable load_ml_csv(const std::string& path) {
  const auto lines = read_lines(path);
  const auto header = split_csv_line(lines[0]);
  std::vector<std::string> expected = {"paper_id"};
  expected.insert(expected.end(), kMlFeatures.begin(), kMlFeatures.end());
  expected.push_back("pub_year");
  if (header.size() < expected.size() + 1) throw data_error(path + ": ml header too short");
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (header[i] != expected[i])
      throw data_error(path + ": expected header column '" + expected[i] + "', got '" +
                       header[i] + "'");

  MlTable table;
  table.horizon = horizon_from_header(header, expected.size(), path);
  ErrorCollector errs;
  const std::size_t n_feat = kMlFeatures.size();
  const std::vector<int> binary = {0, 1, 2, 3, 4};
  const std::vector<int> venues = {13, 14, 15, 16, 17};
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const int line = static_cast<int>(li) + 1;
    const auto cells = split_csv_line(lines[li]);
    if (cells.size() != header.size()) {
      errs.add(line, "expected " + std::to_string(header.size()) + " cells, got " +
                         std::to_string(cells.size()));
      continue;
    }
    MlRow row;
    row.line = line;
    row.paper_id = cells[0];
    if (row.paper_id.empty()) errs.add(line, "empty paper_id");
    row.covariates.resize(n_feat, 0.0);
    for (std::size_t j = 0; j < n_feat; ++j) {
      double v = 0.0;
      if (!parse_double(cells[1 + j], v)) {
        errs.add(line, kMlFeatures[j] + " must be numeric, got '" + cells[1 + j] + "'");
        continue;
      }
      row.covariates[j] = v;
    }
    for (int j : binary) {
      const double v = row.covariates[j];
      if (v != 0.0 && v != 1.0)
        errs.add(line, kMlFeatures[j] + " must be 0 or 1");
    }
    for (std::size_t j = 5; j < 13; ++j) {
      if (row.covariates[j] < 0.0) errs.add(line, kMlFeatures[j] + " must be non-negative");
    }
    int venue_sum = 0;
    std::vector<std::string> set_venues;
    for (int j : venues) {
      const double v = row.covariates[j];
      if (v != 0.0 && v != 1.0) {
        errs.add(line, kMlFeatures[j] + " must be 0 or 1");
      } else if (v == 1.0) {
        ++venue_sum;
        set_venues.push_back(kMlFeatures[j]);
      }
    }
    if (venue_sum > 1) {
      std::string joined;
      for (const auto& s : set_venues) joined += (joined.empty() ? "" : ", ") + s;
      errs.add(line, "venue indicators must be one-hot or all zero; set: " + joined);
    }
    long v = 0;
    if (!parse_int(cells[1 + n_feat], v) || v < 1800 || v > 2200)
      errs.add(line, "implausible pub_year '" + cells[1 + n_feat] + "'");
    else
      row.pub_year = static_cast<int>(v);
    parse_counts(cells, 2 + n_feat, table.horizon, row.counts, line, errs);
    table.rows.push_back(std::move(row));
  }
  errs.raise_if_any(path);
  if (table.rows.empty()) throw data_error(path + ": no data rows");
  return table;
}

void save_science_csv(const ScienceTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << "paper_id,field,reproduced,pub_year,source";
  for (int t = 0; t < table.horizon; ++t) out << ",c" << t;
  out << '\n';
  for (const auto& r : table.rows) {
    out << r.paper_id << ',' << r.field << ',' << r.reproduced << ',' << r.pub_year << ','
        << r.source;
    for (const auto& c : r.counts) {
      out << ',';
      if (c) out << *c;
    }
    out << '\n';
  }
}

void save_ml_csv(const MlTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << "paper_id";
  for (const auto& f : kMlFeatures) out << ',' << f;
  out << ",pub_year";
  for (int t = 0; t < table.horizon; ++t) out << ",c" << t;
  out << '\n';
  for (const auto& r : table.rows) {
    out << r.paper_id;
    for (double v : r.covariates) {
      out << ',';
      if (v == std::floor(v) && std::abs(v) < 1e15)
        out << static_cast<long long>(v);
      else
        out << v;
    }
    out << ',' << r.pub_year;
    for (const auto& c : r.counts) {
      out << ',';
      if (c) out << *c;
    }
    out << '\n';
  }
}

Dataset science_dataset(const ScienceTable& table, const std::string& source,
                        const std::vector<std::string>& exclude_fields) {
  Dataset ds;
  ds.variant = Variant::Science;
  auto excluded = [&](const std::string& f) {
    return std::find(exclude_fields.begin(), exclude_fields.end(), f) !=
           exclude_fields.end();
  };
  for (const auto& r : table.rows) {
    if (r.source != source || excluded(r.field)) continue;
    PaperRecord rec;
    rec.id = r.paper_id;
    rec.field = r.field;
    rec.repro = r.reproduced ? Repro::Success : Repro::Failure;
    rec.pub_year = r.pub_year;
    rec.counts.assign(table.horizon, 0);
    rec.observed.assign(table.horizon, 0);
    for (int t = 0; t < table.horizon; ++t) {
      if (r.counts[t]) {
        rec.counts[t] = *r.counts[t];
        rec.observed[t] = 1;
      }
    }
    ds.papers.push_back(std::move(rec));
  }
  if (ds.papers.empty())
    throw data_error("science_dataset: no rows with source '" + source + "'");
  for (const auto& f : kScienceFields) {
    if (excluded(f)) continue;
    for (const auto& rec : ds.papers)
      if (rec.field == f) {
        ds.group_names.push_back(f);
        break;
      }
  }
  ds.finalize();
  return ds;
}

Dataset ml_dataset(const MlTable& table, bool standardize) {
  Dataset ds;
  ds.variant = Variant::Ml;
  ds.group_names = kMlFeatures;
  const std::size_t n_feat = kMlFeatures.size();

  std::vector<double> mean(n_feat, 0.0), sd(n_feat, 1.0);
  if (standardize) {
    const double n = static_cast<double>(table.rows.size());
    for (int j : kMlContinuous) {
      double m = 0.0;
      for (const auto& r : table.rows) m += r.covariates[j];
      m /= n;
      double s2 = 0.0;
      for (const auto& r : table.rows)
        s2 += (r.covariates[j] - m) * (r.covariates[j] - m);
      const double s = std::sqrt(s2 / std::max(n - 1.0, 1.0));
      mean[j] = m;
      sd[j] = (s > 0.0) ? s : 1.0;
    }
  }

  for (const auto& r : table.rows) {
    PaperRecord rec;
    rec.id = r.paper_id;
    rec.repro = (r.covariates[0] == 1.0) ? Repro::Success : Repro::Failure;
    rec.pub_year = r.pub_year;
    rec.features = r.covariates;
    if (standardize)
      for (int j : kMlContinuous) rec.features[j] = (rec.features[j] - mean[j]) / sd[j];
    rec.counts.assign(table.horizon, 0);
    rec.observed.assign(table.horizon, 0);
    for (int t = 0; t < table.horizon; ++t) {
      if (r.counts[t]) {
        rec.counts[t] = *r.counts[t];
        rec.observed[t] = 1;
      }
    }
    ds.papers.push_back(std::move(rec));
  }
  ds.finalize();
  return ds;
}

Dataset load_dataset(const std::string& path, Variant variant, const std::string& source,
                     const std::vector<std::string>& exclude_fields) {
  if (variant == Variant::Science)
    return science_dataset(load_science_csv(path), source, exclude_fields);
  return ml_dataset(load_ml_csv(path));
}

std::vector<PaperTotal> science_totals(const ScienceTable& table, const std::string& source,
                                       const std::vector<std::string>& exclude_fields) {
  std::vector<PaperTotal> out;
  for (const auto& r : table.rows) {
    if (r.source != source) continue;
    if (std::find(exclude_fields.begin(), exclude_fields.end(), r.field) !=
        exclude_fields.end())
      continue;
    PaperTotal pt;
    pt.paper_id = r.paper_id;
    pt.field = r.field;
    pt.reproduced = r.reproduced != 0;
    for (const auto& c : r.counts)
      if (c) pt.total += static_cast<double>(*c);
    out.push_back(std::move(pt));
  }
  return out;
}

std::vector<PaperTotal> ml_totals(const MlTable& table) {
  std::vector<PaperTotal> out;
  for (const auto& r : table.rows) {
    PaperTotal pt;
    pt.paper_id = r.paper_id;
    pt.field = "ML";
    pt.reproduced = r.covariates[0] == 1.0;
    for (const auto& c : r.counts)
      if (c) pt.total += static_cast<double>(*c);
    out.push_back(std::move(pt));
  }
  return out;
}

PairedYears paired_years(const ScienceTable& table) {
  std::map<std::string, const ScienceRow*> gs, sc;
  for (const auto& r : table.rows) {
    if (r.source == "GS")
      gs[r.paper_id] = &r;
    else
      sc[r.paper_id] = &r;
  }
  PairedYears out;
  for (const auto& [id, row_gs] : gs) {
    auto it = sc.find(id);
    if (it != sc.end()) out.paper_ids.push_back(id);
  }
  const int n = static_cast<int>(out.paper_ids.size());
  out.gs.resize(n, table.horizon);
  out.sc.resize(n, table.horizon);
  out.observed.resize(n, table.horizon);
  for (int i = 0; i < n; ++i) {
    const ScienceRow* rg = gs[out.paper_ids[i]];
    const ScienceRow* rs = sc[out.paper_ids[i]];
    for (int t = 0; t < table.horizon; ++t) {
      const bool obs = rg->counts[t].has_value() && rs->counts[t].has_value();
      out.observed(i, t) = obs;
      out.gs(i, t) = obs ? static_cast<double>(*rg->counts[t]) : 0.0;
      out.sc(i, t) = obs ? static_cast<double>(*rs->counts[t]) : 0.0;
    }
  }
  return out;
}

}  // namespace citerate::data
