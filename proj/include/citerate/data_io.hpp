#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "citerate/types.hpp"

namespace citerate::data {

/// Row of the science CSV: paper_id, field, reproduced, pub_year, source,
/// c0..c{T-1}.  Empty count cells mark unobserved (not yet elapsed) years and
/// must form a suffix of the row.
struct ScienceRow {
  std::string paper_id;
  std::string field;
  int reproduced = 0;
  int pub_year = 0;
  std::string source;  // "GS" or "SC"
  std::vector<std::optional<long>> counts;
  int line = 0;
};

struct ScienceTable {
  int horizon = 10;
  std::vector<ScienceRow> rows;
};

inline const std::vector<std::string> kScienceFields = {"Economics", "Psychology", "Social",
                                                        "Medicine"};

/// Canonical ML covariate order (first is the reproduction indicator, which
/// doubles as the record's outcome label).
inline const std::vector<std::string> kMlFeatures = {
    "reproducible",        "code_available",      "theory",
    "empirical",           "balanced",            "num_references",
    "num_equations",       "num_proofs",          "total_tables_figures",
    "num_tables",          "num_graphs_plots",    "num_other_figures",
    "conceptualization_figures", "venue_book",    "venue_conference",
    "venue_journal",       "venue_tech_report",   "venue_workshop"};

/// Indices of kMlFeatures that are counts (z-scored at dataset build time);
/// the rest are 0/1 indicators and stay untouched.
inline const std::vector<int> kMlContinuous = {5, 6, 7, 8, 9, 10, 11, 12};

struct MlRow {
  std::string paper_id;
  std::vector<double> covariates;  // kMlFeatures order, raw scale
  int pub_year = 0;
  std::vector<std::optional<long>> counts;
  int line = 0;
};

struct MlTable {
  int horizon = 10;
  std::vector<MlRow> rows;
};

/// Load + validate; every malformed row is reported with its line number and
/// any error aborts the load (data_error).
ScienceTable load_science_csv(const std::string& path);
MlTable load_ml_csv(const std::string& path);

void save_science_csv(const ScienceTable& table, const std::string& path);
void save_ml_csv(const MlTable& table, const std::string& path);

/// Model-ready dataset for one citation source, optionally excluding fields.
/// Group names follow kScienceFields order, restricted to fields present.
Dataset science_dataset(const ScienceTable& table, const std::string& source,
                        const std::vector<std::string>& exclude_fields = {});

/// Model-ready ML dataset; count covariates are z-scored, indicators kept 0/1.
Dataset ml_dataset(const MlTable& table, bool standardize = true);

/// Dispatcher used by the CLI: science variant filters on `source`.
Dataset load_dataset(const std::string& path, Variant variant,
                     const std::string& source = "SC",
                     const std::vector<std::string>& exclude_fields = {});

/// Total observed citations per paper of one source (science table).
struct PaperTotal {
  std::string paper_id;
  std::string field;
  bool reproduced = false;
  double total = 0.0;
};
std::vector<PaperTotal> science_totals(const ScienceTable& table, const std::string& source,
                                       const std::vector<std::string>& exclude_fields = {});
std::vector<PaperTotal> ml_totals(const MlTable& table);

/// Per-year matrices for papers carrying both GS and SC rows, aligned by
/// paper_id, plus the joint observed mask.  Empty result when either source
/// is absent.
struct PairedYears {
  std::vector<std::string> paper_ids;
  Eigen::MatrixXd gs;
  Eigen::MatrixXd sc;
  Eigen::Matrix<bool, -1, -1> observed;
};
PairedYears paired_years(const ScienceTable& table);

}  // namespace citerate::data
