#pragma once
#include <string>
#include <vector>

#include "cl/evaluation.hpp"

namespace cl {

struct ReportPaths {
  std::string comparison_csv;
  std::string plot_csv;
  std::vector<std::string> matrix_csvs;
};

// Aggregates one or more run directories (each holding record.json and
// seed_*.json) into comparison, plot-data, and per-run transfer-matrix
// CSVs.  Normalized runtime divides each run's mean wall time by the
// reference method's; the reference defaults to "base" when present.
// Mixing metric kinds in one report is an error.
ReportPaths report(const std::vector<std::string>& run_dirs,
                   const std::string& out_dir,
                   const std::string& reference_method = "");

}  // namespace cl
