#ifndef TVREG_REPORT_HPP
#define TVREG_REPORT_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tvreg/data.hpp"
#include "tvreg/locfit.hpp"

namespace tvreg {

struct CsvSchema {
    std::string response;                   // column name; empty -> first column
    std::vector<std::string> predictors;    // empty -> all non-response columns
    std::vector<int> lags;                  // response lags appended, rows trimmed
    bool standardize = false;               // zero mean, unit variance, all variables
    bool intercept = false;                 // constant column prepended after scaling
};

// Header row required; numeric cells, '.' decimal separator. Parse errors
// carry row and column positions; a constant column cannot be standardized.
RegressionData ingest_csv(const std::string& path, const CsvSchema& schema);

// Full-precision CSV so a simulate -> write -> ingest round trip is exact.
void write_regression_csv(const RegressionData& data, const std::string& path);

// Common envelope: schema_version, command, timestamp, config echo.
nlohmann::json report_skeleton(const std::string& command, const nlohmann::json& config);

void emit_report(const nlohmann::json& report, const std::string& path);

// Grid and coefficient curves: G rows, 1 + p columns.
void emit_curves_csv(const LocalLinearFit& fit, const std::vector<std::string>& names,
                     const std::string& path);

void emit_table_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& rows,
                    const std::string& path);

} // namespace tvreg

#endif
