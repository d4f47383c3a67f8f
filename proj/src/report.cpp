#include "tvreg/report.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tvreg/common.hpp"

namespace tvreg {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // Trim surrounding whitespace and CR.
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, int row, int col) {
    if (cell.empty())
        throw config_error("empty cell at row " + std::to_string(row) + ", column " +
                           std::to_string(col));
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (errno != 0 || end != cell.c_str() + cell.size() || !std::isfinite(v))
        throw config_error("non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                           ", column " + std::to_string(col));
    return v;
}

std::string format_full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

RegressionData ingest_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open input file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw config_error("input file is empty: " + path);
    const std::vector<std::string> header = split_csv_line(line);
    const int ncol = static_cast<int>(header.size());
    if (ncol < 2) throw config_error("need at least a response and one predictor column");

    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != ncol)
            throw config_error("row " + std::to_string(lineno) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(ncol));
        std::vector<double> vals(ncol);
        for (int c = 0; c < ncol; ++c) vals[c] = parse_cell(cells[c], lineno, c + 1);
        rows.push_back(std::move(vals));
    }
    const int nraw = static_cast<int>(rows.size());
    if (nraw < 2) throw config_error("input file has no data rows: " + path);

    const auto column_of = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw config_error("column not found: " + name);
        return static_cast<int>(it - header.begin());
    };

    const int ycol = schema.response.empty() ? 0 : column_of(schema.response);
    std::vector<int> xcols;
    if (schema.predictors.empty()) {
        for (int c = 0; c < ncol; ++c)
            if (c != ycol) xcols.push_back(c);
    } else {
        for (const auto& name : schema.predictors) xcols.push_back(column_of(name));
    }

    Eigen::MatrixXd raw(nraw, ncol);
    for (int i = 0; i < nraw; ++i)
        for (int c = 0; c < ncol; ++c) raw(i, c) = rows[i][c];

    if (schema.standardize) {
        std::vector<int> used = xcols;
        used.push_back(ycol);
        for (int c : used) {
            const double mean = raw.col(c).mean();
            const double var = (raw.col(c).array() - mean).square().sum() / (nraw - 1);
            if (!(var > 0.0))
                throw config_error("cannot standardize constant column: " + header[c]);
            raw.col(c) = (raw.col(c).array() - mean) / std::sqrt(var);
        }
    }

    int max_lag = 0;
    for (int l : schema.lags) {
        if (l < 1) throw config_error("lags must be positive");
        max_lag = std::max(max_lag, l);
    }
    if (max_lag >= nraw) throw config_error("lag exceeds the number of rows");
    const int n = nraw - max_lag;

    RegressionData data;
    data.y.resize(n);
    const int p = (schema.intercept ? 1 : 0) + static_cast<int>(xcols.size()) +
                  static_cast<int>(schema.lags.size());
    data.X.resize(n, p);
    int col = 0;
    if (schema.intercept) {
        data.X.col(col).setOnes();
        data.column_names.push_back("intercept");
        ++col;
    }
    for (int c : xcols) {
        data.X.col(col) = raw.col(c).tail(n);
        data.column_names.push_back(header[c]);
        ++col;
    }
    const std::string yname = header[ycol];
    for (int l : schema.lags) {
        data.X.col(col) = raw.col(ycol).segment(max_lag - l, n);
        data.column_names.push_back(yname + "_lag" + std::to_string(l));
        ++col;
    }
    data.y = raw.col(ycol).tail(n);
    data.validate();
    return data;
}

void write_regression_csv(const RegressionData& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open output file: " + path);
    out << "y";
    for (int j = 0; j < data.p(); ++j) {
        out << ',';
        out << (j < static_cast<int>(data.column_names.size()) ? data.column_names[j]
                                                               : "x" + std::to_string(j + 1));
    }
    out << '\n';
    for (int i = 0; i < data.n(); ++i) {
        out << format_full(data.y[i]);
        for (int j = 0; j < data.p(); ++j) out << ',' << format_full(data.X(i, j));
        out << '\n';
    }
    if (!out) throw config_error("failed writing output file: " + path);
}

nlohmann::json report_skeleton(const std::string& command, const nlohmann::json& config) {
    nlohmann::json report;
    report["schema_version"] = "1.0";
    report["command"] = command;
    const auto now = std::chrono::system_clock::now();
    report["timestamp"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
    report["config"] = config;
    return report;
}

void emit_report(const nlohmann::json& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open output file: " + path);
    out << report.dump(2) << '\n';
    if (!out) throw config_error("failed writing output file: " + path);
}

void emit_curves_csv(const LocalLinearFit& fit, const std::vector<std::string>& names,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open output file: " + path);
    const int p = static_cast<int>(fit.beta.cols());
    out << "t";
    for (int j = 0; j < p; ++j) {
        out << ',';
        out << (j < static_cast<int>(names.size()) ? names[j] : "beta" + std::to_string(j + 1));
    }
    out << '\n';
    for (int g = 0; g < fit.grid.size(); ++g) {
        out << format_full(fit.grid.points[g]);
        for (int j = 0; j < p; ++j) out << ',' << format_full(fit.beta(g, j));
        out << '\n';
    }
    if (!out) throw config_error("failed writing output file: " + path);
}

void emit_table_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& rows,
                    const std::string& path) {
    if (static_cast<int>(header.size()) != rows.cols())
        throw config_error("table header does not match column count");
    std::ofstream out(path);
    if (!out) throw config_error("cannot open output file: " + path);
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    for (int i = 0; i < rows.rows(); ++i) {
        for (int j = 0; j < rows.cols(); ++j) out << (j ? "," : "") << format_full(rows(i, j));
        out << '\n';
    }
    if (!out) throw config_error("failed writing output file: " + path);
}

} // namespace tvreg
