#ifndef TVREG_DATA_HPP
#define TVREG_DATA_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace tvreg {

// Observed sample for y_i = x_i' beta(i/n) + e_i; observation i lives at
// rescaled time i/n, i = 1..n.
struct RegressionData {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    std::vector<std::string> column_names;

    int n() const { return static_cast<int>(y.size()); }
    int p() const { return static_cast<int>(X.cols()); }

    // Enforces n >= 2p + 2 and finiteness of all entries.
    void validate() const;
};

} // namespace tvreg

#endif
