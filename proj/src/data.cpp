#include "tvreg/data.hpp"

#include <cmath>

#include "tvreg/common.hpp"

namespace tvreg {

void RegressionData::validate() const {
    const int nn = n();
    const int pp = p();
    if (pp < 1) throw config_error("RegressionData: need at least one predictor");
    if (X.rows() != nn) throw config_error("RegressionData: y and X row counts differ");
    if (nn < 2 * pp + 2) throw config_error("RegressionData: n must be >= 2p + 2");
    if (!y.allFinite() || !X.allFinite())
        throw config_error("RegressionData: non-finite entries");
    if (!column_names.empty() && static_cast<int>(column_names.size()) != pp)
        throw config_error("RegressionData: column_names size mismatch");
}

} // namespace tvreg
