#ifndef COBRA_REPORT_H_
#define COBRA_REPORT_H_

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cobra/agreement.h"
#include "cobra/effect_size.h"
#include "cobra/regression.h"

namespace cobra {

struct GridCell {
  std::optional<double> value;
  bool significant = false;
};

// Row-labelled table of numbers rendered as aligned text with '*' marking
// significance, or as JSON.
struct ReportGrid {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::pair<std::string, std::vector<GridCell>>> rows;

  std::string Render() const;
  nlohmann::json ToJson() const;
};

// The agreement battery: BaT, PaT, NRBaT (Spearman), Commit (Cohen),
// Rel, Man, Qual (Randolph), Const (true positive rate). Stars mark
// Spearman p < alpha.
ReportGrid AgreementGrid(
    const std::string& title,
    const std::vector<std::pair<std::string, AgreementReport>>& rows,
    double alpha = 0.05);

nlohmann::json RegressionToJson(const RegressionFit& fit);
std::string RenderRegression(const RegressionFit& fit, const std::string& title);

std::string RenderEffectSizes(std::span<const EffectSizeSummary> rows,
                              const std::string& title);

// Fixed-point formatting used by every text table.
std::string FormatFixed(double v, int digits);

}  // namespace cobra

#endif  // COBRA_REPORT_H_
