#include "cobra/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace cobra {
namespace {

std::string PValue(double p) {
  if (p < 0.001) return "<.001";
  return FormatFixed(p, 3);
}

std::string Pad(const std::string& s, std::size_t width, bool left) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

std::string RenderTable(const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& body) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : body) {
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      out << Pad(row[c], width[c], c == 0);
    }
    out << '\n';
  };
  emit(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : body) emit(row);
  return out.str();
}

}  // namespace

std::string FormatFixed(double v, int digits) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  std::string s = buf;
  // "-0.00" reads as a sign error in tables.
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string ReportGrid::Render() const {
  std::vector<std::string> header{"Model"};
  header.insert(header.end(), columns.begin(), columns.end());
  std::vector<std::vector<std::string>> body;
  for (const auto& [label, cells] : rows) {
    std::vector<std::string> line{label};
    for (const GridCell& c : cells) {
      std::string text = c.value ? FormatFixed(*c.value, 2) : "-";
      text += c.significant ? "*" : " ";
      line.push_back(text);
    }
    body.push_back(std::move(line));
  }
  std::string out;
  if (!title.empty()) out += title + "\n";
  return out + RenderTable(header, body);
}

nlohmann::json ReportGrid::ToJson() const {
  nlohmann::json jrows = nlohmann::json::array();
  for (const auto& [label, cells] : rows) {
    nlohmann::json values = nlohmann::json::object();
    for (std::size_t i = 0; i < cells.size() && i < columns.size(); ++i) {
      values[columns[i]] = {
          {"value", cells[i].value ? nlohmann::json(*cells[i].value) : nlohmann::json()},
          {"significant", cells[i].significant}};
    }
    jrows.push_back({{"label", label}, {"values", std::move(values)}});
  }
  return {{"title", title}, {"columns", columns}, {"rows", std::move(jrows)}};
}

ReportGrid AgreementGrid(
    const std::string& title,
    const std::vector<std::pair<std::string, AgreementReport>>& rows,
    double alpha) {
  ReportGrid grid;
  grid.title = title;
  grid.columns = {"BaT", "PaT", "NRBaT", "Commit", "Rel", "Man", "Qual", "Const"};
  for (const auto& [label, r] : rows) {
    std::vector<GridCell> cells;
    for (const char* m : {"bat", "pat", "nrbat"}) {
      GridCell c;
      if (auto it = r.spearman.find(m); it != r.spearman.end() && it->second) {
        c.value = it->second->rho;
        c.significant = it->second->p < alpha;
      }
      cells.push_back(c);
    }
    cells.push_back({r.cohen_kappa_commitment, false});
    for (const char* m : {"rel", "man", "qual"}) {
      auto it = r.randolph_kappa.find(m);
      cells.push_back({it != r.randolph_kappa.end() ? it->second : std::nullopt, false});
    }
    cells.push_back({r.consistency_tpr, false});
    grid.rows.emplace_back(label, std::move(cells));
  }
  return grid;
}

namespace {

nlohmann::json CoefficientJson(const Coefficient& c) {
  return {{"name", c.name},
          {"beta", c.beta},
          {"se", c.se},
          {"odds_ratio", c.odds_ratio},
          {"ci95", {c.ci95.low, c.ci95.high}},
          {"z", c.z},
          {"p_value", c.p_value}};
}

}  // namespace

nlohmann::json RegressionToJson(const RegressionFit& fit) {
  nlohmann::json coefs = nlohmann::json::array();
  for (const auto& c : fit.coefficients) coefs.push_back(CoefficientJson(c));
  return {{"intercept", CoefficientJson(fit.intercept)},
          {"coefficients", std::move(coefs)},
          {"log_likelihood", fit.log_likelihood},
          {"aic", fit.aic},
          {"aic_null", fit.aic_null},
          {"tjur_r2", fit.tjur_r2},
          {"accuracy", fit.accuracy},
          {"auc", fit.auc},
          {"auc_ci95", {fit.auc_ci95.low, fit.auc_ci95.high}},
          {"n", fit.n},
          {"iterations", fit.iterations},
          {"converged", fit.converged}};
}

std::string RenderRegression(const RegressionFit& fit, const std::string& title) {
  std::vector<std::vector<std::string>> body;
  auto row = [&](const Coefficient& c) {
    body.push_back({c.name, FormatFixed(c.beta, 3), FormatFixed(c.se, 3),
                    FormatFixed(c.odds_ratio, 3),
                    "[" + FormatFixed(c.ci95.low, 2) + ", " +
                        FormatFixed(c.ci95.high, 2) + "]",
                    PValue(c.p_value)});
  };
  row(fit.intercept);
  for (const auto& c : fit.coefficients) row(c);
  std::ostringstream out;
  if (!title.empty()) out << title << '\n';
  out << RenderTable({"Term", "beta", "SE", "OR", "95% CI", "p"}, body);
  out << "n = " << fit.n << ", AIC = " << FormatFixed(fit.aic, 1)
      << " (intercept-only " << FormatFixed(fit.aic_null, 1) << ")"
      << ", Tjur R2 = " << FormatFixed(fit.tjur_r2, 3) << '\n';
  out << "accuracy = " << FormatFixed(100.0 * fit.accuracy, 1)
      << "%, AUC = " << FormatFixed(fit.auc, 3) << " (95% CI ["
      << FormatFixed(fit.auc_ci95.low, 2) << ", "
      << FormatFixed(fit.auc_ci95.high, 2) << "])\n";
  return out.str();
}

std::string RenderEffectSizes(std::span<const EffectSizeSummary> rows,
                              const std::string& title) {
  std::vector<std::vector<std::string>> body;
  for (const auto& s : rows) {
    body.push_back({s.metric, std::to_string(s.wins), std::to_string(s.loses),
                    std::to_string(s.ties),
                    FormatFixed(s.delta_mu, 2) + (s.significant ? "*" : " "),
                    FormatFixed(s.median, 2), FormatFixed(s.sd, 2),
                    FormatFixed(s.ci95.low, 2), FormatFixed(s.ci95.high, 2),
                    PValue(s.p_corrected)});
  }
  std::string out;
  if (!title.empty()) out += title + "\n";
  return out + RenderTable({"Metric", "Wins", "Loses", "Ties", "Mean", "Median",
                            "SD", "CI Low", "CI High", "p(Bonf)"},
                           body);
}

}  // namespace cobra
