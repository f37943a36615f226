#include <charconv>
#include <sstream>

#include "cobra/metrics.h"

namespace cobra {

std::string FormatDouble(double v) {
  if (v == 0.0) return "0";  // folds -0 into 0
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string MetricSeriesToCsv(const MetricSeries& s) {
  std::ostringstream out;
  out << "turn_index,bat,pat,cum_bat,cum_pat,nrbat,net_move_benefit,nra\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << s.turn_index[i] << ',' << FormatDouble(s.bat[i]) << ','
        << FormatDouble(s.pat[i]) << ',' << FormatDouble(s.cum_bat[i]) << ','
        << FormatDouble(s.cum_pat[i]) << ',' << FormatDouble(s.nrbat[i]) << ','
        << FormatDouble(s.net_move_benefit[i]) << ',';
    if (s.nra) out << FormatDouble((*s.nra)[i]);
    out << '\n';
  }
  return out.str();
}

nlohmann::json MetricSeriesToJson(const MetricSeries& s,
                                  const WeightConfig& cfg) {
  nlohmann::json turns = nlohmann::json::array();
  for (std::size_t i = 0; i < s.size(); ++i) {
    nlohmann::json t = {{"turn_index", s.turn_index[i]},
                        {"bat", s.bat[i]},
                        {"pat", s.pat[i]},
                        {"cum_bat", s.cum_bat[i]},
                        {"cum_pat", s.cum_pat[i]},
                        {"nrbat", s.nrbat[i]},
                        {"net_move_benefit", s.net_move_benefit[i]}};
    t["nra"] = s.nra ? nlohmann::json((*s.nra)[i]) : nlohmann::json();
    turns.push_back(std::move(t));
  }
  return {{"dialogue_id", s.dialogue_id},
          {"annotator_id", s.annotator_id},
          {"provisional", s.provisional},
          {"weights", cfg.ToJson()},
          {"weights_hash", cfg.HashHex()},
          {"turns", std::move(turns)}};
}

}  // namespace cobra
