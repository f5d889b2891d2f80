#include "qsk/latmodel/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qsk::latmodel {

std::string_view to_string(Scenario s) { return s == Scenario::StatusQuo ? "status_quo" : "proposal"; }

double model_latency(const RttTriple& t, Scenario scenario, bool retry) {
  const double path = scenario == Scenario::StatusQuo ? t.rtt_direct_ms : t.rtt_server_ms;
  return t.rtt_dns_ms + (retry ? 2 * path : path);
}

Savings savings(const RttTriple& t) {
  Savings s;
  s.no_retry_ms = t.rtt_direct_ms - t.rtt_server_ms;
  s.retry_ms = 2 * (t.rtt_direct_ms - t.rtt_server_ms);
  const double base = model_latency(t, Scenario::StatusQuo, false);
  const double base_retry = model_latency(t, Scenario::StatusQuo, true);
  s.no_retry_fraction = base != 0 ? s.no_retry_ms / base : 0;
  s.retry_fraction = base_retry != 0 ? s.retry_ms / base_retry : 0;
  return s;
}

ModelResult evaluate(const RttTriple& t, Scenario scenario, bool retry) {
  const double base = model_latency(t, Scenario::StatusQuo, retry);
  const double saved = base - model_latency(t, Scenario::Proposal, retry);
  return {scenario, retry, model_latency(t, scenario, retry), saved, base != 0 ? saved / base : 0};
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::RttDns: return "rtt_dns";
    case Metric::RttServer: return "rtt_server";
    case Metric::RttDirect: return "rtt_direct";
    case Metric::HandshakeStatusQuo: return "handshake_status_quo";
    case Metric::HandshakeStatusQuoRetry: return "handshake_status_quo_retry";
    case Metric::HandshakeProposal: return "handshake_proposal";
    case Metric::HandshakeProposalRetry: return "handshake_proposal_retry";
  }
  return "?";
}

std::optional<Metric> parse_metric(std::string_view name) {
  for (auto m : kAllMetrics)
    if (to_string(m) == name) return m;
  return std::nullopt;
}

double metric_value(const RttTriple& t, Metric m) {
  switch (m) {
    case Metric::RttDns: return t.rtt_dns_ms;
    case Metric::RttServer: return t.rtt_server_ms;
    case Metric::RttDirect: return t.rtt_direct_ms;
    case Metric::HandshakeStatusQuo: return model_latency(t, Scenario::StatusQuo, false);
    case Metric::HandshakeStatusQuoRetry: return model_latency(t, Scenario::StatusQuo, true);
    case Metric::HandshakeProposal: return model_latency(t, Scenario::Proposal, false);
    case Metric::HandshakeProposalRetry: return model_latency(t, Scenario::Proposal, true);
  }
  return 0;
}

std::vector<CdfPoint> emit_cdf(const std::vector<RttTriple>& data, Metric m) {
  std::vector<double> v;
  v.reserve(data.size());
  for (const auto& t : data) v.push_back(metric_value(t, m));
  std::sort(v.begin(), v.end());
  std::vector<CdfPoint> out;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    out.push_back({v[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

std::vector<CdfPoint> emit_cdf(const std::vector<RttTriple>& data, std::string_view metric) {
  auto m = parse_metric(metric);
  if (!m) throw std::invalid_argument("unknown metric '" + std::string(metric) + "'");
  return emit_cdf(data, *m);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_ms(const std::string& s, std::size_t line) {
  double v = 0;
  std::size_t used = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v) || v < 0)
    throw std::invalid_argument("csv line " + std::to_string(line) + ": bad value '" + s + "'");
  return v;
}

}  // namespace

std::vector<RttTriple> load_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::vector<RttTriple> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cells = split_csv(line);
    if (columns == 0) {
      columns = cells.size();
      if (columns != 4 && columns != 16)
        throw std::invalid_argument("csv header must have 4 or 16 columns, got " + std::to_string(columns));
      continue;
    }
    if (cells.size() != columns)
      throw std::invalid_argument("csv line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                                  " columns");
    RttTriple t;
    t.node_id = cells[0];
    if (columns == 4) {
      t.rtt_dns_ms = parse_ms(cells[1], line_no);
      t.rtt_server_ms = parse_ms(cells[2], line_no);
      t.rtt_direct_ms = parse_ms(cells[3], line_no);
    } else {
      auto mean = [&](std::size_t first) {
        double sum = 0;
        for (std::size_t i = 0; i < 5; ++i) sum += parse_ms(cells[first + i], line_no);
        return sum / 5;
      };
      t.rtt_dns_ms = mean(1);
      t.rtt_server_ms = mean(6);
      t.rtt_direct_ms = mean(11);
    }
    out.push_back(std::move(t));
  }
  if (columns == 0) throw std::invalid_argument("csv is empty");
  return out;
}

std::vector<RttTriple> load_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open " + path);
  return load_csv(f);
}

}  // namespace qsk::latmodel
