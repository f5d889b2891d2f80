#include <iomanip>
#include <iostream>

#include "cli_util.hpp"
#include "qsk/latmodel/model.hpp"

using namespace qsk;

int main(int argc, char** argv) {
  CLI::App app{"handshake latency model over per-node RTT measurements"};
  std::string csv;
  std::string report = "stats";
  std::string out;
  bool serial = false;
  app.add_option("--csv", csv, "node_id,rtt_dns_ms,rtt_server_ms,rtt_direct_ms")->required()->check(CLI::ExistingFile);
  app.add_option("--report", report, "stats or cdf:<metric>");
  app.add_option("--out", out, "stdout by default");
  app.add_flag("--serial", serial, "single-threaded statistics");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto data = latmodel::load_csv_file(csv);
    tools::Output sink(out);
    auto& os = sink.stream();
    if (report == "stats") {
      const auto r = serial ? latmodel::dataset_stats_serial(data) : latmodel::dataset_stats(data);
      os << r.to_json() << '\n';
    } else if (report.rfind("cdf:", 0) == 0) {
      const auto points = latmodel::emit_cdf(data, std::string_view(report).substr(4));
      os << "value_ms,fraction\n" << std::setprecision(10);
      for (const auto& p : points) os << p.value << ',' << p.fraction << '\n';
    } else {
      throw std::invalid_argument("unknown report '" + report + "'");
    }
  } catch (const std::exception& e) {
    std::cerr << "qsk-model: " << e.what() << '\n';
    return 1;
  }
}
