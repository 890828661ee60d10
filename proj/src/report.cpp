#include "semidfl/report.hpp"

#include <array>
#include <charconv>

namespace semidfl {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf.data(), end);
}

namespace {

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

void write_metrics_csv(std::ostream& out, std::span<const RoundMetrics> rounds) {
  out << kMetricsCsvHeader << '\n';
  for (const auto& r : rounds) {
    const auto dis = format_double(r.disagreement);
    for (const auto& c : r.clients) {
      out << r.round << ',' << c.client << ',' << format_double(c.acc) << ',' << c.pl_count << ','
          << optional_field(c.pl_precision) << ',' << optional_field(c.a_i) << ',' << dis << '\n';
    }
  }
}

nlohmann::json metrics_json(std::span<const RoundMetrics> rounds) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rounds) {
    auto clients = nlohmann::json::array();
    for (const auto& c : r.clients) {
      clients.push_back({{"client", c.client},
                         {"acc", c.acc},
                         {"pl_count", c.pl_count},
                         {"pl_precision", optional_json(c.pl_precision)},
                         {"a_i", optional_json(c.a_i)},
                         {"generated", c.generated}});
    }
    arr.push_back({{"round", r.round},
                   {"mean_acc", r.mean_acc},
                   {"std_acc", r.std_acc},
                   {"disagreement", r.disagreement},
                   {"regenerated", r.regenerated},
                   {"clients", std::move(clients)}});
  }
  return arr;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "alpha,r,method,runs,mean_acc,std_acc,mean_client_std\n";
  for (const auto& r : rows) {
    out << format_double(r.alpha) << ',' << format_double(r.labeled_ratio) << ',' << r.method << ','
        << r.runs << ',' << format_double(r.mean_acc) << ',' << format_double(r.std_acc) << ','
        << format_double(r.mean_client_std) << '\n';
  }
}

nlohmann::json sweep_json(std::span<const SweepRow> rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"alpha", r.alpha},
                   {"r", r.labeled_ratio},
                   {"method", r.method},
                   {"runs", r.runs},
                   {"mean_acc", r.mean_acc},
                   {"std_acc", r.std_acc},
                   {"mean_client_std", r.mean_client_std}});
  }
  return arr;
}

}  // namespace semidfl
