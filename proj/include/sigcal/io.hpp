#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sigcal/calibration.hpp"
#include "sigcal/signature.hpp"

namespace sigcal::io {

// Shortest decimal form that round-trips, so reruns produce identical bytes.
std::string fmt(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

Table read_csv(const std::string& path);
std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);
nlohmann::json read_json(const std::string& path);
std::string dump_json(const nlohmann::json& j);

// Header t,x1,...,xd.
SamplePath read_path_csv(const std::string& path);
std::string path_csv(const SamplePath& path);
// One column per word, one row per grid point.
std::string sig_stream_csv(const SigStream& stream);
// Header T,K,mid,iv,vega; empty cells are missing values.
QuoteSurface read_quotes_csv(const std::string& path, double s0);
std::string quotes_csv(const QuoteSurface& s);

}  // namespace sigcal::io
