#include "sigcal/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sigcal::io {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::invalid_argument("missing column " + name);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r' && c != ' ') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number: " + s);
  return v;
}

}  // namespace

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv " + path);
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto row = split(line);
    if (row.size() != t.header.size()) throw std::runtime_error("ragged csv row in " + path);
    t.rows.push_back(row);
  }
  return t;
}

std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + fmt(r[i]);
    out += '\n';
  }
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(read_text(path)); }

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

SamplePath read_path_csv(const std::string& path) {
  Table t = read_csv(path);
  if (t.header.empty() || t.header[0] != "t") throw std::runtime_error("path csv must start with column t");
  SamplePath p;
  const std::size_t d = t.header.size() - 1;
  p.values.resize(t.rows.size(), d);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    p.times.push_back(parse_double(t.rows[i][0]));
    for (std::size_t c = 0; c < d; ++c) p.values(i, c) = parse_double(t.rows[i][c + 1]);
  }
  p.validate();
  return p;
}

std::string path_csv(const SamplePath& path) {
  std::vector<std::string> header{"t"};
  for (int c = 0; c < path.d(); ++c) header.push_back("x" + std::to_string(c + 1));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < path.size(); ++i) {
    std::vector<double> r{path.times[i]};
    for (int c = 0; c < path.d(); ++c) r.push_back(path.values(i, c));
    rows.push_back(r);
  }
  return to_csv(header, rows);
}

std::string sig_stream_csv(const SigStream& stream) {
  const auto words = all_words(stream.alphabet(), stream.N);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) out += (i ? ",\"" : "\"") + words[i].str() + "\"";
  out += '\n';
  for (const auto& s : stream.sigs) {
    auto data = s.data();
    for (std::size_t i = 0; i < data.size(); ++i) out += (i ? "," : "") + fmt(data[i]);
    out += '\n';
  }
  return out;
}

QuoteSurface read_quotes_csv(const std::string& path, double s0) {
  Table t = read_csv(path);
  QuoteSurface s;
  s.s0 = s0;
  const std::size_t cT = t.column("T"), cK = t.column("K");
  auto opt = [&](const char* name) -> long {
    for (std::size_t i = 0; i < t.header.size(); ++i)
      if (t.header[i] == name) return static_cast<long>(i);
    return -1;
  };
  const long cm = opt("mid"), ci = opt("iv"), cv = opt("vega");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : t.rows) {
    Quote q;
    q.T = parse_double(r[cT]);
    q.K = parse_double(r[cK]);
    q.mid = cm >= 0 ? parse_double(r[cm]) : nan;
    q.iv = ci >= 0 ? parse_double(r[ci]) : nan;
    q.vega = cv >= 0 ? parse_double(r[cv]) : nan;
    s.quotes.push_back(q);
  }
  s.complete();
  return s;
}

std::string quotes_csv(const QuoteSurface& s) {
  std::vector<std::vector<double>> rows;
  for (const auto& q : s.quotes) rows.push_back({q.T, q.K, q.mid, q.iv, q.vega});
  return to_csv({"T", "K", "mid", "iv", "vega"}, rows);
}

}  // namespace sigcal::io
