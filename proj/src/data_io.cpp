#include "drsvm/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace drsvm {

namespace {

bool is_space(char ch) { return ch == ' ' || ch == '\t' || ch == '\r' || ch == '\v' || ch == '\f'; }

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_real(std::string_view tok, double& value) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(value);
}

bool parse_index(std::string_view tok, std::size_t& value) {
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

Sample parse_record(std::string_view line, std::size_t line_no) {
  const auto tokens = split_tokens(line);
  Sample s;
  double label = 0;
  if (!parse_real(tokens.front(), label)) throw parse_error(line_no, "malformed label '" + std::string(tokens.front()) + "'");
  if (label == 1) {
    s.label = 1;
  } else if (label == -1) {
    s.label = -1;
  } else {
    throw parse_error(line_no, "label must be +1 or -1, got '" + std::string(tokens.front()) + "'");
  }
  s.features.reserve(tokens.size() - 1);
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const std::string_view tok = tokens[t];
    const std::size_t colon = tok.find(':');
    std::size_t index = 0;
    double value = 0;
    if (colon == std::string_view::npos || !parse_index(tok.substr(0, colon), index) ||
        !parse_real(tok.substr(colon + 1), value))
      throw parse_error(line_no, "malformed feature '" + std::string(tok) + "'");
    if (index == 0) throw parse_error(line_no, "feature indices start at 1");
    if (!s.features.empty() && index <= s.features.back().first)
      throw parse_error(line_no, "feature index " + std::to_string(index) + " is not increasing");
    s.features.emplace_back(index, value);
  }
  return s;
}

}  // namespace

LibsvmFile parse_libsvm(std::istream& in) {
  LibsvmFile out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_tokens(line).empty()) continue;
    Sample s = parse_record(line, line_no);
    if (!s.features.empty()) out.dimension = std::max(out.dimension, s.features.back().first);
    out.samples.push_back(std::move(s));
  }
  if (in.bad()) throw data_error("read error after line " + std::to_string(line_no));
  return out;
}

LibsvmFile parse_libsvm(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in);
}

LibsvmFile load_libsvm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path + "'");
  return parse_libsvm(in);
}

Dataset signed_samples(const std::vector<Sample>& samples, std::size_t d) {
  if (samples.empty()) throw data_error("dataset has no samples");
  if (d == 0) throw dimension_error("dataset dimension must be >= 1");
  Dataset out;
  out.z.setZero(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double y = samples[i].label;
    for (const auto& [index, value] : samples[i].features) {
      if (index > d)
        throw dimension_error("sample " + std::to_string(i + 1) + " has feature " + std::to_string(index) +
                              " beyond dimension " + std::to_string(d));
      out.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(index - 1)) = y * value;
    }
  }
  return out;
}

Dataset load_dataset(const std::string& path, std::size_t declared_d) {
  const LibsvmFile file = load_libsvm(path);
  return signed_samples(file.samples, std::max(declared_d, file.dimension));
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw numerical_error("cannot format value");
  return std::string(buf, ptr);
}

void write_libsvm(std::ostream& out, const std::vector<Sample>& samples) {
  for (const Sample& s : samples) {
    out << (s.label > 0 ? "+1" : "-1");
    for (const auto& [index, value] : s.features) out << ' ' << index << ':' << format_double(value);
    out << '\n';
  }
}

SyntheticData gen_synthetic(std::size_t n, std::size_t d, double noise_sigma, std::uint64_t seed) {
  if (n < 1 || d < 1) throw config_error("gen_synthetic: n and d must be >= 1");
  if (!(noise_sigma >= 0)) throw config_error("gen_synthetic: noise_sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SyntheticData out;
  out.w_star.resize(static_cast<Eigen::Index>(d));
  for (auto& v : out.w_star) v = normal(rng);
  out.samples.resize(n);
  Eigen::VectorXd x(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = normal(rng);
    const double noise = normal(rng);
    const double score = out.w_star.dot(x) + noise_sigma * noise;
    Sample& s = out.samples[i];
    s.label = score >= 0 ? 1 : -1;
    s.features.reserve(d);
    for (std::size_t j = 0; j < d; ++j) s.features.emplace_back(j + 1, x[static_cast<Eigen::Index>(j)]);
  }
  out.data = signed_samples(out.samples, d);
  return out;
}

}  // namespace drsvm
