#include "semitrans/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "semitrans/error.hpp"
#include "semitrans/format.hpp"

namespace semitrans {

StepFunction::StepFunction(GridPtr grid, std::vector<double> values, double value_at_0,
                           bool monotone)
    : grid_(std::move(grid)), values_(std::move(values)), value_at_0_(value_at_0),
      monotone_(monotone) {
  if (!grid_) fail(ErrorCode::InvalidArgument, "step function needs a grid");
  if (values_.size() != grid_->size())
    fail(ErrorCode::GridMismatch, "step function values do not match grid size");
  if (monotone_) {
    double prev = value_at_0_;
    for (double v : values_) {
      if (v < prev) fail(ErrorCode::InvalidArgument, "monotone step function decreases");
      prev = v;
    }
  }
}

StepFunction StepFunction::from_jumps(GridPtr grid, std::span<const double> jumps,
                                      double value_at_0, bool monotone) {
  std::vector<double> v(jumps.size());
  double acc = value_at_0;
  for (std::size_t k = 0; k < jumps.size(); ++k) v[k] = (acc += jumps[k]);
  return StepFunction(std::move(grid), std::move(v), value_at_0, monotone);
}

double StepFunction::operator()(double t) const {
  const auto& g = *grid_;
  auto it = std::upper_bound(g.begin(), g.end(), t);
  if (it == g.begin()) return value_at_0_;
  return values_[static_cast<std::size_t>(it - g.begin()) - 1];
}

std::vector<double> StepFunction::jumps() const {
  std::vector<double> out(values_.size());
  for (std::size_t k = 0; k < values_.size(); ++k) out[k] = jump(k);
  return out;
}

bool StepFunction::same_grid(const StepFunction& other) const {
  if (grid_ == other.grid_) return true;
  if (!grid_ || !other.grid_) return false;
  return *grid_ == *other.grid_;
}

double integrate(const StepFunction& measure, const StepFunction& integrand, double from,
                 double to, Window window) {
  if (!measure.same_grid(integrand)) fail(ErrorCode::GridMismatch, "integrate: grids differ");
  const auto& g = *measure.grid();
  double s = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    double t = g[k];
    bool in = window == Window::OpenClosed ? (t > from && t <= to) : (t >= from && t < to);
    if (in) s += integrand.at(k) * measure.jump(k);
  }
  return s;
}

CensoredSample CensoredSample::from_records(std::vector<CensoredRecord> records) {
  return from_records(std::move(records), Grouping::Auto);
}

CensoredSample CensoredSample::from_records(std::vector<CensoredRecord> records,
                                            Grouping grouping) {
  if (records.empty()) fail(ErrorCode::EmptyInput, "no records");
  std::size_t d = records.front().z.size();
  std::size_t failures = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (std::isnan(r.x) || !std::isfinite(r.x))
      fail(ErrorCode::InvalidTime, "record " + std::to_string(i) + ": time is NaN or infinite");
    if (r.x < 0) fail(ErrorCode::InvalidTime, "record " + std::to_string(i) + ": negative time");
    if (r.delta != 0 && r.delta != 1)
      fail(ErrorCode::InvalidIndicator, "record " + std::to_string(i) + ": delta not in {0,1}");
    if (r.z.size() != d)
      fail(ErrorCode::DimensionMismatch,
           "record " + std::to_string(i) + ": inconsistent covariate dimension");
    for (double v : r.z)
      if (!std::isfinite(v))
        fail(ErrorCode::InvalidArgument, "record " + std::to_string(i) + ": covariate not finite");
    failures += static_cast<std::size_t>(r.delta);
  }
  if (records.size() < 2) fail(ErrorCode::TooFewRecords, "need at least 2 records");
  if (failures == 0) fail(ErrorCode::NoFailures, "no failures");

  std::sort(records.begin(), records.end(), [](const CensoredRecord& a, const CensoredRecord& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.delta != b.delta) return a.delta > b.delta;
    return a.z < b.z;
  });

  CensoredSample s;
  std::size_t n = records.size();
  double inv_n = 1.0 / static_cast<double>(n);
  s.dim_z_ = d;
  s.num_failures_ = failures;
  auto grid = std::make_shared<Grid>();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    if (!r.delta) continue;
    if (grid->empty() || grid->back() != r.x) {
      grid->push_back(r.x);
      s.failure_counts_.push_back(0);
    }
    ++s.failure_counts_.back();
  }
  std::size_t m = grid->size();
  s.event_counts_.resize(m);
  s.at_risk_.resize(m);
  s.risk_start_.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    s.event_counts_[k] = s.failure_counts_[k] * inv_n;
    auto it = std::lower_bound(records.begin(), records.end(), (*grid)[k],
                               [](const CensoredRecord& r, double t) { return r.x < t; });
    s.risk_start_[k] = static_cast<std::size_t>(it - records.begin());
    s.at_risk_[k] = static_cast<double>(n - s.risk_start_[k]) * inv_n;
  }
  s.z_.resize(n * d);
  s.event_index_.assign(n, npos);
  s.risk_end_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(records[i].z.begin(), records[i].z.end(), s.z_.begin() + i * d);
    auto it = std::upper_bound(grid->begin(), grid->end(), records[i].x);
    s.risk_end_[i] = static_cast<std::size_t>(it - grid->begin());
    if (records[i].delta) s.event_index_[i] = s.risk_end_[i] - 1;
  }

  if (grouping != Grouping::Never) {
    std::map<std::vector<double>, std::size_t> ids;
    std::vector<std::size_t> prof(n);
    bool few = true;
    for (std::size_t i = 0; i < n && few; ++i) {
      auto [it, inserted] = ids.emplace(records[i].z, ids.size());
      prof[i] = it->second;
      if (grouping == Grouping::Auto && (ids.size() > 64 || 8 * ids.size() > n)) few = false;
    }
    std::size_t P = ids.size();
    if (grouping == Grouping::Auto && few && static_cast<double>(m) * P > 5e7) few = false;
    if (few) {
      s.grouped_ = true;
      s.num_profiles_ = P;
      s.profile_of_ = std::move(prof);
      s.profile_z_.resize(P * d);
      for (const auto& [z, id] : ids) std::copy(z.begin(), z.end(), s.profile_z_.begin() + id * d);
      s.profile_count_.assign(m * P, 0);
      std::vector<int> cnt(P, 0);
      std::size_t i = n;
      for (std::size_t k = m; k-- > 0;) {
        while (i > s.risk_start_[k]) {
          --i;
          ++cnt[s.profile_of_[i]];
        }
        std::copy(cnt.begin(), cnt.end(), s.profile_count_.begin() + k * P);
      }
    }
  }
  if (!s.grouped_) {
    s.num_profiles_ = 0;
    s.profile_of_.resize(n);
    std::iota(s.profile_of_.begin(), s.profile_of_.end(), std::size_t{0});
  }
  s.grid_ = std::move(grid);
  s.records_ = std::move(records);
  return s;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r' && c != ' ' && c != '\t') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, std::size_t line, std::size_t col) {
  if (s.empty())
    fail(ErrorCode::ParseError,
         "line " + std::to_string(line) + " column " + std::to_string(col) + ": empty field");
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    fail(ErrorCode::ParseError, "line " + std::to_string(line) + " column " +
                                    std::to_string(col) + ": not a number '" + s + "'");
  return v;
}

}  // namespace

std::vector<CensoredRecord> read_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (split(line).size() == 1 && split(line)[0].empty()) continue;
    header = split(line);
    break;
  }
  if (header.size() < 2 || header[0] != "x" || header[1] != "delta")
    fail(ErrorCode::ParseError, "CSV header must start with x,delta");
  std::size_t d = header.size() - 2;
  std::vector<CensoredRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    auto f = split(line);
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != header.size())
      fail(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected " +
                                      std::to_string(header.size()) + " fields, got " +
                                      std::to_string(f.size()));
    CensoredRecord r;
    r.x = parse_number(f[0], lineno, 1);
    double dl = parse_number(f[1], lineno, 2);
    if (dl != 0.0 && dl != 1.0)
      fail(ErrorCode::InvalidIndicator, "line " + std::to_string(lineno) + ": delta not in {0,1}");
    r.delta = static_cast<int>(dl);
    r.z.resize(d);
    for (std::size_t j = 0; j < d; ++j) r.z[j] = parse_number(f[2 + j], lineno, 3 + j);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<CensoredRecord> read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open data file '" + path + "'");
  return read_csv(in);
}

void write_csv(std::ostream& out, const std::vector<CensoredRecord>& records) {
  std::size_t d = records.empty() ? 0 : records.front().z.size();
  out << "x,delta";
  for (std::size_t j = 0; j < d; ++j) out << ",z" << (j + 1);
  out << "\n";
  for (const auto& r : records) {
    out << format_double(r.x) << ',' << r.delta;
    for (double v : r.z) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace semitrans
