#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace semitrans {

struct CensoredRecord {
  double x = 0;
  int delta = 0;
  std::vector<double> z;
};

using Grid = std::vector<double>;
using GridPtr = std::shared_ptr<const Grid>;

// Right-continuous step function with jumps on an event grid.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(GridPtr grid, std::vector<double> values, double value_at_0 = 0.0,
               bool monotone = false);

  // cumulative function of the given jumps
  static StepFunction from_jumps(GridPtr grid, std::span<const double> jumps,
                                 double value_at_0 = 0.0, bool monotone = false);

  double operator()(double t) const;
  double at(std::size_t k) const { return values_[k]; }
  // value just before grid point k
  double left(std::size_t k) const { return k == 0 ? value_at_0_ : values_[k - 1]; }
  double jump(std::size_t k) const { return values_[k] - left(k); }
  std::vector<double> jumps() const;

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double value_at_0() const { return value_at_0_; }
  bool monotone() const { return monotone_; }
  const GridPtr& grid() const { return grid_; }
  bool same_grid(const StepFunction& other) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
  double value_at_0_ = 0.0;
  bool monotone_ = false;
};

enum class Window {
  OpenClosed,  // (from, to]
  ClosedOpen   // [from, to)
};

// Sum over grid points in the window of integrand value times measure jump.
double integrate(const StepFunction& measure, const StepFunction& integrand, double from,
                 double to, Window window = Window::OpenClosed);

// Sorted records (x ascending, failures first at ties) with event grid and risk sets.
class CensoredSample {
 public:
  static CensoredSample from_records(std::vector<CensoredRecord> records);

  std::size_t size() const { return records_.size(); }
  std::size_t dim_z() const { return dim_z_; }
  std::size_t num_events() const { return grid_->size(); }
  std::size_t num_failures() const { return num_failures_; }
  double tau0() const { return records_.back().x; }

  const std::vector<CensoredRecord>& records() const { return records_; }
  const GridPtr& grid() const { return grid_; }
  std::span<const double> event_times() const { return *grid_; }
  // failures at t_k divided by n
  std::span<const double> event_counts() const { return event_counts_; }
  std::span<const int> failure_counts() const { return failure_counts_; }
  // #{X_i >= t_k} / n
  std::span<const double> at_risk() const { return at_risk_; }
  // first sorted record index with X >= t_k
  std::size_t risk_start(std::size_t k) const { return risk_start_[k]; }

  // covariates of sorted record i
  const double* z(std::size_t i) const { return z_.data() + i * dim_z_; }
  // event index of sorted record i if it failed, otherwise npos
  std::size_t event_index(std::size_t i) const { return event_index_[i]; }
  // number of event times <= X_i
  std::size_t risk_end(std::size_t i) const { return risk_end_[i]; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  // Records with identical covariates are grouped into profiles when few distinct
  // vectors exist; risk-set sums then run over profiles with multiplicities.
  bool grouped() const { return grouped_; }
  std::size_t num_profiles() const { return num_profiles_; }
  std::size_t profile_of(std::size_t i) const { return profile_of_[i]; }
  const double* profile_z(std::size_t p) const { return profile_z_.data() + p * dim_z_; }
  int profile_at_risk(std::size_t k, std::size_t p) const {
    return profile_count_[k * num_profiles_ + p];
  }

  // units for risk-set sums: profiles when grouped, records otherwise
  std::size_t num_units() const { return grouped_ ? num_profiles_ : records_.size(); }
  const double* unit_z(std::size_t u) const { return grouped_ ? profile_z(u) : z(u); }
  std::size_t unit_of(std::size_t i) const { return grouped_ ? profile_of_[i] : i; }

  // calls fn(unit, multiplicity) for the risk set at t_k
  template <class Fn>
  void for_each_at_risk(std::size_t k, Fn&& fn) const {
    if (grouped_) {
      const int* row = profile_count_.data() + k * num_profiles_;
      for (std::size_t p = 0; p < num_profiles_; ++p)
        if (row[p] > 0) fn(p, static_cast<double>(row[p]));
    } else {
      for (std::size_t i = risk_start_[k]; i < records_.size(); ++i) fn(i, 1.0);
    }
  }

  StepFunction step(std::vector<double> values, double value_at_0 = 0.0,
                    bool monotone = false) const {
    return StepFunction(grid_, std::move(values), value_at_0, monotone);
  }

  // forbid or force grouping (for testing both paths)
  enum class Grouping { Auto, Never, Always };
  static CensoredSample from_records(std::vector<CensoredRecord> records, Grouping grouping);

 private:
  std::vector<CensoredRecord> records_;
  std::size_t dim_z_ = 0;
  std::size_t num_failures_ = 0;
  GridPtr grid_;
  std::vector<double> event_counts_;
  std::vector<int> failure_counts_;
  std::vector<double> at_risk_;
  std::vector<std::size_t> risk_start_;
  std::vector<double> z_;
  std::vector<std::size_t> event_index_;
  std::vector<std::size_t> risk_end_;
  bool grouped_ = false;
  std::size_t num_profiles_ = 0;
  std::vector<std::size_t> profile_of_;
  std::vector<double> profile_z_;
  std::vector<int> profile_count_;
};

// CSV with header x,delta,z1,...,zd
std::vector<CensoredRecord> read_csv(std::istream& in);
std::vector<CensoredRecord> read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const std::vector<CensoredRecord>& records);

}  // namespace semitrans
