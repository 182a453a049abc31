#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scmtagg/error.hpp"

namespace scmtagg {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Dense (unit, period, subperiod) array stored row-major with subperiod
/// fastest.
class Cube {
 public:
  Cube() = default;
  Cube(std::size_t units, std::size_t periods, std::size_t subperiods, double fill = 0.0)
      : units_(units), periods_(periods), subperiods_(subperiods),
        data_(units * periods * subperiods, fill) {}

  std::size_t units() const noexcept { return units_; }
  std::size_t periods() const noexcept { return periods_; }
  std::size_t subperiods() const noexcept { return subperiods_; }

  double& operator()(std::size_t i, std::size_t t, std::size_t k) noexcept {
    return data_[(i * periods_ + t) * subperiods_ + k];
  }
  double operator()(std::size_t i, std::size_t t, std::size_t k) const noexcept {
    return data_[(i * periods_ + t) * subperiods_ + k];
  }

  /// All (t, k) cells of unit i, period-major.
  std::span<const double> unit(std::size_t i) const noexcept {
    return {data_.data() + i * periods_ * subperiods_, periods_ * subperiods_};
  }
  std::span<double> unit(std::size_t i) noexcept {
    return {data_.data() + i * periods_ * subperiods_, periods_ * subperiods_};
  }

  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Cube&) const = default;

 private:
  std::size_t units_ = 0;
  std::size_t periods_ = 0;
  std::size_t subperiods_ = 0;
  std::vector<double> data_;
};

/// Balanced panel with a single treated unit stored at index 0.
///
/// Periods [0, t0) are pre-treatment; [t0, periods) are post-treatment.
/// Period and subperiod labels are the opaque integers from the input.
class PanelData {
 public:
  PanelData(Cube outcomes, std::size_t t0, std::vector<std::string> unit_labels,
            std::vector<std::int64_t> period_labels, std::vector<std::int64_t> subperiod_labels);

  /// Labels default to 1..T and 1..K, unit names "unit<i>".
  PanelData(Cube outcomes, std::size_t t0);

  const Cube& outcomes() const noexcept { return outcomes_; }
  std::size_t t0() const noexcept { return t0_; }
  std::size_t n_units() const noexcept { return outcomes_.units(); }
  std::size_t n_donors() const noexcept { return outcomes_.units() - 1; }
  std::size_t n_periods() const noexcept { return outcomes_.periods(); }
  std::size_t n_post() const noexcept { return outcomes_.periods() - t0_; }
  std::size_t n_subperiods() const noexcept { return outcomes_.subperiods(); }
  static constexpr std::size_t treated_index() noexcept { return 0; }

  const std::vector<std::string>& unit_labels() const noexcept { return unit_labels_; }
  const std::vector<std::int64_t>& period_labels() const noexcept { return period_labels_; }
  const std::vector<std::int64_t>& subperiod_labels() const noexcept { return subperiod_labels_; }

  /// New panel with `unit` as the treated unit and `excluded` units dropped.
  /// Remaining donors keep their relative order.
  PanelData with_treated(std::size_t unit, std::span<const std::size_t> excluded) const;

 private:
  Cube outcomes_;
  std::size_t t0_;
  std::vector<std::string> unit_labels_;
  std::vector<std::int64_t> period_labels_;
  std::vector<std::int64_t> subperiod_labels_;
};

/// Outcomes minus each unit's pre-treatment mean.
struct DemeanedPanel {
  Cube demeaned;
  std::vector<double> pre_means;
  std::size_t t0 = 0;
};

/// Per-(unit, period) subperiod means.
struct AggregatedSeries {
  std::size_t units = 0;
  std::size_t periods = 0;
  std::vector<double> values;  // unit-major

  double operator()(std::size_t i, std::size_t t) const noexcept { return values[i * periods + t]; }
};

/// One long-format input record.
struct RawObservation {
  std::string unit;
  std::int64_t period = 0;
  std::int64_t subperiod = 0;
  double outcome = 0.0;
  bool treated = false;
};

DemeanedPanel demean(const PanelData& panel);

AggregatedSeries aggregate(const Cube& series);

/// Builds a balanced panel from long-format records.
///
/// Units keep their first-appearance order, except that the treated unit is
/// moved to the front. Periods and subperiods are sorted ascending; the first
/// `t0` periods are pre-treatment. A unit counts as treated when its rows
/// carry the flag; mixed flags within one unit are rejected.
PanelData validate_panel(std::span<const RawObservation> records, std::size_t t0);

}  // namespace scmtagg
