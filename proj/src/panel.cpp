#include "scmtagg/panel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace scmtagg {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingCell: return "MissingCell";
    case ErrorCode::DuplicateCell: return "DuplicateCell";
    case ErrorCode::MultipleTreated: return "MultipleTreated";
    case ErrorCode::NoTreated: return "NoTreated";
    case ErrorCode::InconsistentTreatment: return "InconsistentTreatment";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::T0OutOfRange: return "T0OutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InsufficientDonors: return "InsufficientDonors";
    case ErrorCode::InfeasibleStart: return "InfeasibleStart";
    case ErrorCode::NonConvexObjective: return "NonConvexObjective";
    case ErrorCode::WeakIdentification: return "WeakIdentification";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::vector<std::int64_t> iota_labels(std::size_t n) {
  std::vector<std::int64_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::int64_t>(i + 1);
  return out;
}

std::vector<std::string> default_unit_labels(std::size_t n) {
  std::vector<std::string> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = "unit" + std::to_string(i + 1);
  return out;
}

}  // namespace

PanelData::PanelData(Cube outcomes, std::size_t t0, std::vector<std::string> unit_labels,
                     std::vector<std::int64_t> period_labels,
                     std::vector<std::int64_t> subperiod_labels)
    : outcomes_(std::move(outcomes)), t0_(t0), unit_labels_(std::move(unit_labels)),
      period_labels_(std::move(period_labels)), subperiod_labels_(std::move(subperiod_labels)) {
  if (outcomes_.units() < 2) {
    throw Error(ErrorCode::InsufficientDonors, "panel needs a treated unit and at least one donor");
  }
  if (outcomes_.subperiods() < 1) {
    throw Error(ErrorCode::InvalidArgument, "panel needs at least one subperiod");
  }
  if (t0_ < 1 || t0_ >= outcomes_.periods()) {
    throw Error(ErrorCode::T0OutOfRange,
                "t0 = " + std::to_string(t0_) + " must satisfy 1 <= t0 < T = " +
                    std::to_string(outcomes_.periods()));
  }
  if (unit_labels_.size() != outcomes_.units() || period_labels_.size() != outcomes_.periods() ||
      subperiod_labels_.size() != outcomes_.subperiods()) {
    throw Error(ErrorCode::DimensionMismatch, "label vectors do not match the outcome array");
  }
  for (std::size_t i = 0; i < outcomes_.units(); ++i) {
    for (std::size_t t = 0; t < outcomes_.periods(); ++t) {
      for (std::size_t k = 0; k < outcomes_.subperiods(); ++k) {
        if (!std::isfinite(outcomes_(i, t, k))) {
          throw Error(ErrorCode::NonFinite, "non-finite outcome",
                      CellRef{unit_labels_[i], period_labels_[t], subperiod_labels_[k]});
        }
      }
    }
  }
}

PanelData::PanelData(Cube outcomes, std::size_t t0)
    : PanelData(outcomes, t0, default_unit_labels(outcomes.units()),
                iota_labels(outcomes.periods()), iota_labels(outcomes.subperiods())) {}

PanelData PanelData::with_treated(std::size_t unit, std::span<const std::size_t> excluded) const {
  if (unit >= n_units()) throw Error(ErrorCode::InvalidArgument, "unit index out of range");
  std::vector<std::size_t> order{unit};
  for (std::size_t i = 0; i < n_units(); ++i) {
    if (i == unit || std::find(excluded.begin(), excluded.end(), i) != excluded.end()) continue;
    order.push_back(i);
  }
  Cube out(order.size(), n_periods(), n_subperiods());
  std::vector<std::string> labels;
  labels.reserve(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    std::ranges::copy(outcomes_.unit(order[r]), out.unit(r).begin());
    labels.push_back(unit_labels_[order[r]]);
  }
  return PanelData(std::move(out), t0_, std::move(labels), period_labels_, subperiod_labels_);
}

DemeanedPanel demean(const PanelData& panel) {
  const Cube& y = panel.outcomes();
  const std::size_t pre_cells = panel.t0() * y.subperiods();
  DemeanedPanel out{y, std::vector<double>(y.units()), panel.t0()};
  for (std::size_t i = 0; i < y.units(); ++i) {
    auto row = y.unit(i);
    CompensatedSum sum;
    for (std::size_t c = 0; c < pre_cells; ++c) sum.add(row[c]);
    const double mean = sum.value() / static_cast<double>(pre_cells);
    out.pre_means[i] = mean;
    for (double& v : out.demeaned.unit(i)) v -= mean;
  }
  return out;
}

AggregatedSeries aggregate(const Cube& series) {
  AggregatedSeries out{series.units(), series.periods(),
                       std::vector<double>(series.units() * series.periods())};
  const double k = static_cast<double>(series.subperiods());
  for (std::size_t i = 0; i < series.units(); ++i) {
    for (std::size_t t = 0; t < series.periods(); ++t) {
      CompensatedSum sum;
      for (std::size_t s = 0; s < series.subperiods(); ++s) sum.add(series(i, t, s));
      out.values[i * series.periods() + t] = sum.value() / k;
    }
  }
  return out;
}

PanelData validate_panel(std::span<const RawObservation> records, std::size_t t0) {
  std::vector<std::string> units;
  std::unordered_map<std::string, std::size_t> unit_index;
  std::set<std::int64_t> period_set;
  std::set<std::int64_t> subperiod_set;
  std::vector<int> treated_state;  // -1 unseen, 0 control, 1 treated

  for (const auto& rec : records) {
    auto [it, inserted] = unit_index.try_emplace(rec.unit, units.size());
    if (inserted) {
      units.push_back(rec.unit);
      treated_state.push_back(rec.treated ? 1 : 0);
    } else if (treated_state[it->second] != (rec.treated ? 1 : 0)) {
      throw Error(ErrorCode::InconsistentTreatment,
                  "unit '" + rec.unit + "' has mixed treated flags",
                  CellRef{rec.unit, rec.period, rec.subperiod});
    }
    if (!std::isfinite(rec.outcome)) {
      throw Error(ErrorCode::NonFinite, "non-finite outcome",
                  CellRef{rec.unit, rec.period, rec.subperiod});
    }
    period_set.insert(rec.period);
    subperiod_set.insert(rec.subperiod);
  }

  std::vector<std::size_t> treated;
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (treated_state[u] == 1) treated.push_back(u);
  }
  if (treated.empty()) throw Error(ErrorCode::NoTreated, "no unit is flagged as treated");
  if (treated.size() > 1) {
    throw Error(ErrorCode::MultipleTreated,
                "units '" + units[treated[0]] + "' and '" + units[treated[1]] +
                    "' are both flagged as treated");
  }

  // Treated unit first, donors in first-appearance order.
  std::vector<std::size_t> order{treated.front()};
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (u != treated.front()) order.push_back(u);
  }
  std::vector<std::size_t> position(units.size());
  for (std::size_t r = 0; r < order.size(); ++r) position[order[r]] = r;

  const std::vector<std::int64_t> periods(period_set.begin(), period_set.end());
  const std::vector<std::int64_t> subperiods(subperiod_set.begin(), subperiod_set.end());
  std::map<std::int64_t, std::size_t> period_pos;
  std::map<std::int64_t, std::size_t> subperiod_pos;
  for (std::size_t t = 0; t < periods.size(); ++t) period_pos[periods[t]] = t;
  for (std::size_t k = 0; k < subperiods.size(); ++k) subperiod_pos[subperiods[k]] = k;

  if (t0 < 1 || t0 >= periods.size()) {
    throw Error(ErrorCode::T0OutOfRange,
                "t0 = " + std::to_string(t0) + " but the panel has " +
                    std::to_string(periods.size()) + " periods");
  }

  Cube outcomes(units.size(), periods.size(), subperiods.size());
  std::vector<char> seen(units.size() * periods.size() * subperiods.size(), 0);
  for (const auto& rec : records) {
    const std::size_t i = position[unit_index.at(rec.unit)];
    const std::size_t t = period_pos.at(rec.period);
    const std::size_t k = subperiod_pos.at(rec.subperiod);
    const std::size_t flat = (i * periods.size() + t) * subperiods.size() + k;
    if (seen[flat]) {
      throw Error(ErrorCode::DuplicateCell, "cell appears more than once",
                  CellRef{rec.unit, rec.period, rec.subperiod});
    }
    seen[flat] = 1;
    outcomes(i, t, k) = rec.outcome;
  }

  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t t = 0; t < periods.size(); ++t) {
      for (std::size_t k = 0; k < subperiods.size(); ++k) {
        if (!seen[(i * periods.size() + t) * subperiods.size() + k]) {
          throw Error(ErrorCode::MissingCell, "panel is unbalanced",
                      CellRef{units[order[i]], periods[t], subperiods[k]});
        }
      }
    }
  }

  std::vector<std::string> labels;
  labels.reserve(order.size());
  for (std::size_t u : order) labels.push_back(units[u]);
  return PanelData(std::move(outcomes), t0, std::move(labels), periods, subperiods);
}

}  // namespace scmtagg
