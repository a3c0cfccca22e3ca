#pragma once

#include <map>
#include <string>
#include <string_view>

#include "ecoperf/event_store.hpp"

namespace ecoperf {

/// Per-event-type weights used by activity and influence indices.
/// Keys are canonical type names ("PROpen") or raw type strings for unrecognized events.
/// Types without an entry weigh 0.
struct EventWeightConfig {
  std::string name;
  std::map<std::string, double> weights;

  double weight_of(const Event& event) const;
  double weight_of(std::string_view type_key) const;

  /// IssueComment 1, IssueOpen 2, PROpen 3, PRReviewComment 4, PRMerge 2, everything else 0.
  static EventWeightConfig defaults();

  /// Throws InvalidArgument on negative or non-finite weights.
  void validate() const;

  std::string to_json() const;
  /// Accepts {"name": ..., "weights": {...}} or a bare {"type": weight} map.
  static EventWeightConfig from_json(std::string_view text);
  static EventWeightConfig load(const std::string& path);

  bool operator==(const EventWeightConfig&) const = default;
};

}  // namespace ecoperf
