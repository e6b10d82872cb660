#pragma once

#include "skyfed/experiments.hpp"
#include "skyfed/fedsim.hpp"
#include "skyfed/placement.hpp"
#include "skyfed/scenario.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace skyfed {

/// %.10g, with nan / inf / -inf spelled out.
std::string format_number(double v);

/// `iteration,x,y,objective`, one row per accepted iterate.
std::string placement_csv(const PlacementResult& r);

/// `# key=value` metadata lines, then `waypoint_index,x,y`.
std::string trajectory_csv(const Trajectory& t, const std::vector<std::pair<std::string, std::string>>& meta = {});
/// Inverse of trajectory_csv. Reads dwell and closed from the metadata when present.
Trajectory parse_trajectory_csv(std::string_view text);

/// `round,loss,accuracy,gap,drone_x,drone_y,e_1..e_N,c_1..c_N`.
std::string round_log_csv(const SimulationResult& r);

/// `<axis>,atl,final_loss,rounds_to_target`.
std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows);

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Standalone SVG line chart. Non-finite points are skipped. Series with `right_axis`
/// indices are scaled against a second y axis.
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::vector<Series>& series,
                           const std::vector<std::size_t>& right_axis = {});

}  // namespace skyfed
