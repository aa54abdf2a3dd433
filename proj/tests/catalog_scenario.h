#pragma once

namespace secmpc::testing {

// Every feature kind at least once, with frames and dof points mixed.
inline constexpr const char* kCatalogScenario = R"({
  "name": "catalog",
  "space_dim": 2,
  "frames": [
    {"name": "target", "position": [0.5, 0.5], "half_size": 0.05},
    {"name": "post", "position": [0.0, 0.0], "half_extents": [0.5, 0.25]}
  ],
  "dofs": [
    {"name": "hand", "kind": "actuated", "size": 2, "initial": [0.1, -0.3]},
    {"name": "box", "kind": "object", "size": 2, "frame": "target"},
    {"name": "grasp", "kind": "shared", "size": 2, "initial": [0.0, 0.1]}
  ],
  "phases": [{
    "name": "all",
    "waypoint": [
      {"kind": "position", "name": "pos", "a": {"dofs": "hand"}, "b": {"dofs": "box", "plus": "grasp"}, "offset": [0.1, 0.0]},
      {"kind": "distance", "name": "far", "a": {"dofs": "hand"}, "b": {"frame": "target"}, "distance": 0.3, "mode": "at_least"},
      {"kind": "distance", "name": "exact", "a": {"dofs": "hand"}, "b": {"dofs": "box"}, "distance": 0.2},
      {"kind": "alignment", "name": "line", "from": {"dofs": "hand"}, "through": {"dofs": "box"}, "toward": {"dofs": "grasp"}, "ordered": true},
      {"kind": "opposite_contact", "name": "contact", "tip": {"dofs": "hand"}, "object": {"dofs": "box"}, "place": {"frame": "target"}, "standoff": 0.1},
      {"kind": "box_placement", "name": "beside", "object": {"dofs": "box"}, "target": {"dofs": "hand"}, "object_half": 0.05, "target_half": 0.05},
      {"kind": "box_placement", "name": "on_top", "object": {"dofs": "box"}, "target": {"frame": "target"}, "mode": "on_top"},
      {"kind": "obstacle_clearance", "name": "clear", "point": {"dofs": "hand"}, "obstacle": "post", "margin": 0.05}
    ],
    "coupling": [
      {"kind": "dof_velocity", "name": "still", "block": "box"},
      {"kind": "relative_velocity", "name": "carried", "a": "box", "b": "hand"}
    ]
  }]
})";

}  // namespace secmpc::testing
