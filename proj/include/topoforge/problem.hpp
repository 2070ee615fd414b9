#pragma once

#include <Eigen/Dense>

#include <vector>

#include "topoforge/mesh_fem.hpp"
#include "topoforge/rng.hpp"

namespace topoforge {

/// Case 1: unit point load at the middle node of the free (right) edge,
/// direction uniform on [0, pi]. Case 2: unit point load at a node drawn
/// from a square region, direction uniform on [0, 2pi].
enum class CaseKind { TipAngle = 1, RegionAngle = 2 };

/// Node-index ranges (inclusive) eligible for Case 2 loads.
struct LoadRegion {
    int x0 = 0, x1 = 0, y0 = 0, y1 = 0;

    std::vector<int> nodes(const Mesh& mesh) const;
    bool contains(const Mesh& mesh, int node) const;
};

/// Square with side = one third of the domain width, flush against the free
/// edge, centered vertically (clipped to the domain).
LoadRegion default_load_region(const Mesh& mesh);

struct ProblemSetting {
    CaseKind kind = CaseKind::TipAngle;
    double angle = 0.0;
    int node = -1;  // load application node

    /// Serialized parameters: Case 1 -> [angle]; Case 2 -> [ix, iy, angle].
    std::vector<double> raw(const Mesh& mesh) const;
    static int raw_dim(CaseKind kind) { return kind == CaseKind::TipAngle ? 1 : 3; }

    /// Generator input: Case 1 -> (cos a, sin a); Case 2 -> (ix/nx, iy/ny, a/2pi).
    Eigen::VectorXd encode(const Mesh& mesh) const;
    static int input_dim(CaseKind kind) { return kind == CaseKind::TipAngle ? 2 : 3; }
};

ProblemSetting setting_from_raw(CaseKind kind, const Mesh& mesh,
                                const std::vector<double>& raw);

/// Unit force (cos a, sin a) at the setting's node; zero elsewhere.
Eigen::VectorXd realize_load(const ProblemSetting& setting, const Mesh& mesh);

ProblemSetting sample_setting(CaseKind kind, const Mesh& mesh, const LoadRegion& region,
                              Rng& rng);

}  // namespace topoforge
