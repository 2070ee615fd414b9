#include "topoforge/problem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace topoforge {

std::vector<int> LoadRegion::nodes(const Mesh& mesh) const {
    std::vector<int> out;
    for (int ix = x0; ix <= x1; ++ix)
        for (int iy = y0; iy <= y1; ++iy) out.push_back(mesh.node_id(ix, iy));
    return out;
}

bool LoadRegion::contains(const Mesh& mesh, int node) const {
    const int ix = node / (mesh.ny() + 1), iy = node % (mesh.ny() + 1);
    return ix >= x0 && ix <= x1 && iy >= y0 && iy <= y1;
}

LoadRegion default_load_region(const Mesh& mesh) {
    const int side = mesh.nx() / 3;
    LoadRegion region;
    region.x0 = mesh.nx() - side;
    region.x1 = mesh.nx();
    region.y0 = std::max(0, (mesh.ny() - side) / 2);
    region.y1 = std::min(mesh.ny(), region.y0 + side);
    return region;
}

std::vector<double> ProblemSetting::raw(const Mesh& mesh) const {
    if (kind == CaseKind::TipAngle) return {angle};
    const double ix = node / (mesh.ny() + 1), iy = node % (mesh.ny() + 1);
    return {ix, iy, angle};
}

Eigen::VectorXd ProblemSetting::encode(const Mesh& mesh) const {
    Eigen::VectorXd in(input_dim(kind));
    if (kind == CaseKind::TipAngle) {
        in << std::cos(angle), std::sin(angle);
    } else {
        const double ix = node / (mesh.ny() + 1), iy = node % (mesh.ny() + 1);
        in << ix / mesh.nx(), iy / mesh.ny(), angle / (2.0 * std::numbers::pi);
    }
    return in;
}

ProblemSetting setting_from_raw(CaseKind kind, const Mesh& mesh,
                                const std::vector<double>& raw) {
    if (static_cast<int>(raw.size()) != ProblemSetting::raw_dim(kind))
        throw std::invalid_argument("setting: raw parameter count mismatch");
    ProblemSetting s;
    s.kind = kind;
    if (kind == CaseKind::TipAngle) {
        s.angle = raw[0];
        s.node = mesh.node_id(mesh.nx(), mesh.ny() / 2);
    } else {
        const int ix = static_cast<int>(std::lround(raw[0]));
        const int iy = static_cast<int>(std::lround(raw[1]));
        if (ix < 0 || ix > mesh.nx() || iy < 0 || iy > mesh.ny())
            throw std::invalid_argument("setting: load node outside mesh");
        s.node = mesh.node_id(ix, iy);
        s.angle = raw[2];
    }
    return s;
}

Eigen::VectorXd realize_load(const ProblemSetting& setting, const Mesh& mesh) {
    if (setting.node < 0 || setting.node >= mesh.n_nodes())
        throw std::invalid_argument("load: node out of range");
    Eigen::VectorXd s = Eigen::VectorXd::Zero(mesh.n_dofs());
    s[2 * setting.node] = std::cos(setting.angle);
    s[2 * setting.node + 1] = std::sin(setting.angle);
    return s;
}

ProblemSetting sample_setting(CaseKind kind, const Mesh& mesh, const LoadRegion& region,
                              Rng& rng) {
    ProblemSetting s;
    s.kind = kind;
    if (kind == CaseKind::TipAngle) {
        s.angle = rng.uniform(0.0, std::numbers::pi);
        s.node = mesh.node_id(mesh.nx(), mesh.ny() / 2);
    } else {
        const std::vector<int> candidates = region.nodes(mesh);
        s.node = candidates[static_cast<std::size_t>(rng.below(candidates.size()))];
        s.angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return s;
}

}  // namespace topoforge
