#include "lsplat/templates/templates.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace lsplat {

void BodyTemplate::validate(int joint_count) const {
    const int v = vertex_count();
    if (v == 0) throw std::invalid_argument("body template: no vertices");
    if (shape_basis.size() && shape_basis.rows() != 3 * v)
        throw std::invalid_argument("body template: shape basis row count");
    if (pose_basis.size() &&
        (pose_basis.rows() != 3 * v || pose_basis.cols() != 9 * (joint_count - 1)))
        throw std::invalid_argument("body template: pose basis dimensions");
    if (!offsets.empty() && static_cast<int>(offsets.size()) != v)
        throw std::invalid_argument("body template: offsets size");
    if (joint_regressor.rows() != joint_count || joint_regressor.cols() != v)
        throw std::invalid_argument("body template: joint regressor dimensions");
    for (int j = 0; j < joint_count; ++j)
        if (std::abs(joint_regressor.row(j).sum() - 1.0) > 1e-9)
            throw std::invalid_argument("body template: regressor rows must sum to 1");
    if (base_weights.rows() != joint_count || base_weights.cols() != v)
        throw std::invalid_argument("body template: base weight dimensions");
    if (!region.empty() && static_cast<int>(region.size()) != v)
        throw std::invalid_argument("body template: region label size");
}

std::vector<Vec3> BodyTemplate::regress_joints(const std::vector<Vec3>& vertices) const {
    std::vector<Vec3> joints(joint_regressor.rows(), Vec3::Zero());
    for (int j = 0; j < joint_regressor.rows(); ++j)
        for (int v = 0; v < joint_regressor.cols(); ++v)
            joints[j] += joint_regressor(j, v) * vertices[v];
    return joints;
}

std::vector<Vec3> canonical_body(const BodyTemplate& tmpl, const VecX& beta, const Pose& theta) {
    const int v = tmpl.vertex_count();
    if (tmpl.shape_basis.size() && beta.size() != tmpl.shape_basis.cols())
        throw std::invalid_argument("canonical_body: beta dimension mismatch");
    if (!tmpl.shape_basis.size() && beta.size() != 0)
        throw std::invalid_argument("canonical_body: template has no shape basis");

    std::vector<Vec3> out = tmpl.rest_vertices;
    if (tmpl.shape_basis.size()) {
        const VecX d = tmpl.shape_basis * beta;
        for (int i = 0; i < v; ++i) out[i] += d.segment<3>(3 * i);
    }
    if (tmpl.pose_basis.size()) {
        const int nj = static_cast<int>(tmpl.pose_basis.cols()) / 9 + 1;
        if (theta.joint_count() != nj)
            throw std::invalid_argument("canonical_body: theta dimension mismatch");
        VecX feat(9 * (nj - 1));
        for (int j = 1; j < nj; ++j) {
            const Mat3 r = rodrigues(theta.joint_rotations[j]) - Mat3::Identity();
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) feat[9 * (j - 1) + 3 * a + b] = r(a, b);
        }
        const VecX d = tmpl.pose_basis * feat;
        for (int i = 0; i < v; ++i) out[i] += d.segment<3>(3 * i);
    }
    if (!tmpl.offsets.empty())
        for (int i = 0; i < v; ++i) out[i] += tmpl.offsets[i];
    return out;
}

std::vector<Vec3> vertex_normals(const BodyTemplate& tmpl, const std::vector<Vec3>& vertices,
                                 const std::vector<Vec3>& rest_joints) {
    std::vector<Vec3> normals(vertices.size(), Vec3::Zero());
    if (!tmpl.faces.empty()) {
        for (const auto& f : tmpl.faces) {
            const Vec3 n = (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
            normals[f[0]] += n;  // cross product length carries the area weight
            normals[f[1]] += n;
            normals[f[2]] += n;
        }
    } else {
        for (size_t i = 0; i < vertices.size(); ++i) {
            double best = std::numeric_limits<double>::max();
            Vec3 nearest = Vec3::Zero();
            for (const auto& j : rest_joints) {
                const double d = (vertices[i] - j).squaredNorm();
                if (d < best) {
                    best = d;
                    nearest = j;
                }
            }
            normals[i] = vertices[i] - nearest;
        }
    }
    for (auto& n : normals) {
        const double len = n.norm();
        if (len > 0) n /= len;
    }
    return normals;
}

GarmentTemplate generate_garment_template(const BodyTemplate& body,
                                          const std::vector<Vec3>& body_vertices,
                                          const std::vector<Vec3>& rest_joints,
                                          const GarmentSpec& spec) {
    if (spec.offset <= 0.0)
        throw std::invalid_argument("garment template: offset distance must be > 0");
    if (spec.layer < 1) throw std::invalid_argument("garment template: layer index must be >= 1");

    std::vector<int> selected;
    for (int i = 0; i < static_cast<int>(body_vertices.size()); ++i) {
        if (spec.regions.empty() ||
            (!body.region.empty() &&
             std::find(spec.regions.begin(), spec.regions.end(), body.region[i]) !=
                 spec.regions.end()))
            selected.push_back(i);
    }
    if (selected.empty()) throw std::invalid_argument("garment template: empty vertex selection");

    const auto normals = vertex_normals(body, body_vertices, rest_joints);
    GarmentTemplate g;
    g.base_weights.resize(body.base_weights.rows(), selected.size());
    for (size_t k = 0; k < selected.size(); ++k) {
        const int i = selected[k];
        if (normals[i].norm() == 0.0)
            throw std::runtime_error("garment template: zero normal at vertex " +
                                     std::to_string(i));
        g.vertices.push_back(body_vertices[i] + spec.layer * spec.offset * normals[i]);
        g.source_vertex.push_back(i);
        g.base_weights.col(k) = body.base_weights.col(i);
    }
    return g;
}

GaussianSet init_gaussians_from_vertices(const std::vector<Vec3>& vertices,
                                         const std::string& entity, int sh_degree) {
    if (vertices.empty())
        throw std::invalid_argument("init_gaussians_from_vertices: empty vertex list");

    GaussianSet set;
    set.entity = entity.empty() ? "entity0" : entity;
    set.sh_degree = sh_degree;
    set.resize(static_cast<int>(vertices.size()));
    set.position = vertices;

    double spacing = 0.01;
    if (vertices.size() > 1) {
        double total = 0.0;
        for (size_t i = 0; i < vertices.size(); ++i) {
            double best = std::numeric_limits<double>::max();
            for (size_t j = 0; j < vertices.size(); ++j)
                if (j != i) best = std::min(best, (vertices[i] - vertices[j]).norm());
            total += best;
        }
        spacing = total / vertices.size();
    }
    const double ls = std::log(spacing);
    for (auto& s : set.log_scale) s = Vec3::Constant(ls);
    return set;
}

}  // namespace lsplat
