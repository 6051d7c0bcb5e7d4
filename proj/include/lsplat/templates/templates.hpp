#pragma once

#include <array>
#include <string>
#include <vector>

#include "lsplat/gaussians/gaussian_set.hpp"
#include "lsplat/geometry/lbs.hpp"
#include "lsplat/geometry/skeleton.hpp"

namespace lsplat {

/// Canonical-space body template sharing the run's skeleton: rest vertices,
/// linear shape/pose-corrective bases, free-form per-vertex offsets, a joint
/// regressor and base skinning weights.
struct BodyTemplate {
    std::vector<Vec3> rest_vertices;
    std::vector<std::array<int, 3>> faces;   // optional, used for normals
    MatX shape_basis;                        // 3V x dim(beta), may be empty
    MatX pose_basis;                         // 3V x 9*(J-1), may be empty
    std::vector<Vec3> offsets;               // zero by default
    MatX joint_regressor;                    // J x V, rows sum to 1
    MatX base_weights;                       // J x V
    std::vector<std::string> region;         // optional per-vertex labels

    int vertex_count() const { return static_cast<int>(rest_vertices.size()); }
    void validate(int joint_count) const;
    std::vector<Vec3> regress_joints(const std::vector<Vec3>& vertices) const;
};

/// rest + shape blend + pose-corrective blend + offsets.
std::vector<Vec3> canonical_body(const BodyTemplate& tmpl, const VecX& beta, const Pose& theta);

/// Area-weighted vertex normals when faces exist, else radial from the
/// nearest joint.
std::vector<Vec3> vertex_normals(const BodyTemplate& tmpl, const std::vector<Vec3>& vertices,
                                 const std::vector<Vec3>& rest_joints);

struct GarmentSpec {
    std::string entity = "garment";
    std::vector<std::string> regions;  // empty selects every vertex
    double offset = 0.02;              // shell distance in meters, > 0
    int layer = 1;                     // 1 = innermost garment
};

struct GarmentTemplate {
    std::vector<Vec3> vertices;
    std::vector<int> source_vertex;  // body vertex each shell vertex came from
    MatX base_weights;               // copied from the underlying body vertices
};

GarmentTemplate generate_garment_template(const BodyTemplate& body,
                                          const std::vector<Vec3>& body_vertices,
                                          const std::vector<Vec3>& rest_joints,
                                          const GarmentSpec& spec);

/// One Gaussian per vertex: identity rotation, isotropic scale at the mean
/// nearest-neighbor spacing, opacity logit 0 and mid-gray radiance.
GaussianSet init_gaussians_from_vertices(const std::vector<Vec3>& vertices,
                                         const std::string& entity, int sh_degree);

}  // namespace lsplat
