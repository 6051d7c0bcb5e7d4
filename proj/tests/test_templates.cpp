#include <doctest.h>

#include "helpers.hpp"
#include "lsplat/templates/templates.hpp"

using namespace lsplat;
using namespace lsplat::testing;

namespace {

/// Unit-sphere point cloud with a single joint at the origin.
BodyTemplate sphere_body(int n) {
    BodyTemplate tmpl;
    for (int i = 0; i < n; ++i) {
        const double phi = std::acos(1.0 - 2.0 * (i + 0.5) / n);
        const double theta = 2.39996322972865332 * i;  // golden-angle spiral
        tmpl.rest_vertices.push_back(
            Vec3(std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta), std::cos(phi)));
        tmpl.region.push_back(i < n / 2 ? "upper" : "lower");
    }
    tmpl.joint_regressor = MatX::Constant(1, n, 1.0 / n);
    tmpl.base_weights = MatX::Ones(1, n);
    return tmpl;
}

}  // namespace

TEST_CASE("canonical_body applies shape, pose and offsets") {
    BodyTemplate tmpl = sphere_body(8);
    const Pose rest = Pose::rest(1);

    // no bases: identity
    auto out = canonical_body(tmpl, VecX(), rest);
    for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == tmpl.rest_vertices[i]);

    // single shape direction moving every vertex by beta along +x
    tmpl.shape_basis = MatX::Zero(3 * 8, 1);
    for (int i = 0; i < 8; ++i) tmpl.shape_basis(3 * i, 0) = 1.0;
    VecX beta(1);
    beta << 0.25;
    out = canonical_body(tmpl, beta, rest);
    for (size_t i = 0; i < out.size(); ++i)
        CHECK((out[i] - tmpl.rest_vertices[i] - Vec3(0.25, 0, 0)).norm() < 1e-12);

    // free-form offsets stack on top
    tmpl.offsets.assign(8, Vec3(0, 0.1, 0));
    out = canonical_body(tmpl, beta, rest);
    CHECK((out[0] - tmpl.rest_vertices[0] - Vec3(0.25, 0.1, 0)).norm() < 1e-12);

    CHECK_THROWS(canonical_body(tmpl, VecX(), rest));  // missing beta
}

TEST_CASE("pose-corrective blendshape responds to joint rotation") {
    BodyTemplate tmpl = sphere_body(4);
    tmpl.joint_regressor = MatX::Constant(2, 4, 0.25);
    tmpl.base_weights = MatX::Constant(2, 4, 0.5);
    // one corrective column per rotation-matrix entry; pick out R(0,1)
    tmpl.pose_basis = MatX::Zero(12, 9);
    tmpl.pose_basis(0, 1) = 1.0;  // vertex 0, x displacement from feature (0,1)
    CHECK_NOTHROW(tmpl.validate(2));

    Pose pose = Pose::rest(2);
    pose.joint_rotations[1] = Vec3(0, 0, M_PI / 2);  // R(0,1) = -1
    const auto out = canonical_body(tmpl, VecX(), pose);
    CHECK(out[0].x() == doctest::Approx(tmpl.rest_vertices[0].x() - 1.0).epsilon(1e-9));
    // rest pose leaves the template unchanged
    const auto rest = canonical_body(tmpl, VecX(), Pose::rest(2));
    CHECK((rest[0] - tmpl.rest_vertices[0]).norm() < 1e-12);
}

TEST_CASE("template validation catches dimension errors") {
    BodyTemplate tmpl = sphere_body(6);
    CHECK_NOTHROW(tmpl.validate(1));
    tmpl.joint_regressor = MatX::Constant(1, 6, 0.5);  // rows no longer sum to 1
    CHECK_THROWS(tmpl.validate(1));
    tmpl = sphere_body(6);
    tmpl.base_weights = MatX::Ones(2, 6);  // joint count mismatch
    CHECK_THROWS(tmpl.validate(1));
}

TEST_CASE("garment shell sits at the offset distance") {
    BodyTemplate tmpl = sphere_body(64);
    const std::vector<Vec3> joints = {Vec3::Zero()};

    GarmentSpec spec;
    spec.offset = 0.1;
    spec.layer = 1;
    const GarmentTemplate g =
        generate_garment_template(tmpl, tmpl.rest_vertices, joints, spec);
    REQUIRE(g.vertices.size() == 64);
    // radial normals from the single joint: shell radius is exactly 1.1
    for (const auto& v : g.vertices) CHECK(std::abs(v.norm() - 1.1) < 1e-9);

    // layer 2 doubles the standoff
    spec.layer = 2;
    const GarmentTemplate g2 =
        generate_garment_template(tmpl, tmpl.rest_vertices, joints, spec);
    for (const auto& v : g2.vertices) CHECK(std::abs(v.norm() - 1.2) < 1e-9);

    // region selection restricts the vertex set and keeps provenance
    spec.layer = 1;
    spec.regions = {"upper"};
    const GarmentTemplate gu =
        generate_garment_template(tmpl, tmpl.rest_vertices, joints, spec);
    CHECK(gu.vertices.size() == 32);
    for (size_t k = 0; k < gu.vertices.size(); ++k) {
        CHECK(tmpl.region[gu.source_vertex[k]] == "upper");
        CHECK(gu.base_weights.col(k) == tmpl.base_weights.col(gu.source_vertex[k]));
    }

    spec.regions = {"no-such-region"};
    CHECK_THROWS(generate_garment_template(tmpl, tmpl.rest_vertices, joints, spec));
    spec.regions.clear();
    spec.offset = 0.0;
    CHECK_THROWS(generate_garment_template(tmpl, tmpl.rest_vertices, joints, spec));
}

TEST_CASE("face normals override radial normals") {
    BodyTemplate tmpl;
    tmpl.rest_vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    tmpl.faces = {{0, 1, 2}};
    tmpl.joint_regressor = MatX::Constant(1, 3, 1.0 / 3);
    tmpl.base_weights = MatX::Ones(1, 3);
    const auto n = vertex_normals(tmpl, tmpl.rest_vertices, {Vec3(5, 5, 5)});
    for (const auto& v : n) CHECK((v - Vec3(0, 0, 1)).norm() < 1e-12);
}

TEST_CASE("init gaussians use mean nearest-neighbor spacing") {
    const std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
    const GaussianSet set = init_gaussians_from_vertices(pts, "shirt", 1);
    REQUIRE(set.size() == 3);
    CHECK(set.entity == "shirt");
    CHECK(set.position == pts);
    // nearest distances 1, 1, 1 -> spacing 1 -> log scale 0
    for (const auto& s : set.log_scale) CHECK(s.norm() == 0.0);
    for (const auto& q : set.rotation) CHECK(q == Vec4(1, 0, 0, 0));
    for (double o : set.opacity_logit) CHECK(o == 0.0);
    for (double c : set.sh) CHECK(c == 0.0);  // mid gray under the DC convention

    const GaussianSet anon = init_gaussians_from_vertices(pts, "", 0);
    CHECK(anon.entity == "entity0");
    CHECK_THROWS(init_gaussians_from_vertices({}, "x", 1));
}
