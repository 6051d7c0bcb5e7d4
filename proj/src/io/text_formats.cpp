#include "lsplat/io/text_formats.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace lsplat {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << std::setprecision(17);
    return out;
}

/// Tokenizer that skips blank lines and '#' comments.
class TokenReader {
public:
    explicit TokenReader(const std::string& path) : path_(path), in_(path) {
        if (!in_) throw std::runtime_error("cannot open for reading: " + path);
    }

    bool next(std::string& tok) {
        while (true) {
            if (line_ >> tok) return true;
            std::string raw;
            if (!std::getline(in_, raw)) return false;
            ++line_number_;
            const auto hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            line_ = std::istringstream(raw);
        }
    }

    std::string expect() {
        std::string tok;
        if (!next(tok)) fail("unexpected end of file");
        return tok;
    }

    double number() {
        const std::string tok = expect();
        try {
            size_t pos = 0;
            const double v = std::stod(tok, &pos);
            if (pos == tok.size()) return v;
        } catch (const std::exception&) {
        }
        fail("expected a number, got '" + tok + "'");
    }

    long integer() {
        const std::string tok = expect();
        try {
            size_t pos = 0;
            const long v = std::stol(tok, &pos);
            if (pos == tok.size()) return v;
        } catch (const std::exception&) {
        }
        fail("expected an integer, got '" + tok + "'");
    }

    void keyword(const std::string& expected) {
        const std::string tok = expect();
        if (tok != expected) fail("expected '" + expected + "', got '" + tok + "'");
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw std::runtime_error(path_ + ":" + std::to_string(line_number_) + ": " + msg);
    }

private:
    std::string path_;
    std::ifstream in_;
    std::istringstream line_;
    int line_number_ = 0;
};

void write_rigid(std::ostream& out, const Mat4& m) {
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) out << ' ' << m(r, c);
    }
}

Mat4 read_rigid(TokenReader& tr) {
    Mat4 m = Mat4::Identity();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) m(r, c) = tr.number();
    }
    return m;
}

}  // namespace

void save_skeleton(const std::string& path, const Skeleton& skeleton) {
    auto out = open_out(path);
    out << "lsplat-skeleton 1\n";
    out << "joints " << skeleton.joint_count() << "\n";
    out << "# joint <parent> <row-major 3x4 rest-local transform>\n";
    for (int j = 0; j < skeleton.joint_count(); ++j) {
        out << "joint " << skeleton.parent[j];
        write_rigid(out, skeleton.rest_local[j]);
        out << "\n";
    }
}

Skeleton load_skeleton(const std::string& path) {
    TokenReader tr(path);
    tr.keyword("lsplat-skeleton");
    if (tr.integer() != 1) tr.fail("unsupported skeleton format version");
    tr.keyword("joints");
    const long n = tr.integer();
    if (n < 1) tr.fail("joint count must be >= 1");
    Skeleton sk;
    for (long j = 0; j < n; ++j) {
        tr.keyword("joint");
        sk.parent.push_back(static_cast<int>(tr.integer()));
        sk.rest_local.push_back(read_rigid(tr));
    }
    sk.validate();
    return sk;
}

void save_camera(const std::string& path, const Camera& cam) {
    auto out = open_out(path);
    out << "lsplat-camera 1\n";
    out << "extrinsic";
    write_rigid(out, cam.extrinsic);
    out << "\n";
    out << "intrinsics " << cam.fx << ' ' << cam.fy << ' ' << cam.cx << ' ' << cam.cy << "\n";
    out << "size " << cam.width << ' ' << cam.height << "\n";
    out << "near " << cam.near << "\n";
}

Camera load_camera(const std::string& path) {
    TokenReader tr(path);
    tr.keyword("lsplat-camera");
    if (tr.integer() != 1) tr.fail("unsupported camera format version");
    Camera cam;
    tr.keyword("extrinsic");
    cam.extrinsic = read_rigid(tr);
    tr.keyword("intrinsics");
    cam.fx = tr.number();
    cam.fy = tr.number();
    cam.cx = tr.number();
    cam.cy = tr.number();
    tr.keyword("size");
    cam.width = static_cast<int>(tr.integer());
    cam.height = static_cast<int>(tr.integer());
    tr.keyword("near");
    cam.near = tr.number();
    cam.validate();
    return cam;
}

void save_poses(const std::string& path, const std::vector<Pose>& poses) {
    auto out = open_out(path);
    out << "lsplat-poses 1\n";
    const int joints = poses.empty() ? 0 : poses.front().joint_count();
    out << "joints " << joints << "\n";
    out << "frames " << poses.size() << "\n";
    for (const auto& pose : poses) {
        if (pose.joint_count() != joints) {
            throw std::invalid_argument("save_poses: inconsistent joint counts");
        }
        out << "frame " << pose.root_translation.x() << ' ' << pose.root_translation.y() << ' '
            << pose.root_translation.z();
        for (const auto& aa : pose.joint_rotations) {
            out << ' ' << aa.x() << ' ' << aa.y() << ' ' << aa.z();
        }
        out << "\n";
    }
}

std::vector<Pose> load_poses(const std::string& path) {
    TokenReader tr(path);
    tr.keyword("lsplat-poses");
    if (tr.integer() != 1) tr.fail("unsupported pose format version");
    tr.keyword("joints");
    const long joints = tr.integer();
    if (joints < 1) tr.fail("joint count must be >= 1");
    tr.keyword("frames");
    const long frames = tr.integer();
    if (frames < 0) tr.fail("negative frame count");
    std::vector<Pose> poses;
    poses.reserve(frames);
    for (long f = 0; f < frames; ++f) {
        tr.keyword("frame");
        Pose pose;
        for (int c = 0; c < 3; ++c) pose.root_translation[c] = tr.number();
        pose.joint_rotations.resize(joints);
        for (long j = 0; j < joints; ++j) {
            for (int c = 0; c < 3; ++c) pose.joint_rotations[j][c] = tr.number();
        }
        pose.canonicalize();
        poses.push_back(std::move(pose));
    }
    return poses;
}

}  // namespace lsplat
