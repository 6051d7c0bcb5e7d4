#include "lsplat/io/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace lsplat {

namespace {

constexpr char kMagic[8] = {'L', 'S', 'P', 'L', 'A', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    }

    template <typename T>
    void put(const T& v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void put_bytes(const void* data, size_t n) {
        out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
    }
    void put_string(const std::string& s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        put_bytes(s.data(), s.size());
    }
    void close() {
        out_.close();
        if (!out_) throw std::runtime_error("checkpoint: write failed: " + path_);
    }

private:
    std::string path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw std::runtime_error("checkpoint: cannot open for reading: " + path);
    }

    template <typename T>
    T get(const char* field) {
        T v;
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!in_) fail(field);
        return v;
    }
    void get_bytes(void* data, size_t n, const char* field) {
        in_.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n));
        if (!in_) fail(field);
    }
    std::string get_string(const char* field) {
        const auto n = get<std::uint32_t>(field);
        if (n > (1u << 20)) fail(field);
        std::string s(n, '\0');
        get_bytes(s.data(), n, field);
        return s;
    }
    [[noreturn]] void fail(const char* field) const {
        throw std::runtime_error("checkpoint: truncated or invalid field '" + std::string(field) +
                                 "' in " + path_);
    }

private:
    std::string path_;
    std::ifstream in_;
};

void write_matrix(Writer& w, const MatX& m) {
    w.put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    w.put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    w.put_bytes(m.data(), sizeof(double) * static_cast<size_t>(m.size()));
}

MatX read_matrix(Reader& r, const char* field) {
    const auto rows = r.get<std::uint64_t>(field);
    const auto cols = r.get<std::uint64_t>(field);
    if (rows > (1u << 24) || cols > (1u << 24)) r.fail(field);
    MatX m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    r.get_bytes(m.data(), sizeof(double) * static_cast<size_t>(m.size()), field);
    return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    const std::string tmp = path + ".tmp";
    {
        Writer w(tmp);
        w.put_bytes(kMagic, sizeof(kMagic));
        w.put<std::uint32_t>(kVersion);

        w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.skeleton.joint_count()));
        for (int j = 0; j < ckpt.skeleton.joint_count(); ++j) {
            w.put<std::int32_t>(ckpt.skeleton.parent[j]);
            w.put_bytes(ckpt.skeleton.rest_local[j].data(), sizeof(double) * 16);
        }

        w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.entities.size()));
        for (const auto& ent : ckpt.entities) {
            const GaussianSet& s = ent.set;
            s.check_consistent();
            w.put_string(s.entity);
            w.put<std::uint64_t>(static_cast<std::uint64_t>(s.size()));
            w.put<std::uint32_t>(static_cast<std::uint32_t>(s.sh_degree));
            w.put_bytes(s.position.data(), sizeof(Vec3) * s.position.size());
            w.put_bytes(s.rotation.data(), sizeof(Vec4) * s.rotation.size());
            w.put_bytes(s.log_scale.data(), sizeof(Vec3) * s.log_scale.size());
            w.put_bytes(s.opacity_logit.data(), sizeof(double) * s.opacity_logit.size());
            w.put_bytes(s.sh.data(), sizeof(double) * s.sh.size());
            write_matrix(w, ent.weights.base);
            write_matrix(w, ent.weights.delta);
        }
        w.close();
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("checkpoint: rename into place failed: " + path);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.get_bytes(magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path);
    }
    const auto version = r.get<std::uint32_t>("version");
    if (version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version) +
                                 " in " + path);
    }

    Checkpoint ckpt;
    const auto joints = r.get<std::uint32_t>("joint_count");
    if (joints < 1 || joints > (1u << 16)) r.fail("joint_count");
    for (std::uint32_t j = 0; j < joints; ++j) {
        ckpt.skeleton.parent.push_back(r.get<std::int32_t>("parent"));
        Mat4 m;
        r.get_bytes(m.data(), sizeof(double) * 16, "rest_local");
        ckpt.skeleton.rest_local.push_back(m);
    }
    ckpt.skeleton.validate();

    const auto entities = r.get<std::uint32_t>("entity_count");
    if (entities > (1u << 16)) r.fail("entity_count");
    for (std::uint32_t e = 0; e < entities; ++e) {
        Checkpoint::Entity ent;
        GaussianSet& s = ent.set;
        s.entity = r.get_string("entity_name");
        const auto n = r.get<std::uint64_t>("gaussian_count");
        if (n > (1u << 24)) r.fail("gaussian_count");
        const auto degree = r.get<std::uint32_t>("sh_degree");
        if (degree > 3) r.fail("sh_degree");
        s.sh_degree = static_cast<int>(degree);
        s.resize(static_cast<int>(n));
        r.get_bytes(s.position.data(), sizeof(Vec3) * s.position.size(), "position");
        r.get_bytes(s.rotation.data(), sizeof(Vec4) * s.rotation.size(), "rotation");
        r.get_bytes(s.log_scale.data(), sizeof(Vec3) * s.log_scale.size(), "log_scale");
        r.get_bytes(s.opacity_logit.data(), sizeof(double) * s.opacity_logit.size(),
                    "opacity_logit");
        r.get_bytes(s.sh.data(), sizeof(double) * s.sh.size(), "sh");
        ent.weights.base = read_matrix(r, "base_weights");
        ent.weights.delta = read_matrix(r, "delta_weights");
        if (ent.weights.base.rows() != joints ||
            ent.weights.base.cols() != static_cast<Eigen::Index>(n) ||
            ent.weights.delta.rows() != ent.weights.base.rows() ||
            ent.weights.delta.cols() != ent.weights.base.cols()) {
            r.fail("weight dimensions");
        }
        s.check_consistent();
        ckpt.entities.push_back(std::move(ent));
    }
    return ckpt;
}

}  // namespace lsplat
