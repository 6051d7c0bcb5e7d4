#pragma once

#include <string>
#include <vector>

#include "lsplat/gaussians/gaussian_set.hpp"
#include "lsplat/geometry/lbs.hpp"
#include "lsplat/geometry/skeleton.hpp"

namespace lsplat {

/// Full model state: the skeleton plus every entity's canonical Gaussians and
/// skinning weights. Serialized as a little-endian binary file (magic
/// "LSPLATCK", version 1); round-trips are bitwise exact.
struct Checkpoint {
    struct Entity {
        GaussianSet set;
        SkinningWeights weights;
    };

    Skeleton skeleton;
    std::vector<Entity> entities;

    const Entity* find(const std::string& name) const {
        for (const auto& e : entities) {
            if (e.set.entity == name) return &e;
        }
        return nullptr;
    }
    Entity* find(const std::string& name) {
        return const_cast<Entity*>(static_cast<const Checkpoint*>(this)->find(name));
    }
};

/// Writes to a temporary file in the same directory, then renames into place,
/// so a crash never leaves a truncated checkpoint behind.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

/// Throws std::runtime_error naming the offending field on bad magic,
/// version, or truncation.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lsplat
