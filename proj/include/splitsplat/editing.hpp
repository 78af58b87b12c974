#pragma once

#include "splitsplat/camera.hpp"
#include "splitsplat/scene.hpp"

namespace splitsplat {

// Label-addressed edits. Every edit throws Error for a label absent from the scene and leaves the
// Gaussians of other labels untouched.

Scene remove_instance(Scene scene, Label l);

/// Appends a copy of instance l translated by `offset` under a fresh label (max label + 1).
Scene duplicate_instance(Scene scene, Label l, const Vec3& offset, Label* fresh_label = nullptr);

/// Maps means through `t` and composes its rotation onto each Gaussian's orientation.
Scene transform_instance(Scene scene, Label l, const RigidTransform& t);

Scene recolor_instance(Scene scene, Label l, const Vec3& rgb);

}  // namespace splitsplat
