#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "splitsplat/propagation.hpp"
#include "splitsplat/scene.hpp"
#include "splitsplat/semantics.hpp"

namespace splitsplat::io {

namespace fs = std::filesystem;

/// Zeroth-order spherical harmonic constant used by 3DGS to store colors as f_dc.
inline constexpr double kSh0 = 0.28209479177387814;

// Gaussians: 3DGS binary PLY (x y z nx ny nz f_dc_0..2 opacity scale_0..2 rot_0..3) plus an int32
// instance_label. Opacity is stored as a logit, scales as logs, rotation as w x y z. Files without
// instance_label load as background.
void save_gaussians(const fs::path& path, std::span<const Gaussian> scene);
Scene load_gaussians(const fs::path& path);

// Point clouds: PLY with x y z and an optional instance_label (or label) column.
void save_point_cloud(const fs::path& path, const PointCloud& pc);
PointCloud load_point_cloud(const fs::path& path);

// Cameras: JSON list of {fx, fy, cx, cy, W, H, quaternion [w x y z], translation}; view id = position.
void save_cameras(const fs::path& path, std::span<const Camera> cameras);
std::vector<Camera> load_cameras(const fs::path& path);

// Depth: "SSDP", uint32 W, uint32 H, uint32 reserved, then W*H little-endian float32. NaN = invalid.
inline constexpr char kDepthMagic[4] = {'S', 'S', 'D', 'P'};
void save_depth(const fs::path& path, const DepthMap& d);
DepthMap load_depth(const fs::path& path);

// Label images: 16-bit binary PGM (P5, maxval 65535).
void save_label_image(const fs::path& path, const LabelImage& img);
LabelImage load_label_image(const fs::path& path);

// Masks: <dir>/view_XXXX.pgm plus a view_XXXX.json sidecar {view_id, stage, ids}. Overlapping masks
// keep the larger id on the shared pixels.
std::string view_stem(int view_id);
void save_mask_set(const fs::path& dir, const MaskSet& m);
MaskSet load_mask_set(const fs::path& dir, int view_id);

// Images: 8-bit binary PPM (P6) or little-endian PFM, chosen by extension (.ppm / .pfm).
void save_image(const fs::path& path, const Image& img);
Image load_image(const fs::path& path);

// Descriptors: "SSDS", uint32 D, uint32 count, then count x (int32 label, D float32), unnormalized.
inline constexpr char kDescriptorMagic[4] = {'S', 'S', 'D', 'S'};
using DescriptorEntries = std::vector<std::pair<Label, Eigen::VectorXd>>;
void save_descriptor_entries(const fs::path& path, const DescriptorEntries& entries);
/// Raw entries; a file with count 0 may declare D = 0.
DescriptorEntries load_descriptor_entries(const fs::path& path);
/// Entries aggregated per label (mean, then normalize).
DescriptorTable load_descriptors(const fs::path& path);
/// A query vector: a JSON array of numbers, or the first entry of a descriptor file.
Eigen::VectorXd load_text_vector(const fs::path& path);

/// Asset locations of a scene. Relative paths resolve against the manifest's directory.
struct Manifest {
    fs::path cameras;
    fs::path images;  // directory of view_XXXX.{pfm,ppm}
    fs::path depths;  // directory of view_XXXX.depth
    fs::path masks;   // directory of view_XXXX.pgm/.json (raw masks)
    fs::path points;  // dense point cloud
    std::optional<fs::path> descriptors;
    std::optional<fs::path> gt_points;  // labeled GT point cloud for evaluation
    nlohmann::json config = nlohmann::json::object();  // overrides, e.g. {"tau_depth": 0.05}
};

void save_manifest(const fs::path& path, const Manifest& m);
Manifest load_manifest(const fs::path& path);

/// Loads every `subsample`-th view (0, s, 2s, ...) with its image, depth and raw masks, checking
/// that all sizes agree with the camera. Returned ViewAssets keep their original view ids.
std::vector<ViewAssets> load_views(const Manifest& m, int subsample = 1);

/// Writes cameras, images (PFM), depths and masks of `views` plus a manifest into `dir`.
void save_views(const fs::path& dir, std::span<const ViewAssets> views, Manifest& m);

}  // namespace splitsplat::io
