#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace splitsplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Global instance id. 0 is reserved for background; instances start at 1.
using Label = std::int32_t;
inline constexpr Label kBackground = 0;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major H x W grid.
template <typename T>
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    T& operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    const T& operator()(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    std::size_t size() const { return data.size(); }
    bool same_shape(int w, int h) const { return width == w && height == h; }
    template <typename U>
    bool same_shape(const Grid<U>& o) const { return width == o.width && height == o.height; }

    bool operator==(const Grid&) const = default;
};

/// Binary mask, one byte per pixel (0 or 1).
using Mask = Grid<std::uint8_t>;

/// Per-pixel integer label image (0 = background).
using LabelImage = Grid<std::int32_t>;

/// Linear RGB image, values nominally in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // H*W*3, row-major, channel-interleaved

    Image() = default;
    Image(int w, int h, double fill = 0.0) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

    double* at(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const double* at(int x, int y) const { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    bool operator==(const Image&) const = default;
};

/// Pinhole camera, world-to-camera extrinsics. Camera looks down +z, x right, y down.
struct Camera {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;
    Quat rotation = Quat::Identity();
    Vec3 translation = Vec3::Zero();

    /// Throws Error if intrinsics are non-positive or the quaternion is not unit.
    void validate() const;
    Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
    Vec3 to_camera(const Vec3& p) const { return rotation * p + translation; }
    /// Camera center in world coordinates.
    Vec3 center() const { return -(rotation.conjugate() * translation); }
};

/// Anisotropic 3D splat with DC-only color.
struct Gaussian {
    Vec3 mean = Vec3::Zero();
    Vec3 scale = Vec3::Constant(0.01);  // per-axis standard deviation
    Quat rotation = Quat::Identity();
    double opacity = 1.0;
    Vec3 color = Vec3::Constant(0.5);
    Label label = kBackground;
    std::optional<int> descriptor_id;

    void validate() const;
    Mat3 covariance() const;

    bool operator==(const Gaussian& o) const;
};

using Scene = std::vector<Gaussian>;

/// Depth map in meters; NaN marks invalid cells.
struct DepthMap : Grid<float> {
    using Grid<float>::Grid;
    static DepthMap invalid(int w, int h);
    bool valid(int x, int y) const;
};

enum class MaskStage { raw, propagated, refined };

std::string to_string(MaskStage stage);
MaskStage mask_stage_from_string(const std::string& s);

/// All instance masks of one view. Raw-stage ids are local to the view.
struct MaskSet {
    int view_id = 0;
    MaskStage stage = MaskStage::raw;
    int width = 0;
    int height = 0;
    std::map<Label, Mask> masks;  // local (raw) or global (propagated/refined) id -> mask

    void validate() const;
    const Mask* find(Label id) const;
    /// Encodes masks into a single label image; later ids win on overlap.
    LabelImage to_label_image() const;
    static MaskSet from_label_image(const LabelImage& img, int view_id, MaskStage stage);
};

/// Sparse label -> score accumulator for one 3D point.
class LabelWeights {
public:
    bool initialized() const { return !scores_.empty(); }
    double score(Label l) const;
    void add(Label l, double v);
    void set(Label l, double v);
    double total() const;
    /// Copy with scores divided by their sum.
    LabelWeights normalized() const;
    /// Largest score; ties go to the smaller label. Requires initialized().
    std::pair<Label, double> argmax() const;
    const std::map<Label, double>& scores() const { return scores_; }

    bool operator==(const LabelWeights&) const = default;

private:
    std::map<Label, double> scores_;
};

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Label> labels;          // empty or one per point
    std::vector<LabelWeights> weights;  // empty or one per point

    std::size_t size() const { return points.size(); }
    bool has_labels() const { return !labels.empty(); }
};

/// Unit-norm feature vector.
class InstanceDescriptor {
public:
    InstanceDescriptor() = default;
    /// Normalizes v; throws Error on zero or non-finite input.
    static InstanceDescriptor from_vector(const Eigen::VectorXd& v);
    const Eigen::VectorXd& vector() const { return v_; }
    Eigen::Index dim() const { return v_.size(); }

private:
    Eigen::VectorXd v_;
};

/// Gaussians carrying label l, in scene order.
Scene instance_subset(std::span<const Gaussian> scene, Label l);

/// Indices of the Gaussians carrying label l.
std::vector<std::size_t> instance_indices(std::span<const Gaussian> scene, Label l);

/// Sorted distinct labels present in the scene (background included if present).
std::vector<Label> scene_labels(std::span<const Gaussian> scene);

std::vector<Vec3> gaussian_means(std::span<const Gaussian> scene);

}  // namespace splitsplat
