#include "splitsplat/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "splitsplat/ply.hpp"

namespace splitsplat::io {

using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof v);
    out.append(buf, sizeof buf);
}

// Sequential little-endian reader over a byte buffer with truncation checks.
class Reader {
public:
    Reader(const std::string& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}
    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size()) throw Error(what_ + ": truncated file");
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof v);
        pos_ += sizeof v;
        return v;
    }
    void expect_magic(const char (&magic)[4]) {
        if (bytes_.size() < 4 || std::memcmp(bytes_.data(), magic, 4) != 0) throw Error(what_ + ": bad magic");
        pos_ = 4;
    }
    void expect_end() const {
        if (pos_ != bytes_.size()) throw Error(what_ + ": trailing bytes");
    }

private:
    const std::string& bytes_;
    std::string what_;
    std::size_t pos_ = 0;
};

double logit(double a) {
    constexpr double eps = 1e-7;
    a = std::clamp(a, eps, 1.0 - eps);
    return std::log(a / (1.0 - a));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void save_gaussians(const fs::path& path, std::span<const Gaussian> scene) {
    ply::VertexTable t;
    t.count = scene.size();
    const char* names[] = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
                           "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};
    for (const char* n : names) t.properties.push_back({n, ply::Type::float32});
    t.properties.push_back({"instance_label", ply::Type::int32});
    for (const auto& p : t.properties) t.columns[p.name].reserve(scene.size());
    for (const auto& g : scene) {
        if (!g.mean.allFinite() || !g.scale.allFinite() || !g.color.allFinite() || !std::isfinite(g.opacity))
            throw Error("save_gaussians: non-finite Gaussian field");
        auto col = [&](const char* n) -> std::vector<double>& { return t.columns[n]; };
        col("x").push_back(g.mean.x());
        col("y").push_back(g.mean.y());
        col("z").push_back(g.mean.z());
        col("nx").push_back(0.0);
        col("ny").push_back(0.0);
        col("nz").push_back(0.0);
        for (int c = 0; c < 3; ++c) col(names[6 + c]).push_back((g.color[c] - 0.5) / kSh0);
        col("opacity").push_back(logit(g.opacity));
        for (int c = 0; c < 3; ++c) col(names[10 + c]).push_back(std::log(g.scale[c]));
        col("rot_0").push_back(g.rotation.w());
        col("rot_1").push_back(g.rotation.x());
        col("rot_2").push_back(g.rotation.y());
        col("rot_3").push_back(g.rotation.z());
        col("instance_label").push_back(g.label);
    }
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    ply::write(path, t);
}

Scene load_gaussians(const fs::path& path) {
    const ply::VertexTable t = ply::read(path);
    const char* required[] = {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0",
                              "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};
    for (const char* n : required)
        if (!t.has(n)) throw Error("load_gaussians: " + path.string() + " lacks property '" + n + "'");
    const bool labeled = t.has("instance_label");
    Scene scene(t.count);
    for (std::size_t i = 0; i < t.count; ++i) {
        Gaussian& g = scene[i];
        auto v = [&](const char* n) { return t.column(n)[i]; };
        g.mean = Vec3(v("x"), v("y"), v("z"));
        g.color = Vec3(v("f_dc_0"), v("f_dc_1"), v("f_dc_2")) * kSh0 + Vec3::Constant(0.5);
        g.opacity = sigmoid(v("opacity"));
        g.scale = Vec3(std::exp(v("scale_0")), std::exp(v("scale_1")), std::exp(v("scale_2")));
        g.rotation = Quat(v("rot_0"), v("rot_1"), v("rot_2"), v("rot_3"));
        const double norm = g.rotation.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) throw Error("load_gaussians: invalid rotation at vertex " + std::to_string(i));
        if (std::abs(norm - 1.0) > 1e-6) g.rotation.normalize();
        g.label = labeled ? static_cast<Label>(t.column("instance_label")[i]) : kBackground;
        if (!g.mean.allFinite() || !g.scale.allFinite() || !g.color.allFinite() || !std::isfinite(g.opacity))
            throw Error("load_gaussians: non-finite field at vertex " + std::to_string(i));
    }
    return scene;
}

void save_point_cloud(const fs::path& path, const PointCloud& pc) {
    if (pc.has_labels() && pc.labels.size() != pc.points.size()) throw Error("save_point_cloud: label count mismatch");
    ply::VertexTable t;
    t.count = pc.size();
    for (const char* n : {"x", "y", "z"}) t.properties.push_back({n, ply::Type::float64});
    if (pc.has_labels()) t.properties.push_back({"instance_label", ply::Type::int32});
    for (const auto& p : pc.points) {
        t.columns["x"].push_back(p.x());
        t.columns["y"].push_back(p.y());
        t.columns["z"].push_back(p.z());
    }
    if (pc.has_labels()) t.columns["instance_label"].assign(pc.labels.begin(), pc.labels.end());
    if (t.count == 0)
        for (const auto& p : t.properties) t.columns[p.name];
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    ply::write(path, t);
}

PointCloud load_point_cloud(const fs::path& path) {
    const ply::VertexTable t = ply::read(path);
    PointCloud pc;
    const auto &x = t.column("x"), &y = t.column("y"), &z = t.column("z");
    for (std::size_t i = 0; i < t.count; ++i) {
        pc.points.emplace_back(x[i], y[i], z[i]);
        if (!pc.points.back().allFinite()) throw Error("load_point_cloud: non-finite point " + std::to_string(i));
    }
    const char* label_col = t.has("instance_label") ? "instance_label" : (t.has("label") ? "label" : nullptr);
    if (label_col)
        for (double l : t.column(label_col)) pc.labels.push_back(static_cast<Label>(l));
    return pc;
}

void save_cameras(const fs::path& path, std::span<const Camera> cameras) {
    json arr = json::array();
    for (const auto& c : cameras) {
        arr.push_back({{"fx", c.fx},
                       {"fy", c.fy},
                       {"cx", c.cx},
                       {"cy", c.cy},
                       {"W", c.width},
                       {"H", c.height},
                       {"quaternion", {c.rotation.w(), c.rotation.x(), c.rotation.y(), c.rotation.z()}},
                       {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}}});
    }
    write_file(path, arr.dump(1) + "\n");
}

std::vector<Camera> load_cameras(const fs::path& path) {
    std::vector<Camera> out;
    try {
        const json arr = json::parse(read_file(path));
        if (!arr.is_array()) throw Error("load_cameras: expected a JSON list in " + path.string());
        for (const auto& j : arr) {
            Camera c;
            c.fx = j.at("fx").get<double>();
            c.fy = j.at("fy").get<double>();
            c.cx = j.at("cx").get<double>();
            c.cy = j.at("cy").get<double>();
            c.width = (j.contains("W") ? j.at("W") : j.at("width")).get<int>();
            c.height = (j.contains("H") ? j.at("H") : j.at("height")).get<int>();
            const auto& q = j.at("quaternion");
            if (q.size() != 4) throw Error("load_cameras: quaternion needs 4 values");
            c.rotation = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
            const auto& t = j.at("translation");
            if (t.size() != 3) throw Error("load_cameras: translation needs 3 values");
            c.translation = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
            c.validate();
            out.push_back(c);
        }
    } catch (const json::exception& e) {
        throw Error("load_cameras: " + path.string() + ": " + e.what());
    }
    return out;
}

void save_depth(const fs::path& path, const DepthMap& d) {
    std::string out(kDepthMagic, 4);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(d.width));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(d.height));
    put<std::uint32_t>(out, 0);
    for (float v : d.data) put<float>(out, v);
    write_file(path, out);
}

DepthMap load_depth(const fs::path& path) {
    const std::string bytes = read_file(path);
    Reader r(bytes, "load_depth " + path.string());
    r.expect_magic(kDepthMagic);
    const auto w = r.get<std::uint32_t>(), h = r.get<std::uint32_t>();
    r.get<std::uint32_t>();
    if (w > (1u << 16) || h > (1u << 16)) throw Error("load_depth: implausible dimensions");
    DepthMap d(static_cast<int>(w), static_cast<int>(h));
    for (auto& v : d.data) v = r.get<float>();
    r.expect_end();
    return d;
}

void save_label_image(const fs::path& path, const LabelImage& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n65535\n";
    for (std::int32_t v : img.data) {
        if (v < 0 || v > 65535) throw Error("save_label_image: label " + std::to_string(v) + " outside [0, 65535]");
        out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v & 0xff));
    }
    write_file(path, out);
}

namespace {

// Parses a binary PNM header ("P5"/"P6"), returning the offset of the pixel data.
std::size_t pnm_header(const std::string& bytes, const std::string& magic, int& w, int& h, int& maxval,
                       const std::string& what) {
    std::size_t pos = 0;
    auto token = [&]() {
        for (;;) {
            while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (start == pos) throw Error(what + ": truncated header");
        return bytes.substr(start, pos - start);
    };
    if (token() != magic) throw Error(what + ": bad magic (expected " + magic + ")");
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::logic_error&) {
        throw Error(what + ": malformed header");
    }
    if (w < 0 || h < 0 || maxval <= 0 || maxval > 65535) throw Error(what + ": invalid header values");
    return pos + 1;  // single whitespace byte after maxval
}

}  // namespace

LabelImage load_label_image(const fs::path& path) {
    const std::string bytes = read_file(path);
    const std::string what = "load_label_image " + path.string();
    int w, h, maxval;
    const std::size_t off = pnm_header(bytes, "P5", w, h, maxval, what);
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    const std::size_t need = static_cast<std::size_t>(w) * h * bpp;
    if (bytes.size() < off + need) throw Error(what + ": truncated pixel data");
    if (bytes.size() > off + need) throw Error(what + ": trailing bytes");
    LabelImage img(w, h);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + off + i * bpp);
        img.data[i] = bpp == 2 ? (p[0] << 8) | p[1] : p[0];
    }
    return img;
}

std::string view_stem(int view_id) {
    std::ostringstream ss;
    ss << "view_" << std::setw(4) << std::setfill('0') << view_id;
    return ss.str();
}

void save_mask_set(const fs::path& dir, const MaskSet& m) {
    m.validate();
    fs::create_directories(dir);
    const std::string stem = view_stem(m.view_id);
    save_label_image(dir / (stem + ".pgm"), m.to_label_image());
    json ids = json::array();
    for (const auto& [id, mask] : m.masks) ids.push_back(id);
    const json side = {{"view_id", m.view_id}, {"stage", to_string(m.stage)}, {"ids", ids}};
    write_file(dir / (stem + ".json"), side.dump() + "\n");
}

MaskSet load_mask_set(const fs::path& dir, int view_id) {
    const std::string stem = view_stem(view_id);
    const LabelImage img = load_label_image(dir / (stem + ".pgm"));
    json side;
    try {
        side = json::parse(read_file(dir / (stem + ".json")));
    } catch (const json::exception& e) {
        throw Error("load_mask_set: malformed sidecar for view " + std::to_string(view_id) + ": " + e.what());
    }
    MaskSet m;
    try {
        if (side.at("view_id").get<int>() != view_id) throw Error("load_mask_set: sidecar view id mismatch");
        m = MaskSet::from_label_image(img, view_id, mask_stage_from_string(side.at("stage").get<std::string>()));
        std::set<Label> ids;
        for (const auto& v : side.at("ids")) ids.insert(v.get<Label>());
        if (ids.count(kBackground)) throw Error("load_mask_set: id 0 is reserved for background");
        for (const auto& [id, mask] : m.masks)
            if (!ids.count(id))
                throw Error("load_mask_set: view " + std::to_string(view_id) + " has pixels with undeclared id " +
                            std::to_string(id));
        // Declared ids whose pixels were all overwritten by overlaps stay as empty masks.
        for (Label id : ids) m.masks.try_emplace(id, img.width, img.height, 0);
    } catch (const json::exception& e) {
        throw Error("load_mask_set: malformed sidecar for view " + std::to_string(view_id) + ": " + e.what());
    }
    return m;
}

void save_image(const fs::path& path, const Image& img) {
    const std::string ext = path.extension().string();
    std::string out;
    if (ext == ".pfm") {
        out = "PF\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n-1.0\n";
        for (int y = img.height - 1; y >= 0; --y)
            for (int x = 0; x < img.width; ++x)
                for (int c = 0; c < 3; ++c) put<float>(out, static_cast<float>(img.at(x, y)[c]));
    } else if (ext == ".ppm") {
        out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
        for (double v : img.data) out.push_back(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    } else {
        throw Error("save_image: unsupported extension '" + ext + "' (use .pfm or .ppm)");
    }
    write_file(path, out);
}

Image load_image(const fs::path& path) {
    const std::string bytes = read_file(path);
    const std::string ext = path.extension().string();
    const std::string what = "load_image " + path.string();
    if (ext == ".ppm") {
        int w, h, maxval;
        const std::size_t off = pnm_header(bytes, "P6", w, h, maxval, what);
        if (maxval > 255) throw Error(what + ": 16-bit PPM is not supported");
        const std::size_t need = static_cast<std::size_t>(w) * h * 3;
        if (bytes.size() != off + need) throw Error(what + ": pixel data size mismatch");
        Image img(w, h);
        for (std::size_t i = 0; i < need; ++i)
            img.data[i] = static_cast<unsigned char>(bytes[off + i]) / static_cast<double>(maxval);
        return img;
    }
    if (ext == ".pfm") {
        std::istringstream hs(bytes);
        std::string magic;
        int w = 0, h = 0;
        double scale = 0.0;
        hs >> magic >> w >> h >> scale;
        if (magic != "PF") throw Error(what + ": bad magic (expected PF)");
        if (!hs || w < 0 || h < 0) throw Error(what + ": malformed header");
        if (scale >= 0.0) throw Error(what + ": big-endian PFM is not supported");
        const std::size_t off = static_cast<std::size_t>(hs.tellg()) + 1;
        const std::size_t need = static_cast<std::size_t>(w) * h * 3 * sizeof(float);
        if (bytes.size() != off + need) throw Error(what + ": pixel data size mismatch");
        Image img(w, h);
        const char* p = bytes.data() + off;
        for (int y = h - 1; y >= 0; --y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c) {
                    float v;
                    std::memcpy(&v, p, sizeof v);
                    p += sizeof v;
                    img.at(x, y)[c] = v;
                }
        return img;
    }
    throw Error(what + ": unsupported extension '" + ext + "'");
}

void save_descriptor_entries(const fs::path& path, const DescriptorEntries& entries) {
    const Eigen::Index d = entries.empty() ? 0 : entries.front().second.size();
    std::string out(kDescriptorMagic, 4);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& [label, v] : entries) {
        if (v.size() != d) throw Error("save_descriptors: mixed dimensions");
        put<std::int32_t>(out, label);
        for (Eigen::Index i = 0; i < d; ++i) put<float>(out, static_cast<float>(v[i]));
    }
    write_file(path, out);
}

DescriptorEntries load_descriptor_entries(const fs::path& path) {
    const std::string bytes = read_file(path);
    Reader r(bytes, "load_descriptors " + path.string());
    r.expect_magic(kDescriptorMagic);
    const auto d = r.get<std::uint32_t>(), n = r.get<std::uint32_t>();
    if (n > 0 && d == 0) throw Error("load_descriptors: zero dimension with entries");
    if (static_cast<std::uint64_t>(n) * (4 + 4ull * d) > bytes.size()) throw Error("load_descriptors: truncated file");
    DescriptorEntries out;
    for (std::uint32_t i = 0; i < n; ++i) {
        const Label label = r.get<std::int32_t>();
        Eigen::VectorXd v(d);
        for (std::uint32_t k = 0; k < d; ++k) v[k] = r.get<float>();
        if (!v.allFinite()) throw Error("load_descriptors: non-finite vector for label " + std::to_string(label));
        out.emplace_back(label, std::move(v));
    }
    r.expect_end();
    return out;
}

DescriptorTable load_descriptors(const fs::path& path) {
    std::map<Label, std::vector<Eigen::VectorXd>> by_label;
    for (auto& [label, v] : load_descriptor_entries(path)) by_label[label].push_back(std::move(v));
    DescriptorTable table;
    for (const auto& [label, vs] : by_label) {
        try {
            table.instances.emplace(label, aggregate_instance_descriptor(vs));
        } catch (const Error& e) {
            throw Error("load_descriptors: label " + std::to_string(label) + ": " + e.what());
        }
    }
    return table;
}

Eigen::VectorXd load_text_vector(const fs::path& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kDescriptorMagic, 4) == 0) {
        const auto entries = load_descriptor_entries(path);
        if (entries.empty()) throw Error("load_text_vector: descriptor file holds no vector");
        return entries.front().second;
    }
    try {
        const auto v = json::parse(bytes).get<std::vector<double>>();
        if (v.empty()) throw Error("load_text_vector: empty vector");
        Eigen::VectorXd out = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        if (!out.allFinite()) throw Error("load_text_vector: non-finite value");
        return out;
    } catch (const json::exception& e) {
        throw Error("load_text_vector: " + path.string() + ": " + e.what());
    }
}

void save_manifest(const fs::path& path, const Manifest& m) {
    json j = {{"cameras", m.cameras.generic_string()}, {"images", m.images.generic_string()},
              {"depths", m.depths.generic_string()},   {"masks", m.masks.generic_string()},
              {"points", m.points.generic_string()},   {"config", m.config}};
    if (m.descriptors) j["descriptors"] = m.descriptors->generic_string();
    if (m.gt_points) j["gt_points"] = m.gt_points->generic_string();
    write_file(path, j.dump(2) + "\n");
}

Manifest load_manifest(const fs::path& path) {
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    Manifest m;
    try {
        const json j = json::parse(read_file(path));
        m.cameras = resolve(j.at("cameras").get<std::string>());
        m.images = resolve(j.at("images").get<std::string>());
        m.depths = resolve(j.at("depths").get<std::string>());
        m.masks = resolve(j.at("masks").get<std::string>());
        m.points = resolve(j.at("points").get<std::string>());
        if (j.contains("descriptors")) m.descriptors = resolve(j["descriptors"].get<std::string>());
        if (j.contains("gt_points")) m.gt_points = resolve(j["gt_points"].get<std::string>());
        if (j.contains("config")) m.config = j["config"];
        if (!m.config.is_object()) throw Error("load_manifest: config must be an object");
    } catch (const json::exception& e) {
        throw Error("load_manifest: " + path.string() + ": " + e.what());
    }
    for (const auto& p : {m.cameras, m.points})
        if (!fs::exists(p)) throw Error("load_manifest: missing file " + p.string());
    for (const auto& p : {m.images, m.depths, m.masks})
        if (!fs::is_directory(p)) throw Error("load_manifest: missing directory " + p.string());
    return m;
}

std::vector<ViewAssets> load_views(const Manifest& m, int subsample) {
    if (subsample < 1) throw Error("load_views: subsample must be >= 1");
    const auto cameras = load_cameras(m.cameras);
    std::vector<ViewAssets> views;
    for (std::size_t k = 0; k < cameras.size(); k += static_cast<std::size_t>(subsample)) {
        const int id = static_cast<int>(k);
        const std::string stem = view_stem(id);
        ViewAssets v;
        v.camera = cameras[k];
        const fs::path pfm = m.images / (stem + ".pfm"), ppm = m.images / (stem + ".ppm");
        v.image = load_image(fs::exists(pfm) ? pfm : ppm);
        v.depth = load_depth(m.depths / (stem + ".depth"));
        v.masks = load_mask_set(m.masks, id);
        const int w = v.camera.width, h = v.camera.height;
        if (v.image.width != w || v.image.height != h || !v.depth.same_shape(w, h) || v.masks.width != w ||
            v.masks.height != h)
            throw Error("load_views: view " + std::to_string(id) + " assets disagree with camera size");
        views.push_back(std::move(v));
    }
    return views;
}

void save_views(const fs::path& dir, std::span<const ViewAssets> views, Manifest& m) {
    fs::create_directories(dir);
    std::vector<Camera> cams;
    for (std::size_t k = 0; k < views.size(); ++k) {
        const auto& v = views[k];
        if (v.masks.view_id != static_cast<int>(k)) throw Error("save_views: view ids must equal positions");
        cams.push_back(v.camera);
        const std::string stem = view_stem(static_cast<int>(k));
        save_image(dir / "images" / (stem + ".pfm"), v.image);
        save_depth(dir / "depths" / (stem + ".depth"), v.depth);
        save_mask_set(dir / "masks", v.masks);
    }
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "depths");
    fs::create_directories(dir / "masks");
    save_cameras(dir / "cameras.json", cams);
    m.cameras = "cameras.json";
    m.images = "images";
    m.depths = "depths";
    m.masks = "masks";
}

}  // namespace splitsplat::io
