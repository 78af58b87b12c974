#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "splitsplat/scene.hpp"

namespace splitsplat {

/// Raised by segmenter ports for a single failed request; refinement falls back and carries on.
class SegmenterError : public Error {
public:
    using Error::Error;
};

/// Prompted segmenter: pixel prompts in, binary mask of the view's dimensions out.
class SegmenterPort {
public:
    virtual ~SegmenterPort() = default;
    virtual Mask segment(int view_id, const std::vector<Vec2>& prompts) = 0;
};

/// Answers from per-view label images (e.g. precomputed automatic masks): returns the region that
/// holds the most prompts, ignoring background.
class FileSegmenter : public SegmenterPort {
public:
    explicit FileSegmenter(std::map<int, LabelImage> label_images);
    /// Loads every `view_XXXX.pgm` label image found in `dir`.
    static FileSegmenter from_directory(const std::filesystem::path& dir);
    Mask segment(int view_id, const std::vector<Vec2>& prompts) override;

private:
    std::map<int, LabelImage> images_;
};

struct OracleNoise {
    int boundary_px = 0;  // random dilation (+) or erosion (-) up to this many pixels
    std::uint64_t seed = 0;
};

/// Ground-truth segmenter for synthetic scenes: returns the GT mask under the first prompt,
/// optionally with a seeded boundary perturbation.
class OracleSegmenter : public SegmenterPort {
public:
    explicit OracleSegmenter(std::map<int, LabelImage> gt, OracleNoise noise = {});
    Mask segment(int view_id, const std::vector<Vec2>& prompts) override;

private:
    std::map<int, LabelImage> gt_;
    OracleNoise noise_;
    std::mutex mu_;
    std::mt19937_64 rng_;
};

/// Client for the line-delimited JSON segmenter protocol. Requests are serialized.
class ProcessSegmenter : public SegmenterPort {
public:
    /// Launches `command` through /bin/sh and talks to it over its stdin/stdout.
    static std::unique_ptr<ProcessSegmenter> spawn(const std::string& command, std::chrono::milliseconds timeout);
    /// Connects to a server listening on a Unix domain socket.
    static std::unique_ptr<ProcessSegmenter> connect(const std::string& socket_path, std::chrono::milliseconds timeout);
    ~ProcessSegmenter() override;
    ProcessSegmenter(const ProcessSegmenter&) = delete;
    ProcessSegmenter& operator=(const ProcessSegmenter&) = delete;

    Mask segment(int view_id, const std::vector<Vec2>& prompts) override;

private:
    ProcessSegmenter(int read_fd, int write_fd, int pid, std::chrono::milliseconds timeout);
    std::string read_line();

    int read_fd_ = -1;
    int write_fd_ = -1;
    int pid_ = -1;
    std::chrono::milliseconds timeout_;
    std::string buffer_;
    std::mutex mu_;
};

}  // namespace splitsplat
