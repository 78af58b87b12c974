#include "splitsplat/segmenter.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <regex>

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include "splitsplat/image.hpp"
#include "splitsplat/io.hpp"
#include "splitsplat/wire.hpp"

namespace splitsplat {

namespace {

const LabelImage& lookup(const std::map<int, LabelImage>& images, int view_id) {
    auto it = images.find(view_id);
    if (it == images.end()) throw SegmenterError("segmenter has no image for view " + std::to_string(view_id));
    return it->second;
}

Mask region(const LabelImage& img, std::int32_t id) {
    Mask m(img.width, img.height, 0);
    for (std::size_t i = 0; i < img.data.size(); ++i) m.data[i] = img.data[i] == id;
    return m;
}

std::int32_t label_at(const LabelImage& img, const Vec2& p) {
    const int x = static_cast<int>(std::floor(p.x())), y = static_cast<int>(std::floor(p.y()));
    return img.contains(x, y) ? img(x, y) : 0;
}

}  // namespace

FileSegmenter::FileSegmenter(std::map<int, LabelImage> label_images) : images_(std::move(label_images)) {}

FileSegmenter FileSegmenter::from_directory(const std::filesystem::path& dir) {
    std::map<int, LabelImage> images;
    const std::regex pattern(R"(view_(\d+)\.pgm)");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, pattern)) images[std::stoi(m[1])] = io::load_label_image(entry.path());
    }
    return FileSegmenter(std::move(images));
}

Mask FileSegmenter::segment(int view_id, const std::vector<Vec2>& prompts) {
    const LabelImage& img = lookup(images_, view_id);
    std::map<std::int32_t, int> votes;
    for (const auto& p : prompts)
        if (const auto id = label_at(img, p); id != 0) ++votes[id];
    std::int32_t best = 0;
    int best_votes = 0;
    for (const auto& [id, v] : votes)
        if (v > best_votes) {
            best_votes = v;
            best = id;
        }
    if (best == 0) return Mask(img.width, img.height, 0);
    return region(img, best);
}

OracleSegmenter::OracleSegmenter(std::map<int, LabelImage> gt, OracleNoise noise)
    : gt_(std::move(gt)), noise_(noise), rng_(noise.seed) {}

Mask OracleSegmenter::segment(int view_id, const std::vector<Vec2>& prompts) {
    const LabelImage& img = lookup(gt_, view_id);
    if (prompts.empty()) return Mask(img.width, img.height, 0);
    const auto id = label_at(img, prompts.front());
    if (id == 0) return Mask(img.width, img.height, 0);
    Mask m = region(img, id);
    if (noise_.boundary_px > 0) {
        int delta = 0;
        {
            std::lock_guard lock(mu_);
            delta = std::uniform_int_distribution<int>(-noise_.boundary_px, noise_.boundary_px)(rng_);
        }
        if (delta > 0) m = dilate(m, delta);
        if (delta < 0) m = erode(m, -delta);
    }
    return m;
}

ProcessSegmenter::ProcessSegmenter(int read_fd, int write_fd, int pid, std::chrono::milliseconds timeout)
    : read_fd_(read_fd), write_fd_(write_fd), pid_(pid), timeout_(timeout) {}

std::unique_ptr<ProcessSegmenter> ProcessSegmenter::spawn(const std::string& command,
                                                          std::chrono::milliseconds timeout) {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0) throw Error("segmenter: pipe failed");
    if (pipe(from_child) != 0) {
        close(to_child[0]);
        close(to_child[1]);
        throw Error("segmenter: pipe failed");
    }
    const pid_t pid = fork();
    if (pid < 0) throw Error("segmenter: fork failed");
    if (pid == 0) {
        setpgid(0, 0);  // own group, so teardown reaches whatever the shell starts
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        close(to_child[0]);
        close(to_child[1]);
        close(from_child[0]);
        close(from_child[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    std::signal(SIGPIPE, SIG_IGN);
    return std::unique_ptr<ProcessSegmenter>(new ProcessSegmenter(from_child[0], to_child[1], pid, timeout));
}

std::unique_ptr<ProcessSegmenter> ProcessSegmenter::connect(const std::string& socket_path,
                                                            std::chrono::milliseconds timeout) {
    const int fd = socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0) throw Error("segmenter: socket() failed");
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (socket_path.size() >= sizeof(addr.sun_path)) {
        close(fd);
        throw Error("segmenter: socket path too long");
    }
    std::strncpy(addr.sun_path, socket_path.c_str(), sizeof(addr.sun_path) - 1);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        close(fd);
        throw Error("segmenter: cannot connect to " + socket_path + ": " + std::strerror(errno));
    }
    std::signal(SIGPIPE, SIG_IGN);
    return std::unique_ptr<ProcessSegmenter>(new ProcessSegmenter(fd, fd, -1, timeout));
}

ProcessSegmenter::~ProcessSegmenter() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    if (pid_ > 0) {
        int status = 0;
        // Closing stdin lets a well-behaved server exit; give it a moment before killing it.
        for (int i = 0; i < 50; ++i) {
            if (waitpid(pid_, &status, WNOHANG) == pid_) {
                kill(-pid_, SIGTERM);  // the shell may have left children behind
                return;
            }
            usleep(2000);
        }
        kill(-pid_, SIGTERM);
        waitpid(pid_, &status, 0);
    }
}

std::string ProcessSegmenter::read_line() {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) throw SegmenterError("segmenter: response timed out");
        pollfd pfd{read_fd_, POLLIN, 0};
        const int r = poll(&pfd, 1, static_cast<int>(left.count()));
        if (r < 0 && errno == EINTR) continue;
        if (r <= 0) throw SegmenterError("segmenter: response timed out");
        char chunk[65536];
        const ssize_t n = read(read_fd_, chunk, sizeof(chunk));
        if (n <= 0) throw SegmenterError("segmenter: connection closed");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

Mask ProcessSegmenter::segment(int view_id, const std::vector<Vec2>& prompts) {
    std::lock_guard lock(mu_);
    const std::string line = wire::encode_request({view_id, prompts}) + "\n";
    std::size_t sent = 0;
    while (sent < line.size()) {
        const ssize_t n = write(write_fd_, line.data() + sent, line.size() - sent);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw SegmenterError("segmenter: write failed");
        sent += static_cast<std::size_t>(n);
    }
    try {
        return wire::decode_response(read_line());
    } catch (const SegmenterError&) {
        throw;
    } catch (const Error& e) {
        throw SegmenterError(e.what());
    }
}

}  // namespace splitsplat
