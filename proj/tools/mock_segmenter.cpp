// Serves the segmenter wire protocol from per-view label images (view_XXXX.pgm), answering each
// request with the labeled region under the prompts. Speaks over stdio, or a Unix socket with --socket.
#include <cstdio>
#include <iostream>
#include <string>

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <CLI11.hpp>

#include "splitsplat/segmenter.hpp"
#include "splitsplat/wire.hpp"

using namespace splitsplat;

namespace {

std::string answer(FileSegmenter& seg, const std::string& line) {
    try {
        const wire::Request req = wire::decode_request(line);
        return wire::encode_response(seg.segment(req.view_id, req.prompts));
    } catch (const std::exception& e) {
        return wire::encode_error(e.what());
    }
}

void serve_fd(FileSegmenter& seg, int fd) {
    std::string buf;
    char chunk[65536];
    for (;;) {
        const ssize_t n = read(fd, chunk, sizeof chunk);
        if (n <= 0) return;
        buf.append(chunk, static_cast<std::size_t>(n));
        std::size_t nl;
        while ((nl = buf.find('\n')) != std::string::npos) {
            const std::string reply = answer(seg, buf.substr(0, nl)) + "\n";
            buf.erase(0, nl + 1);
            if (write(fd, reply.data(), reply.size()) != static_cast<ssize_t>(reply.size())) return;
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"segmenter protocol server backed by label images"};
    std::string dir, socket_path;
    app.add_option("--labels", dir, "directory of view_XXXX.pgm label images")->required()->check(CLI::ExistingDirectory);
    app.add_option("--socket", socket_path, "listen on this Unix socket instead of stdio");
    CLI11_PARSE(app, argc, argv);

    try {
        FileSegmenter seg = FileSegmenter::from_directory(dir);
        if (socket_path.empty()) {
            std::string line;
            while (std::getline(std::cin, line)) std::cout << answer(seg, line) << "\n" << std::flush;
            return 0;
        }
        const int srv = socket(AF_UNIX, SOCK_STREAM, 0);
        sockaddr_un addr{};
        addr.sun_family = AF_UNIX;
        std::snprintf(addr.sun_path, sizeof addr.sun_path, "%s", socket_path.c_str());
        unlink(socket_path.c_str());
        if (srv < 0 || bind(srv, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || listen(srv, 4) != 0)
            throw Error("cannot listen on " + socket_path);
        for (;;) {
            const int c = accept(srv, nullptr, nullptr);
            if (c < 0) continue;
            serve_fd(seg, c);
            close(c);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
